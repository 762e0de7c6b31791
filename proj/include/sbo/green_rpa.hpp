#pragma once

// Standard-basis-operator Green's functions in the random-phase approximation.
//
// Conventions used throughout:
//   * a channel (mu, mu') stands for the operator L_{mu mu'} = |mu><mu'|;
//   * D_{mu mu'} = D_mu - D_mu';
//   * the bond Hamiltonian is sum_<ij> H_{aa',bb'} L^i_{aa'} L^j_{bb'} over
//     unordered bonds, with H symmetric under site exchange;
//   * after Fourier transform the neighbour sum gives the lattice factor
//     gamma(k) = sum_delta exp(i k.delta) = 2 sum_s cos k_s = -zeta(k).
//
// The motion equation of a closed channel set reads
//   omega g_c = D_c delta_{c,src} + sum_c' A_{c c'}(k) g_c'
// so the poles are the eigenvalues of A(k) and the residues follow from its
// eigen-decomposition.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbo/site_basis.hpp"

namespace sbo {

// --------------------------------------------------------------------------
// Brillouin zone

/// Uniform L^dim grid (Gamma included, lattice constant 1). Points are
/// grouped into symmetry levels that share the same zeta value, which is all
/// any quantity here depends on.
class KGrid {
public:
    struct Level {
        double zeta;    ///< -2 sum_s cos k_s
        double weight;  ///< multiplicity / L^dim
        bool gamma;     ///< the Gamma point level
    };

    KGrid(int dim, int L);

    int dim() const noexcept { return dim_; }
    int points_per_axis() const noexcept { return L_; }
    std::size_t num_points() const noexcept { return num_points_; }
    int coordination() const noexcept { return 2 * dim_; }
    const std::vector<Level>& levels() const noexcept { return levels_; }

    /// zeta at the point with integer coordinates idx (k_s = 2 pi idx_s / L).
    double zeta_at(std::span<const int> idx) const;
    /// epsilon(k) = t zeta(k).
    static double epsilon(double t, double zeta) noexcept { return t * zeta; }

private:
    int dim_;
    int L_;
    std::size_t num_points_;
    std::vector<Level> levels_;
};

// --------------------------------------------------------------------------
// Occupations and transitions

/// A state in play: a single basis state or a normalised superposition of
/// degenerate basis states with equal boson number.
struct LocalState {
    std::vector<std::pair<int, cplx>> components;  ///< (basis index, amplitude)
    double energy = 0.0;
    double occupation = 0.0;
};

LocalState basis_state(const SiteBasis& basis, const SpinSiteState& s, const ModelParams& params,
                       double occupation = 0.0);

/// States in play with energies E_mu, occupations D_mu and matrix elements
/// c^sigma_{mu mu'} = <mu|a_sigma|mu'> between them.
class TransitionTable {
public:
    TransitionTable(const SiteBasis& basis, std::vector<LocalState> states);

    std::size_t size() const noexcept { return states_.size(); }
    const LocalState& state(std::size_t i) const { return states_[i]; }
    double energy(std::size_t i) const { return states_[i].energy; }
    double occupation(std::size_t i) const { return states_[i].occupation; }
    std::vector<double> occupations() const;
    /// Replaces D_mu; validates D in [0, 1] and sum = 1 within 1e-8.
    void set_occupations(std::span<const double> occ);
    int boson_number(std::size_t i) const { return n_[i]; }

    cplx c(int sigma, std::size_t bra, std::size_t ket) const {
        return c_[sigma_index(sigma)](static_cast<Eigen::Index>(bra), static_cast<Eigen::Index>(ket));
    }
    cplx d(int sigma, std::size_t bra, std::size_t ket) const {
        return std::conj(c(sigma, ket, bra));
    }

    /// Ordered pairs (mu, mu') with D_{mu mu'} != 0 connected by one boson.
    std::vector<std::pair<int, int>> transitions() const;

private:
    std::vector<LocalState> states_;
    std::vector<int> n_;
    std::array<Eigen::MatrixXcd, 3> c_;
};

void validate_occupations(std::span<const double> occ, double tol = 1e-8);

// --------------------------------------------------------------------------
// N-matrices and the 3x3 Green's function

struct NMatrices {
    Eigen::Matrix3cd n11 = Eigen::Matrix3cd::Zero();
    Eigen::Matrix3cd n12 = Eigen::Matrix3cd::Zero();
    Eigen::Matrix3cd n21 = Eigen::Matrix3cd::Zero();
    Eigen::Matrix3cd n22 = Eigen::Matrix3cd::Zero();
};

inline constexpr double kPoleTolerance = 1e-9;
inline constexpr double kSingularDeterminant = 1e-12;

/// Sum over transitions of D_{mu mu'} / (omega + E_mu - E_mu') times c/d
/// products; rows/columns ordered (+1, 0, -1). Throws PoleProximityError when
/// omega is within kPoleTolerance of a contributing pole.
NMatrices build_n_matrices(const TransitionTable& table, double omega);

/// [I - eps Pi]^{-1} Pi with Pi = N11 + eps N12 [I - eps N22]^{-1} N21.
/// Throws BoundaryPole when an inversion is singular.
Eigen::Matrix3cd green_matrix(const NMatrices& nm, double eps_k);
/// N11 / (I - eps N11); valid when N12 = N21 = 0.
Eigen::Matrix3cd green_matrix_simplified(const Eigen::Matrix3cd& n11, double eps_k);

// --------------------------------------------------------------------------
// Pair couplings and the motion equation

/// Dense bond tensor H_{a a', b b'} over d local states.
class PairCouplingTensor {
public:
    PairCouplingTensor() = default;
    explicit PairCouplingTensor(int d) : d_(d), data_(static_cast<std::size_t>(d) * d * d * d) {}

    int dim() const noexcept { return d_; }
    cplx& operator()(int a, int ap, int b, int bp) { return data_[flat(a, ap, b, bp)]; }
    cplx operator()(int a, int ap, int b, int bp) const { return data_[flat(a, ap, b, bp)]; }

    /// max |H(a,a',b,b') - conj H(a',a,b',b)|
    double hermiticity_defect() const;
    /// max |H(a,a',b,b') - H(b,b',a,a')|
    double exchange_defect() const;

private:
    std::size_t flat(int a, int ap, int b, int bp) const {
        return ((static_cast<std::size_t>(a) * d_ + ap) * d_ + b) * d_ + bp;
    }
    int d_ = 0;
    std::vector<cplx> data_;
};

/// Hopping bond tensor -t sum_sigma (c^sigma d^sigma + d^sigma c^sigma) over the
/// states of a table.
PairCouplingTensor hopping_coupling(const TransitionTable& table, double t);

struct Channel {
    int from;  ///< mu
    int to;    ///< mu'
    bool operator==(const Channel&) const = default;
};

/// Closed channel set with everything the motion equation needs.
struct MotionSystem {
    Eigen::MatrixXcd onsite;        ///< single-site V_{x y}
    PairCouplingTensor coupling;    ///< bond tensor
    std::vector<double> occupations;
    std::vector<Channel> channels;
    int z = 4;

    int channel_index(Channel c) const;  ///< -1 when absent
    double channel_weight(std::size_t c) const {
        return occupations[channels[c].from] - occupations[channels[c].to];
    }
};

/// h = V + z sum_b D_b H_{..,bb}: the mean-field single-site matrix.
Eigen::MatrixXcd mean_field_onsite(const MotionSystem& sys);

/// Motion matrix A(gamma); poles are its eigenvalues.
Eigen::MatrixXcd motion_matrix(const MotionSystem& sys, double gamma);

struct PoleDecomposition {
    std::vector<double> frequencies;
    Eigen::MatrixXcd right;  ///< columns: right eigenvectors
    Eigen::MatrixXcd left;   ///< rows: inverse of `right`

    std::size_t size() const noexcept { return frequencies.size(); }
    /// Residue matrix of pole p: right.col(p) * left.row(p).
    Eigen::MatrixXcd residue(std::size_t p) const;
    cplx residue(std::size_t p, Eigen::Index row, Eigen::Index col) const {
        return right(row, static_cast<Eigen::Index>(p)) * left(static_cast<Eigen::Index>(p), col);
    }
};

/// Poles and residues of the channel system at lattice factor gamma(k).
/// Throws InstabilityError for complex poles (past an instability) or a
/// defective pole matrix.
PoleDecomposition motion_poles(const MotionSystem& sys, double gamma);

/// Poles of positive norm sum_c sign(D_c) Re R_cc (physical excitations).
std::vector<double> excitation_frequencies(const MotionSystem& sys, const PoleDecomposition& pd);

// --------------------------------------------------------------------------
// Spectral theorem

/// Bose function 1/(exp(omega/T) - 1); T = 0 limit is 0 for omega > 0 and -1
/// for omega < 0.
double bose(double omega, double temperature);

/// D_target = sum_k sum_p f(omega_p) sum_j weight_j R_p[row_j, source] D_source.
struct OccupationProbe {
    int target = 0;
    int source = 0;                                  ///< channel index
    std::vector<std::pair<int, double>> rows;        ///< (channel index, weight)
};

/// Default probe for state x: diagonal element of channel (ground, x).
OccupationProbe diagonal_probe(const MotionSystem& sys, int ground, int target);

struct SpectralOptions {
    /// Poles this close to zero are dropped at T = 0 (measure-zero modes).
    double zero_mode = 1e-12;
    /// Drop the Gamma level (its pole sits at zero on a gap-closure line).
    bool skip_gamma = false;
};

/// One spectral-theorem update. Non-probed excited states get zero, the
/// ground state absorbs the remainder so the result sums to 1. Throws
/// BoundaryPole for an omega = 0 pole at T > 0 and InstabilityError when the
/// ground occupation would turn negative.
std::vector<double> spectral_occupations(const MotionSystem& sys, const KGrid& grid,
                                         double temperature, int ground,
                                         std::span<const OccupationProbe> probes,
                                         const SpectralOptions& opts = {});

// --------------------------------------------------------------------------
// Damped fixed point

struct FixedPointOptions {
    double damping = 0.5;
    double tolerance = 1e-8;
    int max_iterations = 10000;
};

struct FixedPointResult {
    std::vector<double> value;
    int iterations = 0;
    double last_delta = 0.0;
};

/// x <- (1 - a) x + a F(x) until max|dx| < tol. Throws ConvergenceError.
FixedPointResult solve_fixed_point(
    std::vector<double> initial,
    const std::function<std::vector<double>(const std::vector<double>&)>& update,
    const FixedPointOptions& opts = {});

} // namespace sbo
