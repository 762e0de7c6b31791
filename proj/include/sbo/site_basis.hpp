#pragma once

// On-site Hilbert space of spin-1 bosons: states |S, m; n>, their energies and
// the ladder-operator matrix elements, all obtained from an explicit Fock
// space construction over occupation vectors (n_{+1}, n_0, n_{-1}).

#include <array>
#include <complex>
#include <compare>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sbo {

using cplx = std::complex<double>;

/// Spin components are ordered (+1, 0, -1) everywhere in the library.
inline constexpr std::array<int, 3> kSpinComponents{+1, 0, -1};
constexpr int sigma_index(int sigma) noexcept { return 1 - sigma; }

struct SpinSiteState {
    int S = 0;
    int m = 0;
    int n = 0;

    auto operator<=>(const SpinSiteState&) const = default;
};

/// Throws DomainError naming the first violated constraint
/// (0 <= S <= n, |m| <= S, S + n even).
void validate(const SpinSiteState& state);
bool is_valid(const SpinSiteState& state) noexcept;

std::ostream& operator<<(std::ostream& os, const SpinSiteState& s);

struct ModelParams {
    double t = 0.0;
    double U0 = 1.0;
    double U2 = 0.0;
    double mu = 0.0;
    double eta = 0.0;          ///< linear field, energy shift -eta*m
    double temperature = 0.0;  ///< k_B = 1
    int dim = 2;

    int z() const noexcept { return 2 * dim; }
    void validate() const;
};

/// E(S, n) = -mu n + U0/2 n(n-1) + U2/2 [S(S+1) - 2n]. No field term.
double on_site_energy(int S, int n, const ModelParams& params);

/// on_site_energy plus the field shift -eta*m.
double state_energy(const SpinSiteState& state, const ModelParams& params);

/// Occupation vectors (n_{+1}, n_0, n_{-1}) with a fixed total, in
/// ascending lexicographic order.
class FockSector {
public:
    explicit FockSector(int n);

    int particles() const noexcept { return n_; }
    std::size_t size() const noexcept { return occ_.size(); }
    const std::array<int, 3>& occupation(std::size_t i) const { return occ_[i]; }
    /// Index of an occupation vector, or -1 if it does not belong here.
    int index(const std::array<int, 3>& occ) const;

private:
    int n_;
    std::vector<std::array<int, 3>> occ_;
    std::map<std::array<int, 3>, int> lookup_;
};

/// Apply a_sigma to a vector of `from` and express it in `to` (n-1 particles).
Eigen::VectorXd apply_annihilation(int sigma, const FockSector& from, const FockSector& to,
                                   const Eigen::VectorXd& v);
/// Apply a_sigma^dagger (n -> n+1).
Eigen::VectorXd apply_creation(int sigma, const FockSector& from, const FockSector& to,
                               const Eigen::VectorXd& v);
/// S^- = sqrt(2) (a_0^dag a_{+1} + a_{-1}^dag a_0) within one sector.
Eigen::VectorXd apply_lowering(const FockSector& sector, const Eigen::VectorXd& v);
/// S^+ = sqrt(2) (a_{+1}^dag a_0 + a_0^dag a_{-1}).
Eigen::VectorXd apply_raising(const FockSector& sector, const Eigen::VectorXd& v);
/// Dense S^2 matrix in a sector.
Eigen::MatrixXd spin_squared_matrix(const FockSector& sector);

struct OracleState {
    SpinSiteState quantum;
    Eigen::VectorXd amplitudes;  ///< over FockSector(n) occupations
};

/// Simultaneous eigenbasis of (N, S^2, S_z) for n bosons. Within each (S, n)
/// multiplet the m = S state has a positive coefficient on its lexicographically
/// largest occupied vector; lower m follow by S^- and normalisation.
/// States ordered by S ascending, then m descending.
std::vector<OracleState> build_fock_oracle(int n);

/// Count of (S, m) states allowed by the constraint rules for n bosons.
int constraint_state_count(int n);

/// Enumerated on-site states up to n_max with <mu|a_sigma|mu'> tables.
/// Immutable after construction.
class SiteBasis {
public:
    explicit SiteBasis(int n_max = 8);

    int n_max() const noexcept { return n_max_; }
    std::size_t size() const noexcept { return states_.size(); }
    const std::vector<SpinSiteState>& states() const noexcept { return states_; }
    const SpinSiteState& state(std::size_t i) const { return states_[i]; }
    /// Index of (S, m, n); throws DomainError if absent.
    int index(const SpinSiteState& s) const;
    bool contains(const SpinSiteState& s) const noexcept;

    /// <mu|a_sigma|mu'>; exact zero outside the selection rules.
    double c(int sigma, int bra, int ket) const { return c_[sigma_index(sigma)](bra, ket); }
    /// <mu|a_sigma^dagger|mu'> = c(sigma, mu', mu).
    double d(int sigma, int bra, int ket) const { return c_[sigma_index(sigma)](ket, bra); }

    const Eigen::VectorXd& fock_amplitudes(int i) const { return amplitudes_[i]; }
    const FockSector& sector(int n) const { return sectors_.at(n); }

    double energy(int i, const ModelParams& params) const;

    /// <psi|S|psi> for psi = sum_i coeff_i |i>, all |i> with the same n.
    /// Returns (Sx, Sy, Sz) as real numbers.
    std::array<double, 3> spin_expectation(std::span<const std::pair<int, cplx>> psi) const;

    /// One row per nonzero c entry:
    /// sigma, S_bra, m_bra, n_bra, S_ket, m_ket, n_ket, value
    void dump(std::ostream& os) const;

private:
    int n_max_;
    std::vector<FockSector> sectors_;
    std::vector<SpinSiteState> states_;
    std::vector<Eigen::VectorXd> amplitudes_;
    std::map<SpinSiteState, int> lookup_;
    std::array<Eigen::MatrixXd, 3> c_;
};

/// Entries below this magnitude are snapped to exact zero.
inline constexpr double kMatrixElementZero = 1e-12;

} // namespace sbo
