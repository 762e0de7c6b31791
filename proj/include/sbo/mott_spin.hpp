#pragma once

// Spin physics inside the Mott lobes: the n = 1 bilinear-biquadratic model
// with Zeeman terms and the n = 2 singlet / quintet model. Both reuse the
// motion-equation machinery of green_rpa with a spin bond tensor in place of
// the hopping tensor.
//
// n = 1 local states are ordered m = +1, 0, -1. n = 2 local states are
// s = |0,0;2> at index 0 followed by |2,m;2> for m = +2..-2.

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbo/clebsch_gordan.hpp"
#include "sbo/green_rpa.hpp"

namespace sbo {

// --------------------------------------------------------------------------
// Exchange couplings

struct SpinExchangeParams {
    double J1 = 0.0;
    double J2 = 0.0;
    double lambda = 0.0;
    double q = 0.0;
    int z = 4;

    double J() const noexcept;
    /// atan2(-J2, -J1): J1 = -J cos(theta), J2 = -J sin(theta).
    double theta() const noexcept;
    static SpinExchangeParams from_theta(double theta, double J, double lambda, double q, int z);
    /// q >= 0, z > 0, finite values.
    void validate() const;
};

struct ChannelStrengths {
    double g0 = 0.0;
    double g2 = 0.0;
};

/// g2 = U0 + U2, g0 = U0 - 2 U2 (so U0 = (g0 + 2 g2)/3, U2 = (g2 - g0)/3).
ChannelStrengths channel_strengths(double U0, double U2);

/// J1 = 2t^2/g2, J2 = 4t^2/(3 g0) + 2t^2/(3 g2). Throws DomainError unless
/// g0, g2 > 0.
SpinExchangeParams exchange_couplings(double t, const ChannelStrengths& g, int z,
                                      double lambda = 0.0, double q = 0.0);
SpinExchangeParams exchange_couplings(double t, double U0, double U2, int z,
                                      double lambda = 0.0, double q = 0.0);

// --------------------------------------------------------------------------
// n = 1 model

inline constexpr int kSpin1States = 3;
/// Local index of m in the (+1, 0, -1) order.
constexpr int spin1_index(int m) noexcept { return 1 - m; }

/// Spin-1 matrices in the (+1, 0, -1) order: {Sx, Sy, Sz}.
std::array<Eigen::Matrix3cd, 3> spin1_matrices();

/// T_{m m', n n'} = <m n| -J1 S.S - J2 (S.S)^2 |m' n'> assembled from total
/// spin projectors (Clebsch-Gordan sums).
PairCouplingTensor bilinear_biquadratic_tensor(double J1, double J2);

/// V_m = -lambda m + q m^2.
double spin1_onsite(int m, const SpinExchangeParams& p);

/// Motion system over the given channels with occupations D (+1, 0, -1).
MotionSystem spin1_motion_system(const SpinExchangeParams& p, std::span<const double> occupations,
                                 std::vector<Channel> channels);

/// Channels (0 -> +1) and (-1 -> 0) of the |0> ground.
std::vector<Channel> spin1_nematic_channels();

/// Positive-norm poles of the |0>-ground system at zeta(k). Throws
/// InstabilityError past the instability.
std::vector<double> spectrum_n1(const SpinExchangeParams& p, std::span<const double> occupations,
                                double zeta);

/// Frozen closed form {-lambda - r, -lambda + r},
/// r^2 = (q + z J2 + J1 zeta)^2 - (J2 - J1)^2 zeta^2. Throws InstabilityError
/// when r^2 < 0.
std::array<double, 2> spectrum_n1_frozen(const SpinExchangeParams& p, double zeta);

/// |+1>-ground branch lambda - q + z J1 + J1 zeta.
double spectrum_n1_ferro_branch(const SpinExchangeParams& p, double zeta);

enum class FMinCase { endpoints, edge, interior };

struct FMinResult {
    double eta = 0.0;
    double value = 0.0;
    FMinCase kind = FMinCase::endpoints;
};

/// Minimum of f(eta) = (q + z J2 + J1 eta)^2 - (J2 - J1)^2 eta^2 over
/// eta in [-z, z].
FMinResult fmin_eta(const SpinExchangeParams& p);

/// lambda^2 on the nematic boundary: (q + z J2 - z J1)^2 - z^2 (J2 - J1)^2.
double nematic_boundary_lambda2(const SpinExchangeParams& p);

enum class Spin1Phase { nematic, partially_magnetic, ferromagnetic, xy_ferromagnetic };
const char* spin1_phase_name(Spin1Phase p);

/// Label at (lambda, q, J1, J2): the t = 0 seed from q against |lambda|, then
/// a path in the exchange scale s in (0, 1] (J -> s J) that looks for the
/// first gap closure of the |0> ground.
Spin1Phase classify_n1(const SpinExchangeParams& p, int path_steps = 256);

struct Spin1Point {
    double lambda = 0.0;
    double q = 0.0;
    Spin1Phase phase = Spin1Phase::nematic;
};

struct Axis {
    double min = 0.0;
    double max = 1.0;
    int points = 2;
    double at(int i) const noexcept {
        return points == 1 ? min : min + (max - min) * i / (points - 1);
    }
};

/// Row-major over (lambda, q): lambda outer, q inner.
std::vector<Spin1Point> phase_diagram_n1(const SpinExchangeParams& base, const Axis& lambda,
                                         const Axis& q);

struct QcOptions {
    bool fluctuations = true;
    FixedPointOptions fixed_point;
    double zero_mode = 1e-12;
};

struct QcResult {
    double q_c = 0.0;
    double D0 = 1.0;
    double D1 = 0.0;  ///< D_{+1} = D_{-1}
    int iterations = 0;
};

/// Occupation of |+-1> at given (q, D0, D1): D01 <(B/w)(n_B(w) + 1/2) - 1/2>_k
/// with B = q + D01 (z J2 + J1 zeta) and w = sqrt(B^2 - (J2 - J1)^2 D01^2 zeta^2).
/// Modes with w below `zero_mode` are skipped. Throws InstabilityError for
/// imaginary w.
double qc_occupation(const SpinExchangeParams& p, double D0, double D1, const KGrid& grid,
                     double temperature, double zero_mode = 1e-12);

/// q_c = 2 z (D0 - D1)(J1 - J2) solved together with the occupations
/// (lambda = 0, J1 > J2). Throws DomainError, ConvergenceError,
/// InstabilityError.
QcResult qc_self_consistent(const SpinExchangeParams& p, const KGrid& grid, double temperature,
                            const QcOptions& opts = {});

// --------------------------------------------------------------------------
// n = 2 model

inline constexpr int kSpin2States = 6;
inline constexpr int kSinglet = 0;
/// Local index of |2,m;2>.
constexpr int spin2_index(int m) noexcept { return 3 - m; }
/// S^z of a local state.
int spin2_sz(int index) noexcept;

/// t > 0.3 U0 is outside the perturbative regime of the n = 2 model.
bool outside_perturbative_regime(double t, double U0) noexcept;

/// Bond tensor over {s, m = +2..-2}. The listed entries (ss,ss), (ms,sm'),
/// (mm',ss), (ms,m's), (sm,lm'), (ml,m'l') are set and closed under
/// hermiticity and site exchange; a conflicting assignment throws Error.
/// Throws Error when `cg` lacks j = 2 entries.
PairCouplingTensor build_h_tensor_n2(double t, double U0, double U2, int z,
                                     const ClebschGordanTable& cg);
PairCouplingTensor build_h_tensor_n2(double t, double U0, double U2, int z);

enum class Spin2Ground { singlet, ferro };

/// V = -lambda S^z.
Eigen::MatrixXcd spin2_onsite(double lambda);

/// Channel sets: singlet ground at lambda = 0 targeting m: (s -> m), (-m -> s);
/// singlet ground at lambda != 0: (s -> 2), (-2 -> s), (0 -> 2); ferro
/// ground: (2 -> s), (2 -> 0).
std::vector<Channel> spin2_channels(Spin2Ground ground, double lambda, int target_m = 0);

MotionSystem spin2_motion_system(const PairCouplingTensor& h, double lambda,
                                 std::span<const double> occupations, std::vector<Channel> channels,
                                 int z);

/// Frozen occupations: D_s = 1 (singlet) or D_{+2} = 1 (ferro).
std::vector<double> spin2_frozen_occupations(Spin2Ground ground);

/// Positive-norm poles at zeta(k). Throws InstabilityError past the
/// instability.
std::vector<double> spectrum_n2(const PairCouplingTensor& h, std::span<const double> occupations,
                                double zeta, double lambda, Spin2Ground ground, int z,
                                int target_m = 0);

/// Singlet -> nematic closure, |lambda| < 3U2/2:
/// t^2 = U0 (9 U2^2 - 4 lambda^2) / (16 z U2).
double t_c_n2_singlet(double U0, double U2, double lambda, int z);
/// Lower edge of the ferromagnetic region for U2 < |lambda| < 3U2/2:
/// z t^2 / U0 = (3 lambda U2 - 2 lambda^2) / (8 (lambda - U2)).
double t_c_n2_ferro(double U0, double U2, double lambda, int z);
/// sqrt(U0 U2 / z)
double hopping_unit_n2(double U0, double U2, int z);

// --------------------------------------------------------------------------
// Gap closure

/// Smallest positive-norm pole over the zeta values. Throws InstabilityError
/// (complex or defective) past the instability.
double spectral_gap(const MotionSystem& sys, std::span<const double> zetas);

/// Bisects x in [lo, hi] where `stable(lo)` holds and `stable(hi)` fails.
double bisect_transition(const std::function<bool(double)>& stable, double lo, double hi,
                         double tolerance);

/// Stability of a motion system: all poles real and every positive-norm pole
/// above zero at each zeta.
bool gap_open(const MotionSystem& sys, std::span<const double> zetas);

/// Frozen gap-closure t for n = 2 (bisection in t up to t_max), with the
/// gap scanned over `zetas`. Singlet ground: the gap is open below the
/// returned t. Ferro ground: open above it. Throws NoTransition when the
/// stability does not change in (0, t_max].
double n2_gap_closure_t(double U0, double U2, double lambda, int z, Spin2Ground ground,
                        std::span<const double> zetas, double t_max, double tolerance = 1e-13);

struct Spin2SelfConsistentResult {
    double t_c = 0.0;
    std::vector<double> occupations;
    int iterations = 0;
};

struct Spin2Options {
    bool fluctuations = true;
    FixedPointOptions fixed_point;
    SpectralOptions spectral;
};

/// Singlet -> nematic boundary with occupations updated from the spectral
/// theorem at T = 0 (t pinned at the gap closure of the current
/// occupations).
Spin2SelfConsistentResult n2_self_consistent_t(double U0, double U2, double lambda,
                                               const KGrid& grid, const Spin2Options& opts = {});

enum class Spin2Phase { singlet, canted_nematic, ferromagnetic };
const char* spin2_phase_name(Spin2Phase p);

struct Spin2Point {
    double lambda = 0.0;  ///< in units of U2
    double t = 0.0;       ///< in units of t0
    Spin2Phase phase = Spin2Phase::singlet;
};

/// Boundaries at one lambda, in units of t0. Singlet below t_singlet,
/// ferromagnetic at or above t_ferro, canted nematic in between. Infinite
/// means no such boundary.
struct Spin2Boundary {
    double lambda = 0.0;  ///< units of U2
    double t_singlet = 0.0;
    double t_ferro = 0.0;
    int iterations = 0;
};

/// Singlet curve from the frozen or self-consistent closure, ferro curve
/// from the frozen closure.
std::vector<Spin2Boundary> n2_boundaries(double U0, double U2, const Axis& lambda_over_U2,
                                         bool self_consistent, const KGrid& grid,
                                         const Spin2Options& opts = {});

Spin2Phase classify_n2(const Spin2Boundary& b, double t_over_t0);

/// Labels on a (lambda/U2, t/t0) grid from the boundaries.
std::vector<Spin2Point> phase_diagram_n2(const std::vector<Spin2Boundary>& boundaries,
                                         const Axis& t_over_t0);

} // namespace sbo
