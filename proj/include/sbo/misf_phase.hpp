#pragma once

// Mott-insulator / superfluid boundaries, order-symmetry classification and
// mu-t sweeps.
//
// Sign convention: N11(0) built from the states in play is negative definite
// inside a lobe. The constants Omega, Upsilon, N0 and Lambda below are the
// positive magnitudes, and the boundary is z t_c lambda_max(-N11(0)) = 1.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbo/green_rpa.hpp"
#include "sbo/site_basis.hpp"

namespace sbo {

// --------------------------------------------------------------------------
// t = 0 lobes

struct LobeWindow {
    double mu_min = 0.0;
    double mu_max = 0.0;
    double width() const noexcept { return mu_max - mu_min; }
};

/// Total spin minimising the on-site energy at filling n. U2 = 0 picks the
/// stretched S = n multiplet.
int ground_spin(int n, const ModelParams& params);

/// Minimum on-site energy at filling n (field ignored).
double ground_energy(int n, const ModelParams& params);

/// Chemical-potential interval where filling n is the t = 0 ground state.
/// Empty (std::nullopt) when no such interval exists. Only U0, U2 are used.
std::optional<LobeWindow> lobe_window_t0(int n, const ModelParams& params);

/// Filling of the t = 0 ground state at params.mu (0 for the empty site or
/// exactly on a window edge), searching n in [1, n_max].
int lobe_at(const ModelParams& params, int n_max = 7);

// --------------------------------------------------------------------------
// Closed forms

struct FerroConstants {
    double omega1 = 0.0, omega2 = 0.0, omega3 = 0.0;
    /// (n+1) Omega2 + n Omega3
    double lambda_m(int n) const noexcept { return (n + 1) * omega2 + n * omega3; }
};
FerroConstants ferro_constants(int n, const ModelParams& params);

struct AfmOddConstants {
    double upsilon1 = 0.0, upsilon2 = 0.0, upsilon3 = 0.0, upsilon4 = 0.0;
    double k1() const noexcept { return 3 * upsilon2 + upsilon3 - 2 * upsilon4; }
    double k2() const noexcept { return upsilon1 - 2 * upsilon2 + 3 * upsilon4; }
    double lambda_max() const noexcept { return upsilon1 + 4 * upsilon2 + upsilon3 + 4 * upsilon4; }
};
AfmOddConstants afm_odd_constants(int n, const ModelParams& params);

struct AfmEvenConstants {
    double delta_e1 = 0.0;  ///< E(1, n+1) - E(0, n)
    double delta_e2 = 0.0;  ///< E(1, n-1) - E(0, n)
    double n0 = 0.0;        ///< (n/3 + 1)/dE1 + (n/3)/dE2
};
AfmEvenConstants afm_even_constants(int n, const ModelParams& params);

struct PairConstants {
    double lambda1 = 0.0, lambda2 = 0.0, lambda3 = 0.0, lambda4 = 0.0;
    double polar_coefficient() const noexcept {
        return lambda2 + lambda4 - 2.0 / 3.0 * (lambda1 + lambda3);
    }
    /// |G_{A^2}(0, 0)| for an order vector with classifier value theta.
    double response(double theta) const noexcept {
        return 2 * (lambda1 + lambda3) + polar_coefficient() * theta * theta;
    }
};
PairConstants pair_constants(int n, const ModelParams& params);

/// z t_c [(n+1) Omega2 + n Omega3] = 1. Requires U2 <= 0 and mu inside the
/// window.
double boundary_ferro(int n, double mu, ModelParams params);
/// Odd n: z t_c (U1 + 4U2 + U3 + 4U4) = 1; even n: 1 + z t_c N0 = 0 (with the
/// physical sign of N0). Requires U2 > 0 and mu inside the window.
double boundary_afm(int n, double mu, ModelParams params);
/// Dispatch on the sign of U2.
double boundary_analytic(int n, double mu, const ModelParams& params);

// --------------------------------------------------------------------------
// Numeric construction

/// Superposition sum_s coeff_s |S, s; n> with coeff ordered s = S..-S.
LocalState multiplet_state(const SiteBasis& basis, int S, int n, std::span<const cplx> coeff,
                           const ModelParams& params, double occupation);

/// Ground state plus every basis state reached from it by one boson.
/// Ground occupation 1, others 0.
TransitionTable ground_table(const SiteBasis& basis, const LocalState& ground,
                             const ModelParams& params);

/// The reference ground of the lobe: |n,n;n> (ferro), |1,0;n> (odd AFM),
/// |0,0;n> (even AFM).
LocalState reference_ground(const SiteBasis& basis, int n, const ModelParams& params);

/// Largest t in (0, t_max] for which I + z t N11 stays positive definite,
/// found by bisection on its smallest eigenvalue. Throws NoTransition when
/// the bracket has no sign change.
double pole_search_tc(const Eigen::Matrix3cd& n11, int z, double t_max, double tolerance = 1e-14);

/// Numeric N11(0) of the reference ground, then pole_search_tc.
double boundary_numeric(const SiteBasis& basis, int n, double mu, const ModelParams& params);

/// Closed-form N11(0) (physical sign, rows ordered +1, 0, -1).
/// Ferro superposition sum_s c_s |n,s;n> (c ordered s = n..-n) using the
/// Omega constants and the A/B ladder coefficients.
Eigen::Matrix3cd analytic_n11_ferro(const SiteBasis& basis, int n, const ModelParams& params,
                                    std::span<const cplx> c);
/// Odd AFM superposition (c ordered +1, 0, -1): -[3(U2+U4) I + K1 M1 + K2 M2].
Eigen::Matrix3cd analytic_n11_afm_odd(int n, const ModelParams& params, std::span<const cplx> c);
/// Even AFM: -N0 I.
Eigen::Matrix3cd analytic_n11_afm_even(int n, const ModelParams& params);

// --------------------------------------------------------------------------
// Order classification

struct OrderVector {
    std::array<cplx, 3> chi{};  ///< (chi_{+1}, chi_0, chi_{-1})
    /// |chi_0^2 - 2 chi_1 chi_{-1}|
    double theta_pol() const noexcept;
    double norm() const noexcept;
};

inline constexpr double kPolarThreshold = 0.99;
inline constexpr double kFerroThreshold = 0.01;

/// "SF-polar", "SF-ferro" or "SF-mixed" from theta.
std::string order_label(double theta);

struct Classification {
    OrderVector order;
    double theta = 0.0;
    std::string label;
    double eigenvalue = 0.0;  ///< dominant eigenvalue (one-particle mode)
    bool two_particle = false;
};

/// Dominant eigenvector of N11(0). Throws DegenerateModeError when the top
/// |eigenvalue| is degenerate within `degeneracy_tol` (relative).
Classification classify_one_particle(const Eigen::Matrix3cd& n11, double degeneracy_tol = 1e-9);

/// Two-particle mode for the even AFM ground |0,0;n>: maximise |G_{A^2}|
/// using the Lambda constants.
Classification classify_two_particle(int n, const ModelParams& params);

/// Numeric |G_{A^2}(0, 0)| for the ground |0,0;n> from products of ladder
/// matrix elements (independent of the Lambda closed forms).
double two_particle_response(const SiteBasis& basis, int n, const ModelParams& params,
                             const OrderVector& chi);

/// One-particle mode, falling back to two-particle mode on degeneracy for
/// even AFM lobes.
Classification classify_order(const SiteBasis& basis, int n, const ModelParams& params,
                              const Eigen::Matrix3cd& n11);

// --------------------------------------------------------------------------
// Self-consistent boundaries

enum class Scenario { afm_odd, afm_even, ferro, afm_field };
const char* scenario_name(Scenario s);
/// Scenario matching the lobe at filling n and the sign of U2 (no field).
Scenario scenario_for(int n, const ModelParams& params);

enum class Method { analytic, self_consistent };
const char* method_name(Method m);

struct PhaseRecord {
    ModelParams params;
    int lobe_n = 0;
    double t_c = 0.0;
    std::string phase_label;
    double classifier = 0.0;
    Method method = Method::analytic;
    double temperature = 0.0;
    bool converged = true;
    int iterations = 0;
    std::vector<double> occupations;
    std::string error;
};

struct SelfConsistentOptions {
    bool fluctuations = true;
    /// Even AFM lobes neglect fluctuations unless this is set.
    bool even_lobe_fluctuations = false;
    FixedPointOptions fixed_point;
    SpectralOptions spectral;
    double t_tolerance = 1e-6;  ///< in units of U0
    /// Iteration cap per fixed-point solve inside the t search (T > 0). A
    /// solve that hits it counts as past the boundary.
    int search_iterations = 1500;
    int n_max = 6;
};

/// Scenario state set: reference ground plus one-boson neighbours, or the six
/// retained states of the field scenario (n = 1, ground |1,1;1>).
TransitionTable scenario_table(const SiteBasis& basis, Scenario scenario, int n,
                               const ModelParams& params);

/// Motion system of a table at hopping t (hopping coupling, diagonal onsite).
/// When `active` is given, channels touching an inactive state are dropped.
MotionSystem hopping_motion_system(const TransitionTable& table, double t, int z,
                                   const std::vector<bool>& active = {});

/// Diagonal probes (ground, x) for every state x linked to the ground by one
/// boson.
std::vector<OccupationProbe> scenario_probes(const TransitionTable& table, const MotionSystem& sys,
                                             int ground);

/// One occupation update: probed states from the spectral theorem, states
/// with the ground's boson number from detailed balance against the ground
/// (zero at T = 0), ground from normalisation.
std::vector<double> occupation_update(const TransitionTable& table, double t, int z, const KGrid& grid,
                                      double temperature, const SpectralOptions& spectral);

/// Converged occupations at hopping t. Throws ConvergenceError /
/// InstabilityError / BoundaryPole from the loop.
FixedPointResult converge_occupations(const TransitionTable& table, double t, int z,
                                      const KGrid& grid, double temperature,
                                      std::vector<double> initial,
                                      const SelfConsistentOptions& opts);

/// Bisects t in (0, U0] until the converged Green's function develops the
/// (k = 0, omega = 0) pole.
PhaseRecord self_consistent_boundary(Scenario scenario, int n, const ModelParams& params,
                                     const KGrid& grid, const SelfConsistentOptions& opts = {});

// --------------------------------------------------------------------------
// Sweeps

struct MuSweep {
    double mu_min = 0.0;
    double mu_max = 3.0;
    int points = 200;
    double at(int i) const noexcept {
        return points == 1 ? mu_min : mu_min + (mu_max - mu_min) * i / (points - 1);
    }
};

/// Boundary at one mu with the lobe found from the t = 0 windows.
PhaseRecord boundary_point(const SiteBasis& basis, const ModelParams& params, Method method,
                           const KGrid* grid, const SelfConsistentOptions& opts, bool field);

/// One record per mu point in index order. Per-point failures are recorded
/// in the row. `workers` <= 1 runs serially.
std::vector<PhaseRecord> sweep_diagram(const MuSweep& axis, const ModelParams& params,
                                       Method method, const KGrid* grid,
                                       const SelfConsistentOptions& opts, bool field = false,
                                       int workers = 1);

} // namespace sbo
