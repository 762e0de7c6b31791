#include "sbo/misf_phase.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "sbo/errors.hpp"

namespace sbo {

namespace {

double energy_or_nan(int S, int n, const ModelParams& p) {
    if (!is_valid(SpinSiteState{S, S, n})) return std::numeric_limits<double>::quiet_NaN();
    return on_site_energy(S, n, p);
}

// coefficient / (E(S, n') - E_ref), zero when the coefficient vanishes.
double weighted_inverse(double coeff, int S, int n, double e_ref, const ModelParams& p) {
    if (coeff == 0.0) return 0.0;
    return coeff / (energy_or_nan(S, n, p) - e_ref);
}

bool inside(const std::optional<LobeWindow>& w, double mu) {
    // window edges are degeneracies; rounding in the energy differences
    // must not put an edge point inside
    const double eps = 1e-12 * std::max(1.0, std::abs(mu));
    return w && mu > w->mu_min + eps && mu < w->mu_max - eps;
}

void require_window(int n, double mu, const ModelParams& p) {
    if (!inside(lobe_window_t0(n, p), mu)) {
        std::ostringstream msg;
        msg << "mu = " << mu << " lies outside the n = " << n << " lobe window: no positive root";
        throw NoTransition(msg.str());
    }
}

Eigen::Matrix3cd hermitian_part(const Eigen::Matrix3cd& m) { return 0.5 * (m + m.adjoint()); }

double min_eigenvalue(const Eigen::Matrix3cd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(hermitian_part(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// <S', m'; n'| a_sigma^dag |S, m; n>, zero when either state is absent.
double ladder_up(const SiteBasis& b, int sigma, SpinSiteState to, SpinSiteState from) {
    if (!is_valid(to) || !is_valid(from) || !b.contains(to) || !b.contains(from)) return 0.0;
    return b.d(sigma, b.index(to), b.index(from));
}

double ladder_down(const SiteBasis& b, int sigma, SpinSiteState to, SpinSiteState from) {
    if (!is_valid(to) || !is_valid(from) || !b.contains(to) || !b.contains(from)) return 0.0;
    return b.c(sigma, b.index(to), b.index(from));
}

} // namespace

// --------------------------------------------------------------------------
// Lobes

int ground_spin(int n, const ModelParams& params) {
    if (n < 0) throw DomainError("negative filling");
    if (params.U2 > 0.0) return n % 2;
    return n;
}

double ground_energy(int n, const ModelParams& params) {
    return on_site_energy(ground_spin(n, params), n, params);
}

std::optional<LobeWindow> lobe_window_t0(int n, const ModelParams& params) {
    if (n < 1) throw DomainError("lobe filling must be >= 1");
    if (!(params.U0 > 0.0)) throw DomainError("U0 must be positive");
    ModelParams p = params;
    p.mu = 0.0;
    const double a_n = ground_energy(n, p);
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int m = 0; m < n; ++m) lo = std::max(lo, (a_n - ground_energy(m, p)) / (n - m));
    for (int m = n + 1; m <= n + 6; ++m) hi = std::min(hi, (ground_energy(m, p) - a_n) / (m - n));
    if (hi - lo <= 1e-12 * params.U0) return std::nullopt;
    return LobeWindow{lo, hi};
}

int lobe_at(const ModelParams& params, int n_max) {
    for (int n = 1; n <= n_max; ++n)
        if (inside(lobe_window_t0(n, params), params.mu)) return n;
    return 0;
}

// --------------------------------------------------------------------------
// Closed forms

FerroConstants ferro_constants(int n, const ModelParams& p) {
    if (n < 1) throw DomainError("lobe filling must be >= 1");
    const double e0 = on_site_energy(n, n, p);
    FerroConstants f;
    f.omega1 = 1.0 / (on_site_energy(n - 1, n + 1, p) - e0);
    f.omega2 = 1.0 / (on_site_energy(n + 1, n + 1, p) - e0);
    f.omega3 = 1.0 / (on_site_energy(n - 1, n - 1, p) - e0);
    return f;
}

AfmOddConstants afm_odd_constants(int n, const ModelParams& p) {
    if (n < 1 || n % 2 == 0) throw DomainError("odd-lobe constants need odd n");
    const double e1 = on_site_energy(1, n, p);
    AfmOddConstants u;
    u.upsilon1 = weighted_inverse((n + 1) / 3.0, 0, n + 1, e1, p);
    u.upsilon2 = weighted_inverse((n + 4) / 15.0, 2, n + 1, e1, p);
    u.upsilon3 = weighted_inverse((n + 2) / 3.0, 0, n - 1, e1, p);
    u.upsilon4 = weighted_inverse((n - 1) / 15.0, 2, n - 1, e1, p);
    return u;
}

AfmEvenConstants afm_even_constants(int n, const ModelParams& p) {
    if (n < 2 || n % 2 != 0) throw DomainError("even-lobe constants need even n >= 2");
    const double e0 = on_site_energy(0, n, p);
    AfmEvenConstants c;
    c.delta_e1 = on_site_energy(1, n + 1, p) - e0;
    c.delta_e2 = on_site_energy(1, n - 1, p) - e0;
    c.n0 = (n / 3.0 + 1.0) / c.delta_e1 + (n / 3.0) / c.delta_e2;
    return c;
}

PairConstants pair_constants(int n, const ModelParams& p) {
    if (n < 2 || n % 2 != 0) throw DomainError("pair constants need even n >= 2");
    const double e0 = on_site_energy(0, n, p);
    PairConstants l;
    l.lambda1 = weighted_inverse(n * (n - 2) / 15.0, 2, n - 2, e0, p);
    l.lambda2 = weighted_inverse(n * (n + 1) / 9.0, 0, n - 2, e0, p);
    l.lambda3 = weighted_inverse((n + 3) * (n + 5) / 15.0, 2, n + 2, e0, p);
    l.lambda4 = weighted_inverse((n + 2) * (n + 3) / 9.0, 0, n + 2, e0, p);
    return l;
}

double boundary_ferro(int n, double mu, ModelParams params) {
    params.mu = mu;
    params.validate();
    if (params.U2 > 0.0) throw DomainError("ferromagnetic boundary needs U2 <= 0");
    require_window(n, mu, params);
    return 1.0 / (params.z() * ferro_constants(n, params).lambda_m(n));
}

double boundary_afm(int n, double mu, ModelParams params) {
    params.mu = mu;
    params.validate();
    if (!(params.U2 > 0.0)) throw DomainError("antiferromagnetic boundary needs U2 > 0");
    require_window(n, mu, params);
    if (n % 2 == 1) return 1.0 / (params.z() * afm_odd_constants(n, params).lambda_max());
    return 1.0 / (params.z() * afm_even_constants(n, params).n0);
}

double boundary_analytic(int n, double mu, const ModelParams& params) {
    return params.U2 > 0.0 ? boundary_afm(n, mu, params) : boundary_ferro(n, mu, params);
}

// --------------------------------------------------------------------------
// Numeric construction

LocalState multiplet_state(const SiteBasis& basis, int S, int n, std::span<const cplx> coeff,
                           const ModelParams& params, double occupation) {
    if (static_cast<int>(coeff.size()) != 2 * S + 1)
        throw DomainError("multiplet coefficient vector must have 2S+1 entries");
    LocalState st;
    double norm = 0.0, energy = 0.0;
    int nonzero = 0;
    for (int k = 0; k <= 2 * S; ++k) {
        const cplx a = coeff[static_cast<std::size_t>(k)];
        if (a == cplx{0.0, 0.0}) continue;
        const SpinSiteState s{S, S - k, n};
        const int i = basis.index(s);
        st.components.emplace_back(i, a);
        norm += std::norm(a);
        energy += std::norm(a) * basis.energy(i, params);
        ++nonzero;
    }
    if (std::abs(norm - 1.0) > 1e-10) throw DomainError("multiplet coefficients are not normalised");
    if (params.eta != 0.0 && nonzero > 1)
        throw DomainError("a superposition over m is not an eigenstate when eta != 0");
    st.energy = energy;
    st.occupation = occupation;
    return st;
}

TransitionTable ground_table(const SiteBasis& basis, const LocalState& ground, const ModelParams& params) {
    const int n = basis.state(ground.components.front().first).n;
    if (n + 1 > basis.n_max()) throw DomainError("site basis too small for the requested lobe");
    std::vector<LocalState> states{ground};
    states.front().occupation = 1.0;
    for (std::size_t x = 0; x < basis.size(); ++x) {
        const int nx = basis.state(x).n;
        if (nx != n - 1 && nx != n + 1) continue;
        bool linked = false;
        for (const auto& [i, a] : ground.components)
            for (int s : kSpinComponents)
                linked = linked || basis.c(s, static_cast<int>(x), i) != 0.0 || basis.c(s, i, static_cast<int>(x)) != 0.0;
        if (linked) states.push_back(basis_state(basis, basis.state(x), params, 0.0));
    }
    return TransitionTable(basis, std::move(states));
}

LocalState reference_ground(const SiteBasis& basis, int n, const ModelParams& params) {
    if (params.U2 > 0.0) return basis_state(basis, {n % 2, 0, n}, params, 1.0);
    return basis_state(basis, {n, n, n}, params, 1.0);
}

double pole_search_tc(const Eigen::Matrix3cd& n11, int z, double t_max, double tolerance) {
    const Eigen::Matrix3cd I = Eigen::Matrix3cd::Identity();
    auto stable = [&](double t) { return min_eigenvalue(I + static_cast<double>(z) * t * n11) > 0.0; };
    if (stable(t_max)) throw NoTransition("no pole of G(k=0, omega=0) for t in (0, t_max]");
    double lo = 0.0, hi = t_max;
    for (int it = 0; it < 400 && hi - lo > tolerance * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (stable(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double boundary_numeric(const SiteBasis& basis, int n, double mu, const ModelParams& params) {
    ModelParams p = params;
    p.mu = mu;
    p.validate();
    require_window(n, mu, p);
    const TransitionTable table = ground_table(basis, reference_ground(basis, n, p), p);
    return pole_search_tc(build_n_matrices(table, 0.0).n11, p.z(), 1e3 * p.U0);
}

Eigen::Matrix3cd analytic_n11_ferro(const SiteBasis& basis, int n, const ModelParams& params,
                                    std::span<const cplx> c) {
    if (static_cast<int>(c.size()) != 2 * n + 1) throw DomainError("need 2n+1 coefficients");
    const FerroConstants om = ferro_constants(n, params);
    auto coeff = [&](int s) { return std::abs(s) <= n ? c[static_cast<std::size_t>(n - s)] : cplx{0.0, 0.0}; };
    Eigen::Matrix3cd N = Eigen::Matrix3cd::Zero();
    for (int a : kSpinComponents) {
        for (int b : kSpinComponents) {
            cplx v{0.0, 0.0};
            // particles |n +- 1, m; n+1>, weight Omega2 (S = n+1) or Omega1 (S = n-1)
            for (int Sp : {n + 1, n - 1}) {
                const double w = Sp == n + 1 ? om.omega2 : om.omega1;
                for (int m = -Sp; m <= Sp; ++m) {
                    const SpinSiteState p{Sp, m, n + 1};
                    const int sa = m - a, sb = m - b;
                    v += w * std::conj(coeff(sa)) * coeff(sb) * ladder_up(basis, a, p, {n, sa, n}) *
                         ladder_up(basis, b, p, {n, sb, n});
                }
            }
            // holes |n-1, m; n-1>, weight Omega3
            for (int m = -(n - 1); m <= n - 1; ++m) {
                const SpinSiteState h{n - 1, m, n - 1};
                const int sa = m + a, sb = m + b;
                v += om.omega3 * coeff(sa) * std::conj(coeff(sb)) * ladder_down(basis, a, h, {n, sa, n}) *
                     ladder_down(basis, b, h, {n, sb, n});
            }
            N(sigma_index(a), sigma_index(b)) = -v;
        }
    }
    return N;
}

Eigen::Matrix3cd analytic_n11_afm_odd(int n, const ModelParams& params, std::span<const cplx> c) {
    if (c.size() != 3) throw DomainError("need 3 coefficients");
    const AfmOddConstants u = afm_odd_constants(n, params);
    // rows/cols (0, +1, -1)
    const cplx c0 = c[1], c1 = c[0], cm = c[2];
    Eigen::Matrix3cd M1, M2;
    M1 << std::norm(c0), c0 * std::conj(c1), c0 * std::conj(cm),
          std::conj(c0) * c1, std::norm(c1), c1 * std::conj(cm),
          std::conj(c0) * cm, cm * std::conj(c1), std::norm(cm);
    M2 << std::norm(c0), -std::conj(c0) * cm, -std::conj(c0) * c1,
          -c0 * std::conj(cm), std::norm(cm), c1 * std::conj(cm),
          -c0 * std::conj(c1), cm * std::conj(c1), std::norm(c1);
    const Eigen::Matrix3cd P = 3.0 * (u.upsilon2 + u.upsilon4) * Eigen::Matrix3cd::Identity() + u.k1() * M1 + u.k2() * M2;
    // reorder to (+1, 0, -1)
    const int perm[3] = {1, 0, 2};
    Eigen::Matrix3cd N;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) N(i, j) = -P(perm[i], perm[j]);
    return N;
}

Eigen::Matrix3cd analytic_n11_afm_even(int n, const ModelParams& params) {
    return -afm_even_constants(n, params).n0 * Eigen::Matrix3cd::Identity();
}

// --------------------------------------------------------------------------
// Classification

double OrderVector::theta_pol() const noexcept { return std::abs(chi[1] * chi[1] - 2.0 * chi[0] * chi[2]); }

double OrderVector::norm() const noexcept {
    return std::sqrt(std::norm(chi[0]) + std::norm(chi[1]) + std::norm(chi[2]));
}

std::string order_label(double theta) {
    if (theta >= kPolarThreshold) return "SF-polar";
    if (theta <= kFerroThreshold) return "SF-ferro";
    return "SF-mixed";
}

Classification classify_one_particle(const Eigen::Matrix3cd& n11, double degeneracy_tol) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(hermitian_part(n11));
    const Eigen::Vector3d ev = es.eigenvalues();
    int top = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(ev(i)) > std::abs(ev(top))) top = i;
    const double scale = std::max(std::abs(ev(top)), 1e-300);
    for (int i = 0; i < 3; ++i)
        if (i != top && std::abs(std::abs(ev(i)) - std::abs(ev(top))) < degeneracy_tol * scale)
            throw DegenerateModeError("dominant N11(0) eigenvalue is degenerate; use the two-particle mode");
    Classification out;
    const Eigen::Vector3cd v = es.eigenvectors().col(top).normalized();
    for (int i = 0; i < 3; ++i) out.order.chi[static_cast<std::size_t>(i)] = v(i);
    out.theta = out.order.theta_pol();
    out.label = order_label(out.theta);
    out.eigenvalue = ev(top);
    return out;
}

Classification classify_two_particle(int n, const ModelParams& params) {
    const PairConstants l = pair_constants(n, params);
    const double coeff = l.polar_coefficient();
    if (coeff == 0.0) throw DegenerateModeError("two-particle response is independent of chi");
    Classification out;
    out.two_particle = true;
    if (coeff > 0.0) {
        out.order.chi = {0.0, 1.0, 0.0};
    } else {
        out.order.chi = {1.0, 0.0, 0.0};
    }
    out.theta = out.order.theta_pol();
    out.label = order_label(out.theta);
    out.eigenvalue = l.response(out.theta);
    return out;
}

double two_particle_response(const SiteBasis& basis, int n, const ModelParams& params, const OrderVector& chi) {
    if (n + 2 > basis.n_max()) throw DomainError("site basis too small for the pair response");
    const int g = basis.index({0, 0, n});
    const double eg = basis.energy(g, params);
    double total = 0.0;
    for (std::size_t x = 0; x < basis.size(); ++x) {
        const int nx = basis.state(x).n;
        if (nx != n - 2 && nx != n + 2) continue;
        // amplitude <x|A^2|g> (holes) or <x|A^dag^2|g> (particles)
        cplx amp{0.0, 0.0};
        for (int s1 : kSpinComponents) {
            for (int s2 : kSpinComponents) {
                double pair = 0.0;
                for (std::size_t k = 0; k < basis.size(); ++k) {
                    if (basis.state(k).n != (n + nx) / 2) continue;
                    const int ki = static_cast<int>(k), xi = static_cast<int>(x);
                    pair += nx < n ? basis.c(s1, xi, ki) * basis.c(s2, ki, g) : basis.d(s1, xi, ki) * basis.d(s2, ki, g);
                }
                const cplx w = chi.chi[sigma_index(s1)] * chi.chi[sigma_index(s2)];
                amp += (nx < n ? std::conj(w) : w) * pair;
            }
        }
        if (amp == cplx{0.0, 0.0}) continue;
        total += std::norm(amp) / (basis.energy(static_cast<int>(x), params) - eg);
    }
    return total;
}

Classification classify_order(const SiteBasis& basis, int n, const ModelParams& params, const Eigen::Matrix3cd& n11) {
    (void)basis;
    try {
        return classify_one_particle(n11);
    } catch (const DegenerateModeError&) {
        if (params.U2 > 0.0 && n % 2 == 0) return classify_two_particle(n, params);
        throw;
    }
}

// --------------------------------------------------------------------------
// Self-consistent boundaries

const char* scenario_name(Scenario s) {
    switch (s) {
    case Scenario::afm_odd: return "afm-odd";
    case Scenario::afm_even: return "afm-even";
    case Scenario::ferro: return "ferro";
    case Scenario::afm_field: return "afm-field";
    }
    return "?";
}

Scenario scenario_for(int n, const ModelParams& params) {
    if (!(params.U2 > 0.0)) return Scenario::ferro;
    return n % 2 ? Scenario::afm_odd : Scenario::afm_even;
}

const char* method_name(Method m) { return m == Method::analytic ? "analytic" : "self-consistent"; }

TransitionTable scenario_table(const SiteBasis& basis, Scenario scenario, int n, const ModelParams& params) {
    switch (scenario) {
    case Scenario::afm_odd:
        if (n % 2 == 0) throw DomainError("afm-odd scenario needs odd n");
        return ground_table(basis, basis_state(basis, {1, 0, n}, params, 1.0), params);
    case Scenario::afm_even:
        if (n % 2 != 0) throw DomainError("afm-even scenario needs even n");
        return ground_table(basis, basis_state(basis, {0, 0, n}, params, 1.0), params);
    case Scenario::ferro:
        return ground_table(basis, basis_state(basis, {n, n, n}, params, 1.0), params);
    case Scenario::afm_field: {
        if (n != 1) throw DomainError("the field scenario is defined for the n = 1 lobe");
        std::vector<LocalState> st;
        for (SpinSiteState s : {SpinSiteState{1, 1, 1}, SpinSiteState{1, 0, 1}, SpinSiteState{1, -1, 1},
                                SpinSiteState{0, 0, 0}, SpinSiteState{2, 2, 2}, SpinSiteState{0, 0, 2}})
            st.push_back(basis_state(basis, s, params, st.empty() ? 1.0 : 0.0));
        return TransitionTable(basis, std::move(st));
    }
    }
    throw DomainError("unknown scenario");
}

MotionSystem hopping_motion_system(const TransitionTable& table, double t, int z,
                                   const std::vector<bool>& active) {
    MotionSystem sys;
    const auto d = static_cast<Eigen::Index>(table.size());
    sys.onsite = Eigen::MatrixXcd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) sys.onsite(i, i) = table.energy(static_cast<std::size_t>(i));
    sys.coupling = hopping_coupling(table, t);
    sys.occupations = table.occupations();
    for (const auto& [a, b] : table.transitions()) {
        if (!active.empty() && (!active[static_cast<std::size_t>(a)] || !active[static_cast<std::size_t>(b)])) continue;
        sys.channels.push_back({a, b});
    }
    sys.z = z;
    return sys;
}

std::vector<OccupationProbe> scenario_probes(const TransitionTable& table, const MotionSystem& sys, int ground) {
    std::vector<OccupationProbe> out;
    const int d = static_cast<int>(table.size());
    for (int x = 0; x < d; ++x) {
        if (x == ground) continue;
        const int c = sys.channel_index({ground, x});
        if (c >= 0) out.push_back(OccupationProbe{x, c, {{c, 1.0}}});
    }
    return out;
}

std::vector<double> occupation_update(const TransitionTable& table, double t, int z, const KGrid& grid,
                                      double temperature, const SpectralOptions& spectral) {
    // At T = 0 the partners of the ground with the same boson number carry
    // no weight and stay out of the channel set.
    std::vector<bool> active;
    if (temperature == 0.0) {
        active.assign(table.size(), true);
        for (std::size_t x = 1; x < table.size(); ++x)
            active[x] = table.boson_number(x) != table.boson_number(0);
    }
    const MotionSystem sys = hopping_motion_system(table, t, z, active);
    const auto probes = scenario_probes(table, sys, 0);
    std::vector<double> D = spectral_occupations(sys, grid, temperature, 0, probes, spectral);
    const int ng = table.boson_number(0);
    double probed = 0.0, ratio = 0.0;
    for (std::size_t x = 1; x < D.size(); ++x) {
        if (table.boson_number(x) == ng) {
            D[x] = temperature > 0.0 ? std::exp(-(table.energy(x) - table.energy(0)) / temperature) : 0.0;
            ratio += D[x];
        } else {
            probed += D[x];
        }
    }
    const double dg = (1.0 - probed) / (1.0 + ratio);
    if (dg < 0.0) throw InstabilityError("spectral update left the ground occupation negative");
    for (std::size_t x = 1; x < D.size(); ++x)
        if (table.boson_number(x) == ng) D[x] *= dg;
    D[0] = dg;
    return D;
}

FixedPointResult converge_occupations(const TransitionTable& table, double t, int z, const KGrid& grid,
                                      double temperature, std::vector<double> initial,
                                      const SelfConsistentOptions& opts) {
    TransitionTable work = table;
    auto update = [&](const std::vector<double>& D) {
        work.set_occupations(D);
        return occupation_update(work, t, z, grid, temperature, opts.spectral);
    };
    return solve_fixed_point(std::move(initial), update, opts.fixed_point);
}

PhaseRecord self_consistent_boundary(Scenario scenario, int n, const ModelParams& params, const KGrid& grid,
                                     const SelfConsistentOptions& opts) {
    params.validate();
    PhaseRecord rec;
    rec.params = params;
    rec.lobe_n = n;
    rec.method = Method::self_consistent;
    rec.temperature = params.temperature;

    const SiteBasis basis(std::max(n + 2, 3));
    const TransitionTable table = scenario_table(basis, scenario, n, params);
    const int z = grid.coordination();
    const bool fluct = opts.fluctuations && (scenario != Scenario::afm_even || opts.even_lobe_fluctuations);
    const Eigen::Matrix3cd I = Eigen::Matrix3cd::Identity();

    auto n11_at = [&](const std::vector<double>& D) {
        TransitionTable at = table;
        at.set_occupations(D);
        return build_n_matrices(at, 0.0).n11;
    };
    auto finish = [&](double t_c, const std::vector<double>& D, int iterations) {
        rec.t_c = t_c;
        rec.iterations = iterations;
        rec.occupations = D;
        try {
            const Eigen::Matrix3cd n11 = n11_at(D);
            const Classification cls = scenario == Scenario::afm_even ? classify_order(basis, n, params, n11)
                                                                      : classify_one_particle(n11);
            rec.classifier = cls.theta;
            rec.phase_label = cls.label;
        } catch (const DegenerateModeError& e) {
            rec.phase_label = "SF-degenerate";
            rec.error = e.what();
        }
        return rec;
    };

    if (fluct && params.temperature == 0.0) {
        // At T = 0 the boundary and the occupations are solved together: t is
        // pinned just below the pole of the current occupations.
        auto t_of = [&](const std::vector<double>& D) {
            return pole_search_tc(n11_at(D), z, 1e3 * params.U0, 1e-14) * (1.0 - 1e-10);
        };
        TransitionTable work = table;
        auto update = [&](const std::vector<double>& D) {
            work.set_occupations(D);
            return occupation_update(work, t_of(D), z, grid, 0.0, opts.spectral);
        };
        try {
            const FixedPointResult fp = solve_fixed_point(table.occupations(), update, opts.fixed_point);
            const double t_c = t_of(fp.value);
            if (t_c > params.U0) {
                rec.error = "no transition for t in (0, U0]";
                rec.phase_label = "MI";
                rec.t_c = params.U0;
                return rec;
            }
            return finish(t_c, fp.value, fp.iterations);
        } catch (const ConvergenceError& e) {
            rec.converged = false;
            rec.iterations = e.iterations();
            rec.phase_label = "failed";
            rec.error = e.what();
            return rec;
        }
    }

    SelfConsistentOptions search = opts;
    search.fixed_point.max_iterations = std::min(opts.fixed_point.max_iterations, opts.search_iterations);
    struct Probe {
        bool stable = false;
        FixedPointResult fp;
    };
    auto evaluate = [&](double t, const std::vector<double>& warm) {
        Probe out;
        out.fp.value = warm;
        if (fluct) {
            try {
                out.fp = converge_occupations(table, t, z, grid, params.temperature, warm, search);
            } catch (const ConvergenceError&) {
                return out;
            } catch (const InstabilityError&) {
                return out;
            } catch (const BoundaryPole&) {
                return out;
            }
        }
        out.stable = min_eigenvalue(I + static_cast<double>(z) * t * n11_at(out.fp.value)) > 0.0;
        return out;
    };

    std::vector<double> d_lo = table.occupations();
    int it_lo = 0;
    {
        const Probe p0 = evaluate(0.0, d_lo);
        d_lo = p0.fp.value;
        it_lo = p0.fp.iterations;
    }
    double t_frozen = params.U0;
    try {
        t_frozen = pole_search_tc(n11_at(d_lo), z, params.U0, 1e-12);
    } catch (const NoTransition&) {
    }
    // March up in small steps so every solve starts close to its answer.
    const double step = t_frozen / 16.0;
    double lo = 0.0, hi = 0.0;
    for (;;) {
        hi = std::min(params.U0, lo + step);
        const Probe ph = evaluate(hi, d_lo);
        if (!ph.stable) break;
        lo = hi;
        d_lo = ph.fp.value;
        it_lo = ph.fp.iterations;
        if (hi >= params.U0) {
            rec.error = "no transition for t in (0, U0]";
            rec.phase_label = "MI";
            rec.t_c = params.U0;
            rec.occupations = d_lo;
            return rec;
        }
    }
    while (hi - lo > opts.t_tolerance * params.U0) {
        const double mid = 0.5 * (lo + hi);
        const Probe pm = evaluate(mid, d_lo);
        if (pm.stable) {
            lo = mid;
            d_lo = pm.fp.value;
            it_lo = pm.fp.iterations;
        } else {
            hi = mid;
        }
    }
    return finish(0.5 * (lo + hi), d_lo, it_lo);
}

// --------------------------------------------------------------------------
// Sweeps

namespace {

bool field_ground_at(const SiteBasis& basis, const ModelParams& p) {
    const TransitionTable table = scenario_table(basis, Scenario::afm_field, 1, p);
    // same edge margin as inside()
    const double e0 = table.energy(0);
    const double eps = 1e-12 * std::max(1.0, std::abs(p.mu));
    for (std::size_t i = 1; i < table.size(); ++i)
        if (table.boson_number(i) != 1 && table.energy(i) <= e0 + eps) return false;
    return e0 < table.energy(1) - eps && e0 < table.energy(2) - eps;
}

} // namespace

PhaseRecord boundary_point(const SiteBasis& basis, const ModelParams& params, Method method, const KGrid* grid,
                           const SelfConsistentOptions& opts, bool field) {
    PhaseRecord rec;
    rec.params = params;
    rec.method = method;
    rec.temperature = params.temperature;
    const int n = field ? (field_ground_at(basis, params) ? 1 : 0) : lobe_at(params, basis.n_max() - 2);
    rec.lobe_n = n;
    if (n == 0) {
        rec.phase_label = "none";
        return rec;
    }
    if (method == Method::self_consistent) {
        if (!grid) throw DomainError("self-consistent method needs a k-grid");
        const Scenario sc = field ? Scenario::afm_field : scenario_for(n, params);
        return self_consistent_boundary(sc, n, params, *grid, opts);
    }
    const TransitionTable table = field ? scenario_table(basis, Scenario::afm_field, 1, params)
                                        : ground_table(basis, reference_ground(basis, n, params), params);
    const Eigen::Matrix3cd n11 = build_n_matrices(table, 0.0).n11;
    rec.t_c = field ? pole_search_tc(n11, params.z(), 1e3 * params.U0) : boundary_analytic(n, params.mu, params);
    rec.occupations = table.occupations();
    const Classification cls = field ? classify_one_particle(n11) : classify_order(basis, n, params, n11);
    rec.classifier = cls.theta;
    rec.phase_label = cls.label;
    return rec;
}

std::vector<PhaseRecord> sweep_diagram(const MuSweep& axis, const ModelParams& params, Method method,
                                       const KGrid* grid, const SelfConsistentOptions& opts, bool field,
                                       int workers) {
    if (axis.points < 2) throw DomainError("a sweep axis needs at least 2 points");
    const SiteBasis basis(opts.n_max + 2);
    std::vector<PhaseRecord> out(static_cast<std::size_t>(axis.points));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < axis.points; i = next++) {
            ModelParams p = params;
            p.mu = axis.at(i) * params.U0;
            PhaseRecord& rec = out[static_cast<std::size_t>(i)];
            try {
                rec = boundary_point(basis, p, method, grid, opts, field);
            } catch (const Error& e) {
                rec = PhaseRecord{};
                rec.params = p;
                rec.method = method;
                rec.temperature = p.temperature;
                rec.phase_label = "failed";
                rec.converged = false;
                rec.error = e.what();
                if (auto* ce = dynamic_cast<const ConvergenceError*>(&e)) rec.iterations = ce->iterations();
            }
        }
    };
    const int nw = std::max(1, std::min(workers, axis.points));
    if (nw == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nw; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return out;
}

} // namespace sbo
