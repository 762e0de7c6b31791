#include "sbo/mott_spin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "sbo/errors.hpp"

namespace sbo {

namespace {

bool finite_all(std::initializer_list<double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

std::vector<double> excitations(const MotionSystem& sys, double zeta) {
    const PoleDecomposition pd = motion_poles(sys, -zeta);
    return excitation_frequencies(sys, pd);
}

} // namespace

// --------------------------------------------------------------------------
// Exchange couplings

double SpinExchangeParams::J() const noexcept { return std::hypot(J1, J2); }

double SpinExchangeParams::theta() const noexcept { return std::atan2(-J2, -J1); }

SpinExchangeParams SpinExchangeParams::from_theta(double theta, double J, double lambda, double q, int z) {
    SpinExchangeParams p;
    p.J1 = -J * std::cos(theta);
    p.J2 = -J * std::sin(theta);
    p.lambda = lambda;
    p.q = q;
    p.z = z;
    return p;
}

void SpinExchangeParams::validate() const {
    if (!finite_all({J1, J2, lambda, q})) throw DomainError("non-finite spin exchange parameter");
    if (q < 0.0) throw DomainError("quadratic Zeeman q must be >= 0");
    if (z <= 0) throw DomainError("coordination z must be positive");
}

ChannelStrengths channel_strengths(double U0, double U2) { return {U0 - 2.0 * U2, U0 + U2}; }

SpinExchangeParams exchange_couplings(double t, const ChannelStrengths& g, int z, double lambda, double q) {
    if (!(g.g0 > 0.0) || !(g.g2 > 0.0)) throw DomainError("channel strengths g0, g2 must be positive");
    SpinExchangeParams p;
    p.J1 = 2.0 * t * t / g.g2;
    p.J2 = 4.0 * t * t / (3.0 * g.g0) + 2.0 * t * t / (3.0 * g.g2);
    p.lambda = lambda;
    p.q = q;
    p.z = z;
    p.validate();
    return p;
}

SpinExchangeParams exchange_couplings(double t, double U0, double U2, int z, double lambda, double q) {
    return exchange_couplings(t, channel_strengths(U0, U2), z, lambda, q);
}

// --------------------------------------------------------------------------
// n = 1

std::array<Eigen::Matrix3cd, 3> spin1_matrices() {
    const double r = std::sqrt(2.0);
    Eigen::Matrix3cd sp = Eigen::Matrix3cd::Zero();  // S+
    sp(0, 1) = r;
    sp(1, 2) = r;
    const Eigen::Matrix3cd sm = sp.adjoint();
    const cplx i{0.0, 1.0};
    Eigen::Matrix3cd sz = Eigen::Matrix3cd::Zero();
    sz(0, 0) = 1.0;
    sz(2, 2) = -1.0;
    return {0.5 * (sp + sm), -0.5 * i * (sp - sm), sz};
}

PairCouplingTensor bilinear_biquadratic_tensor(double J1, double J2) {
    static const ClebschGordanTable cg(2);
    PairCouplingTensor T(kSpin1States);
    for (int S = 0; S <= 2; ++S) {
        const double x = 0.5 * S * (S + 1) - 2.0;  // S_i.S_j on the pair multiplet
        const double w = -J1 * x - J2 * x * x;
        for (int M = -S; M <= S; ++M)
            for (int m = -1; m <= 1; ++m)
                for (int mp = -1; mp <= 1; ++mp) {
                    const int n = M - m, np = M - mp;
                    if (std::abs(n) > 1 || std::abs(np) > 1) continue;
                    T(spin1_index(m), spin1_index(mp), spin1_index(n), spin1_index(np)) +=
                        w * cg.at(1, m, 1, n, S, M) * cg.at(1, mp, 1, np, S, M);
                }
    }
    return T;
}

double spin1_onsite(int m, const SpinExchangeParams& p) { return -p.lambda * m + p.q * m * m; }

MotionSystem spin1_motion_system(const SpinExchangeParams& p, std::span<const double> occupations,
                                 std::vector<Channel> channels) {
    p.validate();
    if (occupations.size() != kSpin1States) throw DomainError("spin-1 system needs 3 occupations");
    MotionSystem sys;
    sys.onsite = Eigen::MatrixXcd::Zero(kSpin1States, kSpin1States);
    for (int m = -1; m <= 1; ++m) sys.onsite(spin1_index(m), spin1_index(m)) = spin1_onsite(m, p);
    sys.coupling = bilinear_biquadratic_tensor(p.J1, p.J2);
    sys.occupations.assign(occupations.begin(), occupations.end());
    sys.channels = std::move(channels);
    sys.z = p.z;
    return sys;
}

std::vector<Channel> spin1_nematic_channels() {
    return {{spin1_index(0), spin1_index(1)}, {spin1_index(-1), spin1_index(0)}};
}

std::vector<double> spectrum_n1(const SpinExchangeParams& p, std::span<const double> occupations, double zeta) {
    return excitations(spin1_motion_system(p, occupations, spin1_nematic_channels()), zeta);
}

std::array<double, 2> spectrum_n1_frozen(const SpinExchangeParams& p, double zeta) {
    const double a = p.q + p.z * p.J2 + p.J1 * zeta;
    const double b = (p.J2 - p.J1) * zeta;
    const double r2 = a * a - b * b;
    if (r2 < 0.0) throw InstabilityError("imaginary spin-wave frequency: past the instability");
    const double r = std::sqrt(r2);
    return {-p.lambda - r, -p.lambda + r};
}

double spectrum_n1_ferro_branch(const SpinExchangeParams& p, double zeta) {
    return p.lambda - p.q + p.z * p.J1 + p.J1 * zeta;
}

FMinResult fmin_eta(const SpinExchangeParams& p) {
    const double z = p.z;
    const double c = p.q + z * p.J2;
    const double d = p.J2 - p.J1;
    auto f = [&](double eta) { return (c + p.J1 * eta) * (c + p.J1 * eta) - d * d * eta * eta; };
    FMinResult r;
    if (p.J2 >= 2.0 * p.J1) {
        r.kind = FMinCase::endpoints;
        r.eta = f(-z) <= f(z) ? -z : z;
        r.value = f(r.eta);
        return r;
    }
    if (p.J1 > 0.0 && p.q >= z * p.J2 - z * p.J2 * p.J2 / p.J1) {
        r.kind = FMinCase::edge;
        r.eta = -z;
        r.value = f(-z);
        return r;
    }
    r.kind = FMinCase::interior;
    const double lead = p.J1 * p.J1 - d * d;
    r.eta = -p.J1 * c / lead;
    r.value = -d * d * c * c / lead;
    return r;
}

double nematic_boundary_lambda2(const SpinExchangeParams& p) {
    const double z = p.z;
    const double a = p.q + z * p.J2 - z * p.J1;
    return a * a - z * z * (p.J2 - p.J1) * (p.J2 - p.J1);
}

const char* spin1_phase_name(Spin1Phase p) {
    switch (p) {
    case Spin1Phase::nematic: return "nematic";
    case Spin1Phase::partially_magnetic: return "partially-magnetic";
    case Spin1Phase::ferromagnetic: return "ferromagnetic";
    case Spin1Phase::xy_ferromagnetic: return "XY-FM";
    }
    return "?";
}

Spin1Phase classify_n1(const SpinExchangeParams& p, int path_steps) {
    p.validate();
    if (path_steps < 1) throw DomainError("path_steps must be positive");
    const double lam = std::abs(p.lambda);
    if (!(p.q > lam)) return Spin1Phase::ferromagnetic;
    for (int i = 1; i <= path_steps; ++i) {
        SpinExchangeParams s = p;
        const double scale = static_cast<double>(i) / path_steps;
        s.J1 *= scale;
        s.J2 *= scale;
        if (fmin_eta(s).value <= lam * lam)
            return p.lambda == 0.0 ? Spin1Phase::xy_ferromagnetic : Spin1Phase::partially_magnetic;
    }
    return Spin1Phase::nematic;
}

std::vector<Spin1Point> phase_diagram_n1(const SpinExchangeParams& base, const Axis& lambda, const Axis& q) {
    if (lambda.points < 2 || q.points < 2) throw DomainError("a diagram axis needs at least 2 points");
    std::vector<Spin1Point> out;
    out.reserve(static_cast<std::size_t>(lambda.points) * q.points);
    for (int i = 0; i < lambda.points; ++i)
        for (int j = 0; j < q.points; ++j) {
            SpinExchangeParams p = base;
            p.lambda = lambda.at(i);
            p.q = q.at(j);
            out.push_back({p.lambda, p.q, classify_n1(p)});
        }
    return out;
}

double qc_occupation(const SpinExchangeParams& p, double D0, double D1, const KGrid& grid, double temperature,
                     double zero_mode) {
    const double d01 = D0 - D1;
    const double z = p.z;
    double acc = 0.0;
    for (const auto& level : grid.levels()) {
        if (level.gamma) continue;
        const double B = p.q + d01 * (z * p.J2 + p.J1 * level.zeta);
        const double b = (p.J2 - p.J1) * d01 * level.zeta;
        const double w2 = B * B - b * b;
        if (w2 < -1e-14 * std::max(1.0, B * B))
            throw InstabilityError("imaginary spin-wave frequency on the grid: past the instability");
        const double w = std::sqrt(std::max(w2, 0.0));
        if (w < zero_mode) continue;
        acc += level.weight * ((B / w) * (bose(w, temperature) + 0.5) - 0.5);
    }
    return d01 * acc;
}

QcResult qc_self_consistent(const SpinExchangeParams& p, const KGrid& grid, double temperature, const QcOptions& opts) {
    p.validate();
    if (p.lambda != 0.0) throw DomainError("q_c is defined at lambda = 0");
    if (!(p.J1 > p.J2)) throw DomainError("q_c needs J1 > J2");
    if (temperature < 0.0) throw DomainError("negative temperature");
    QcResult r;
    if (!opts.fluctuations) {
        r.q_c = 2.0 * p.z * (p.J1 - p.J2);
        return r;
    }
    auto update = [&](const std::vector<double>& x) {
        const double D1 = x[0];
        const double D0 = 1.0 - 2.0 * D1;
        SpinExchangeParams s = p;
        s.q = 2.0 * p.z * (D0 - D1) * (p.J1 - p.J2);
        if (s.q < 0.0) throw InstabilityError("q_c turned negative");
        return std::vector<double>{qc_occupation(s, D0, D1, grid, temperature, opts.zero_mode)};
    };
    const FixedPointResult fp = solve_fixed_point({0.0}, update, opts.fixed_point);
    r.D1 = fp.value[0];
    r.D0 = 1.0 - 2.0 * r.D1;
    if (r.D1 < 0.0 || r.D0 < 0.0) throw InstabilityError("q_c occupations left [0, 1]");
    r.q_c = 2.0 * p.z * (r.D0 - r.D1) * (p.J1 - p.J2);
    r.iterations = fp.iterations;
    return r;
}

// --------------------------------------------------------------------------
// n = 2

int spin2_sz(int index) noexcept { return index == kSinglet ? 0 : 3 - index; }

bool outside_perturbative_regime(double t, double U0) noexcept { return t > 0.3 * U0; }

PairCouplingTensor build_h_tensor_n2(double t, double U0, double U2, int z, const ClebschGordanTable& cg) {
    if (!(U0 > 0.0) || !(U2 > 0.0)) throw DomainError("the n = 2 spin model needs U0 > 0 and U2 > 0");
    if (z <= 0 || !std::isfinite(t) || t < 0.0) throw DomainError("bad hopping or coordination");
    if (cg.j_max() < 2)
        throw Error("Clebsch-Gordan table has no j = 2 entries (j_max " + std::to_string(cg.j_max()) + ")");

    const double e = t * t / U0;
    const double on = U2 / z;
    PairCouplingTensor h(kSpin2States);
    std::vector<char> seen(static_cast<std::size_t>(kSpin2States * kSpin2States * kSpin2States * kSpin2States), 0);
    auto assign = [&](int a, int ap, int b, int bp, cplx v) {
        const std::size_t k = ((static_cast<std::size_t>(a) * kSpin2States + ap) * kSpin2States + b) * kSpin2States + bp;
        if (seen[k] && std::abs(h(a, ap, b, bp) - v) > 1e-13 * (std::abs(v) + e + on)) {
            std::ostringstream msg;
            msg << "conflicting n = 2 bond entry (" << a << "," << ap << "," << b << "," << bp << ")";
            throw Error(msg.str());
        }
        seen[k] = 1;
        h(a, ap, b, bp) = v;
    };
    auto put = [&](int a, int ap, int b, int bp, double v) {
        assign(a, ap, b, bp, v);
        assign(ap, a, bp, b, v);
        assign(b, bp, a, ap, v);
        assign(bp, b, ap, a, v);
    };
    const int s = kSinglet;
    auto ix = [](int m) { return spin2_index(m); };

    put(s, s, s, s, -20.0 / 3.0 * e);
    for (int m = -2; m <= 2; ++m) {
        put(ix(m), s, s, ix(m), -8.0 / 3.0 * e);
        put(ix(m), ix(m), s, s, -20.0 / 3.0 * e + 3.0 * on);
        const double sign = ((1 - m) % 2 == 0) ? 1.0 : -1.0;
        put(ix(m), s, ix(-m), s, sign * 8.0 / 3.0 * e);
    }
    const double pair = 4.0 * std::sqrt(7.0) / 3.0 * e;
    for (int m = -2; m <= 2; ++m)
        for (int mp = -2; mp <= 2; ++mp) {
            const int l = m + mp;
            if (std::abs(l) > 2) continue;
            put(s, ix(m), ix(l), ix(mp), pair * cg.at(0, 0, 2, l, 2, l) * cg.at(2, m, 2, mp, 2, l));
        }
    const std::array<double, 5> w{6.0 * on - 16.0 / 3.0 * e, 6.0 * on - 4.0 * e, 6.0 * on - 8.0 / 3.0 * e,
                                  6.0 * on - 4.0 * e, 6.0 * on - 12.0 * e};
    for (int m = -2; m <= 2; ++m)
        for (int mp = -2; mp <= 2; ++mp)
            for (int l = -2; l <= 2; ++l) {
                const int lp = m + mp - l;
                if (std::abs(lp) > 2) continue;
                const int M = m + mp;
                double v = 0.0;
                for (int S = std::abs(M); S <= 4; ++S)
                    v += w[static_cast<std::size_t>(S)] * cg.at(2, m, 2, mp, S, M) * cg.at(2, l, 2, lp, S, M);
                put(ix(m), ix(l), ix(mp), ix(lp), v);
            }
    return h;
}

PairCouplingTensor build_h_tensor_n2(double t, double U0, double U2, int z) {
    static const ClebschGordanTable cg(2);
    return build_h_tensor_n2(t, U0, U2, z, cg);
}

Eigen::MatrixXcd spin2_onsite(double lambda) {
    Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(kSpin2States, kSpin2States);
    for (int i = 0; i < kSpin2States; ++i) v(i, i) = -lambda * spin2_sz(i);
    return v;
}

std::vector<Channel> spin2_channels(Spin2Ground ground, double lambda, int target_m) {
    const int s = kSinglet;
    if (ground == Spin2Ground::ferro) return {{spin2_index(2), s}, {spin2_index(2), spin2_index(0)}};
    if (lambda == 0.0) {
        if (std::abs(target_m) > 2) throw DomainError("target m outside -2..2");
        return {{s, spin2_index(target_m)}, {spin2_index(-target_m), s}};
    }
    return {{s, spin2_index(2)}, {spin2_index(-2), s}, {spin2_index(0), spin2_index(2)}};
}

MotionSystem spin2_motion_system(const PairCouplingTensor& h, double lambda, std::span<const double> occupations,
                                 std::vector<Channel> channels, int z) {
    if (occupations.size() != kSpin2States) throw DomainError("spin-2 system needs 6 occupations");
    MotionSystem sys;
    sys.onsite = spin2_onsite(lambda);
    sys.coupling = h;
    sys.occupations.assign(occupations.begin(), occupations.end());
    sys.channels = std::move(channels);
    sys.z = z;
    return sys;
}

std::vector<double> spin2_frozen_occupations(Spin2Ground ground) {
    std::vector<double> d(kSpin2States, 0.0);
    d[ground == Spin2Ground::singlet ? kSinglet : spin2_index(2)] = 1.0;
    return d;
}

std::vector<double> spectrum_n2(const PairCouplingTensor& h, std::span<const double> occupations, double zeta,
                                double lambda, Spin2Ground ground, int z, int target_m) {
    const double lam = std::abs(lambda);
    return excitations(spin2_motion_system(h, lam, occupations, spin2_channels(ground, lam, target_m), z), zeta);
}

double hopping_unit_n2(double U0, double U2, int z) { return std::sqrt(U0 * U2 / z); }

double t_c_n2_singlet(double U0, double U2, double lambda, int z) {
    const double lam = std::abs(lambda);
    if (!(U0 > 0.0 && U2 > 0.0 && z > 0)) throw DomainError("the singlet boundary needs U0, U2, z > 0");
    if (lam >= 1.5 * U2) throw DomainError("singlet ground needs |lambda| < 3 U2 / 2");
    return std::sqrt(U0 * (9.0 * U2 * U2 - 4.0 * lam * lam) / (16.0 * z * U2));
}

double t_c_n2_ferro(double U0, double U2, double lambda, int z) {
    const double lam = std::abs(lambda);
    if (lam <= U2 || lam >= 1.5 * U2) throw DomainError("the ferromagnetic edge needs U2 < |lambda| < 3 U2 / 2");
    return std::sqrt(U0 / z * (3.0 * lam * U2 - 2.0 * lam * lam) / (8.0 * (lam - U2)));
}

// --------------------------------------------------------------------------
// Gap closure

double spectral_gap(const MotionSystem& sys, std::span<const double> zetas) {
    double gap = std::numeric_limits<double>::infinity();
    for (double zeta : zetas)
        for (double w : excitations(sys, zeta)) gap = std::min(gap, w);
    return gap;
}

bool gap_open(const MotionSystem& sys, std::span<const double> zetas) {
    try {
        return spectral_gap(sys, zetas) > 0.0;
    } catch (const InstabilityError&) {
        return false;
    }
}

double bisect_transition(const std::function<bool(double)>& stable, double lo, double hi, double tolerance) {
    if (!(hi > lo)) throw DomainError("empty bisection bracket");
    while (hi - lo > tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (stable(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double n2_gap_closure_t(double U0, double U2, double lambda, int z, Spin2Ground ground, std::span<const double> zetas,
                        double t_max, double tolerance) {
    const double lam = std::abs(lambda);
    const std::vector<double> occ = spin2_frozen_occupations(ground);
    const std::vector<Channel> ch = spin2_channels(ground, lam);
    auto stable = [&](double t) {
        return gap_open(spin2_motion_system(build_h_tensor_n2(t, U0, U2, z), lam, occ, ch, z), zetas);
    };
    const bool at_zero = stable(0.0);
    if (stable(t_max) == at_zero) throw NoTransition("spin-gap stability does not change up to t_max");
    if (at_zero) return bisect_transition(stable, 0.0, t_max, tolerance * U0);
    return bisect_transition([&](double t) { return !stable(t); }, 0.0, t_max, tolerance * U0);
}

namespace {

std::vector<Channel> singlet_channels_all() {
    std::vector<Channel> ch;
    for (int m = 2; m >= -2; --m) {
        ch.push_back({kSinglet, spin2_index(m)});
        ch.push_back({spin2_index(m), kSinglet});
    }
    return ch;
}

} // namespace

Spin2SelfConsistentResult n2_self_consistent_t(double U0, double U2, double lambda, const KGrid& grid,
                                               const Spin2Options& opts) {
    const double lam = std::abs(lambda);
    if (lam >= 1.5 * U2) throw DomainError("singlet ground needs |lambda| < 3 U2 / 2");
    const int z = grid.coordination();
    const std::vector<double> gamma{-static_cast<double>(z)};
    const std::vector<Channel> ch = singlet_channels_all();

    auto system = [&](double t, const std::vector<double>& D) {
        return spin2_motion_system(build_h_tensor_n2(t, U0, U2, z), lam, D, ch, z);
    };
    // Gap closure at k = 0 for fixed occupations.
    auto t_of = [&](const std::vector<double>& D) {
        auto stable = [&](double t) { return gap_open(system(t, D), gamma); };
        double hi = hopping_unit_n2(U0, U2, z);
        while (stable(hi)) {
            hi *= 2.0;
            if (hi > 10.0 * U0) throw NoTransition("no singlet gap closure below 10 U0");
        }
        return bisect_transition(stable, 0.0, hi, 1e-15 * U0);
    };

    Spin2SelfConsistentResult r;
    std::vector<double> D = spin2_frozen_occupations(Spin2Ground::singlet);
    if (!opts.fluctuations) {
        r.t_c = t_of(D);
        r.occupations = D;
        return r;
    }
    SpectralOptions spectral = opts.spectral;
    spectral.skip_gamma = true;
    auto update = [&](const std::vector<double>& x) {
        const MotionSystem sys = system(t_of(x), x);
        std::vector<OccupationProbe> probes;
        for (int m = 2; m >= -2; --m) probes.push_back(diagonal_probe(sys, kSinglet, spin2_index(m)));
        return spectral_occupations(sys, grid, 0.0, kSinglet, probes, spectral);
    };
    const FixedPointResult fp = solve_fixed_point(D, update, opts.fixed_point);
    r.occupations = fp.value;
    r.t_c = t_of(fp.value);
    r.iterations = fp.iterations;
    return r;
}

const char* spin2_phase_name(Spin2Phase p) {
    switch (p) {
    case Spin2Phase::singlet: return "singlet";
    case Spin2Phase::canted_nematic: return "canted-nematic";
    case Spin2Phase::ferromagnetic: return "ferromagnetic";
    }
    return "?";
}

std::vector<Spin2Boundary> n2_boundaries(double U0, double U2, const Axis& lambda_over_U2, bool self_consistent,
                                         const KGrid& grid, const Spin2Options& opts) {
    if (lambda_over_U2.points < 2) throw DomainError("a diagram axis needs at least 2 points");
    const int z = grid.coordination();
    const double t0 = hopping_unit_n2(U0, U2, z);
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> zetas;
    for (const auto& level : grid.levels()) zetas.push_back(level.zeta);
    std::vector<Spin2Boundary> out;
    for (int i = 0; i < lambda_over_U2.points; ++i) {
        Spin2Boundary b;
        b.lambda = lambda_over_U2.at(i);
        const double lam = std::abs(b.lambda) * U2;
        if (lam >= 1.5 * U2 * (1.0 - 1e-12)) {
            b.t_singlet = 0.0;
            b.t_ferro = 0.0;
            out.push_back(b);
            continue;
        }
        if (self_consistent) {
            const Spin2SelfConsistentResult sc = n2_self_consistent_t(U0, U2, lam, grid, opts);
            b.t_singlet = sc.t_c / t0;
            b.iterations = sc.iterations;
        } else {
            b.t_singlet = n2_gap_closure_t(U0, U2, lam, z, Spin2Ground::singlet, zetas, U0) / t0;
        }
        b.t_ferro = inf;
        if (lam > U2) {
            try {
                b.t_ferro = n2_gap_closure_t(U0, U2, lam, z, Spin2Ground::ferro, zetas, U0) / t0;
            } catch (const NoTransition&) {
            }
        }
        out.push_back(b);
    }
    return out;
}

Spin2Phase classify_n2(const Spin2Boundary& b, double t_over_t0) {
    if (t_over_t0 >= b.t_ferro) return Spin2Phase::ferromagnetic;
    if (t_over_t0 < b.t_singlet) return Spin2Phase::singlet;
    return Spin2Phase::canted_nematic;
}

std::vector<Spin2Point> phase_diagram_n2(const std::vector<Spin2Boundary>& boundaries, const Axis& t_over_t0) {
    if (t_over_t0.points < 2) throw DomainError("a diagram axis needs at least 2 points");
    std::vector<Spin2Point> out;
    for (const auto& b : boundaries)
        for (int j = 0; j < t_over_t0.points; ++j) {
            const double t = t_over_t0.at(j);
            out.push_back({b.lambda, t, classify_n2(b, t)});
        }
    return out;
}

} // namespace sbo
