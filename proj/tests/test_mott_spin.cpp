#include <doctest.h>

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/KroneckerProduct>

#include "sbo/errors.hpp"
#include "sbo/mott_spin.hpp"

using namespace sbo;

namespace {

std::vector<double> grid_zetas(const KGrid& g) {
    std::vector<double> z;
    for (const auto& l : g.levels()) z.push_back(l.zeta);
    return z;
}

} // namespace

TEST_CASE("exchange couplings") {
    const auto eq = exchange_couplings(0.1, ChannelStrengths{1.0, 1.0}, 4);
    CHECK(eq.J1 == doctest::Approx(0.02));
    CHECK(eq.J2 == doctest::Approx(0.02));
    const auto afm = exchange_couplings(0.1, ChannelStrengths{0.8, 1.2}, 4);
    CHECK(afm.J2 > afm.J1);
    const auto fm = exchange_couplings(0.1, ChannelStrengths{1.2, 0.8}, 4);
    CHECK(fm.J1 > fm.J2);
    const auto g = channel_strengths(1.0, 0.1);
    CHECK(g.g0 == doctest::Approx(0.8));
    CHECK(g.g2 == doctest::Approx(1.1));
    CHECK((g.g0 + 2 * g.g2) / 3 == doctest::Approx(1.0));
    CHECK((g.g2 - g.g0) / 3 == doctest::Approx(0.1));
    CHECK_THROWS_AS(exchange_couplings(0.1, ChannelStrengths{0.0, 1.0}, 4), DomainError);

    const auto p = SpinExchangeParams::from_theta(-0.85 * std::numbers::pi, 2.0, 0.0, 0.0, 4);
    CHECK(p.J() == doctest::Approx(2.0));
    CHECK(p.theta() == doctest::Approx(-0.85 * std::numbers::pi));
}

TEST_CASE("bilinear-biquadratic tensor against tensor products") {
    const auto S = spin1_matrices();
    Eigen::MatrixXcd SS = Eigen::MatrixXcd::Zero(9, 9);
    for (const auto& s : S) SS += Eigen::kroneckerProduct(s, s).eval();
    for (auto [J1, J2] : {std::pair{0.3, 0.7}, std::pair{-1.0, 0.2}, std::pair{0.5, -0.4}}) {
        const Eigen::MatrixXcd O = -J1 * SS - J2 * SS * SS;
        const auto T = bilinear_biquadratic_tensor(J1, J2);
        double err = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int ap = 0; ap < 3; ++ap)
                for (int b = 0; b < 3; ++b)
                    for (int bp = 0; bp < 3; ++bp)
                        err = std::max(err, std::abs(T(a, ap, b, bp) - O(a * 3 + b, ap * 3 + bp)));
        CHECK(err < 1e-12);
        CHECK(T.hermiticity_defect() < 1e-14);
        CHECK(T.exchange_defect() < 1e-14);
    }
    // (S.S)^3 lies in the span of 1, S.S, (S.S)^2
    const Eigen::MatrixXcd cubic =
        SS * SS * SS - (-2.0 * SS * SS + SS + 2.0 * Eigen::MatrixXcd::Identity(9, 9));
    CHECK(cubic.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("n = 1 spectrum") {
    SpinExchangeParams p;
    p.J1 = 0.3;
    p.J2 = 0.5;
    p.lambda = 0.2;
    p.q = 1.0;
    const std::vector<double> D{0.0, 1.0, 0.0};
    for (double zeta : {-4.0, -1.3, 0.0, 2.5, 4.0}) {
        // one positive-norm pole; the other root is its hole partner
        const auto w = spectrum_n1(p, D, zeta);
        const auto f = spectrum_n1_frozen(p, zeta);
        REQUIRE(w.size() == 1);
        CHECK(w[0] == doctest::Approx(f[1]).epsilon(1e-12));
    }

    SpinExchangeParams e;
    e.J1 = e.J2 = 0.25;
    for (double zeta : {-4.0, -2.0, 1.0, 3.0}) {
        const auto f = spectrum_n1_frozen(e, zeta);
        CHECK(f[1] == doctest::Approx(std::abs(4 * 0.25 + 0.25 * zeta)).epsilon(1e-12));
        const auto w = spectrum_n1(e, D, zeta);
        CHECK(w.front() == doctest::Approx(f[1]).epsilon(1e-12));
    }

    SpinExchangeParams g;
    g.J1 = 0.2;
    g.J2 = 0.6;
    const auto k0 = spectrum_n1_frozen(g, -4.0);
    CHECK(std::abs(k0[1]) < 1e-12);
    // particle/hole pairing at lambda = q = 0
    CHECK(k0[0] == doctest::Approx(-k0[1]));
}

TEST_CASE("fmin cases") {
    SpinExchangeParams p;
    p.J1 = 0.2;
    p.J2 = 0.5;
    p.q = 0.3;
    auto r = fmin_eta(p);
    CHECK(r.kind == FMinCase::endpoints);
    CHECK(r.value == doctest::Approx(nematic_boundary_lambda2(p)));

    p.J1 = 0.5;
    p.J2 = 0.3;
    p.q = 1.0;  // above z J2 - z J2^2 / J1 = 0.48
    r = fmin_eta(p);
    CHECK(r.eta == doctest::Approx(-4.0));
    CHECK(r.value == doctest::Approx(nematic_boundary_lambda2(p)));

    p.q = 0.1;
    r = fmin_eta(p);
    CHECK(r.kind == FMinCase::interior);
    CHECK(r.value < 0.0);
    const double expect = -std::pow(p.J2 - p.J1, 2) * std::pow(p.q + 4 * p.J2, 2) /
                          (p.J1 * p.J1 - std::pow(p.J2 - p.J1, 2));
    CHECK(r.value == doctest::Approx(expect).epsilon(1e-12));
    // brute force over eta
    double brute = 1e300;
    for (int i = 0; i <= 80000; ++i) {
        const double eta = -4.0 + 8.0 * i / 80000;
        brute = std::min(brute, std::pow(p.q + 4 * p.J2 + p.J1 * eta, 2) - std::pow((p.J2 - p.J1) * eta, 2));
    }
    CHECK(r.value == doctest::Approx(brute).epsilon(1e-8));
}

TEST_CASE("n = 1 diagram regions") {
    SpinExchangeParams afm;
    afm.J1 = 0.1;
    afm.J2 = 0.3;
    SpinExchangeParams fm;
    fm.J1 = 0.3;
    fm.J2 = 0.1;
    const Axis la{-1.0, 1.0, 9}, qa{0.05, 3.0, 9};
    bool afm_partial = false, fm_partial = false;
    for (const auto& pt : phase_diagram_n1(afm, la, qa)) afm_partial |= pt.phase == Spin1Phase::partially_magnetic;
    for (const auto& pt : phase_diagram_n1(fm, la, qa)) fm_partial |= pt.phase == Spin1Phase::partially_magnetic;
    CHECK_FALSE(afm_partial);
    CHECK(fm_partial);

    // lambda -> -lambda symmetry
    const auto d = phase_diagram_n1(fm, la, qa);
    for (int i = 0; i < la.points; ++i)
        for (int j = 0; j < qa.points; ++j)
            CHECK(d[i * qa.points + j].phase == d[(la.points - 1 - i) * qa.points + j].phase);

    // at lambda = 0 the nematic edge sits at q = 2z(J1 - J2)
    SpinExchangeParams at = fm;
    at.lambda = 1e-9;
    at.q = 2 * 4 * (fm.J1 - fm.J2) * 1.01;
    CHECK(classify_n1(at) == Spin1Phase::nematic);
    at.q = 2 * 4 * (fm.J1 - fm.J2) * 0.99;
    CHECK(classify_n1(at) != Spin1Phase::nematic);
    at.lambda = 0.0;
    CHECK(classify_n1(at) == Spin1Phase::xy_ferromagnetic);
}

TEST_CASE("nematic boundary from gap closure") {
    SpinExchangeParams p;
    p.J1 = 0.15;
    p.J2 = 0.35;
    const KGrid g(2, 64);
    const auto zetas = grid_zetas(g);
    for (double q : {1.8, 2.5}) {
        p.q = q;
        const double l2 = nematic_boundary_lambda2(p);
        REQUIRE(l2 > 0.0);
        const auto stable = [&](double lam) {
            SpinExchangeParams x = p;
            x.lambda = lam;
            return gap_open(spin1_motion_system(x, std::vector<double>{0, 1, 0}, spin1_nematic_channels()), zetas);
        };
        const double lam = bisect_transition(stable, 0.0, 10.0, 1e-14);
        CHECK(std::abs(lam * lam - l2) < 1e-8);
    }
}

TEST_CASE("q_c occupation: closed form against the spectral engine") {
    SpinExchangeParams p = SpinExchangeParams::from_theta(-0.9 * std::numbers::pi, 1.0, 0.0, 0.0, 4);
    p.q = 9.0;
    const KGrid g(2, 8);
    const double D0 = 0.9, D1 = 0.05;
    for (double T : {0.0, 0.4}) {
        const double closed = qc_occupation(p, D0, D1, g, T);
        auto sys = spin1_motion_system(p, std::vector<double>{D1, D0, D1}, spin1_nematic_channels());
        const OccupationProbe pr = diagonal_probe(sys, spin1_index(0), spin1_index(1));
        std::vector<double> acc(1, 0.0);
        for (const auto& l : g.levels()) {
            if (l.gamma) continue;
            const auto pd = motion_poles(sys, -l.zeta);
            for (std::size_t k = 0; k < pd.size(); ++k)
                acc[0] += l.weight * bose(pd.frequencies[k], T) *
                          pd.residue(k, pr.source, pr.source).real() * sys.channel_weight(pr.source);
        }
        CHECK(closed == doctest::Approx(acc[0]).epsilon(1e-10));
    }
}

TEST_CASE("q_c self-consistent") {
    const KGrid g(2, 16);
    const auto p = SpinExchangeParams::from_theta(-0.85 * std::numbers::pi, 1.0, 0.0, 0.0, 4);
    QcOptions o;
    o.fluctuations = false;
    CHECK(qc_self_consistent(p, g, 0.0, o).q_c == doctest::Approx(8 * (p.J1 - p.J2)).epsilon(1e-12));
    o.fluctuations = true;
    const auto r = qc_self_consistent(p, g, 0.0, o);
    CHECK(r.q_c == doctest::Approx(3.22945747412).epsilon(1e-8));
    CHECK(r.D1 == doctest::Approx(0.0254253378362).epsilon(1e-8));
    CHECK(r.q_c > 0.0);
    CHECK(r.q_c < 8 * (p.J1 - p.J2));
    CHECK(r.D0 + 2 * r.D1 == doctest::Approx(1.0));

    const auto near = SpinExchangeParams::from_theta(-0.76 * std::numbers::pi, 1.0, 0.0, 0.0, 4);
    const double qn = qc_self_consistent(near, g, 0.0).q_c;
    CHECK(qn > 0.0);
    CHECK(qn < 8 * (near.J1 - near.J2));
    CHECK(qn < 0.2 * r.q_c);
    const auto afm = SpinExchangeParams::from_theta(-0.6 * std::numbers::pi, 1.0, 0.0, 0.0, 4);
    CHECK_THROWS_AS(qc_self_consistent(afm, g, 0.0), DomainError);
}

TEST_CASE("n = 2 tensor entries") {
    const double t = 0.05, U0 = 1.0, U2 = 0.05;
    const int z = 4;
    const auto h = build_h_tensor_n2(t, U0, U2, z);
    const double e = t * t / U0;
    const int s = kSinglet;
    CHECK(h(s, s, s, s).real() == doctest::Approx(-20.0 / 3.0 * e));
    for (int m = -2; m <= 2; ++m)
        for (int mp = -2; mp <= 2; ++mp)
            CHECK(h(spin2_index(m), s, s, spin2_index(mp)).real() ==
                  doctest::Approx(m == mp ? -8.0 / 3.0 * e : 0.0));
    CHECK(h.hermiticity_defect() < 1e-15);
    CHECK(h.exchange_defect() < 1e-15);
    for (int a = 0; a < 6; ++a)
        for (int ap = 0; ap < 6; ++ap)
            for (int b = 0; b < 6; ++b)
                for (int bp = 0; bp < 6; ++bp)
                    if (std::abs(h(a, ap, b, bp)) > 0.0)
                        CHECK(spin2_sz(a) + spin2_sz(b) == spin2_sz(ap) + spin2_sz(bp));
    CHECK_THROWS_AS(build_h_tensor_n2(t, U0, U2, z, ClebschGordanTable(1)), Error);
    CHECK(outside_perturbative_regime(0.31, 1.0));
    CHECK_FALSE(outside_perturbative_regime(0.29, 1.0));
}

TEST_CASE("n = 2 spectrum and closures") {
    const double U0 = 1.0, U2 = 0.05;
    const int z = 4;
    const double t = 0.03;
    const auto h = build_h_tensor_n2(t, U0, U2, z);
    const auto occ = spin2_frozen_occupations(Spin2Ground::singlet);
    for (double zeta : {-4.0, -1.0, 2.0}) {
        const auto w = spectrum_n2(h, occ, zeta, 0.0, Spin2Ground::singlet, z);
        const double expect = std::sqrt(9 * U2 * U2 + 16 * U2 * t * t / U0 * zeta);
        CHECK(*std::min_element(w.begin(), w.end()) == doctest::Approx(expect).epsilon(1e-12));
        // SU(2): same spectrum for every target m
        for (int m = -2; m <= 2; ++m) {
            auto wm = spectrum_n2(h, occ, zeta, 0.0, Spin2Ground::singlet, z, m);
            CHECK(*std::min_element(wm.begin(), wm.end()) == doctest::Approx(expect).epsilon(1e-12));
        }
    }

    const KGrid g(2, 64);
    const auto zetas = grid_zetas(g);
    const double t0 = hopping_unit_n2(U0, U2, z);
    CHECK(n2_gap_closure_t(U0, U2, 0.0, z, Spin2Ground::singlet, zetas, U0) / t0 ==
          doctest::Approx(0.75).epsilon(1e-9));
    for (double r : {0.3, 0.9, 1.4}) {
        const double num = n2_gap_closure_t(U0, U2, r * U2, z, Spin2Ground::singlet, zetas, U0);
        CHECK(std::abs(num - t_c_n2_singlet(U0, U2, r * U2, z)) < 1e-8);
        const double neg = n2_gap_closure_t(U0, U2, -r * U2, z, Spin2Ground::singlet, zetas, U0);
        CHECK(std::abs(neg - num) < 1e-10);
    }
    for (double r : {1.05, 1.2, 1.4}) {
        const double num = n2_gap_closure_t(U0, U2, r * U2, z, Spin2Ground::ferro, zetas, U0);
        CHECK(std::abs(num - t_c_n2_ferro(U0, U2, r * U2, z)) < 1e-8);
    }
    CHECK_THROWS_AS(n2_gap_closure_t(U0, U2, 2.0 * U2, z, Spin2Ground::ferro, zetas, U0), NoTransition);
}

TEST_CASE("n = 2 boundaries and diagram") {
    const KGrid g(2, 16);
    const auto b = n2_boundaries(1.0, 0.05, Axis{0.0, 2.0, 9}, false, g);
    REQUIRE(b.size() == 9);
    CHECK(b[0].t_singlet == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(std::isinf(b[0].t_ferro));
    CHECK(b[5].t_singlet > 0.0);  // lambda = 1.25 U2
    CHECK(b[5].t_ferro > b[5].t_singlet);
    CHECK(b[6].t_singlet == 0.0);  // lambda = 1.5 U2: triple point
    CHECK(b[6].t_ferro == 0.0);
    CHECK(classify_n2(b[0], 0.5) == Spin2Phase::singlet);
    CHECK(classify_n2(b[0], 0.8) == Spin2Phase::canted_nematic);
    CHECK(classify_n2(b[5], 0.5) == Spin2Phase::canted_nematic);
    CHECK(classify_n2(b[5], 0.6) == Spin2Phase::ferromagnetic);
    CHECK(classify_n2(b[8], 0.0) == Spin2Phase::ferromagnetic);

    const auto sym = n2_boundaries(1.0, 0.05, Axis{-2.0, 0.0, 9}, false, g);
    for (int i = 0; i < 9; ++i) {
        CHECK(sym[i].t_singlet == doctest::Approx(b[8 - i].t_singlet).epsilon(1e-9));
        CHECK(sym[i].t_ferro == b[8 - i].t_ferro);
    }

    const auto pts = phase_diagram_n2(b, Axis{0.0, 1.0, 5});
    CHECK(pts.size() == 45);

    const auto sc = n2_self_consistent_t(1.0, 0.05, 0.0, g);
    CHECK(sc.t_c / hopping_unit_n2(1.0, 0.05, 4) == doctest::Approx(0.842163095426).epsilon(1e-8));
    double sum = 0.0;
    for (double d : sc.occupations) {
        CHECK(d >= 0.0);
        sum += d;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
}
