#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sbo/errors.hpp"
#include "sbo/green_rpa.hpp"
#include "sbo/misf_phase.hpp"

using namespace sbo;

namespace {

// Two isolated levels, one channel (0 -> 1), no coupling.
MotionSystem two_level(double e0, double e1, std::vector<double> occ) {
    MotionSystem sys;
    sys.onsite = Eigen::MatrixXcd::Zero(2, 2);
    sys.onsite(0, 0) = e0;
    sys.onsite(1, 1) = e1;
    sys.coupling = PairCouplingTensor(2);
    sys.occupations = std::move(occ);
    sys.channels = {{0, 1}};
    return sys;
}

} // namespace

TEST_CASE("k grid") {
    const KGrid g(2, 16);
    double wsum = 0.0, zsum = 0.0;
    bool gamma = false;
    for (const auto& l : g.levels()) {
        CHECK(l.zeta >= -4.0 - 1e-12);
        CHECK(l.zeta <= 4.0 + 1e-12);
        wsum += l.weight;
        zsum += l.weight * l.zeta;
        if (l.gamma) {
            gamma = true;
            CHECK(l.zeta == doctest::Approx(-4.0));
        }
    }
    CHECK(gamma);
    CHECK(wsum == doctest::Approx(1.0));
    CHECK(std::abs(zsum) < 1e-12);
}

TEST_CASE("even lobe N11 is N0 times identity") {
    const SiteBasis b(6);
    ModelParams p;
    p.U2 = 0.1;
    p.mu = 1.4;
    const auto tab = ground_table(b, reference_ground(b, 2, p), p);
    const auto nm = build_n_matrices(tab, 0.0);
    const auto c = afm_even_constants(2, p);
    // physical sign: N11 = -N0 I
    CHECK((nm.n11 + c.n0 * Eigen::Matrix3cd::Identity()).norm() < 1e-12);
    CHECK(nm.n12.norm() == 0.0);
    CHECK(nm.n21.norm() == 0.0);
    CHECK(c.delta_e1 == doctest::Approx(0.6));
}

TEST_CASE("ferro N11 diagonal with lambda_m on top") {
    const SiteBasis b(6);
    ModelParams p;
    p.U2 = -0.1;
    for (int n = 1; n <= 3; ++n) {
        p.mu = (n - 0.5) * (1.0 + p.U2);
        const auto tab = ground_table(b, reference_ground(b, n, p), p);
        const Eigen::Matrix3cd n11 = build_n_matrices(tab, 0.0).n11;
        CHECK((n11 - Eigen::Matrix3cd(n11.diagonal().asDiagonal())).norm() < 1e-14);
        const double top = (-n11.diagonal().real()).maxCoeff();
        CHECK(top == doctest::Approx(ferro_constants(n, p).lambda_m(n)).epsilon(1e-12));
    }
}

TEST_CASE("pole proximity") {
    const SiteBasis b(4);
    ModelParams p;
    p.U2 = 0.1;
    p.mu = 0.4;
    const auto tab = ground_table(b, reference_ground(b, 1, p), p);
    const double de = tab.energy(1) - tab.energy(0);
    CHECK_THROWS_AS(build_n_matrices(tab, de + 1e-12), PoleProximityError);
    CHECK_THROWS_AS(build_n_matrices(tab, -de), PoleProximityError);
}

TEST_CASE("green matrix limits") {
    const SiteBasis b(4);
    ModelParams p;
    p.U2 = 0.1;
    p.mu = 1.4;
    const auto tab = ground_table(b, reference_ground(b, 2, p), p);
    const auto nm = build_n_matrices(tab, 0.0);
    CHECK((green_matrix(nm, 0.0) - nm.n11).norm() < 1e-14);
    CHECK((green_matrix(nm, -0.01) - green_matrix_simplified(nm.n11, -0.01)).norm() < 1e-12);
    // pole at k = 0 exactly when 1 + z t N0 = 0
    const double n0 = afm_even_constants(2, p).n0;
    const double tc = 1.0 / (4.0 * n0);
    CHECK_THROWS_AS(green_matrix(nm, -4.0 * tc), BoundaryPole);
    CHECK(std::isfinite(green_matrix(nm, -4.0 * tc * 0.99).norm()));
}

TEST_CASE("atomic limit pole and residue sum rule") {
    const auto sys = two_level(-0.3, 0.2, {0.8, 0.2});
    const auto pd = motion_poles(sys, -1.0);
    REQUIRE(pd.size() == 1);
    CHECK(pd.frequencies[0] == doctest::Approx(0.5));
    CHECK(pd.residue(0, 0, 0).real() * sys.channel_weight(0) == doctest::Approx(0.6));

    // odd-lobe hopping system: residues sum to the identity
    const SiteBasis b(6);
    ModelParams p;
    p.U2 = 0.1;
    p.mu = 0.4;
    const auto tab = scenario_table(b, Scenario::afm_odd, 1, p);
    const auto hs = hopping_motion_system(tab, 0.02, 4);
    for (double gamma : {-4.0, -1.0, 0.5, 3.0}) {
        const auto q = motion_poles(hs, gamma);
        const Eigen::MatrixXcd sum = [&] {
            Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(q.right.rows(), q.right.rows());
            for (std::size_t i = 0; i < q.size(); ++i) s += q.residue(i);
            return s;
        }();
        CHECK((sum - Eigen::MatrixXcd::Identity(sum.rows(), sum.cols())).norm() < 1e-10);
    }
}

TEST_CASE("atomic limit occupations follow Boltzmann weights") {
    // D_x / D_g = exp(-dE / T) at the fixed point
    const double de = 0.2, T = 0.1;
    std::vector<double> D{1.0, 0.0};
    const KGrid g(1, 4);
    for (int it = 0; it < 200; ++it) {
        const auto sys = two_level(0.0, de, D);
        const OccupationProbe pr = diagonal_probe(sys, 0, 1);
        const auto next = spectral_occupations(sys, g, T, 0, std::span(&pr, 1));
        for (int i = 0; i < 2; ++i) D[i] = 0.5 * D[i] + 0.5 * next[i];
    }
    CHECK(D[1] / D[0] == doctest::Approx(std::exp(-de / T)).epsilon(1e-10));
    CHECK(D[0] + D[1] == doctest::Approx(1.0));

    // T = 0, t = 0: ground keeps everything
    const auto sys = two_level(0.0, de, {1.0, 0.0});
    const OccupationProbe pr = diagonal_probe(sys, 0, 1);
    const auto d0 = spectral_occupations(sys, g, 0.0, 0, std::span(&pr, 1));
    CHECK(d0[0] == 1.0);
    CHECK(d0[1] == 0.0);
}

TEST_CASE("bose function") {
    CHECK(bose(0.3, 0.0) == 0.0);
    CHECK(bose(-0.3, 0.0) == -1.0);
    CHECK(bose(0.3, 0.1) == doctest::Approx(1.0 / (std::exp(3.0) - 1.0)));
}

TEST_CASE("fixed point") {
    const auto f = [](const std::vector<double>& x) { return std::vector<double>{std::cos(x[0])}; };
    FixedPointOptions o;
    const auto r = solve_fixed_point({0.0}, f, o);
    CHECK(r.value[0] == doctest::Approx(0.7390851332151607).epsilon(1e-7));
    o.max_iterations = 3;
    CHECK_THROWS_AS(solve_fixed_point({0.0}, f, o), ConvergenceError);
}

TEST_CASE("quantum depletion at T = 0") {
    const SiteBasis b(6);
    ModelParams p;
    p.U2 = 0.1;
    p.mu = 0.4;
    const auto tab = scenario_table(b, Scenario::afm_odd, 1, p);
    const KGrid g(2, 16);
    const auto D = occupation_update(tab, 0.03, 4, g, 0.0, {});
    double excited = 0.0;
    for (std::size_t i = 1; i < D.size(); ++i) {
        CHECK(D[i] >= 0.0);
        excited += D[i];
    }
    CHECK(excited > 0.0);
    CHECK(std::accumulate(D.begin(), D.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}
