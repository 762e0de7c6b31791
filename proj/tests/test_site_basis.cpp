#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sbo/clebsch_gordan.hpp"
#include "sbo/errors.hpp"
#include "sbo/site_basis.hpp"

using namespace sbo;

TEST_CASE("on-site energy") {
    ModelParams p;
    p.U2 = 0.1;
    CHECK(on_site_energy(0, 0, p) == 0.0);
    p.mu = 0.5;
    CHECK(on_site_energy(0, 2, p) == doctest::Approx(-0.2).epsilon(1e-14));
    p.mu = 0.3;
    // -mu + U2/2 (2 - 2)
    CHECK(on_site_energy(1, 1, p) == doctest::Approx(-0.3).epsilon(1e-14));
    CHECK_THROWS_AS(state_energy({1, 0, 2}, p), DomainError);
    CHECK_THROWS_AS(validate(SpinSiteState{2, 3, 2}), DomainError);
}

TEST_CASE("field shift only splits m") {
    ModelParams p;
    p.U2 = 0.1;
    p.eta = 0.05;
    CHECK(state_energy({1, 1, 1}, p) - state_energy({1, -1, 1}, p) == doctest::Approx(-0.1));
}

TEST_CASE("fock oracle multiplets") {
    auto one = build_fock_oracle(1);
    REQUIRE(one.size() == 3);
    for (const auto& s : one) CHECK(s.quantum.S == 1);

    auto two = build_fock_oracle(2);
    REQUIRE(two.size() == 6);
    int singlets = 0;
    for (const auto& s : two) singlets += s.quantum.S == 0;
    CHECK(singlets == 1);
    // singlet = (a0^2 - 2 a1 a-1)^dag / sqrt6 |vac>: amplitude sqrt2/sqrt6 on
    // (0,2,0), -2/sqrt6 on (1,0,1), up to the overall sign convention
    const FockSector sec(2);
    const auto& v = two.front().amplitudes;
    const double a020 = v(sec.index({0, 2, 0}));
    const double a101 = v(sec.index({1, 0, 1}));
    CHECK(std::abs(a020) == doctest::Approx(std::sqrt(2.0 / 6.0)).epsilon(1e-12));
    CHECK(std::abs(a101) == doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(a020 * a101 < 0.0);

    auto three = build_fock_oracle(3);
    REQUIRE(three.size() == 10);
    for (const auto& s : three) CHECK((s.quantum.S == 1 || s.quantum.S == 3));
}

TEST_CASE("oracle count equals constraint count") {
    for (int n = 0; n <= 6; ++n)
        CHECK(static_cast<int>(build_fock_oracle(n).size()) == constraint_state_count(n));
}

TEST_CASE("annihilation matrix elements") {
    const SiteBasis b(4);
    CHECK(b.c(+1, b.index({0, 0, 0}), b.index({1, 1, 1})) == doctest::Approx(1.0));
    CHECK(b.c(+1, b.index({1, 1, 1}), b.index({2, 2, 2})) == doctest::Approx(std::sqrt(2.0)));
    for (int n = 1; n <= 3; ++n) {
        const double A = b.c(+1, b.index({n, n, n}), b.index({n + 1, n + 1, n + 1}));
        const double B = b.c(+1, b.index({n - 1, n - 1, n - 1}), b.index({n, n, n}));
        CHECK(A * A == doctest::Approx(n + 1));
        CHECK(B * B == doctest::Approx(n));
    }
    // n mismatch is an exact zero
    CHECK(b.c(0, b.index({1, 0, 1}), b.index({1, 0, 1})) == 0.0);
}

TEST_CASE("selection rules and sum rules") {
    const int n_max = 6;
    const SiteBasis b(n_max);
    const auto& st = b.states();
    for (int sigma : kSpinComponents)
        for (std::size_t i = 0; i < st.size(); ++i)
            for (std::size_t j = 0; j < st.size(); ++j) {
                const double v = b.c(sigma, static_cast<int>(i), static_cast<int>(j));
                if (v == 0.0) continue;
                CHECK(st[i].n == st[j].n - 1);
                CHECK(st[i].m == st[j].m - sigma);
                CHECK(std::abs(st[i].S - st[j].S) == 1);
                CHECK(b.d(sigma, static_cast<int>(j), static_cast<int>(i)) == v);
            }
    for (std::size_t k = 0; k < st.size(); ++k) {
        if (st[k].n > n_max - 1) continue;
        double aad = 0.0, ada = 0.0, sz = 0.0;
        for (int sigma : kSpinComponents)
            for (std::size_t i = 0; i < st.size(); ++i) {
                const double c = b.c(sigma, static_cast<int>(i), static_cast<int>(k));
                const double d = b.d(sigma, static_cast<int>(i), static_cast<int>(k));
                ada += c * c;
                aad += d * d;
                sz += sigma * c * c;
            }
        CHECK(ada == doctest::Approx(st[k].n).epsilon(1e-12));
        CHECK(aad == doctest::Approx(st[k].n + 3).epsilon(1e-12));
        CHECK(sz == doctest::Approx(st[k].m).epsilon(1e-12));
    }
}

TEST_CASE("basis dump rows") {
    const SiteBasis b(2);
    std::ostringstream os;
    b.dump(os);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "sigma,S_bra,m_bra,n_bra,S_ket,m_ket,n_ket,value");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows > 0);
}

TEST_CASE("clebsch-gordan") {
    CHECK(clebsch_gordan(1, 1, 1, -1, 0, 0) == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(clebsch_gordan(2, 2, 2, -2, 0, 0) == doctest::Approx(1.0 / std::sqrt(5.0)));
    double s = 0.0;
    for (int m1 = -2; m1 <= 2; ++m1) s += std::pow(clebsch_gordan(2, m1, 2, -m1, 2, 0), 2);
    CHECK(s == doctest::Approx(1.0));
    CHECK(clebsch_gordan(1, 1, 1, 0, 0, 0) == 0.0);
    CHECK(clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0);

    const ClebschGordanTable t(3);
    for (int j1 = 0; j1 <= 3; ++j1)
        for (int j2 = 0; j2 <= 3; ++j2)
            for (int J = std::abs(j1 - j2); J <= std::min(3, j1 + j2); ++J)
                for (int M = -J; M <= J; ++M) {
                    double norm = 0.0;
                    for (int m1 = -j1; m1 <= j1; ++m1)
                        if (std::abs(M - m1) <= j2) norm += std::pow(t.at(j1, m1, j2, M - m1, J, M), 2);
                    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
                }
    CHECK_THROWS_AS(t.at(4, 0, 1, 0, 4, 0), Error);
}
