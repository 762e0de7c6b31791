#include "sbo/clebsch_gordan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "sbo/errors.hpp"

namespace sbo {

namespace {

long double factorial(int k) {
    long double f = 1.0L;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

} // namespace

double clebsch_gordan(int j1, int m1, int j2, int m2, int J, int M) {
    if (j1 < 0 || j2 < 0 || J < 0) return 0.0;
    if (M != m1 + m2) return 0.0;
    if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(M) > J) return 0.0;
    if (J < std::abs(j1 - j2) || J > j1 + j2) return 0.0;

    const long double pref =
        std::sqrt((2.0L * J + 1.0L) * factorial(J + j1 - j2) * factorial(J - j1 + j2) *
                  factorial(j1 + j2 - J) / factorial(j1 + j2 + J + 1)) *
        std::sqrt(factorial(J + M) * factorial(J - M) * factorial(j1 - m1) * factorial(j1 + m1) *
                  factorial(j2 - m2) * factorial(j2 + m2));

    const int kmin = std::max({0, j2 - J - m1, j1 - J + m2});
    const int kmax = std::min({j1 + j2 - J, j1 - m1, j2 + m2});
    long double sum = 0.0L;
    for (int k = kmin; k <= kmax; ++k) {
        const long double den = factorial(k) * factorial(j1 + j2 - J - k) * factorial(j1 - m1 - k) *
                                factorial(j2 + m2 - k) * factorial(J - j2 + m1 + k) *
                                factorial(J - j1 - m2 + k);
        sum += ((k % 2) ? -1.0L : 1.0L) / den;
    }
    const double value = static_cast<double>(pref * sum);
    return std::abs(value) < 1e-15 ? 0.0 : value;
}

ClebschGordanTable::ClebschGordanTable(int j_max) : j_max_(j_max) {
    if (j_max < 0) throw DomainError("negative j_max");
    for (int j1 = 0; j1 <= j_max; ++j1)
        for (int j2 = 0; j2 <= j_max; ++j2)
            for (int J = std::abs(j1 - j2); J <= j1 + j2; ++J)
                for (int m1 = -j1; m1 <= j1; ++m1)
                    for (int m2 = -j2; m2 <= j2; ++m2) {
                        const int M = m1 + m2;
                        if (std::abs(M) > J) continue;
                        entries_[{j1, m1, j2, m2, J, M}] = clebsch_gordan(j1, m1, j2, m2, J, M);
                    }
}

double ClebschGordanTable::at(int j1, int m1, int j2, int m2, int J, int M) const {
    if (j1 > j_max_ || j2 > j_max_)
        throw Error("Clebsch-Gordan table has no entries for j1=" + std::to_string(j1) +
                    ", j2=" + std::to_string(j2) + " (j_max " + std::to_string(j_max_) + ")");
    auto it = entries_.find({j1, m1, j2, m2, J, M});
    // Absent keys inside the range are selection-rule zeros.
    return it == entries_.end() ? 0.0 : it->second;
}

} // namespace sbo
