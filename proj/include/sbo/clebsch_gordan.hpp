#pragma once

#include <array>
#include <map>

namespace sbo {

/// <j1 m1; j2 m2 | J M> in the Condon-Shortley convention (Racah's closed
/// form). Integer spins only. Exact zero when the triangle or projection rules
/// are violated.
double clebsch_gordan(int j1, int m1, int j2, int m2, int J, int M);

/// Precomputed coefficients for all integer spins up to j_max.
class ClebschGordanTable {
public:
    explicit ClebschGordanTable(int j_max);

    int j_max() const noexcept { return j_max_; }
    /// Throws Error when any spin exceeds the table range.
    double at(int j1, int m1, int j2, int m2, int J, int M) const;
    std::size_t size() const noexcept { return entries_.size(); }

private:
    int j_max_;
    std::map<std::array<int, 6>, double> entries_;
};

} // namespace sbo
