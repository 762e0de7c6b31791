#include "sbo/site_basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "sbo/errors.hpp"

namespace sbo {

namespace {

constexpr double kEigenCluster = 1e-10;

int occ_slot(int sigma) { return sigma_index(sigma); }

} // namespace

bool is_valid(const SpinSiteState& s) noexcept {
    return s.n >= 0 && s.S >= 0 && s.S <= s.n && std::abs(s.m) <= s.S && (s.S + s.n) % 2 == 0;
}

void validate(const SpinSiteState& s) {
    std::ostringstream msg;
    msg << "invalid site state " << s << ": ";
    if (s.n < 0) {
        msg << "boson number must be non-negative";
    } else if (s.S < 0 || s.S > s.n) {
        msg << "total spin must satisfy 0 <= S <= n";
    } else if (std::abs(s.m) > s.S) {
        msg << "projection must satisfy -S <= m <= S";
    } else if ((s.S + s.n) % 2 != 0) {
        msg << "S + n must be even";
    } else {
        return;
    }
    throw DomainError(msg.str());
}

std::ostream& operator<<(std::ostream& os, const SpinSiteState& s) {
    return os << '|' << s.S << ',' << s.m << ';' << s.n << '>';
}

void ModelParams::validate() const {
    if (!(U0 > 0.0)) throw DomainError("U0 must be positive");
    if (dim < 1) throw DomainError("lattice dimension must be >= 1");
    if (!(temperature >= 0.0)) throw DomainError("temperature must be non-negative");
    if (!(t >= 0.0)) throw DomainError("hopping t must be non-negative");
}

double on_site_energy(int S, int n, const ModelParams& p) {
    validate(SpinSiteState{S, S, n});
    return -p.mu * n + 0.5 * p.U0 * n * (n - 1) + 0.5 * p.U2 * (S * (S + 1) - 2 * n);
}

double state_energy(const SpinSiteState& s, const ModelParams& p) {
    validate(s);
    return on_site_energy(s.S, s.n, p) - p.eta * s.m;
}

// --------------------------------------------------------------------------
// Fock space

FockSector::FockSector(int n) : n_(n) {
    if (n < 0) throw DomainError("negative boson number");
    for (int np = 0; np <= n; ++np)
        for (int n0 = 0; np + n0 <= n; ++n0) occ_.push_back({np, n0, n - np - n0});
    std::sort(occ_.begin(), occ_.end());
    for (std::size_t i = 0; i < occ_.size(); ++i) lookup_[occ_[i]] = static_cast<int>(i);
}

int FockSector::index(const std::array<int, 3>& occ) const {
    auto it = lookup_.find(occ);
    return it == lookup_.end() ? -1 : it->second;
}

Eigen::VectorXd apply_annihilation(int sigma, const FockSector& from, const FockSector& to,
                                   const Eigen::VectorXd& v) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(to.size()));
    const int k = occ_slot(sigma);
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (v[i] == 0.0) continue;
        auto occ = from.occupation(i);
        if (occ[k] == 0) continue;
        const double amp = std::sqrt(static_cast<double>(occ[k]));
        --occ[k];
        out[to.index(occ)] += amp * v[i];
    }
    return out;
}

Eigen::VectorXd apply_creation(int sigma, const FockSector& from, const FockSector& to,
                               const Eigen::VectorXd& v) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(to.size()));
    const int k = occ_slot(sigma);
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (v[i] == 0.0) continue;
        auto occ = from.occupation(i);
        ++occ[k];
        out[to.index(occ)] += std::sqrt(static_cast<double>(occ[k])) * v[i];
    }
    return out;
}

namespace {

// a_to^dag a_from on one sector
Eigen::VectorXd hop(int sigma_to, int sigma_from, const FockSector& sector,
                    const Eigen::VectorXd& v) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    const int kt = occ_slot(sigma_to);
    const int kf = occ_slot(sigma_from);
    for (std::size_t i = 0; i < sector.size(); ++i) {
        if (v[i] == 0.0) continue;
        auto occ = sector.occupation(i);
        if (occ[kf] == 0) continue;
        double amp = std::sqrt(static_cast<double>(occ[kf]));
        --occ[kf];
        ++occ[kt];
        amp *= std::sqrt(static_cast<double>(occ[kt]));
        out[sector.index(occ)] += amp * v[i];
    }
    return out;
}

} // namespace

Eigen::VectorXd apply_lowering(const FockSector& sector, const Eigen::VectorXd& v) {
    return std::sqrt(2.0) * (hop(0, +1, sector, v) + hop(-1, 0, sector, v));
}

Eigen::VectorXd apply_raising(const FockSector& sector, const Eigen::VectorXd& v) {
    return std::sqrt(2.0) * (hop(+1, 0, sector, v) + hop(0, -1, sector, v));
}

Eigen::MatrixXd spin_squared_matrix(const FockSector& sector) {
    const auto dim = static_cast<Eigen::Index>(sector.size());
    Eigen::MatrixXd s2(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(dim, j);
        const auto& occ = sector.occupation(static_cast<std::size_t>(j));
        const double sz = occ[0] - occ[2];
        // S^2 = S^- S^+ + Sz^2 + Sz
        s2.col(j) = apply_lowering(sector, apply_raising(sector, e));
        s2(j, j) += sz * sz + sz;
    }
    return s2;
}

int constraint_state_count(int n) {
    int count = 0;
    for (int S = 0; S <= n; ++S)
        if ((S + n) % 2 == 0) count += 2 * S + 1;
    return count;
}

std::vector<OracleState> build_fock_oracle(int n) {
    const FockSector sector(n);
    const Eigen::MatrixXd s2 = spin_squared_matrix(sector);

    std::vector<OracleState> out;
    for (int S = 0; S <= n; ++S) {
        // highest-weight subspace m = S
        std::vector<Eigen::Index> rows;
        for (std::size_t i = 0; i < sector.size(); ++i) {
            const auto& occ = sector.occupation(i);
            if (occ[0] - occ[2] == S) rows.push_back(static_cast<Eigen::Index>(i));
        }
        const auto k = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd block(k, k);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b) block(a, b) = s2(rows[a], rows[b]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);

        const double target = S * (S + 1.0);
        std::vector<Eigen::VectorXd> multiplet;
        for (Eigen::Index e = 0; e < k; ++e) {
            if (std::abs(es.eigenvalues()[e] - target) > kEigenCluster * std::max(1.0, target))
                continue;
            Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sector.size()));
            for (Eigen::Index a = 0; a < k; ++a) full[rows[a]] = es.eigenvectors()(a, e);
            multiplet.push_back(full);
        }
        if (multiplet.empty()) continue;
        if (multiplet.size() != 1 || (S + n) % 2 != 0)
            throw Error("Fock oracle: unexpected multiplicity for S=" + std::to_string(S) +
                        ", n=" + std::to_string(n));

        Eigen::VectorXd hw = multiplet.front();
        for (Eigen::Index i = hw.size() - 1; i >= 0; --i) {
            if (std::abs(hw[i]) > kMatrixElementZero) {
                if (hw[i] < 0) hw = -hw;
                break;
            }
        }
        hw.normalize();

        Eigen::VectorXd cur = hw;
        for (int m = S; m >= -S; --m) {
            for (Eigen::Index i = 0; i < cur.size(); ++i)
                if (std::abs(cur[i]) < kMatrixElementZero) cur[i] = 0.0;
            out.push_back({SpinSiteState{S, m, n}, cur});
            if (m > -S) {
                cur = apply_lowering(sector, cur);
                cur.normalize();
            }
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// SiteBasis

SiteBasis::SiteBasis(int n_max) : n_max_(n_max) {
    if (n_max < 1) throw DomainError("n_max must be >= 1");
    for (int n = 0; n <= n_max; ++n) {
        sectors_.emplace_back(n);
        for (auto& os : build_fock_oracle(n)) {
            lookup_[os.quantum] = static_cast<int>(states_.size());
            states_.push_back(os.quantum);
            amplitudes_.push_back(std::move(os.amplitudes));
        }
    }
    const auto N = static_cast<Eigen::Index>(states_.size());
    for (int sigma : kSpinComponents) {
        Eigen::MatrixXd& c = c_[sigma_index(sigma)];
        c = Eigen::MatrixXd::Zero(N, N);
        for (Eigen::Index ket = 0; ket < N; ++ket) {
            const int nk = states_[ket].n;
            if (nk == 0) continue;
            const Eigen::VectorXd moved =
                apply_annihilation(sigma, sectors_[nk], sectors_[nk - 1], amplitudes_[ket]);
            for (Eigen::Index bra = 0; bra < N; ++bra) {
                const auto& sb = states_[bra];
                if (sb.n != nk - 1 || sb.m != states_[ket].m - sigma) continue;
                const double v = amplitudes_[bra].dot(moved);
                c(bra, ket) = std::abs(v) < kMatrixElementZero ? 0.0 : v;
            }
        }
    }
}

int SiteBasis::index(const SpinSiteState& s) const {
    auto it = lookup_.find(s);
    if (it == lookup_.end()) {
        std::ostringstream msg;
        msg << "state " << s << " is not in the basis (n_max = " << n_max_ << ")";
        throw DomainError(msg.str());
    }
    return it->second;
}

bool SiteBasis::contains(const SpinSiteState& s) const noexcept {
    return lookup_.count(s) != 0;
}

double SiteBasis::energy(int i, const ModelParams& params) const {
    return state_energy(states_[i], params);
}

std::array<double, 3> SiteBasis::spin_expectation(
    std::span<const std::pair<int, cplx>> psi) const {
    if (psi.empty()) throw DomainError("empty superposition");
    const int n = states_[psi.front().first].n;
    const FockSector& sec = sectors_[n];
    const auto dim = static_cast<Eigen::Index>(sec.size());
    Eigen::VectorXd re = Eigen::VectorXd::Zero(dim), im = Eigen::VectorXd::Zero(dim);
    for (const auto& [idx, coeff] : psi) {
        if (states_[idx].n != n) throw DomainError("superposition mixes boson numbers");
        re += coeff.real() * amplitudes_[idx];
        im += coeff.imag() * amplitudes_[idx];
    }
    double sz = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const auto& occ = sec.occupation(static_cast<std::size_t>(i));
        sz += (re[i] * re[i] + im[i] * im[i]) * (occ[0] - occ[2]);
    }
    // <S+> = (re - i im)^T S+ (re + i im)
    const Eigen::VectorXd sre = apply_raising(sec, re);
    const Eigen::VectorXd sim = apply_raising(sec, im);
    const double plus_re = re.dot(sre) + im.dot(sim);
    const double plus_im = re.dot(sim) - im.dot(sre);
    return {plus_re, plus_im, sz};
}

void SiteBasis::dump(std::ostream& os) const {
    os << "sigma,S_bra,m_bra,n_bra,S_ket,m_ket,n_ket,value\n";
    char buf[64];
    for (int sigma : kSpinComponents) {
        const Eigen::MatrixXd& c = c_[sigma_index(sigma)];
        for (Eigen::Index bra = 0; bra < c.rows(); ++bra) {
            for (Eigen::Index ket = 0; ket < c.cols(); ++ket) {
                if (c(bra, ket) == 0.0) continue;
                const auto& b = states_[bra];
                const auto& k = states_[ket];
                std::snprintf(buf, sizeof buf, "%.17g", c(bra, ket));
                os << sigma << ',' << b.S << ',' << b.m << ',' << b.n << ',' << k.S << ','
                   << k.m << ',' << k.n << ',' << buf << '\n';
            }
        }
    }
}

} // namespace sbo
