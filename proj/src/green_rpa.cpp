#include "sbo/green_rpa.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "sbo/errors.hpp"

namespace sbo {

// --------------------------------------------------------------------------
// KGrid

KGrid::KGrid(int dim, int L) : dim_(dim), L_(L) {
    if (dim < 1 || dim > 3) throw DomainError("k-grid dimension must be 1, 2 or 3");
    if (L < 2) throw DomainError("k-grid needs at least 2 points per axis");
    num_points_ = 1;
    for (int s = 0; s < dim; ++s) num_points_ *= static_cast<std::size_t>(L);

    // Fold each coordinate to [0, L/2] (cos is even) and sort the tuple
    // (cos sum is permutation invariant); count multiplicities.
    std::map<std::vector<int>, std::size_t> counts;
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (std::size_t p = 0; p < num_points_; ++p) {
        std::size_t rem = p;
        std::vector<int> key(static_cast<std::size_t>(dim));
        for (int s = 0; s < dim; ++s) {
            const int i = static_cast<int>(rem % static_cast<std::size_t>(L));
            rem /= static_cast<std::size_t>(L);
            key[static_cast<std::size_t>(s)] = std::min(i, L - i);
        }
        std::sort(key.begin(), key.end());
        ++counts[key];
    }
    levels_.reserve(counts.size());
    for (const auto& [key, count] : counts) {
        double zeta = 0.0;
        for (int i : key) zeta -= 2.0 * std::cos(2.0 * std::numbers::pi * i / L);
        const bool gamma = std::all_of(key.begin(), key.end(), [](int i) { return i == 0; });
        levels_.push_back({zeta, static_cast<double>(count) / static_cast<double>(num_points_), gamma});
    }
}

double KGrid::zeta_at(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != dim_) throw DomainError("k index has wrong dimension");
    double zeta = 0.0;
    for (int i : idx) zeta -= 2.0 * std::cos(2.0 * std::numbers::pi * i / L_);
    return zeta;
}

// --------------------------------------------------------------------------
// TransitionTable

LocalState basis_state(const SiteBasis& basis, const SpinSiteState& s, const ModelParams& params,
                       double occupation) {
    const int i = basis.index(s);
    return LocalState{{{i, cplx{1.0, 0.0}}}, basis.energy(i, params), occupation};
}

void validate_occupations(std::span<const double> occ, double tol) {
    double sum = 0.0;
    for (double d : occ) {
        if (!(d >= -tol && d <= 1.0 + tol)) {
            std::ostringstream msg;
            msg << "occupation " << d << " outside [0, 1]";
            throw DomainError(msg.str());
        }
        sum += d;
    }
    if (std::abs(sum - 1.0) > tol) {
        std::ostringstream msg;
        msg << "occupations sum to " << sum << ", expected 1";
        throw DomainError(msg.str());
    }
}

TransitionTable::TransitionTable(const SiteBasis& basis, std::vector<LocalState> states)
    : states_(std::move(states)) {
    const auto ns = static_cast<Eigen::Index>(states_.size());
    for (const auto& st : states_) {
        if (st.components.empty()) throw DomainError("local state without components");
        const int n = basis.state(st.components.front().first).n;
        for (const auto& [i, a] : st.components)
            if (basis.state(i).n != n) throw DomainError("local state mixes boson numbers");
        n_.push_back(n);
    }
    for (int sigma : kSpinComponents) {
        Eigen::MatrixXcd& c = c_[sigma_index(sigma)];
        c = Eigen::MatrixXcd::Zero(ns, ns);
        for (Eigen::Index x = 0; x < ns; ++x) {
            for (Eigen::Index y = 0; y < ns; ++y) {
                if (n_[x] != n_[y] - 1) continue;
                cplx v{0.0, 0.0};
                for (const auto& [i, a] : states_[x].components)
                    for (const auto& [j, b] : states_[y].components)
                        v += std::conj(a) * b * basis.c(sigma, i, j);
                if (std::abs(v) < kMatrixElementZero) v = 0.0;
                c(x, y) = v;
            }
        }
    }
}

std::vector<double> TransitionTable::occupations() const {
    std::vector<double> out;
    out.reserve(states_.size());
    for (const auto& s : states_) out.push_back(s.occupation);
    return out;
}

void TransitionTable::set_occupations(std::span<const double> occ) {
    if (occ.size() != states_.size()) throw DomainError("occupation vector has wrong size");
    validate_occupations(occ);
    for (std::size_t i = 0; i < occ.size(); ++i) states_[i].occupation = occ[i];
}

std::vector<std::pair<int, int>> TransitionTable::transitions() const {
    std::vector<std::pair<int, int>> out;
    const int ns = static_cast<int>(size());
    for (int mu = 0; mu < ns; ++mu) {
        for (int mp = 0; mp < ns; ++mp) {
            if (occupation(mu) == occupation(mp)) continue;
            if (std::abs(n_[mu] - n_[mp]) != 1) continue;
            bool linked = false;
            for (int sigma : kSpinComponents)
                linked = linked || std::abs(c(sigma, mu, mp)) > 0.0 || std::abs(d(sigma, mu, mp)) > 0.0;
            if (linked) out.emplace_back(mu, mp);
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// N-matrices

NMatrices build_n_matrices(const TransitionTable& table, double omega) {
    NMatrices nm;
    const auto ns = table.size();
    for (std::size_t mu = 0; mu < ns; ++mu) {
        for (std::size_t mp = 0; mp < ns; ++mp) {
            const double dmm = table.occupation(mu) - table.occupation(mp);
            if (dmm == 0.0) continue;
            if (std::abs(table.boson_number(mu) - table.boson_number(mp)) != 1) continue;
            const double den = omega + table.energy(mu) - table.energy(mp);
            bool contributes = false;
            Eigen::Matrix3cd t11, t12, t21, t22;
            for (int a : kSpinComponents) {
                for (int b : kSpinComponents) {
                    const int ia = sigma_index(a), ib = sigma_index(b);
                    t11(ia, ib) = table.c(a, mu, mp) * table.d(b, mp, mu);
                    t12(ia, ib) = table.c(a, mu, mp) * table.c(b, mp, mu);
                    t21(ia, ib) = table.d(a, mu, mp) * table.d(b, mp, mu);
                    t22(ia, ib) = table.d(a, mu, mp) * table.c(b, mp, mu);
                }
            }
            contributes = t11.norm() + t12.norm() + t21.norm() + t22.norm() > 0.0;
            if (!contributes) continue;
            if (std::abs(den) < kPoleTolerance) {
                std::ostringstream msg;
                msg << "omega = " << omega << " is within " << kPoleTolerance
                    << " of the pole of transition " << mu << " -> " << mp;
                throw PoleProximityError(msg.str(), static_cast<int>(mu), static_cast<int>(mp));
            }
            const double w = dmm / den;
            nm.n11 += w * t11;
            nm.n12 += w * t12;
            nm.n21 += w * t21;
            nm.n22 += w * t22;
        }
    }
    return nm;
}

namespace {

Eigen::Matrix3cd checked_inverse(const Eigen::Matrix3cd& m, const char* what) {
    const cplx det = m.determinant();
    if (std::abs(det) < kSingularDeterminant)
        throw BoundaryPole(std::string("singular ") + what + ": evaluation point is on a pole");
    return m.inverse();
}

} // namespace

Eigen::Matrix3cd green_matrix(const NMatrices& nm, double eps_k) {
    const Eigen::Matrix3cd I = Eigen::Matrix3cd::Identity();
    Eigen::Matrix3cd pi = nm.n11;
    if (nm.n12.norm() > 0.0 || nm.n21.norm() > 0.0) {
        const Eigen::Matrix3cd inner = checked_inverse(I - eps_k * nm.n22, "I - eps N22");
        pi += eps_k * nm.n12 * inner * nm.n21;
    }
    return checked_inverse(I - eps_k * pi, "I - eps Pi") * pi;
}

Eigen::Matrix3cd green_matrix_simplified(const Eigen::Matrix3cd& n11, double eps_k) {
    const Eigen::Matrix3cd I = Eigen::Matrix3cd::Identity();
    return checked_inverse(I - eps_k * n11, "I - eps N11") * n11;
}

// --------------------------------------------------------------------------
// Couplings

double PairCouplingTensor::hermiticity_defect() const {
    double worst = 0.0;
    for (int a = 0; a < d_; ++a)
        for (int ap = 0; ap < d_; ++ap)
            for (int b = 0; b < d_; ++b)
                for (int bp = 0; bp < d_; ++bp)
                    worst = std::max(worst, std::abs((*this)(a, ap, b, bp) - std::conj((*this)(ap, a, bp, b))));
    return worst;
}

double PairCouplingTensor::exchange_defect() const {
    double worst = 0.0;
    for (int a = 0; a < d_; ++a)
        for (int ap = 0; ap < d_; ++ap)
            for (int b = 0; b < d_; ++b)
                for (int bp = 0; bp < d_; ++bp)
                    worst = std::max(worst, std::abs((*this)(a, ap, b, bp) - (*this)(b, bp, a, ap)));
    return worst;
}

PairCouplingTensor hopping_coupling(const TransitionTable& table, double t) {
    const int d = static_cast<int>(table.size());
    PairCouplingTensor h(d);
    for (int a = 0; a < d; ++a)
        for (int ap = 0; ap < d; ++ap) {
            if (std::abs(table.boson_number(a) - table.boson_number(ap)) != 1) continue;
            for (int b = 0; b < d; ++b)
                for (int bp = 0; bp < d; ++bp) {
                    if (std::abs(table.boson_number(b) - table.boson_number(bp)) != 1) continue;
                    cplx v{0.0, 0.0};
                    for (int s : kSpinComponents)
                        v += table.c(s, a, ap) * table.d(s, b, bp) + table.d(s, a, ap) * table.c(s, b, bp);
                    h(a, ap, b, bp) = -t * v;
                }
        }
    return h;
}

int MotionSystem::channel_index(Channel c) const {
    auto it = std::find(channels.begin(), channels.end(), c);
    return it == channels.end() ? -1 : static_cast<int>(it - channels.begin());
}

Eigen::MatrixXcd mean_field_onsite(const MotionSystem& sys) {
    Eigen::MatrixXcd h = sys.onsite;
    const int d = sys.coupling.dim();
    for (int b = 0; b < d; ++b) {
        const double db = sys.occupations[static_cast<std::size_t>(b)];
        if (db == 0.0) continue;
        for (int x = 0; x < d; ++x)
            for (int y = 0; y < d; ++y) h(x, y) += static_cast<double>(sys.z) * db * sys.coupling(x, y, b, b);
    }
    return h;
}

Eigen::MatrixXcd motion_matrix(const MotionSystem& sys, double gamma) {
    const Eigen::MatrixXcd h = mean_field_onsite(sys);
    const auto nc = static_cast<Eigen::Index>(sys.channels.size());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(nc, nc);
    for (Eigen::Index r = 0; r < nc; ++r) {
        const auto [mu, mp] = sys.channels[static_cast<std::size_t>(r)];
        const double dc = sys.channel_weight(static_cast<std::size_t>(r));
        for (Eigen::Index col = 0; col < nc; ++col) {
            const auto [xi, xp] = sys.channels[static_cast<std::size_t>(col)];
            cplx v{0.0, 0.0};
            if (dc != 0.0) v += dc * gamma * sys.coupling(mp, mu, xi, xp);
            if (xi == mu) v += h(mp, xp);
            if (xp == mp) v -= h(xi, mu);
            A(r, col) = v;
        }
    }
    return A;
}

Eigen::MatrixXcd PoleDecomposition::residue(std::size_t p) const {
    const auto pi = static_cast<Eigen::Index>(p);
    return right.col(pi) * left.row(pi);
}

PoleDecomposition motion_poles(const MotionSystem& sys, double gamma) {
    const Eigen::MatrixXcd A = motion_matrix(sys, gamma);
    const Eigen::Index nc = A.rows();
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());

    // Connected components of the coupling graph, decomposed separately.
    std::vector<int> parent(static_cast<std::size_t>(nc));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (Eigen::Index i = 0; i < nc; ++i)
        for (Eigen::Index j = 0; j < nc; ++j)
            if (i != j && A(i, j) != cplx{0.0, 0.0}) parent[find(static_cast<int>(i))] = find(static_cast<int>(j));
    std::map<int, std::vector<Eigen::Index>> comps;
    for (Eigen::Index i = 0; i < nc; ++i) comps[find(static_cast<int>(i))].push_back(i);

    PoleDecomposition pd;
    pd.frequencies.assign(static_cast<std::size_t>(nc), 0.0);
    pd.right = Eigen::MatrixXcd::Zero(nc, nc);
    pd.left = Eigen::MatrixXcd::Zero(nc, nc);
    Eigen::Index slot = 0;
    for (const auto& [root, members] : comps) {
        const auto k = static_cast<Eigen::Index>(members.size());
        Eigen::MatrixXcd block(k, k);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b) block(a, b) = A(members[a], members[b]);
        Eigen::MatrixXcd vecs;
        Eigen::VectorXcd vals;
        if (k == 1) {
            vecs = Eigen::MatrixXcd::Identity(1, 1);
            vals = block.diagonal();
        } else {
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(block);
            if (es.info() != Eigen::Success) throw InstabilityError("pole eigenproblem failed to converge");
            vecs = es.eigenvectors();
            vals = es.eigenvalues();
        }
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(vecs);
        if (!lu.isInvertible() || lu.rcond() < 1e-12)
            throw InstabilityError(
                "defective pole matrix (numerical degeneracy); perturb the parameters slightly");
        const Eigen::MatrixXcd inv = lu.inverse();
        for (Eigen::Index p = 0; p < k; ++p) {
            if (std::abs(vals[p].imag()) > 1e-9 * scale) {
                std::ostringstream msg;
                msg << "complex excitation frequency " << vals[p] << ": past the instability";
                throw InstabilityError(msg.str());
            }
            pd.frequencies[static_cast<std::size_t>(slot + p)] = vals[p].real();
            for (Eigen::Index a = 0; a < k; ++a) {
                pd.right(members[a], slot + p) = vecs(a, p);
                pd.left(slot + p, members[a]) = inv(p, a);
            }
        }
        slot += k;
    }
    return pd;
}

std::vector<double> excitation_frequencies(const MotionSystem& sys, const PoleDecomposition& pd) {
    std::vector<double> out;
    for (std::size_t p = 0; p < pd.size(); ++p) {
        double norm = 0.0;
        for (std::size_t c = 0; c < sys.channels.size(); ++c) {
            const double dc = sys.channel_weight(c);
            if (dc == 0.0) continue;
            const auto ci = static_cast<Eigen::Index>(c);
            norm += (dc > 0 ? 1.0 : -1.0) * pd.residue(p, ci, ci).real();
        }
        if (norm > 1e-12) out.push_back(pd.frequencies[p]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// --------------------------------------------------------------------------
// Spectral theorem

double bose(double omega, double temperature) {
    if (temperature == 0.0) return omega > 0.0 ? 0.0 : -1.0;
    return 1.0 / std::expm1(omega / temperature);
}

OccupationProbe diagonal_probe(const MotionSystem& sys, int ground, int target) {
    const int c = sys.channel_index({ground, target});
    if (c < 0) throw DomainError("no channel (ground, target) for occupation probe");
    return OccupationProbe{target, c, {{c, 1.0}}};
}

std::vector<double> spectral_occupations(const MotionSystem& sys, const KGrid& grid,
                                         double temperature, int ground,
                                         std::span<const OccupationProbe> probes,
                                         const SpectralOptions& opts) {
    if (temperature < 0.0) throw DomainError("negative temperature");
    std::vector<double> acc(probes.size(), 0.0);
    for (const auto& level : grid.levels()) {
        if (opts.skip_gamma && level.gamma) continue;
        const PoleDecomposition pd = motion_poles(sys, -level.zeta);
        for (std::size_t j = 0; j < probes.size(); ++j) {
            const auto& probe = probes[j];
            const double dsrc = sys.channel_weight(static_cast<std::size_t>(probe.source));
            if (dsrc == 0.0) continue;
            double sum = 0.0;
            for (std::size_t p = 0; p < pd.size(); ++p) {
                cplx r{0.0, 0.0};
                for (const auto& [row, w] : probe.rows) r += w * pd.residue(p, row, probe.source);
                const double contrib = r.real() * dsrc;
                if (contrib == 0.0) continue;
                const double om = pd.frequencies[p];
                if (std::abs(om) < opts.zero_mode) {
                    if (temperature == 0.0) continue;
                    if (std::abs(contrib) > 1e-12)
                        throw BoundaryPole("pole at omega = 0 with T > 0 (Bose divergence)");
                    continue;
                }
                sum += bose(om, temperature) * contrib;
            }
            acc[j] += level.weight * sum;
        }
    }
    std::vector<double> out(sys.occupations.size(), 0.0);
    double excited = 0.0;
    for (std::size_t j = 0; j < probes.size(); ++j) {
        out[static_cast<std::size_t>(probes[j].target)] = acc[j];
        excited += acc[j];
    }
    out[static_cast<std::size_t>(ground)] = 1.0 - excited;
    for (double d : out)
        if (d < -1e-12 || d > 1.0 + 1e-12)
            throw InstabilityError("spectral update left occupations outside [0, 1]");
    return out;
}

FixedPointResult solve_fixed_point(
    std::vector<double> x,
    const std::function<std::vector<double>(const std::vector<double>&)>& update,
    const FixedPointOptions& opts) {
    double delta = 0.0;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const std::vector<double> next = update(x);
        if (next.size() != x.size()) throw Error("fixed-point update changed the vector size");
        delta = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double nx = (1.0 - opts.damping) * x[i] + opts.damping * next[i];
            delta = std::max(delta, std::abs(nx - x[i]));
            x[i] = nx;
        }
        if (!std::isfinite(delta)) throw ConvergenceError("fixed point diverged", delta, it);
        if (delta < opts.tolerance) return {std::move(x), it, delta};
    }
    std::ostringstream msg;
    msg << "fixed point did not converge in " << opts.max_iterations << " iterations (last |dD| = "
        << delta << ")";
    throw ConvergenceError(msg.str(), delta, opts.max_iterations);
}

} // namespace sbo
