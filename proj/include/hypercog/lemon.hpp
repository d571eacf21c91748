#pragma once

// Local spectral seed-set expansion (Lemon). Short random walks from the seed
// span an approximate invariant subspace; a sparse non-negative vector in that
// span, found by an l1-minimising linear program, ranks candidate members; the
// community grows while conductance keeps improving, up to max_size.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "hypercog/detail/parallel.hpp"
#include "hypercog/detail/text.hpp"
#include "hypercog/error.hpp"
#include "hypercog/network.hpp"

namespace hypercog {

struct LemonParams {
    std::size_t max_size = 4;
    std::size_t min_size = 3;
    std::size_t walk_steps = 3;
    std::size_t subspace_dim = 3;
    std::size_t expand_step = 1;
    /// Nodes kept in the breadth-first local sample around the seed.
    std::size_t sample_size = 400;
};

/// Overlapping communities, each grown from one seed.
struct Cover {
    std::vector<std::vector<NodeId>> communities;  // sorted members
    std::vector<NodeId> seed_of;

    std::size_t size() const { return communities.size(); }

    /// Community indices containing u.
    std::vector<std::size_t> containing(NodeId u) const {
        std::vector<std::size_t> out;
        for (std::size_t c = 0; c < communities.size(); ++c)
            if (std::binary_search(communities[c].begin(), communities[c].end(), u)) out.push_back(c);
        return out;
    }

    /// Node -> community indices, built once for bulk lookups.
    std::vector<std::vector<std::size_t>> membership(std::size_t node_count) const {
        std::vector<std::vector<std::size_t>> out(node_count);
        for (std::size_t c = 0; c < communities.size(); ++c)
            for (NodeId u : communities[c])
                if (u < node_count) out[u].push_back(c);
        return out;
    }
};

/// cut(S) / min(vol(S), vol(V \ S)); 0 for a closed component, 1 when a side has no volume.
inline double conductance(const PairwiseGraph& g, std::span<const NodeId> members) {
    std::vector<NodeId> sorted(members.begin(), members.end());
    std::sort(sorted.begin(), sorted.end());
    double vol = 0.0, cut = 0.0;
    for (NodeId u : sorted) {
        vol += static_cast<double>(g.degree(u));
        for (NodeId v : g.neighbors(u))
            if (!std::binary_search(sorted.begin(), sorted.end(), v)) cut += 1.0;
    }
    double rest = 2.0 * static_cast<double>(g.edge_count()) - vol;
    if (cut == 0.0) return vol > 0.0 ? 0.0 : 1.0;
    double denom = std::min(vol, rest);
    return denom > 0.0 ? cut / denom : 1.0;
}

namespace detail {

/// Dense two-phase simplex (Bland's rule) for
///   max h^T lambda  s.t.  A lambda = c, lambda >= 0,
/// with A of full row rank. Returns the optimal basis column indices.
class SmallSimplex {
public:
    static std::optional<std::vector<std::size_t>> solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                                                         const Eigen::VectorXd& h) {
        const auto rows = static_cast<std::size_t>(a.rows());
        const auto cols = static_cast<std::size_t>(a.cols());
        const std::size_t width = cols + rows + 1;  // structural, artificial, rhs
        std::vector<double> t(rows * width, 0.0);
        auto at = [&](std::size_t r, std::size_t k) -> double& { return t[r * width + k]; };
        std::vector<std::size_t> basis(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            double sign = c(static_cast<Eigen::Index>(r)) < 0 ? -1.0 : 1.0;
            for (std::size_t k = 0; k < cols; ++k)
                at(r, k) = sign * a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
            at(r, cols + r) = 1.0;
            at(r, width - 1) = sign * c(static_cast<Eigen::Index>(r));
            basis[r] = cols + r;
        }
        // Phase I: minimise the sum of artificials.
        std::vector<double> cost1(width - 1, 0.0);
        for (std::size_t r = 0; r < rows; ++r) cost1[cols + r] = 1.0;
        if (!iterate(t, basis, cost1, rows, width, width - 1)) return std::nullopt;
        double infeas = 0.0;
        for (std::size_t r = 0; r < rows; ++r)
            if (basis[r] >= cols) infeas += at(r, width - 1);
        if (infeas > 1e-9) return std::nullopt;
        // Drive zero-level artificials out of the basis.
        for (std::size_t r = 0; r < rows; ++r) {
            if (basis[r] < cols) continue;
            for (std::size_t k = 0; k < cols; ++k) {
                if (std::abs(at(r, k)) > 1e-9) {
                    pivot(t, basis, rows, width, r, k);
                    break;
                }
            }
            if (basis[r] >= cols) return std::nullopt;  // rank deficient
        }
        // Phase II over structural columns only: minimise -h^T lambda.
        std::vector<double> cost2(width - 1, 0.0);
        for (std::size_t k = 0; k < cols; ++k) cost2[k] = -h(static_cast<Eigen::Index>(k));
        if (!iterate(t, basis, cost2, rows, width, cols)) return std::nullopt;
        return basis;
    }

private:
    static void pivot(std::vector<double>& t, std::vector<std::size_t>& basis, std::size_t rows, std::size_t width,
                      std::size_t pr, std::size_t pc) {
        double p = t[pr * width + pc];
        for (std::size_t k = 0; k < width; ++k) t[pr * width + k] /= p;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == pr) continue;
            double f = t[r * width + pc];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < width; ++k) t[r * width + k] -= f * t[pr * width + k];
        }
        basis[pr] = pc;
    }

    /// Minimises cost over columns [0, allowed). False when unbounded.
    static bool iterate(std::vector<double>& t, std::vector<std::size_t>& basis, const std::vector<double>& cost,
                        std::size_t rows, std::size_t width, std::size_t allowed) {
        for (int guard = 0; guard < 10000; ++guard) {
            std::size_t enter = allowed;
            for (std::size_t k = 0; k < allowed; ++k) {
                double reduced = cost[k];
                for (std::size_t r = 0; r < rows; ++r) reduced -= cost[basis[r]] * t[r * width + k];
                if (reduced < -1e-10) {
                    enter = k;
                    break;
                }
            }
            if (enter == allowed) return true;
            std::size_t leave = rows;
            double best = 0.0;
            for (std::size_t r = 0; r < rows; ++r) {
                double coef = t[r * width + enter];
                if (coef <= 1e-12) continue;
                double ratio = t[r * width + width - 1] / coef;
                if (leave == rows || ratio < best - 1e-12 ||
                    (ratio <= best + 1e-12 && basis[r] < basis[leave])) {
                    leave = r;
                    best = ratio;
                }
            }
            if (leave == rows) return false;
            pivot(t, basis, rows, width, leave, enter);
        }
        return false;
    }
};

/// Breadth-first sample of at most `limit` nodes around `seed` (seed first).
inline std::vector<NodeId> local_sample(const PairwiseGraph& g, NodeId seed, std::size_t limit) {
    std::vector<NodeId> order{seed};
    std::unordered_map<NodeId, bool> seen{{seed, true}};
    for (std::size_t head = 0; head < order.size() && order.size() < limit; ++head) {
        for (NodeId v : g.neighbors(order[head])) {
            if (seen.emplace(v, true).second) {
                order.push_back(v);
                if (order.size() >= limit) break;
            }
        }
    }
    return order;
}

/// Orthonormal basis of the walk subspace on the sampled nodes.
inline Eigen::MatrixXd walk_subspace(const PairwiseGraph& g, const std::vector<NodeId>& local,
                                     std::span<const std::size_t> seeds_local, const LemonParams& params) {
    const auto n = static_cast<Eigen::Index>(local.size());
    std::unordered_map<NodeId, Eigen::Index> pos;
    for (Eigen::Index i = 0; i < n; ++i) pos[local[static_cast<std::size_t>(i)]] = i;
    // Lazy walk restricted to the sample: p' = p (D + I)^-1 (A + I).
    std::vector<std::vector<Eigen::Index>> nb(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (NodeId v : g.neighbors(local[static_cast<std::size_t>(i)]))
            if (auto it = pos.find(v); it != pos.end()) nb[static_cast<std::size_t>(i)].push_back(it->second);
    auto step = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& row = nb[static_cast<std::size_t>(i)];
            double share = p(i) / static_cast<double>(row.size() + 1);
            next(i) += share;
            for (auto j : row) next(j) += share;
        }
        return next;
    };
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    for (auto s : seeds_local) p(static_cast<Eigen::Index>(s)) = 1.0 / static_cast<double>(seeds_local.size());
    for (std::size_t s = 0; s < params.walk_steps; ++s) p = step(p);

    const auto dim = static_cast<Eigen::Index>(std::max<std::size_t>(1, params.subspace_dim));
    Eigen::MatrixXd basis(n, 0);
    Eigen::VectorXd v = p;
    for (Eigen::Index k = 0; k < dim; ++k) {
        if (k > 0) v = step(basis.col(k - 1));
        // Gram-Schmidt against existing columns (twice for stability).
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index j = 0; j < basis.cols(); ++j) v -= basis.col(j).dot(v) * basis.col(j);
        double norm = v.norm();
        if (norm < 1e-10) break;
        basis.conservativeResize(n, basis.cols() + 1);
        basis.col(basis.cols() - 1) = v / norm;
    }
    return basis;
}

/// Sparse vector y = V x minimising sum(y) subject to y >= 0 and y_m >= 1 on members.
inline std::optional<Eigen::VectorXd> min_one_norm(const Eigen::MatrixXd& v, std::span<const std::size_t> members) {
    const Eigen::Index n = v.rows();
    const Eigen::Index d = v.cols();
    if (d == 0) return std::nullopt;
    // Primal: min c^T x s.t. G x >= h. Dual: max h^T l s.t. G^T l = c, l >= 0.
    Eigen::VectorXd c = v.colwise().sum().transpose();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
    for (auto m : members) h(static_cast<Eigen::Index>(m)) = 1.0;
    Eigen::MatrixXd a = v.transpose();
    auto basis = SmallSimplex::solve(a, c, h);
    if (!basis) return std::nullopt;
    Eigen::MatrixXd gb(d, d);
    Eigen::VectorXd hb(d);
    for (Eigen::Index r = 0; r < d; ++r) {
        auto row = static_cast<Eigen::Index>((*basis)[static_cast<std::size_t>(r)]);
        gb.row(r) = v.row(row);
        hb(r) = h(row);
    }
    Eigen::VectorXd x = gb.fullPivLu().solve(hb);
    Eigen::VectorXd y = v * x;
    for (Eigen::Index i = 0; i < n; ++i)
        if (y(i) < 0.0 && y(i) > -1e-9) y(i) = 0.0;
    return y;
}

}  // namespace detail

/// Community grown from `seed`; always contains the seed and never exceeds
/// params.max_size members. An isolated seed yields {seed} with a warning.
inline std::vector<NodeId> lemon(const PairwiseGraph& g, NodeId seed, const LemonParams& params = {},
                                 Diagnostics* diag = nullptr) {
    if (seed >= g.node_count()) throw Error("lemon: seed is not a node of the graph");
    if (params.max_size < 1) throw Error("lemon: max_size must be at least 1");
    if (g.degree(seed) == 0) {
        warn(diag, "lemon: seed '" + g.vocabulary().word(seed) + "' is isolated");
        return {seed};
    }
    auto local = detail::local_sample(g, seed, std::max<std::size_t>(params.sample_size, params.max_size));
    std::vector<std::size_t> comm_local{0};  // positions in `local`
    std::vector<NodeId> community{seed};
    double best_cond = conductance(g, community);
    std::size_t seed_list[] = {0};
    Eigen::MatrixXd basis = detail::walk_subspace(g, local, seed_list, params);

    while (community.size() < params.max_size) {
        auto y = detail::min_one_norm(basis, comm_local);
        if (!y) break;
        std::vector<std::size_t> order(local.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return (*y)(static_cast<Eigen::Index>(a)) > (*y)(static_cast<Eigen::Index>(b));
        });
        auto cand_local = comm_local;
        auto candidate = community;
        std::size_t want = std::min(params.max_size, community.size() + std::max<std::size_t>(1, params.expand_step));
        for (auto i : order) {
            if (candidate.size() >= want) break;
            if ((*y)(static_cast<Eigen::Index>(i)) <= 1e-12) break;
            if (std::find(cand_local.begin(), cand_local.end(), i) != cand_local.end()) continue;
            cand_local.push_back(i);
            candidate.push_back(local[i]);
        }
        if (candidate.size() == community.size()) break;
        double cond = conductance(g, candidate);
        if (community.size() >= params.min_size && cond >= best_cond) break;
        community = std::move(candidate);
        comm_local = std::move(cand_local);
        best_cond = cond;
    }
    std::sort(community.begin(), community.end());
    return community;
}

/// One lemon run per node as seed.
inline Cover lemon_cover(const PairwiseGraph& g, const LemonParams& params = {}, Diagnostics* diag = nullptr) {
    if (g.node_count() == 0) throw Error("lemon: empty graph");
    Cover cover;
    cover.communities.resize(g.node_count());
    cover.seed_of.resize(g.node_count());
    std::vector<Diagnostics> local_diag(g.node_count());
    detail::parallel_for(g.node_count(), [&](std::size_t u) {
        cover.communities[u] = lemon(g, static_cast<NodeId>(u), params, &local_diag[u]);
        cover.seed_of[u] = static_cast<NodeId>(u);
    });
    std::size_t isolated = 0;
    for (const auto& d : local_diag) isolated += d.warnings.size();
    if (isolated > 0) warn(diag, fmt::format("lemon: {} isolated seed(s) kept as singleton communities", isolated));
    return cover;
}

inline void write_cover(std::ostream& out, const Cover& cover, const Vocabulary& vocab) {
    for (std::size_t c = 0; c < cover.size(); ++c) {
        out << vocab.word(cover.seed_of[c]);
        for (NodeId u : cover.communities[c]) out << '\t' << vocab.word(u);
        out << '\n';
    }
}

/// Reads "seed<TAB>member..." lines. The seed is added to its community if absent.
inline Cover read_cover(std::istream& in, const Vocabulary& vocab) {
    Cover cover;
    std::string line;
    while (std::getline(in, line)) {
        auto rec = detail::strip_cr(line);
        if (detail::trim(rec).empty()) continue;
        auto fields = detail::split_record(rec, '\t');
        std::vector<NodeId> ids;
        for (const auto& w : fields) {
            auto id = vocab.id(detail::normalize_token(w));
            if (!id) throw Error("cover: unknown word '" + w + "'");
            ids.push_back(*id);
        }
        NodeId seed = ids.front();
        std::vector<NodeId> members(ids.begin() + 1, ids.end());
        members.push_back(seed);
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        cover.seed_of.push_back(seed);
        cover.communities.push_back(std::move(members));
    }
    return cover;
}

}  // namespace hypercog
