#pragma once

// Crisp community detection: modularity, Louvain and its attribute-aware
// extension EVA (objective alpha * purity + (1 - alpha) * modularity).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hypercog/detail/text.hpp"
#include "hypercog/error.hpp"
#include "hypercog/lexicon.hpp"
#include "hypercog/network.hpp"

namespace hypercog {

using CommunityId = std::uint32_t;

enum class CommunityMethod { Louvain, Eva };

struct Partition {
    std::vector<CommunityId> assignment;
    CommunityMethod method = CommunityMethod::Louvain;
    double gamma = 1.0;
    double alpha = 0.0;
    /// Objective value after every accepted local move, across all levels.
    std::vector<double> trace;

    std::size_t community_count() const {
        if (assignment.empty()) return 0;
        return static_cast<std::size_t>(*std::max_element(assignment.begin(), assignment.end())) + 1;
    }

    std::vector<std::vector<NodeId>> communities() const {
        std::vector<std::vector<NodeId>> out(community_count());
        for (NodeId u = 0; u < assignment.size(); ++u) out[assignment[u]].push_back(u);
        return out;
    }

    std::vector<NodeId> members_of(NodeId u) const {
        std::vector<NodeId> out;
        for (NodeId v = 0; v < assignment.size(); ++v)
            if (assignment[v] == assignment[u]) out.push_back(v);
        return out;
    }
};

/// Relabels ids to 0..k-1 in order of first appearance.
inline std::vector<CommunityId> canonical_labels(std::span<const CommunityId> labels) {
    std::unordered_map<CommunityId, CommunityId> remap;
    std::vector<CommunityId> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = remap.try_emplace(labels[i], static_cast<CommunityId>(remap.size()));
        out[i] = it->second;
    }
    return out;
}

/// Q = (1/2m) sum_ij [A_ij - gamma k_i k_j / 2m] delta(c_i, c_j).
/// Empty optional when the graph has no edges.
inline std::optional<double> modularity(const PairwiseGraph& g, std::span<const CommunityId> assignment,
                                        double gamma = 1.0) {
    if (assignment.size() != g.node_count()) throw Error("modularity: assignment size mismatch");
    if (g.edge_count() == 0) return std::nullopt;
    const double two_m = 2.0 * static_cast<double>(g.edge_count());
    std::unordered_map<CommunityId, double> internal, total;
    for (NodeId u = 0; u < g.node_count(); ++u) {
        total[assignment[u]] += static_cast<double>(g.degree(u));
        for (NodeId v : g.neighbors(u))
            if (assignment[v] == assignment[u]) internal[assignment[u]] += 1.0;
    }
    double q = 0.0;
    for (auto [c, tot] : total) q += internal[c] / two_m - gamma * (tot / two_m) * (tot / two_m);
    return q;
}

/// Per-node categorical labels, one column per attribute.
struct AttributeBinned {
    std::size_t nodes = 0;
    std::size_t attributes = 0;
    std::size_t bins = 0;
    std::vector<std::uint8_t> labels;  // node-major

    std::uint8_t label(std::size_t node, std::size_t attr) const { return labels[node * attributes + attr]; }
};

/// Equal-frequency binning of each feature column (default quartiles).
/// Labels count the cut points a value exceeds.
inline AttributeBinned quantile_bins(const Lexicon& lexicon, std::span<const Feature> features,
                                     std::size_t bins = 4) {
    if (bins < 2 || bins > 255) throw Error("binning: bin count must be in 2..255");
    AttributeBinned out{lexicon.size(), features.size(), bins, {}};
    out.labels.assign(out.nodes * out.attributes, 0);
    for (std::size_t a = 0; a < features.size(); ++a) {
        auto col = lexicon.column(features[a]);
        auto sorted = col;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> cuts;
        for (std::size_t b = 1; b < bins; ++b) {
            // linear interpolation between order statistics
            double pos = static_cast<double>(b) / static_cast<double>(bins) *
                         static_cast<double>(sorted.size() - 1);
            auto lo = static_cast<std::size_t>(pos);
            auto hi = std::min(lo + 1, sorted.size() - 1);
            double frac = pos - static_cast<double>(lo);
            cuts.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
        }
        for (std::size_t i = 0; i < col.size(); ++i) {
            auto above = std::count_if(cuts.begin(), cuts.end(), [&](double c) { return col[i] > c; });
            out.labels[i * out.attributes + a] = static_cast<std::uint8_t>(above);
        }
    }
    return out;
}

inline AttributeBinned quantile_bins(const Lexicon& lexicon, std::size_t bins = 4) {
    std::vector<Feature> all;
    for (std::size_t i = 0; i < kFeatureCount; ++i) all.push_back(feature_at(i));
    return quantile_bins(lexicon, all, bins);
}

/// Product over attributes of the modal-label frequency within `members`.
inline double purity(const AttributeBinned& attrs, std::span<const NodeId> members) {
    if (members.empty()) return 0.0;
    double p = 1.0;
    std::vector<std::size_t> counts(attrs.bins);
    for (std::size_t a = 0; a < attrs.attributes; ++a) {
        std::fill(counts.begin(), counts.end(), 0);
        for (NodeId u : members) ++counts[attrs.label(u, a)];
        p *= static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
             static_cast<double>(members.size());
    }
    return p;
}

/// Average community purity of a partition.
inline double partition_purity(const AttributeBinned& attrs, std::span<const CommunityId> assignment) {
    std::map<CommunityId, std::vector<NodeId>> groups;
    for (NodeId u = 0; u < assignment.size(); ++u) groups[assignment[u]].push_back(u);
    double sum = 0.0;
    for (const auto& [c, members] : groups) sum += purity(attrs, members);
    return groups.empty() ? 0.0 : sum / static_cast<double>(groups.size());
}

inline std::optional<double> eva_objective(const PairwiseGraph& g, const AttributeBinned& attrs,
                                           std::span<const CommunityId> assignment, double alpha,
                                           double gamma = 1.0) {
    auto q = modularity(g, assignment, gamma);
    if (!q) return std::nullopt;
    return alpha * partition_purity(attrs, assignment) + (1.0 - alpha) * *q;
}

namespace detail {

/// Weighted graph used across Louvain levels. Self-loop weight is stored as
/// A_ii (twice the internal edge weight), so degree = sum_j A_ij.
struct LevelGraph {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;  // excludes self
    std::vector<double> self;
    std::vector<double> degree;
    std::vector<std::uint32_t> size;      // original nodes represented
    std::vector<std::uint32_t> counts;    // node-major [attr][bin] label counts
    std::size_t attrs = 0, bins = 0;

    std::size_t n() const { return adj.size(); }
};

class LouvainEngine {
public:
    LouvainEngine(const LevelGraph& g, double two_m, double gamma, double alpha, std::vector<double>* trace)
        : g_(g), two_m_(two_m), gamma_(gamma), alpha_(alpha), trace_(trace) {
        const std::size_t n = g.n();
        comm_.resize(n);
        std::iota(comm_.begin(), comm_.end(), 0u);
        in_.resize(n);
        tot_.resize(n);
        csize_.resize(n);
        ccounts_ = g.counts;
        cpur_.assign(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            in_[i] = g.self[i];
            tot_[i] = g.degree[i];
            csize_[i] = g.size[i];
            if (use_purity()) cpur_[i] = community_purity(i);
        }
        active_ = n;
        pur_sum_ = std::accumulate(cpur_.begin(), cpur_.end(), 0.0);
    }

    bool use_purity() const { return alpha_ > 0.0 && g_.attrs > 0; }

    double objective() const {
        double q = 0.0;
        for (std::size_t c = 0; c < comm_.size(); ++c)
            if (csize_[c] > 0) q += q_term(in_[c], tot_[c]);
        if (!use_purity()) return q;
        double p = active_ > 0 ? pur_sum_ / static_cast<double>(active_) : 0.0;
        return alpha_ * p + (1.0 - alpha_) * q;
    }

    /// One or more sweeps of local moves; returns true if any node moved.
    bool run(std::mt19937_64& rng) {
        const std::size_t n = g_.n();
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::shuffle(order.begin(), order.end(), rng);
        bool any = false;
        std::vector<double> link(n, 0.0);
        std::vector<std::uint32_t> touched;
        for (int sweep = 0; sweep < 1000; ++sweep) {
            bool moved = false;
            for (auto u : order) {
                auto from = comm_[u];
                touched.clear();
                for (auto [v, w] : g_.adj[u]) {
                    auto c = comm_[v];
                    if (link[c] == 0.0) touched.push_back(c);
                    link[c] += w;
                }
                double k_from = link[from];
                double best_gain = 0.0;
                double best_link = 0.0;
                std::uint32_t best = from;
                for (auto c : touched) {
                    if (c == from) continue;
                    double gain = move_gain(u, from, c, k_from, link[c]);
                    if (gain <= kEps) continue;
                    bool better = best == from || gain > best_gain + kEps ||
                                  (gain >= best_gain - kEps && c < best);
                    if (better) {
                        best_gain = gain;
                        best_link = link[c];
                        best = c;
                    }
                }
                for (auto c : touched) link[c] = 0.0;
                if (best != from) {
                    apply_move(u, from, best, k_from, best_link);
                    moved = any = true;
                    if (trace_ != nullptr) trace_->push_back(objective());
                }
            }
            if (!moved) break;
        }
        return any;
    }

    const std::vector<std::uint32_t>& communities() const { return comm_; }

private:
    static constexpr double kEps = 1e-12;

    double q_term(double in, double tot) const {
        return in / two_m_ - gamma_ * (tot / two_m_) * (tot / two_m_);
    }

    double purity_from(const std::uint32_t* counts, std::uint32_t size) const {
        if (size == 0) return 0.0;
        double p = 1.0;
        for (std::size_t a = 0; a < g_.attrs; ++a) {
            std::uint32_t best = 0;
            for (std::size_t b = 0; b < g_.bins; ++b) best = std::max(best, counts[a * g_.bins + b]);
            p *= static_cast<double>(best) / static_cast<double>(size);
        }
        return p;
    }

    double community_purity(std::size_t c) const {
        return purity_from(ccounts_.data() + c * stride(), csize_[c]);
    }

    std::size_t stride() const { return g_.attrs * g_.bins; }

    /// Purity of community c with node u added (sign=+1) or removed (sign=-1).
    double purity_with(std::size_t c, std::uint32_t u, int sign) const {
        scratch_.assign(ccounts_.begin() + static_cast<std::ptrdiff_t>(c * stride()),
                        ccounts_.begin() + static_cast<std::ptrdiff_t>((c + 1) * stride()));
        for (std::size_t k = 0; k < stride(); ++k)
            scratch_[k] = static_cast<std::uint32_t>(static_cast<std::int64_t>(scratch_[k]) +
                                                     sign * static_cast<std::int64_t>(g_.counts[u * stride() + k]));
        auto size = static_cast<std::uint32_t>(static_cast<std::int64_t>(csize_[c]) + sign * g_.size[u]);
        return purity_from(scratch_.data(), size);
    }

    double move_gain(std::uint32_t u, std::uint32_t from, std::uint32_t to, double k_from, double k_to) const {
        const double ku = g_.degree[u];
        const double self = g_.self[u];
        double dq = q_term(in_[from] - 2.0 * k_from - self, tot_[from] - ku) - q_term(in_[from], tot_[from]) +
                    q_term(in_[to] + 2.0 * k_to + self, tot_[to] + ku) - q_term(in_[to], tot_[to]);
        if (!use_purity()) return dq;
        bool empties = csize_[from] == g_.size[u];
        double new_from = empties ? 0.0 : purity_with(from, u, -1);
        double new_to = purity_with(to, u, +1);
        double new_sum = pur_sum_ - cpur_[from] - cpur_[to] + new_from + new_to;
        std::size_t new_active = active_ - (empties ? 1 : 0);
        double dp = new_sum / static_cast<double>(new_active) - pur_sum_ / static_cast<double>(active_);
        return alpha_ * dp + (1.0 - alpha_) * dq;
    }

    void apply_move(std::uint32_t u, std::uint32_t from, std::uint32_t to, double k_from, double k_to) {
        const double ku = g_.degree[u];
        const double self = g_.self[u];
        in_[from] -= 2.0 * k_from + self;
        tot_[from] -= ku;
        in_[to] += 2.0 * k_to + self;
        tot_[to] += ku;
        if (use_purity()) {
            for (std::size_t k = 0; k < stride(); ++k) {
                ccounts_[from * stride() + k] -= g_.counts[u * stride() + k];
                ccounts_[to * stride() + k] += g_.counts[u * stride() + k];
            }
        }
        csize_[from] -= g_.size[u];
        csize_[to] += g_.size[u];
        if (csize_[from] == 0) --active_;
        if (use_purity()) {
            pur_sum_ -= cpur_[from] + cpur_[to];
            cpur_[from] = csize_[from] == 0 ? 0.0 : community_purity(from);
            cpur_[to] = community_purity(to);
            pur_sum_ += cpur_[from] + cpur_[to];
        }
        comm_[u] = to;
    }

    const LevelGraph& g_;
    double two_m_, gamma_, alpha_;
    std::vector<double>* trace_;
    std::vector<std::uint32_t> comm_;
    std::vector<double> in_, tot_;
    std::vector<std::uint32_t> csize_;
    std::vector<std::uint32_t> ccounts_;
    std::vector<double> cpur_;
    double pur_sum_ = 0.0;
    std::size_t active_ = 0;
    mutable std::vector<std::uint32_t> scratch_;
};

inline LevelGraph level_from(const PairwiseGraph& g, const AttributeBinned* attrs) {
    LevelGraph lg;
    const std::size_t n = g.node_count();
    lg.adj.resize(n);
    lg.self.assign(n, 0.0);
    lg.degree.resize(n);
    lg.size.assign(n, 1);
    if (attrs != nullptr) {
        lg.attrs = attrs->attributes;
        lg.bins = attrs->bins;
        lg.counts.assign(n * lg.attrs * lg.bins, 0);
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t a = 0; a < lg.attrs; ++a) lg.counts[u * lg.attrs * lg.bins + a * lg.bins + attrs->label(u, a)] = 1;
    }
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v : g.neighbors(u)) lg.adj[u].emplace_back(v, 1.0);
        lg.degree[u] = static_cast<double>(g.degree(u));
    }
    return lg;
}

/// Collapses communities of `lg` into super-nodes; returns the new graph and
/// the dense id assigned to each old node.
inline std::pair<LevelGraph, std::vector<std::uint32_t>> coarsen(const LevelGraph& lg,
                                                                 const std::vector<std::uint32_t>& comm) {
    std::vector<std::uint32_t> dense = canonical_labels(comm);
    std::size_t k = dense.empty() ? 0 : *std::max_element(dense.begin(), dense.end()) + 1;
    LevelGraph out;
    out.attrs = lg.attrs;
    out.bins = lg.bins;
    out.adj.resize(k);
    out.self.assign(k, 0.0);
    out.degree.assign(k, 0.0);
    out.size.assign(k, 0);
    const std::size_t stride = lg.attrs * lg.bins;
    out.counts.assign(k * stride, 0);
    std::vector<std::map<std::uint32_t, double>> acc(k);
    for (std::size_t u = 0; u < lg.n(); ++u) {
        auto cu = dense[u];
        out.self[cu] += lg.self[u];
        out.degree[cu] += lg.degree[u];
        out.size[cu] += lg.size[u];
        for (std::size_t s = 0; s < stride; ++s) out.counts[cu * stride + s] += lg.counts[u * stride + s];
        for (auto [v, w] : lg.adj[u]) {
            auto cv = dense[v];
            if (cv == cu) out.self[cu] += w;  // each internal edge seen from both ends
            else acc[cu][cv] += w;
        }
    }
    for (std::size_t c = 0; c < k; ++c) out.adj[c].assign(acc[c].begin(), acc[c].end());
    return {std::move(out), std::move(dense)};
}

inline Partition multilevel(const PairwiseGraph& g, const AttributeBinned* attrs, double alpha, double gamma,
                            std::uint64_t seed, CommunityMethod method) {
    if (g.node_count() == 0) throw Error("community detection: empty graph");
    if (!(gamma > 0.0)) throw Error("community detection: gamma must be positive");
    Partition result;
    result.method = method;
    result.gamma = gamma;
    result.alpha = alpha;
    std::vector<std::uint32_t> node_to_comm(g.node_count());
    std::iota(node_to_comm.begin(), node_to_comm.end(), 0u);
    if (g.edge_count() == 0 && (attrs == nullptr || alpha == 0.0)) {
        result.assignment = node_to_comm;
        return result;
    }
    const double two_m = 2.0 * static_cast<double>(g.edge_count());
    std::mt19937_64 rng(seed);
    LevelGraph level = level_from(g, attrs);
    for (int depth = 0; depth < 64; ++depth) {
        LouvainEngine engine(level, two_m > 0 ? two_m : 1.0, gamma, alpha, &result.trace);
        bool moved = engine.run(rng);
        if (!moved) break;
        auto [next, dense] = coarsen(level, engine.communities());
        for (auto& c : node_to_comm) c = dense[c];
        if (next.n() == level.n()) break;
        level = std::move(next);
    }
    result.assignment = canonical_labels(node_to_comm);
    return result;
}

}  // namespace detail

/// Greedy multilevel modularity optimisation. Visit order is shuffled by `seed`;
/// a node moves only on strictly positive gain, ties broken by lowest id.
inline Partition louvain(const PairwiseGraph& g, double gamma = 1.0, std::uint64_t seed = 0) {
    return detail::multilevel(g, nullptr, 0.0, gamma, seed, CommunityMethod::Louvain);
}

/// Louvain moves scored by alpha * P + (1 - alpha) * Q, P the mean community purity.
inline Partition eva(const PairwiseGraph& g, const AttributeBinned& attrs, double alpha = 0.8,
                     double gamma = 1.0, std::uint64_t seed = 0) {
    if (alpha < 0.0 || alpha > 1.0) throw Error("eva: alpha must lie in [0, 1]");
    if (attrs.nodes != g.node_count() || attrs.labels.size() != attrs.nodes * attrs.attributes)
        throw Error("eva: every node needs a label for every attribute");
    return detail::multilevel(g, &attrs, alpha, gamma, seed, CommunityMethod::Eva);
}

inline void write_partition(std::ostream& out, const Partition& p, const Vocabulary& vocab) {
    out << "word,community_id\n";
    for (NodeId u = 0; u < p.assignment.size(); ++u)
        out << detail::csv_field(vocab.word(u)) << ',' << p.assignment[u] << '\n';
}

}  // namespace hypercog
