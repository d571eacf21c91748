#pragma once

// Within-context feature homogeneity against a label-permutation null.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hypercog/detail/parallel.hpp"
#include "hypercog/detail/text.hpp"
#include "hypercog/error.hpp"
#include "hypercog/features.hpp"
#include "hypercog/lexicon.hpp"
#include "hypercog/network.hpp"

namespace hypercog {

struct ContextSet {
    std::string structure;
    std::vector<std::string> ids;
    std::vector<std::vector<NodeId>> members;

    std::size_t size() const { return members.size(); }
};

/// One context per non-isolated word: the word plus its neighbours.
inline ContextSet ego_contexts(const PairwiseGraph& g) {
    ContextSet out{"ego", {}, {}};
    const auto& vocab = g.vocabulary();
    for (NodeId u = 0; u < g.node_count(); ++u) {
        if (g.degree(u) == 0) continue;
        out.ids.push_back(vocab.word(u));
        out.members.push_back(*ego_neighborhood(g, u));
    }
    return out;
}

/// One context per hyperedge, so every star ego is covered edge by edge.
inline ContextSet hyperedge_contexts(const Hypergraph& h) {
    ContextSet out{"hyperedge", {}, {}};
    for (std::size_t e = 0; e < h.edge_count(); ++e) {
        out.ids.push_back("e" + std::to_string(e));
        auto m = h.members(e);
        out.members.emplace_back(m.begin(), m.end());
    }
    return out;
}

/// The hyperedges of one word's star, as separate contexts.
inline ContextSet star_contexts(const Hypergraph& h, NodeId u) {
    auto star = star_ego(h, u);
    if (!star) throw Error("star_contexts: unknown node");
    ContextSet out{"star", {}, {}};
    for (auto e : star->hyperedges) {
        out.ids.push_back("e" + std::to_string(e));
        auto m = h.members(e);
        out.members.emplace_back(m.begin(), m.end());
    }
    return out;
}

struct ContextMoments {
    std::string context_id;
    Feature feature = Feature::Valence;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::size_t size = 0;
};

/// Moments over `values` indexed by node id. Empty contexts are skipped and counted.
inline std::vector<ContextMoments> moments_from_values(const ContextSet& contexts, std::span<const double> values,
                                                       Feature feature, std::size_t* skipped = nullptr) {
    std::vector<ContextMoments> out;
    out.reserve(contexts.size());
    std::size_t empty = 0;
    for (std::size_t c = 0; c < contexts.size(); ++c) {
        const auto& m = contexts.members[c];
        if (m.empty()) {
            ++empty;
            continue;
        }
        double mean = 0.0;
        for (auto u : m) {
            if (u >= values.size()) throw Error("context_moments: member out of range");
            mean += values[u];
        }
        mean /= static_cast<double>(m.size());
        double var = 0.0;
        for (auto u : m) var += (values[u] - mean) * (values[u] - mean);
        var /= static_cast<double>(m.size());
        out.push_back({contexts.ids[c], feature, mean, m.size() == 1 ? 0.0 : std::sqrt(var), m.size()});
    }
    if (skipped != nullptr) *skipped = empty;
    return out;
}

inline std::vector<ContextMoments> context_moments(const ContextSet& contexts, const Lexicon& lex, Feature feature,
                                                   std::size_t* skipped = nullptr) {
    auto values = lex.column(feature);
    return moments_from_values(contexts, values, feature, skipped);
}

/// Moments after relabelling: node u takes the value of node perm[u].
inline std::vector<ContextMoments> permuted_moments(const ContextSet& contexts, const Lexicon& lex, Feature feature,
                                                    std::span<const std::size_t> perm) {
    auto values = lex.column(feature);
    if (perm.size() != values.size()) throw Error("permuted_moments: permutation size mismatch");
    std::vector<double> shuffled(values.size());
    for (std::size_t u = 0; u < values.size(); ++u) shuffled[u] = values[perm[u]];
    return moments_from_values(contexts, shuffled, feature);
}

inline std::vector<std::size_t> null_permutation(std::size_t n, std::uint64_t seed, std::size_t index) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(detail::derive_seed(seed, index));
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

/// One moment list per permutation; the structure is held fixed.
inline std::vector<std::vector<ContextMoments>> null_shuffle_moments(const ContextSet& contexts, const Lexicon& lex,
                                                                     Feature feature, std::size_t n_permutations = 50,
                                                                     std::uint64_t seed = 0) {
    if (n_permutations == 0) throw Error("null_shuffle_moments: need at least one permutation");
    std::vector<std::vector<ContextMoments>> out(n_permutations);
    detail::parallel_for(n_permutations, [&](std::size_t p) {
        out[p] = permuted_moments(contexts, lex, feature, null_permutation(lex.size(), seed, p));
    });
    return out;
}

struct ExtremesGap {
    double statistic = 0.0;  // empirical minus null mean; negative = extra homogeneity at the extremes
    double empirical = 0.0;
    double null_mean = 0.0;
    double null_sd = 0.0;
    double z = 0.0;
    std::vector<double> null_values;
};

/// Mean std of the contexts whose means fall in the bottom or top decile.
inline double extremes_tail_std(std::span<const ContextMoments> moments) {
    std::vector<std::size_t> idx(moments.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return moments[a].mean < moments[b].mean; });
    std::size_t tail = std::max<std::size_t>(1, moments.size() / 10);
    double s = 0.0;
    for (std::size_t i = 0; i < tail; ++i) s += moments[idx[i]].std + moments[idx[idx.size() - 1 - i]].std;
    return s / static_cast<double>(2 * tail);
}

inline constexpr std::size_t kMinGapContexts = 20;
inline constexpr std::size_t kMinGapPermutations = 10;

/// Empty when there are fewer than 20 contexts or 10 null permutations.
inline std::optional<ExtremesGap> extremes_gap_statistic(std::span<const ContextMoments> empirical,
                                                         std::span<const std::vector<ContextMoments>> null_ensemble) {
    if (empirical.size() < kMinGapContexts || null_ensemble.size() < kMinGapPermutations) return std::nullopt;
    ExtremesGap g;
    g.empirical = extremes_tail_std(empirical);
    for (const auto& perm : null_ensemble) {
        if (perm.size() < kMinGapContexts) return std::nullopt;
        g.null_values.push_back(extremes_tail_std(perm));
    }
    const auto k = static_cast<double>(g.null_values.size());
    g.null_mean = std::accumulate(g.null_values.begin(), g.null_values.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : g.null_values) ss += (v - g.null_mean) * (v - g.null_mean);
    g.null_sd = std::sqrt(ss / (k - 1.0));
    g.statistic = g.empirical - g.null_mean;
    g.z = g.null_sd > 0.0 ? g.statistic / g.null_sd : (g.statistic == 0.0 ? 0.0 : std::copysign(INFINITY, g.statistic));
    return g;
}

/// Central interval [lo, hi] of the null values at the given coverage.
inline std::pair<double, double> null_interval(const ExtremesGap& g, double coverage = 0.95) {
    std::vector<double> v = g.null_values;
    std::sort(v.begin(), v.end());
    auto at = [&](double q) {
        double pos = q * static_cast<double>(v.size() - 1);
        auto lo = static_cast<std::size_t>(std::floor(pos));
        auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    double tail = (1.0 - coverage) / 2.0;
    return {at(tail) - g.null_mean, at(1.0 - tail) - g.null_mean};
}

/// Header: structure,context_id,feature,mean,std,size,permutation
inline void write_moments_header(std::ostream& out) { out << "structure,context_id,feature,mean,std,size,permutation\n"; }

inline void write_moments_rows(std::ostream& out, std::string_view structure, std::span<const ContextMoments> moments,
                               std::string_view permutation) {
    for (const auto& m : moments)
        out << structure << ',' << detail::csv_field(m.context_id) << ',' << feature_name(m.feature) << ','
            << detail::format_double(m.mean) << ',' << detail::format_double(m.std) << ',' << m.size << ','
            << permutation << '\n';
}

}  // namespace hypercog
