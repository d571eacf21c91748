#pragma once

// Characteristic values: a word's feature as expressed by its contexts
// (ego set, crisp community, local communities or star hyperedges).

#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "hypercog/community.hpp"
#include "hypercog/detail/text.hpp"
#include "hypercog/error.hpp"
#include "hypercog/features.hpp"
#include "hypercog/lemon.hpp"
#include "hypercog/lexicon.hpp"
#include "hypercog/network.hpp"

namespace hypercog {

enum class StrategyKind { NonNetwork, EgoNetwork, LouvainCommunity, EvaCommunity, LemonCover, HypergraphStar };

struct Strategy {
    StrategyKind kind = StrategyKind::NonNetwork;
    /// Exclude the target word from its own contexts. Ignored for NonNetwork.
    bool gap = false;

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

inline std::string_view strategy_kind_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::NonNetwork: return "non-network";
        case StrategyKind::EgoNetwork: return "ego";
        case StrategyKind::LouvainCommunity: return "louvain";
        case StrategyKind::EvaCommunity: return "eva";
        case StrategyKind::LemonCover: return "lemon";
        case StrategyKind::HypergraphStar: return "hypergraph";
    }
    return "?";
}

inline std::string strategy_tag(const Strategy& s) {
    std::string tag(strategy_kind_name(s.kind));
    if (s.gap && s.kind != StrategyKind::NonNetwork) tag += "-gap";
    return tag;
}

/// Accepts "hypergraph", "hypergraph-gap" or "hypergraph:gap".
inline Strategy parse_strategy(std::string_view text) {
    auto name = detail::normalize_token(text);
    Strategy s;
    for (std::string_view suffix : {"-gap", ":gap"}) {
        if (name.size() > suffix.size() && name.ends_with(suffix)) {
            s.gap = true;
            name.resize(name.size() - suffix.size());
        }
    }
    if (name == "non-network" || name == "nonnetwork" || name == "none") s.kind = StrategyKind::NonNetwork;
    else if (name == "ego" || name == "ego-network") s.kind = StrategyKind::EgoNetwork;
    else if (name == "louvain") s.kind = StrategyKind::LouvainCommunity;
    else if (name == "eva") s.kind = StrategyKind::EvaCommunity;
    else if (name == "lemon") s.kind = StrategyKind::LemonCover;
    else if (name == "hypergraph" || name == "hyper") s.kind = StrategyKind::HypergraphStar;
    else throw Error("unknown aggregation strategy '" + std::string(text) + "'");
    if (s.kind == StrategyKind::NonNetwork) s.gap = false;
    return s;
}

struct AggregationStats {
    std::size_t fallbacks = 0;  // (word, feature) cells that used the word's own value
};

namespace detail {

/// Mean of f over members, skipping `exclude` when set. Empty when nothing remains.
inline std::optional<double> context_mean(const Lexicon& lex, std::span<const NodeId> members, Feature f,
                                          std::optional<NodeId> exclude) {
    double sum = 0.0;
    std::size_t n = 0;
    for (NodeId v : members) {
        if (exclude && v == *exclude) continue;
        sum += lex.value(v, f);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

/// Unweighted mean of per-context means; own value if no context survives.
template <typename ForEachContext>
double mean_over_contexts(const Lexicon& lex, NodeId u, Feature f, bool gap, ForEachContext&& for_each,
                          AggregationStats* stats) {
    double sum = 0.0;
    std::size_t n = 0;
    std::optional<NodeId> exclude = gap ? std::optional<NodeId>(u) : std::nullopt;
    for_each([&](std::span<const NodeId> members) {
        if (auto m = context_mean(lex, members, f, exclude)) {
            sum += *m;
            ++n;
        }
    });
    if (n == 0) {
        if (stats != nullptr) ++stats->fallbacks;
        return lex.value(u, f);
    }
    return sum / static_cast<double>(n);
}

inline void check_node(std::size_t node_count, const Lexicon& lex, NodeId u) {
    if (node_count != lex.size()) throw Error("aggregate: structure and lexicon disagree on vocabulary size");
    if (u >= node_count) throw Error("aggregate: word is not in the structure");
}

}  // namespace detail

/// Mean over ego(u) (u itself excluded when gap).
inline double characteristic_ego(const PairwiseGraph& g, const Lexicon& lex, NodeId u, Feature f, bool gap,
                                 AggregationStats* stats = nullptr) {
    detail::check_node(g.node_count(), lex, u);
    auto ego = *ego_neighborhood(g, u);
    return detail::mean_over_contexts(lex, u, f, gap, [&](auto&& visit) { visit(ego); }, stats);
}

inline double characteristic_partition(const Partition& p, const Lexicon& lex, NodeId u, Feature f, bool gap,
                                       AggregationStats* stats = nullptr) {
    detail::check_node(p.assignment.size(), lex, u);
    auto members = p.members_of(u);
    return detail::mean_over_contexts(lex, u, f, gap, [&](auto&& visit) { visit(members); }, stats);
}

/// Per-community means, then unweighted mean over the communities containing u.
inline double characteristic_cover(const Cover& cover, const Lexicon& lex, NodeId u, Feature f, bool gap,
                                   AggregationStats* stats = nullptr) {
    if (u >= lex.size()) throw Error("aggregate: word is not in the lexicon");
    auto ids = cover.containing(u);
    return detail::mean_over_contexts(
        lex, u, f, gap,
        [&](auto&& visit) {
            for (auto c : ids) visit(cover.communities[c]);
        },
        stats);
}

/// Per-hyperedge means over the star ego-network, then their unweighted mean.
inline double characteristic_hypergraph(const Hypergraph& h, const Lexicon& lex, NodeId u, Feature f, bool gap,
                                        AggregationStats* stats = nullptr) {
    detail::check_node(h.node_count(), lex, u);
    return detail::mean_over_contexts(
        lex, u, f, gap,
        [&](auto&& visit) {
            for (auto e : h.incident(u)) visit(h.members(e));
        },
        stats);
}

/// Non-owning view of whichever structure a strategy aggregates over.
using ContextSource =
    std::variant<std::monostate, std::reference_wrapper<const PairwiseGraph>, std::reference_wrapper<const Partition>,
                 std::reference_wrapper<const Cover>, std::reference_wrapper<const Hypergraph>>;

/// Characteristic value of every (word, feature) cell; row-major n x 11.
inline std::vector<double> characteristic_table(const Lexicon& lex, const ContextSource& source,
                                                const Strategy& strategy, AggregationStats* stats = nullptr) {
    const std::size_t n = lex.size();
    std::vector<double> out(n * kFeatureCount);
    auto fill = [&](auto&& contexts_of) {
        for (NodeId u = 0; u < n; ++u) {
            for (std::size_t fi = 0; fi < kFeatureCount; ++fi) {
                out[u * kFeatureCount + fi] = detail::mean_over_contexts(
                    lex, u, feature_at(fi), strategy.gap, [&](auto&& visit) { contexts_of(u, visit); }, stats);
            }
        }
    };
    auto mismatch = [&] {
        return Error("aggregate: structure does not match strategy '" + strategy_tag(strategy) + "'");
    };
    switch (strategy.kind) {
        case StrategyKind::NonNetwork:
            for (NodeId u = 0; u < n; ++u)
                for (std::size_t fi = 0; fi < kFeatureCount; ++fi) out[u * kFeatureCount + fi] = lex[u].features[fi];
            break;
        case StrategyKind::EgoNetwork: {
            auto* g = std::get_if<std::reference_wrapper<const PairwiseGraph>>(&source);
            if (g == nullptr) throw mismatch();
            const PairwiseGraph& graph = *g;
            detail::check_node(graph.node_count(), lex, 0);
            fill([&](NodeId u, auto&& visit) { visit(*ego_neighborhood(graph, u)); });
            break;
        }
        case StrategyKind::LouvainCommunity:
        case StrategyKind::EvaCommunity: {
            auto* p = std::get_if<std::reference_wrapper<const Partition>>(&source);
            if (p == nullptr) throw mismatch();
            const Partition& part = *p;
            auto want = strategy.kind == StrategyKind::EvaCommunity ? CommunityMethod::Eva : CommunityMethod::Louvain;
            if (part.method != want) throw mismatch();
            detail::check_node(part.assignment.size(), lex, 0);
            auto groups = part.communities();
            fill([&](NodeId u, auto&& visit) { visit(groups[part.assignment[u]]); });
            break;
        }
        case StrategyKind::LemonCover: {
            auto* c = std::get_if<std::reference_wrapper<const Cover>>(&source);
            if (c == nullptr) throw mismatch();
            const Cover& cover = *c;
            auto member_of = cover.membership(n);
            fill([&](NodeId u, auto&& visit) {
                for (auto ci : member_of[u]) visit(cover.communities[ci]);
            });
            break;
        }
        case StrategyKind::HypergraphStar: {
            auto* h = std::get_if<std::reference_wrapper<const Hypergraph>>(&source);
            if (h == nullptr) throw mismatch();
            const Hypergraph& hyper = *h;
            detail::check_node(hyper.node_count(), lex, 0);
            fill([&](NodeId u, auto&& visit) {
                for (auto e : hyper.incident(u)) visit(hyper.members(e));
            });
            break;
        }
    }
    return out;
}

/// Regression dataset: aggregated predictors plus the empirical target.
struct FeatureMatrix {
    std::vector<std::string> words;
    std::vector<Feature> predictors;
    std::vector<double> values;  // row-major words.size() x predictors.size()
    std::vector<double> target;
    Strategy strategy;
    Feature target_feature = Feature::Concreteness;

    std::size_t rows() const { return words.size(); }
    std::size_t cols() const { return predictors.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }

    std::vector<std::string> column_names() const {
        std::vector<std::string> out;
        for (auto f : predictors) out.push_back(std::string(feature_name(f)) + "_" + strategy_tag(strategy));
        return out;
    }
};

struct MatrixOptions {
    /// Adds the aggregated target as a predictor (label-leak ablation).
    bool include_target_predictor = false;
};

inline FeatureMatrix build_feature_matrix(const Lexicon& lex, const ContextSource& source, const Strategy& strategy,
                                          Feature target, const MatrixOptions& options = {},
                                          AggregationStats* stats = nullptr) {
    auto table = characteristic_table(lex, source, strategy, stats);
    FeatureMatrix m;
    m.words = lex.words();
    m.strategy = strategy;
    if (strategy.kind == StrategyKind::NonNetwork) m.strategy.gap = false;
    m.target_feature = target;
    for (std::size_t fi = 0; fi < kFeatureCount; ++fi)
        if (feature_at(fi) != target || options.include_target_predictor) m.predictors.push_back(feature_at(fi));
    m.values.reserve(lex.size() * m.predictors.size());
    for (std::size_t u = 0; u < lex.size(); ++u) {
        for (auto f : m.predictors) {
            double v = table[u * kFeatureCount + index_of(f)];
            if (!std::isfinite(v)) throw Error("aggregate: unresolved value for '" + m.words[u] + "'");
            m.values.push_back(v);
        }
        m.target.push_back(lex.value(u, target));
    }
    return m;
}

inline void write_feature_matrix(std::ostream& out, const FeatureMatrix& m) {
    out << "word";
    for (const auto& name : m.column_names()) out << ',' << name;
    out << ',' << feature_name(m.target_feature) << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << detail::csv_field(m.words[r]);
        for (double v : m.row(r)) out << ',' << detail::format_double(v);
        out << ',' << detail::format_double(m.target[r]) << '\n';
    }
}

inline FeatureMatrix read_feature_matrix(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("feature matrix: empty input");
    auto header = detail::split_record(detail::strip_cr(line), ',');
    if (header.size() < 3 || header.front() != "word") throw Error("feature matrix: bad header");
    FeatureMatrix m;
    auto target = parse_feature(header.back());
    if (!target) throw Error("feature matrix: unknown target column '" + header.back() + "'");
    m.target_feature = *target;
    std::optional<std::string> tag;
    for (std::size_t c = 1; c + 1 < header.size(); ++c) {
        bool matched = false;
        for (std::size_t fi = 0; fi < kFeatureCount && !matched; ++fi) {
            std::string prefix = std::string(kFeatureNames[fi]) + "_";
            if (header[c].rfind(prefix, 0) != 0) continue;
            auto suffix = header[c].substr(prefix.size());
            if (tag && *tag != suffix) continue;
            tag = suffix;
            m.predictors.push_back(feature_at(fi));
            matched = true;
        }
        if (!matched) throw Error("feature matrix: unknown predictor column '" + header[c] + "'");
    }
    m.strategy = parse_strategy(tag.value_or("non-network"));
    while (std::getline(in, line)) {
        auto rec = detail::strip_cr(line);
        if (detail::trim(rec).empty()) continue;
        auto f = detail::split_record(rec, ',');
        if (f.size() != header.size()) throw Error("feature matrix: ragged row");
        m.words.push_back(f[0]);
        for (std::size_t c = 1; c + 1 < f.size(); ++c) {
            auto v = detail::parse_double(f[c]);
            if (!v) throw Error("feature matrix: non-numeric cell in row '" + f[0] + "'");
            m.values.push_back(*v);
        }
        auto t = detail::parse_double(f.back());
        if (!t) throw Error("feature matrix: non-numeric target in row '" + f[0] + "'");
        m.target.push_back(*t);
    }
    return m;
}

}  // namespace hypercog
