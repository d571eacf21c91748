#pragma once

// Pairwise graphs (R1, R123, Chain, Clique) and the association hypergraph.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "hypercog/detail/text.hpp"
#include "hypercog/error.hpp"
#include "hypercog/lexicon.hpp"

namespace hypercog {

using NodeId = std::uint32_t;

/// Sorted word list; a word's position is its node id.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
        std::sort(words_.begin(), words_.end());
        words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
    }
    explicit Vocabulary(const Lexicon& lexicon) : words_(lexicon.words()) {}

    std::size_t size() const { return words_.size(); }
    const std::string& word(NodeId id) const { return words_[id]; }
    const std::vector<std::string>& words() const { return words_; }

    std::optional<NodeId> id(std::string_view word) const {
        auto it = std::lower_bound(words_.begin(), words_.end(), word);
        if (it == words_.end() || *it != word) return std::nullopt;
        return static_cast<NodeId>(it - words_.begin());
    }

    friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

private:
    std::vector<std::string> words_;
};

enum class Construction { R1, R123, Chain, Clique };

inline std::string_view construction_name(Construction c) {
    switch (c) {
        case Construction::R1: return "r1";
        case Construction::R123: return "r123";
        case Construction::Chain: return "chain";
        case Construction::Clique: return "clique";
    }
    return "?";
}

inline Construction parse_construction(std::string_view name) {
    auto n = detail::normalize_token(name);
    if (n == "r1") return Construction::R1;
    if (n == "r123") return Construction::R123;
    if (n == "chain") return Construction::Chain;
    if (n == "clique") return Construction::Clique;
    throw Error("unknown graph construction '" + std::string(name) + "'");
}

using Edge = std::pair<NodeId, NodeId>;

/// Simple undirected unweighted graph over a vocabulary. Vocabulary words that
/// take part in no edge are isolated nodes.
class PairwiseGraph {
public:
    PairwiseGraph() = default;

    PairwiseGraph(Vocabulary vocab, std::span<const Edge> edges, Construction construction = Construction::R123)
        : vocab_(std::move(vocab)), adj_(vocab_.size()), construction_(construction) {
        for (auto [u, v] : edges) {
            if (u >= adj_.size() || v >= adj_.size()) throw Error("graph: edge endpoint out of range");
            if (u == v) continue;
            adj_[u].push_back(v);
            adj_[v].push_back(u);
        }
        for (auto& nb : adj_) {
            std::sort(nb.begin(), nb.end());
            nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
            edge_count_ += nb.size();
        }
        edge_count_ /= 2;
    }

    const Vocabulary& vocabulary() const { return vocab_; }
    Construction construction() const { return construction_; }
    std::size_t node_count() const { return adj_.size(); }
    std::size_t edge_count() const { return edge_count_; }

    std::size_t active_node_count() const {
        return static_cast<std::size_t>(
            std::count_if(adj_.begin(), adj_.end(), [](const auto& nb) { return !nb.empty(); }));
    }

    std::span<const NodeId> neighbors(NodeId u) const { return adj_[u]; }
    std::size_t degree(NodeId u) const { return adj_[u].size(); }

    bool has_edge(NodeId u, NodeId v) const {
        if (u >= adj_.size() || v >= adj_.size()) return false;
        return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
    }

    /// Edges with u < v, lexicographically ordered.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(edge_count_);
        for (NodeId u = 0; u < adj_.size(); ++u)
            for (NodeId v : adj_[u])
                if (u < v) out.emplace_back(u, v);
        return out;
    }

private:
    Vocabulary vocab_;
    std::vector<std::vector<NodeId>> adj_;
    std::size_t edge_count_ = 0;
    Construction construction_ = Construction::R123;
};

namespace detail {

/// Cue followed by responses, mapped to ids, later repeats of a word removed.
inline std::vector<NodeId> row_sequence(const ResponseRow& row, const Vocabulary& vocab) {
    std::vector<NodeId> seq;
    auto push = [&](const std::string& w) {
        auto id = vocab.id(w);
        if (!id) throw Error("graph: word '" + w + "' is not in the vocabulary; intersect first");
        if (std::find(seq.begin(), seq.end(), *id) == seq.end()) seq.push_back(*id);
    };
    push(row.cue);
    for (const auto& r : row.responses) push(r);
    return seq;
}

}  // namespace detail

inline PairwiseGraph build_pairwise(const ResponseTable& responses, const Vocabulary& vocab,
                                    Construction construction) {
    if (responses.empty()) throw Error("graph: empty response table");
    std::vector<Edge> edges;
    for (const auto& row : responses) {
        auto seq = detail::row_sequence(row, vocab);
        if (seq.size() < 2) continue;
        switch (construction) {
            case Construction::R1:
                edges.emplace_back(seq[0], seq[1]);
                break;
            case Construction::R123:
                for (std::size_t i = 1; i < seq.size(); ++i) edges.emplace_back(seq[0], seq[i]);
                break;
            case Construction::Chain:
                for (std::size_t i = 1; i < seq.size(); ++i) edges.emplace_back(seq[i - 1], seq[i]);
                break;
            case Construction::Clique:
                for (std::size_t i = 0; i < seq.size(); ++i)
                    for (std::size_t j = i + 1; j < seq.size(); ++j) edges.emplace_back(seq[i], seq[j]);
                break;
        }
    }
    return PairwiseGraph(vocab, edges, construction);
}

inline PairwiseGraph build_pairwise(const FilteredDataset& data, Construction construction) {
    return build_pairwise(data.responses, Vocabulary(data.lexicon), construction);
}

/// Multiset of hyperedges; member order follows the source row (cue first).
class Hypergraph {
public:
    Hypergraph() = default;

    Hypergraph(Vocabulary vocab, std::vector<std::vector<NodeId>> hyperedges)
        : vocab_(std::move(vocab)), edges_(std::move(hyperedges)), incidence_(vocab_.size()) {
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            const auto& members = edges_[e];
            if (members.size() < 2) throw Error("hypergraph: hyperedge with fewer than two members");
            std::vector<NodeId> sorted = members;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw Error("hypergraph: repeated member inside a hyperedge");
            for (NodeId u : members) {
                if (u >= incidence_.size()) throw Error("hypergraph: member out of range");
                incidence_[u].push_back(e);
            }
        }
    }

    const Vocabulary& vocabulary() const { return vocab_; }
    std::size_t node_count() const { return incidence_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    std::size_t active_node_count() const {
        return static_cast<std::size_t>(
            std::count_if(incidence_.begin(), incidence_.end(), [](const auto& inc) { return !inc.empty(); }));
    }

    std::span<const NodeId> members(std::size_t e) const { return edges_[e]; }
    const std::vector<std::vector<NodeId>>& hyperedges() const { return edges_; }
    /// Hyperedge ids containing u, in construction order.
    std::span<const std::size_t> incident(NodeId u) const { return incidence_[u]; }

private:
    Vocabulary vocab_;
    std::vector<std::vector<NodeId>> edges_;
    std::vector<std::vector<std::size_t>> incidence_;
};

/// One hyperedge per response instance. With `dedup`, identical member sets
/// collapse onto their first occurrence.
inline Hypergraph build_hypergraph(const ResponseTable& responses, const Vocabulary& vocab, bool dedup = false) {
    std::vector<std::vector<NodeId>> edges;
    std::set<std::vector<NodeId>> seen;
    for (const auto& row : responses) {
        auto seq = detail::row_sequence(row, vocab);
        if (seq.size() < 2) continue;
        if (dedup) {
            auto key = seq;
            std::sort(key.begin(), key.end());
            if (!seen.insert(std::move(key)).second) continue;
        }
        edges.push_back(std::move(seq));
    }
    if (edges.empty()) throw Error("hypergraph: no hyperedge with at least two members");
    return Hypergraph(vocab, std::move(edges));
}

inline Hypergraph build_hypergraph(const FilteredDataset& data, bool dedup = false) {
    return build_hypergraph(data.responses, Vocabulary(data.lexicon), dedup);
}

/// Neighbours of `u` plus `u` itself, sorted. Empty optional for unknown ids.
inline std::optional<std::vector<NodeId>> ego_neighborhood(const PairwiseGraph& g, NodeId u) {
    if (u >= g.node_count()) return std::nullopt;
    auto nb = g.neighbors(u);
    std::vector<NodeId> ego(nb.begin(), nb.end());
    ego.insert(std::lower_bound(ego.begin(), ego.end(), u), u);
    return ego;
}

struct StarEgo {
    NodeId center = 0;
    std::vector<std::size_t> hyperedges;

    bool empty() const { return hyperedges.empty(); }
};

inline std::optional<StarEgo> star_ego(const Hypergraph& h, NodeId u) {
    if (u >= h.node_count()) return std::nullopt;
    auto inc = h.incident(u);
    return StarEgo{u, std::vector<std::size_t>(inc.begin(), inc.end())};
}

/// True when every edge of `a` is an edge of `b` (same vocabulary).
inline bool edge_subset(const PairwiseGraph& a, const PairwiseGraph& b) {
    if (a.vocabulary() != b.vocabulary()) return false;
    for (auto [u, v] : a.edges())
        if (!b.has_edge(u, v)) return false;
    return true;
}

// Export / import.

inline void write_edge_list(std::ostream& out, const PairwiseGraph& g) {
    const auto& vocab = g.vocabulary();
    for (auto [u, v] : g.edges()) out << vocab.word(u) << '\t' << vocab.word(v) << '\n';
}

inline PairwiseGraph read_edge_list(std::istream& in, const Vocabulary& vocab,
                                    Construction construction = Construction::R123) {
    std::vector<Edge> edges;
    std::string line;
    while (std::getline(in, line)) {
        auto rec = detail::strip_cr(line);
        if (detail::trim(rec).empty()) continue;
        auto f = detail::split_record(rec, '\t');
        if (f.size() != 2) throw Error("edge list: expected two tab-separated words per line");
        auto u = vocab.id(f[0]);
        auto v = vocab.id(f[1]);
        if (!u || !v) throw Error("edge list: unknown word on line '" + std::string(rec) + "'");
        edges.emplace_back(*u, *v);
    }
    return PairwiseGraph(vocab, edges, construction);
}

inline void write_hyperedge_list(std::ostream& out, const Hypergraph& h) {
    const auto& vocab = h.vocabulary();
    for (const auto& e : h.hyperedges()) {
        for (std::size_t i = 0; i < e.size(); ++i) out << (i ? "\t" : "") << vocab.word(e[i]);
        out << '\n';
    }
}

inline Hypergraph read_hyperedge_list(std::istream& in, const Vocabulary& vocab) {
    std::vector<std::vector<NodeId>> edges;
    std::string line;
    while (std::getline(in, line)) {
        auto rec = detail::strip_cr(line);
        if (detail::trim(rec).empty()) continue;
        std::vector<NodeId> members;
        for (const auto& w : detail::split_record(rec, '\t')) {
            auto id = vocab.id(w);
            if (!id) throw Error("hyperedge list: unknown word '" + w + "'");
            members.push_back(*id);
        }
        edges.push_back(std::move(members));
    }
    return Hypergraph(vocab, std::move(edges));
}

}  // namespace hypercog
