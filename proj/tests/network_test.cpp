#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace hypercog;
using testutil::id_of;

namespace {

std::set<std::pair<std::string, std::string>> named_edges(const PairwiseGraph& g) {
    std::set<std::pair<std::string, std::string>> out;
    for (auto [u, v] : g.edges()) {
        auto a = g.vocabulary().word(u), b = g.vocabulary().word(v);
        out.emplace(std::min(a, b), std::max(a, b));
    }
    return out;
}

/// Random rows over a 30-word vocabulary, self-associations included.
ResponseTable random_rows(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> w(0, 29), k(1, 3);
    ResponseTable t;
    for (std::size_t i = 0; i < n; ++i) {
        ResponseRow r{"w" + std::to_string(w(rng)), {}};
        for (int j = k(rng); j > 0; --j) r.responses.push_back("w" + std::to_string(w(rng)));
        t.push_back(r);
    }
    return t;
}

Vocabulary vocab30() {
    std::vector<std::string> words;
    for (int i = 0; i < 30; ++i) words.push_back("w" + std::to_string(i));
    return Vocabulary(words);
}

}  // namespace

TEST(BuildPairwise, R123HandEnumeration) {
    ResponseTable rows{{"dog", {"box", "cat"}}, {"zebra", {"dog", "box", "elephant"}}};
    Vocabulary v({"box", "cat", "dog", "elephant", "zebra"});
    auto g = build_pairwise(rows, v, Construction::R123);
    std::set<std::pair<std::string, std::string>> want{
        {"box", "dog"}, {"cat", "dog"}, {"dog", "zebra"}, {"box", "zebra"}, {"elephant", "zebra"}};
    EXPECT_EQ(named_edges(g), want);
}

TEST(BuildPairwise, SingleRowSingleEdgeForEveryConstruction) {
    Vocabulary v({"a", "b"});
    for (auto c : {Construction::R1, Construction::R123, Construction::Chain, Construction::Clique}) {
        auto g = build_pairwise({{"a", {"b"}}}, v, c);
        EXPECT_EQ(g.edge_count(), 1u) << construction_name(c);
        EXPECT_TRUE(g.has_edge(0, 1));
    }
}

TEST(BuildPairwise, ConstructionRules) {
    ResponseTable rows{{"a", {"b", "c", "d"}}};
    Vocabulary v({"a", "b", "c", "d"});
    EXPECT_EQ(named_edges(build_pairwise(rows, v, Construction::R1)),
              (std::set<std::pair<std::string, std::string>>{{"a", "b"}}));
    EXPECT_EQ(named_edges(build_pairwise(rows, v, Construction::Chain)),
              (std::set<std::pair<std::string, std::string>>{{"a", "b"}, {"b", "c"}, {"c", "d"}}));
    EXPECT_EQ(build_pairwise(rows, v, Construction::Clique).edge_count(), 6u);
    EXPECT_THROW(parse_construction("star"), Error);
}

TEST(BuildPairwise, SelfAssociationDropped) {
    Vocabulary v({"a", "b"});
    auto g = build_pairwise({{"a", {"a", "b"}}}, v, Construction::Chain);
    EXPECT_EQ(g.edge_count(), 1u);
    EXPECT_FALSE(g.has_edge(0, 0));
}

TEST(BuildPairwise, ContainmentAndSimplicityOnRandomInput) {
    auto v = vocab30();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto rows = random_rows(seed, 60);
        auto r1 = build_pairwise(rows, v, Construction::R1);
        auto r123 = build_pairwise(rows, v, Construction::R123);
        auto chain = build_pairwise(rows, v, Construction::Chain);
        auto clique = build_pairwise(rows, v, Construction::Clique);
        EXPECT_TRUE(edge_subset(r1, r123));
        EXPECT_TRUE(edge_subset(r123, clique));
        EXPECT_TRUE(edge_subset(chain, clique));
        for (const auto* g : {&r1, &r123, &chain, &clique}) {
            std::size_t degree_sum = 0;
            for (NodeId u = 0; u < g->node_count(); ++u) {
                auto nb = g->neighbors(u);
                EXPECT_TRUE(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
                EXPECT_FALSE(std::binary_search(nb.begin(), nb.end(), u));
                degree_sum += nb.size();
            }
            EXPECT_EQ(degree_sum, 2 * g->edge_count());
        }
        auto h = build_hypergraph(rows, v);
        for (const auto& e : h.hyperedges())
            for (std::size_t i = 0; i < e.size(); ++i)
                for (std::size_t j = i + 1; j < e.size(); ++j) EXPECT_TRUE(clique.has_edge(e[i], e[j]));
        EXPECT_EQ(h.active_node_count(), clique.active_node_count());
    }
}

TEST(BuildHypergraph, OneHyperedgePerInstance) {
    auto d = testutil::toy_dataset();
    auto h = build_hypergraph(d);
    ASSERT_EQ(h.edge_count(), 3u);
    const auto& lex = d.lexicon;
    auto e1 = h.members(1);
    EXPECT_EQ(std::vector<NodeId>(e1.begin(), e1.end()),
              (std::vector<NodeId>{id_of(lex, "zebra"), id_of(lex, "dog"), id_of(lex, "box")}));
}

TEST(BuildHypergraph, FilteredMemberAndDedup) {
    Lexicon lex({testutil::entry("a", 1), testutil::entry("b", 2), testutil::entry("c", 3)});
    auto d = intersect_vocabulary({{"a", {"b", "x", "c"}}, {"a", {"c", "b"}}, {"b", {"zz"}}}, lex);
    auto h = build_hypergraph(d);
    EXPECT_EQ(h.edge_count(), 2u);
    EXPECT_EQ(h.members(0).size(), 3u);
    EXPECT_EQ(build_hypergraph(d, true).edge_count(), 1u);
}

TEST(BuildHypergraph, RejectsDegenerateEdges) {
    Vocabulary v({"a", "b"});
    EXPECT_THROW(Hypergraph(v, {{0}}), Error);
    EXPECT_THROW(Hypergraph(v, {{0, 0}}), Error);
    EXPECT_THROW(build_hypergraph({{"a", {"a"}}}, v), Error);
}

TEST(EgoNeighborhood, ToyDog) {
    auto d = testutil::toy_dataset();
    auto g = build_pairwise(d, Construction::R123);
    auto ego = ego_neighborhood(g, id_of(d.lexicon, "dog"));
    ASSERT_TRUE(ego);
    EXPECT_EQ(ego->size(), 5u);
    EXPECT_FALSE(ego_neighborhood(g, 99));
}

TEST(EgoNeighborhood, IsolatedAndDegreeIdentity) {
    auto g = testutil::graph_from(4, {{0, 1}, {1, 2}});
    EXPECT_EQ(*ego_neighborhood(g, 3), std::vector<NodeId>{3});
    for (NodeId u = 0; u < 4; ++u) EXPECT_EQ(g.degree(u), ego_neighborhood(g, u)->size() - 1);
}

TEST(StarEgo, ToyDogAndDoubleCounting) {
    auto d = testutil::toy_dataset();
    auto h = build_hypergraph(d);
    auto star = star_ego(h, id_of(d.lexicon, "dog"));
    ASSERT_TRUE(star);
    EXPECT_EQ(star->hyperedges, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_TRUE(star_ego(h, id_of(d.lexicon, "cat"))->hyperedges == std::vector<std::size_t>{0});
    EXPECT_FALSE(star_ego(h, 42));

    auto rows = random_rows(11, 80);
    auto big = build_hypergraph(rows, vocab30());
    std::size_t by_node = 0, by_edge = 0;
    for (NodeId u = 0; u < big.node_count(); ++u) by_node += star_ego(big, u)->hyperedges.size();
    for (const auto& e : big.hyperedges()) by_edge += e.size();
    EXPECT_EQ(by_node, by_edge);
}

TEST(StarEgo, NodeOutsideEveryHyperedgeIsEmpty) {
    Vocabulary v({"a", "b", "c"});
    Hypergraph h(v, {{0, 1}});
    EXPECT_TRUE(star_ego(h, 2)->empty());
}

TEST(Export, EdgeAndHyperedgeListsRoundTrip) {
    auto d = testutil::toy_dataset();
    Vocabulary v(d.lexicon);
    auto g = build_pairwise(d, Construction::Clique);
    std::stringstream es;
    write_edge_list(es, g);
    auto g2 = read_edge_list(es, v, Construction::Clique);
    EXPECT_EQ(g.edges(), g2.edges());
    auto h = build_hypergraph(d);
    std::stringstream hs;
    write_hyperedge_list(hs, h);
    auto h2 = read_hyperedge_list(hs, v);
    EXPECT_EQ(h.hyperedges(), h2.hyperedges());
}
