#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace hypercog;
using testutil::id_of;

namespace {

double pop_std(std::vector<double> v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

std::vector<std::vector<ContextMoments>> null_of(const ContextSet& c, const Lexicon& lex, Feature f, std::size_t n) {
    return null_shuffle_moments(c, lex, f, n, 3);
}

}  // namespace

TEST(Moments, ToyStarOfDog) {
    auto d = testutil::toy_dataset();
    auto h = build_hypergraph(d);
    auto ctx = star_contexts(h, id_of(d.lexicon, "dog"));
    auto m = context_moments(ctx, d.lexicon, Feature::Length);
    ASSERT_EQ(m.size(), 3u);
    EXPECT_NEAR(m[0].mean, 3.0, 1e-12);
    EXPECT_NEAR(m[0].std, 0.0, 1e-12);
    EXPECT_NEAR(m[1].mean, 11.0 / 3.0, 1e-12);
    EXPECT_NEAR(m[1].std, pop_std({5, 3, 3}), 1e-12);
    EXPECT_NEAR(m[2].mean, 16.0 / 3.0, 1e-12);
    EXPECT_NEAR(m[2].std, pop_std({3, 5, 8}), 1e-12);
    EXPECT_EQ(m[2].size, 3u);
}

TEST(Moments, ConstantFeatureAndSingletons) {
    auto d = testutil::toy_dataset();
    auto ctx = hyperedge_contexts(build_hypergraph(d));
    for (const auto& m : context_moments(ctx, d.lexicon, Feature::Polysemy)) {
        EXPECT_EQ(m.mean, 2.0);
        EXPECT_EQ(m.std, 0.0);
    }
    ContextSet single{"x", {"a", "b"}, {{1}, {}}};
    std::size_t skipped = 0;
    auto m = context_moments(single, d.lexicon, Feature::Aoa, &skipped);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].std, 0.0);
    EXPECT_EQ(m[0].mean, d.lexicon.value(1, Feature::Aoa));
    EXPECT_EQ(skipped, 1u);
}

TEST(Moments, EgoContextsSkipIsolatedWords) {
    Lexicon lex({testutil::entry("a", 1), testutil::entry("b", 2), testutil::entry("c", 3)});
    std::vector<Edge> one{{0, 1}};
    PairwiseGraph g(Vocabulary(lex), one);
    auto ctx = ego_contexts(g);
    EXPECT_EQ(ctx.ids, (std::vector<std::string>{"a", "b"}));
}

TEST(NullModel, IdentityPermutationReproducesEmpirical) {
    auto d = testutil::toy_dataset();
    auto ctx = hyperedge_contexts(build_hypergraph(d));
    std::vector<std::size_t> id(d.lexicon.size());
    std::iota(id.begin(), id.end(), std::size_t{0});
    auto a = context_moments(ctx, d.lexicon, Feature::Valence);
    auto b = permuted_moments(ctx, d.lexicon, Feature::Valence, id);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].mean, b[i].mean);
        EXPECT_EQ(a[i].std, b[i].std);
    }
}

TEST(NullModel, PermutationPreservesValueMultiset) {
    auto ds = make_synthetic({.words = 100, .clusters = 5, .seed = 2});
    auto lex = ds.lexicon;
    auto perm = null_permutation(lex.size(), 4, 0);
    auto sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_NE(perm, null_permutation(lex.size(), 4, 1));
    ContextSet everything{"all", {"v"}, {{}}};
    for (NodeId u = 0; u < lex.size(); ++u) everything.members[0].push_back(u);
    auto a = context_moments(everything, lex, Feature::Aoa);
    auto b = permuted_moments(everything, lex, Feature::Aoa, perm);
    EXPECT_NEAR(a[0].mean, b[0].mean, 1e-12);
    EXPECT_NEAR(a[0].std, b[0].std, 1e-12);
}

TEST(ExtremesGap, PlantedHomophilyIsNegative) {
    auto ds = make_synthetic({.words = 400, .clusters = 10, .homophily = 0.95, .seed = 5});
    auto data = intersect_vocabulary(ds.responses, ds.lexicon);
    auto ctx = hyperedge_contexts(build_hypergraph(data));
    auto emp = context_moments(ctx, data.lexicon, Feature::Aoa);
    auto null = null_of(ctx, data.lexicon, Feature::Aoa, 30);
    auto g = extremes_gap_statistic(emp, null);
    ASSERT_TRUE(g);
    EXPECT_LT(g->statistic, 0.0);
    EXPECT_LT(g->z, -3.0);
    auto [lo, hi] = null_interval(*g);
    EXPECT_LT(g->statistic, lo);
    EXPECT_LE(lo, 0.0);
    EXPECT_GE(hi, 0.0);
}

TEST(ExtremesGap, ShuffledValuesStayInsideNull) {
    auto ds = make_synthetic({.words = 400, .clusters = 10, .homophily = 0.95, .seed = 6});
    auto data = intersect_vocabulary(ds.responses, ds.lexicon);
    auto col = data.lexicon.column(Feature::Aoa);
    std::mt19937_64 rng(99);
    std::shuffle(col.begin(), col.end(), rng);
    auto shuffled = data.lexicon.with_column(Feature::Aoa, col);
    auto ctx = hyperedge_contexts(build_hypergraph(data));
    auto emp = context_moments(ctx, shuffled, Feature::Aoa);
    auto g = extremes_gap_statistic(emp, null_of(ctx, shuffled, Feature::Aoa, 50));
    ASSERT_TRUE(g);
    EXPECT_LT(std::abs(g->z), 3.0);
}

TEST(ExtremesGap, TooFewContextsOrPermutations) {
    auto d = testutil::toy_dataset();
    auto ctx = hyperedge_contexts(build_hypergraph(d));
    auto emp = context_moments(ctx, d.lexicon, Feature::Aoa);
    EXPECT_FALSE(extremes_gap_statistic(emp, null_of(ctx, d.lexicon, Feature::Aoa, 20)));
    auto ds = make_synthetic({.words = 200, .clusters = 5, .seed = 1});
    auto data = intersect_vocabulary(ds.responses, ds.lexicon);
    auto big = hyperedge_contexts(build_hypergraph(data));
    auto e2 = context_moments(big, data.lexicon, Feature::Aoa);
    EXPECT_FALSE(extremes_gap_statistic(e2, null_of(big, data.lexicon, Feature::Aoa, 5)));
    EXPECT_TRUE(extremes_gap_statistic(e2, null_of(big, data.lexicon, Feature::Aoa, 10)));
}

TEST(ExtremesGap, TailStdUsesDeciles) {
    std::vector<ContextMoments> m;
    for (int i = 0; i < 20; ++i) m.push_back({"c" + std::to_string(i), Feature::Aoa, double(i), double(i % 3), 2});
    // bottom two means 0,1 -> std 0,1; top two 19,18 -> std 1,0
    EXPECT_DOUBLE_EQ(extremes_tail_std(m), 0.5);
}

TEST(MomentsCsv, RowFormat) {
    std::ostringstream out;
    write_moments_header(out);
    std::vector<ContextMoments> m{{"e0", Feature::Aoa, 1.5, 0.5, 2}};
    write_moments_rows(out, "hyperedge", m, "empirical");
    EXPECT_EQ(out.str(), "structure,context_id,feature,mean,std,size,permutation\nhyperedge,e0,aoa,1.5,0.5,2,empirical\n");
}
