#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace hypercog;

namespace {

ResponseTable parse(const std::string& text, Diagnostics* diag = nullptr, ResponseParseStats* stats = nullptr) {
    std::istringstream in(text);
    return parse_responses(in, ResponseFormat{}, diag, stats);
}

const char* kNormHeader = "word,valence,arousal,dominance,semantic_size,concreteness,gender,aoa,familiarity,frequency,polysemy\n";

}  // namespace

TEST(ParseResponses, MissingTrailingResponse) {
    auto t = parse("cue\tR1\tR2\tR3\ndog\tbox\tcat\t\n");
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0].cue, "dog");
    EXPECT_EQ(t[0].responses, (std::vector<std::string>{"box", "cat"}));
}

TEST(ParseResponses, ThreeResponses) {
    auto t = parse("cue\tR1\tR2\tR3\nzebra\tdog\tbox\telephant\n");
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0].responses, (std::vector<std::string>{"dog", "box", "elephant"}));
}

TEST(ParseResponses, NormalizesAndDropsNa) {
    auto t = parse("participant\tcue\tR1\tR2\tR3\n7\t  Dog \tNA\tBOX\t\n");
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0].cue, "dog");
    EXPECT_EQ(t[0].responses, (std::vector<std::string>{"box"}));
}

TEST(ParseResponses, MalformedRowsAreCountedAndSkipped) {
    Diagnostics diag;
    ResponseParseStats stats;
    auto t = parse("participant\tcue\tR1\tR2\tR3\n1\n2\tdog\tcat\t\t\n3\tbird\tNA\tNA\tNA\n", &diag, &stats);
    EXPECT_EQ(t.size(), 1u);
    EXPECT_EQ(stats.malformed, 1u);
    EXPECT_EQ(stats.without_responses, 1u);
    EXPECT_FALSE(diag.empty());
}

TEST(ParseResponses, ZeroValidRowsIsFatal) {
    EXPECT_THROW(parse("cue\tR1\tR2\tR3\ndog\tNA\t\t\n"), Error);
    EXPECT_THROW(parse(""), Error);
    EXPECT_THROW(parse("word\tR1\tR2\tR3\ndog\tcat\t\t\n"), Error);
}

TEST(ParseResponses, RoundTripIsLossless) {
    auto rows = testutil::toy_rows();
    std::ostringstream out;
    write_responses(out, rows);
    auto back = parse(out.str());
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].cue, rows[i].cue);
        EXPECT_EQ(back[i].responses, rows[i].responses);
    }
}

TEST(LogFrequency, KnownValues) {
    EXPECT_EQ(log_transform_frequency(0.0), 0.0);
    EXPECT_NEAR(log_transform_frequency(std::exp(1.0) - 1.0), 1.0, 1e-12);
    EXPECT_THROW(log_transform_frequency(-1.0), Error);
    EXPECT_THROW(log_transform_frequency(NAN), Error);
}

TEST(LogFrequency, StrictlyIncreasingAgainstDirectLog) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1e6);
    for (int i = 0; i < 500; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        if (a == b) continue;
        EXPECT_LT(log_transform_frequency(a), log_transform_frequency(b));
        EXPECT_NEAR(log_transform_frequency(a), std::log(1.0 + a), 1e-9 * std::log(1.0 + a) + 1e-15);
    }
}

TEST(ParseNorms, CompleteWordBecomesEntry) {
    std::istringstream in(std::string(kNormHeader) + "dog,6,5,5,3,6.9,4,2,6,99,7\n");
    std::istream* streams[] = {&in};
    std::string names[] = {"n.csv"};
    auto lex = parse_norms(streams, names);
    ASSERT_EQ(lex.size(), 1u);
    EXPECT_DOUBLE_EQ(lex[0][Feature::Concreteness], 6.9);
    EXPECT_DOUBLE_EQ(lex[0][Feature::LogFrequency], std::log1p(99.0));
    EXPECT_DOUBLE_EQ(lex[0][Feature::Length], 3.0);
}

TEST(ParseNorms, InnerJoinDropsIncompleteWords) {
    std::istringstream glasgow(
        "word,valence,arousal,dominance,semantic_size,concreteness,gender,familiarity\n"
        "dog,6,5,5,3,6.9,4,6\ncat,6,4,5,2,6.8,3,6\n");
    std::istringstream extra("word,aoa,frequency,polysemy\ndog,2,99,7\n");
    std::istream* streams[] = {&glasgow, &extra};
    std::string names[] = {"glasgow.csv", "extra.csv"};
    Diagnostics diag;
    NormJoinStats stats;
    auto lex = parse_norms(streams, names, &diag, &stats);
    EXPECT_EQ(lex.size(), 1u);
    EXPECT_TRUE(lex.contains("dog"));
    EXPECT_EQ(stats.dropped_incomplete, 1u);
}

TEST(ParseNorms, ConflictKeepsFirstAndWarns) {
    std::istringstream in(std::string(kNormHeader) + "dog,6,5,5,3,6.9,4,2,6,99,7\ndog,1,5,5,3,6.9,4,2,6,99,7\n");
    std::istream* streams[] = {&in};
    std::string names[] = {"n.csv"};
    Diagnostics diag;
    auto lex = parse_norms(streams, names, &diag);
    EXPECT_DOUBLE_EQ(lex[0][Feature::Valence], 6.0);
    EXPECT_FALSE(diag.empty());
}

TEST(ParseNorms, MissingColumnIsFatal) {
    std::istringstream in("word,valence\ndog,6\n");
    std::istream* streams[] = {&in};
    std::string names[] = {"n.csv"};
    EXPECT_THROW(parse_norms(streams, names), Error);
}

TEST(Lexicon, ValidatesInvariants) {
    auto bad_len = testutil::entry("dog", 1);
    bad_len.features[index_of(Feature::Length)] = 4;
    EXPECT_THROW(Lexicon({bad_len}), Error);
    auto bad_poly = testutil::entry("dog", 1);
    bad_poly.features[index_of(Feature::Polysemy)] = 1.5;
    EXPECT_THROW(Lexicon({bad_poly}), Error);
    EXPECT_THROW(Lexicon({testutil::entry("dog", 1), testutil::entry("dog", 2)}), Error);
}

TEST(Intersect, DropsOutOfVocabularyResponses) {
    Lexicon lex({testutil::entry("a", 1), testutil::entry("b", 2), testutil::entry("c", 3)});
    auto d = intersect_vocabulary({{"a", {"b", "x", "c"}}}, lex);
    ASSERT_EQ(d.responses.size(), 1u);
    EXPECT_EQ(d.responses[0].responses, (std::vector<std::string>{"b", "c"}));
}

TEST(Intersect, DropsRowsWithUnknownCueOrNoResponses) {
    Lexicon lex({testutil::entry("a", 1), testutil::entry("b", 2), testutil::entry("z", 3)});
    auto d = intersect_vocabulary({{"x", {"a", "b"}}, {"a", {"q"}}, {"a", {"b"}}}, lex);
    EXPECT_EQ(d.responses.size(), 1u);
    EXPECT_EQ(d.lexicon.size(), 2u);  // z never occurs
    EXPECT_THROW(intersect_vocabulary({{"x", {"y"}}}, lex), Error);
}

TEST(Intersect, IdempotentAndClosed) {
    auto d1 = testutil::toy_dataset();
    auto d2 = intersect_vocabulary(d1.responses, d1.lexicon);
    ASSERT_EQ(d1.responses.size(), d2.responses.size());
    EXPECT_EQ(d1.lexicon.words(), d2.lexicon.words());
    for (const auto& row : d2.responses) {
        EXPECT_TRUE(d2.lexicon.contains(row.cue));
        for (const auto& r : row.responses) EXPECT_TRUE(d2.lexicon.contains(r));
    }
}
