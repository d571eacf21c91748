#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace hypercog;

namespace {

FeatureMatrix noisy_linear(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    Matrix x(n, 3);
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < 3; ++c) x(r, c) = g(rng);
        y[r] = 1.5 * x(r, 0) - x(r, 2) + 0.3 * g(rng);
    }
    return testutil::matrix_from(x, y);
}

}  // namespace

TEST(Folds, PartitionWithBalancedSizes) {
    for (std::size_t n : {10u, 23u, 101u}) {
        auto fold = fold_assignment(n, 10, 4);
        std::vector<std::size_t> sizes(10, 0);
        for (auto f : fold) ++sizes[f];
        for (std::size_t f = 0; f < 10; ++f) EXPECT_EQ(sizes[f], n / 10 + (f < n % 10 ? 1 : 0));
    }
    EXPECT_EQ(fold_assignment(50, 5, 1), fold_assignment(50, 5, 1));
    EXPECT_NE(fold_assignment(50, 5, 1), fold_assignment(50, 5, 2));
    EXPECT_THROW(fold_assignment(5, 10, 0), Error);
    EXPECT_THROW(fold_assignment(5, 1, 0), Error);
}

TEST(CrossValidate, EveryRowPredictedOnceOutOfFold) {
    auto data = noisy_linear(57, 1);
    auto cv = cross_validate(data, ModelSpec{ModelFamily::Linear, {}, 0}, 10, 3);
    ASSERT_EQ(cv.predictions.size(), 57u);
    auto fold = fold_assignment(57, 10, 3);
    for (std::size_t i = 0; i < 57; ++i) {
        EXPECT_EQ(cv.predictions[i].word, data.words[i]);
        EXPECT_EQ(cv.predictions[i].fold, fold[i]);
        EXPECT_DOUBLE_EQ(cv.predictions[i].residual, cv.predictions[i].y_pred - cv.predictions[i].y_true);
    }
    EXPECT_EQ(cv.metrics.per_fold.size(), 10u);
    EXPECT_GT(cv.metrics.r2_mean, 0.8);
}

TEST(CrossValidate, SummaryStatistics) {
    auto data = noisy_linear(40, 2);
    auto cv = cross_validate(data, ModelSpec{ModelFamily::Linear, {}, 0}, 5, 9);
    double mean = 0, ss = 0;
    for (const auto& f : cv.metrics.per_fold) mean += f.rmse;
    mean /= 5;
    for (const auto& f : cv.metrics.per_fold) ss += (f.rmse - mean) * (f.rmse - mean);
    double sd = std::sqrt(ss / 4);
    EXPECT_NEAR(cv.metrics.rmse_mean, mean, 1e-12);
    EXPECT_NEAR(cv.metrics.rmse_std, sd, 1e-12);
    EXPECT_NEAR(cv.metrics.rmse_se, sd / std::sqrt(5.0), 1e-12);
}

TEST(CrossValidate, LeakedTargetGivesPerfectLinearFit) {
    auto data = noisy_linear(30, 5);
    data.predictors.push_back(Feature::Length);
    std::vector<double> values;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < 3; ++c) values.push_back(data.values[r * 3 + c]);
        values.push_back(data.target[r]);
    }
    data.values = values;
    auto cv = cross_validate(data, ModelSpec{ModelFamily::Linear, {}, 0}, 10, 0);
    EXPECT_NEAR(cv.metrics.r2_mean, 1.0, 1e-9);
    EXPECT_NEAR(cv.metrics.rmse_mean, 0.0, 1e-9);
}

TEST(CrossValidate, DeterministicForFixedSeeds) {
    auto data = noisy_linear(60, 7);
    ModelSpec spec{ModelFamily::RandomForest, {{"n_estimators", 10}}, 5};
    auto a = cross_validate(data, spec, 5, 1);
    auto b = cross_validate(data, spec, 5, 1);
    for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(a.predictions[i].y_pred, b.predictions[i].y_pred);
    EXPECT_THROW(cross_validate(noisy_linear(5, 1), spec, 10, 0), Error);
}

TEST(GridSearch, SingletonGridEqualsCrossValidation) {
    auto data = noisy_linear(45, 3);
    ModelSpec spec{ModelFamily::Linear, {}, 0};
    auto gs = grid_search(data, {spec}, {.k = 5, .split_seed = 2});
    auto cv = cross_validate(data, spec, 5, 2);
    EXPECT_EQ(gs.leaderboard.size(), 1u);
    EXPECT_DOUBLE_EQ(gs.best_metrics.rmse_mean, cv.metrics.rmse_mean);
    EXPECT_DOUBLE_EQ(gs.best_metrics.r2_mean, cv.metrics.r2_mean);
    EXPECT_THROW(grid_search(data, {}), Error);
}

TEST(GridSearch, LeaderboardSortedAndNested) {
    auto data = noisy_linear(50, 4);
    auto grid = expand_grid(ModelFamily::SVR, {{"C", {0.01, 1.0}}, {"epsilon", {0.0, 2.0}}});
    auto gs = grid_search(data, grid, {.k = 5, .split_seed = 1, .nested = true});
    ASSERT_EQ(gs.leaderboard.size(), 4u);
    for (std::size_t i = 1; i < gs.leaderboard.size(); ++i)
        EXPECT_GE(gs.leaderboard[i - 1].metrics.r2_mean, gs.leaderboard[i].metrics.r2_mean);
    EXPECT_EQ(gs.best.hyper, gs.leaderboard.front().spec.hyper);
    std::set<std::size_t> idx;
    for (const auto& e : gs.leaderboard) idx.insert(e.grid_index);
    EXPECT_EQ(idx.size(), 4u);
    ASSERT_TRUE(gs.nested);
    EXPECT_EQ(gs.nested->per_fold.size(), 5u);
    EXPECT_GT(gs.nested->r2_mean, 0.5);
}

TEST(Report, JsonAndCsvShape) {
    auto data = noisy_linear(20, 6);
    auto gs = grid_search(data, {ModelSpec{ModelFamily::Linear, {}, 0}}, {.k = 4});
    auto j = metrics_report(data, gs);
    EXPECT_EQ(j["family"], "linear");
    EXPECT_EQ(j["rows"], 20);
    EXPECT_TRUE(j.contains("rmse_mean"));
    EXPECT_TRUE(j.contains("r2_se"));
    std::ostringstream p, l;
    write_predictions_csv(p, gs.best_predictions);
    write_leaderboard_csv(l, gs.leaderboard);
    EXPECT_EQ(testutil::count_lines(p.str()), 21);
    EXPECT_EQ(l.str().rfind("rank,grid_index,spec", 0), 0u);
}
