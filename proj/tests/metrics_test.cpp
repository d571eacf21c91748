#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hypercog/metrics.hpp"

using namespace hypercog;

TEST(Metrics, BrainMindExample) {
    std::vector<double> truth{6.4, 2.5}, pred{6.5, 4.5};
    EXPECT_NEAR(rss(truth, pred), 4.01, 1e-12);
    EXPECT_NEAR(rmse(truth, pred), std::sqrt(2.005), 1e-12);
    EXPECT_NEAR(tss(truth), 7.605, 1e-12);
    EXPECT_NEAR(*r2(truth, pred), 1.0 - 4.01 / 7.605, 1e-12);
    EXPECT_NEAR(*r2(truth, pred), 0.47272, 1e-5);
}

TEST(Metrics, BetterMindPredictionImprovesBoth) {
    std::vector<double> truth{6.4, 2.5}, a{6.5, 4.5}, b{6.5, 2.8};
    EXPECT_LT(rmse(truth, b), rmse(truth, a));
    EXPECT_GT(*r2(truth, b), *r2(truth, a));
}

TEST(Metrics, Identities) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> y(50), p(50);
    for (auto& v : y) v = n(rng);
    for (auto& v : p) v = n(rng);
    EXPECT_DOUBLE_EQ(rmse(y, y), 0.0);
    EXPECT_DOUBLE_EQ(*r2(y, y), 1.0);
    double mean = 0;
    for (double v : y) mean += v;
    std::vector<double> flat(50, mean / 50);
    EXPECT_NEAR(*r2(y, flat), 0.0, 1e-12);
    EXPECT_NEAR(rmse(y, p) * rmse(y, p) * 50, rss(y, p), 1e-9);
    EXPECT_FALSE(r2(std::vector<double>{1, 1}, std::vector<double>{1, 2}));
    EXPECT_FALSE(r2(std::vector<double>{1}, std::vector<double>{1}));
    EXPECT_THROW(rss(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
    EXPECT_THROW(tss(std::vector<double>{}), Error);
}

TEST(Scaler, TrainStatisticsOnly) {
    Matrix train(4, 2), test(1, 2);
    double vals[] = {1, 5, 2, 5, 3, 5, 4, 5};
    train.data.assign(vals, vals + 8);
    test.data = {10, 7};
    auto s = standardize_fit_apply(train, test);
    double sd = std::sqrt(1.25);
    EXPECT_NEAR(s.scaler.mean[0], 2.5, 1e-12);
    EXPECT_NEAR(s.scaler.scale[0], sd, 1e-12);
    EXPECT_DOUBLE_EQ(s.scaler.scale[1], 1.0);
    EXPECT_NEAR(s.test(0, 0), (10 - 2.5) / sd, 1e-12);
    EXPECT_NEAR(s.test(0, 1), 2.0, 1e-12);
    double m = 0;
    for (std::size_t r = 0; r < 4; ++r) m += s.train(r, 0);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_THROW(Scaler::fit(Matrix(0, 2)), Error);
}
