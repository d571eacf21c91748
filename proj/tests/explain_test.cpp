#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace hypercog;

namespace {

Matrix gaussian(std::uint64_t seed, std::size_t n, std::size_t d) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    Matrix m(n, d);
    for (auto& v : m.data) v = g(rng);
    return m;
}

}  // namespace

TEST(Shapley, ConstantModelHasZeroAttributions) {
    auto bg = gaussian(1, 10, 4);
    std::vector<double> x{1, 2, 3, 4};
    auto rec = shapley_values([](std::span<const double>) { return 7.0; }, x, bg);
    for (double a : rec.attributions) EXPECT_EQ(a, 0.0);
    EXPECT_EQ(rec.base_value, 7.0);
    EXPECT_EQ(rec.prediction, 7.0);
}

TEST(Shapley, LinearModelClosedForm) {
    auto bg = gaussian(2, 25, 5);
    std::vector<double> w{0.5, -1.0, 2.0, 0.0, 3.0}, x{1, -2, 0.5, 4, -1};
    auto f = [&](std::span<const double> r) {
        double s = 0.7;
        for (std::size_t j = 0; j < 5; ++j) s += w[j] * r[j];
        return s;
    };
    auto rec = shapley_values(f, x, bg);
    for (std::size_t j = 0; j < 5; ++j) {
        double mean = 0;
        for (std::size_t r = 0; r < bg.rows; ++r) mean += bg(r, j);
        mean /= static_cast<double>(bg.rows);
        EXPECT_NEAR(rec.attributions[j], w[j] * (x[j] - mean), 1e-8);
    }
}

TEST(Shapley, ScaledLinearModelMatchesRawCoefficients) {
    auto xs = gaussian(3, 40, 3);
    for (std::size_t r = 0; r < 40; ++r) xs(r, 1) = 50 + 10 * xs(r, 1);
    std::vector<double> y;
    for (std::size_t r = 0; r < 40; ++r) y.push_back(2 * xs(r, 0) + 0.1 * xs(r, 1) - xs(r, 2));
    auto model = ScaledModel::fit(xs, y, ModelSpec{ModelFamily::Linear, {}, 0});
    std::vector<double> inst{1.0, 65.0, -0.5};
    auto rec = explain_instance(model, inst, xs);
    double beta[] = {2, 0.1, -1};
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0;
        for (std::size_t r = 0; r < 40; ++r) mean += xs(r, j);
        mean /= 40;
        EXPECT_NEAR(rec.attributions[j], beta[j] * (inst[j] - mean), 1e-8);
    }
    EXPECT_EQ(rec.feature_values, inst);
}

TEST(Shapley, SymmetryDummyAndEfficiency) {
    Matrix bg(3, 3);
    bg.data = {0, 0, 5, 1, 1, -2, 2, 2, 0.5};
    std::vector<double> x{3, 3, 9};
    auto rec = shapley_values([](std::span<const double> r) { return r[0] * r[1] + std::exp(r[0] + r[1]); }, x, bg);
    EXPECT_NEAR(rec.attributions[0], rec.attributions[1], 1e-9);
    EXPECT_EQ(rec.attributions[2], 0.0);
    EXPECT_NEAR(rec.efficiency_gap(), 0.0, 1e-9 * std::abs(rec.prediction));
}

TEST(Shapley, RejectsTooManyFeatures) {
    Matrix bg(1, kMaxShapFeatures + 1);
    std::vector<double> x(kMaxShapFeatures + 1, 0.0);
    EXPECT_THROW(shapley_values([](std::span<const double>) { return 0.0; }, x, bg), Error);
}

TEST(TreeShapley, MatchesEnumeration) {
    auto x = gaussian(4, 120, 6);
    std::vector<double> y;
    for (std::size_t r = 0; r < 120; ++r) y.push_back(x(r, 0) * x(r, 1) + std::sin(x(r, 2)) + 0.2 * x(r, 5));
    auto forest = fit_random_forest(x, y, ModelSpec{ModelFamily::RandomForest, {{"n_estimators", 8}, {"max_depth", 6}}, 1});
    auto bg = gaussian(5, 15, 6);
    auto probe = gaussian(6, 5, 6);
    for (std::size_t i = 0; i < probe.rows; ++i) {
        auto fast = tree_shapley_values(forest, probe.row(i), bg);
        auto slow = shapley_values([&](std::span<const double> r) { return forest.predict(r); }, probe.row(i), bg);
        for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(fast.attributions[j], slow.attributions[j], 1e-9);
        EXPECT_NEAR(fast.base_value, slow.base_value, 1e-9);
        EXPECT_NEAR(fast.prediction, slow.prediction, 1e-9);
        EXPECT_NEAR(fast.efficiency_gap(), 0.0, 1e-9);
    }
}

TEST(ShapSummary, PlantedSignalRanksFirst) {
    auto x = gaussian(7, 150, 5);
    std::vector<double> y;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0, 0.1);
    for (std::size_t r = 0; r < 150; ++r) y.push_back(3 * x(r, 3) + 0.3 * x(r, 1) + g(rng));
    auto data = testutil::matrix_from(x, y);
    ShapOptions opt;
    opt.background_size = 30;
    opt.max_instances = 20;
    Diagnostics diag;
    auto s = shap_summary(data, ModelSpec{ModelFamily::RandomForest, {{"n_estimators", 30}}, 2}, opt, &diag);
    EXPECT_EQ(s.order.front(), 3u);
    EXPECT_EQ(s.order[1], 1u);
    EXPECT_EQ(s.records.size(), 20u);
    EXPECT_LT(s.max_efficiency_gap, 1e-6);
    EXPECT_TRUE(diag.empty());
    std::ostringstream a, b;
    write_shap_csv(a, s);
    write_shap_summary_csv(b, s);
    EXPECT_EQ(testutil::count_lines(a.str()), 1 + 20 * 5);
    EXPECT_EQ(testutil::count_lines(b.str()), 1 + 5);
}

TEST(ShapSummary, LinearFamilyAndDeterminism) {
    auto x = gaussian(9, 60, 4);
    std::vector<double> y;
    for (std::size_t r = 0; r < 60; ++r) y.push_back(x(r, 0) - x(r, 2));
    auto data = testutil::matrix_from(x, y);
    auto a = shap_summary(data, ModelSpec{ModelFamily::Linear, {}, 0});
    auto b = shap_summary(data, ModelSpec{ModelFamily::Linear, {}, 0});
    EXPECT_EQ(a.mean_abs, b.mean_abs);
    EXPECT_LT(a.max_efficiency_gap, 1e-9);
    EXPECT_NEAR(a.mean_abs[1], 0.0, 1e-9);
}

TEST(Residuals, ReportUsesMatrixColumnsAndTarget) {
    Matrix x(3, 2);
    x.data = {1, 10, 2, 20, 3, 30};
    auto data = testutil::matrix_from(x, {5, 6, 7});
    std::vector<PredictionRecord> recs{{data.words[2], 7, 7.5, 0.5, 0}, {data.words[0], 5, 4, -1, 1}};
    auto rep = residual_report(recs, data, data.predictors[1], data.target_feature);
    ASSERT_EQ(rep.points.size(), 2u);
    EXPECT_EQ(rep.points[0].x, 30.0);
    EXPECT_EQ(rep.points[0].y, 7.0);
    EXPECT_EQ(rep.points[1].residual, -1.0);
    EXPECT_THROW(residual_report(recs, data, Feature::Gender, Feature::Aoa), Error);
    std::ostringstream out;
    write_residual_csv(out, rep);
    EXPECT_EQ(out.str().rfind("word,", 0), 0u);
}
