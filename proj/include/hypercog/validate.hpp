#pragma once

// Shuffled k-fold cross-validation, grid search and their report writers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "hypercog/aggregate.hpp"
#include "hypercog/detail/parallel.hpp"
#include "hypercog/detail/text.hpp"
#include "hypercog/error.hpp"
#include "hypercog/metrics.hpp"
#include "hypercog/models.hpp"

namespace hypercog {

struct FoldMetrics {
    double rmse = 0.0;
    std::optional<double> r2;
};

struct RegressionMetrics {
    double rmse_mean = 0.0;
    double rmse_se = 0.0;
    double rmse_std = 0.0;
    double r2_mean = 0.0;
    double r2_se = 0.0;
    double r2_std = 0.0;
    std::vector<FoldMetrics> per_fold;
};

struct PredictionRecord {
    std::string word;
    double y_true = 0.0;
    double y_pred = 0.0;
    double residual = 0.0;  // y_pred - y_true
    std::size_t fold = 0;
};

struct CrossValidation {
    RegressionMetrics metrics;
    std::vector<PredictionRecord> predictions;  // in dataset row order
};

inline Matrix to_matrix(const FeatureMatrix& m) {
    Matrix x(m.rows(), m.cols());
    x.data = m.values;
    return x;
}

inline FeatureMatrix subset(const FeatureMatrix& m, std::span<const std::size_t> rows) {
    FeatureMatrix out;
    out.predictors = m.predictors;
    out.strategy = m.strategy;
    out.target_feature = m.target_feature;
    for (auto r : rows) {
        out.words.push_back(m.words[r]);
        auto row = m.row(r);
        out.values.insert(out.values.end(), row.begin(), row.end());
        out.target.push_back(m.target[r]);
    }
    return out;
}

/// Fold id per row: a seeded shuffle cut into k contiguous blocks, the first
/// n % k blocks one row larger.
inline std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error("cross-validation: k must be >= 2");
    if (k > n) throw Error(fmt::format("cross-validation: k={} exceeds {} rows", k, n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(detail::derive_seed(seed, 0));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> fold(n);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        std::size_t size = n / k + (f < n % k ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j) fold[order[pos++]] = f;
    }
    return fold;
}

namespace detail {

inline void summarize(RegressionMetrics& m, Diagnostics* diag) {
    auto stats = [](const std::vector<double>& v, double& mean, double& sd, double& se) {
        const auto k = static_cast<double>(v.size());
        mean = std::accumulate(v.begin(), v.end(), 0.0) / k;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd = v.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
        se = sd / std::sqrt(k);
    };
    std::vector<double> rmse, r2;
    for (const auto& f : m.per_fold) {
        rmse.push_back(f.rmse);
        if (f.r2) r2.push_back(*f.r2);
    }
    stats(rmse, m.rmse_mean, m.rmse_std, m.rmse_se);
    if (r2.size() < m.per_fold.size())
        warn(diag, fmt::format("cross-validation: R^2 undefined on {} fold(s) with constant target",
                               m.per_fold.size() - r2.size()));
    if (r2.empty()) {
        m.r2_mean = m.r2_std = m.r2_se = std::nan("");
        return;
    }
    stats(r2, m.r2_mean, m.r2_std, m.r2_se);
}

}  // namespace detail

inline CrossValidation cross_validate(const FeatureMatrix& data, const ModelSpec& spec, std::size_t k = 10,
                                      std::uint64_t split_seed = 0, Diagnostics* diag = nullptr) {
    const std::size_t n = data.rows();
    auto fold = fold_assignment(n, k, split_seed);
    Matrix x = to_matrix(data);

    CrossValidation cv;
    cv.predictions.resize(n);
    cv.metrics.per_fold.resize(k);
    std::vector<Diagnostics> fold_diag(k);
    detail::parallel_for(k, [&](std::size_t f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(i);
        Matrix xtr = x.select_rows(train), xte = x.select_rows(test);
        std::vector<double> ytr, yte;
        for (auto i : train) ytr.push_back(data.target[i]);
        for (auto i : test) yte.push_back(data.target[i]);
        auto scaled = standardize_fit_apply(xtr, xte);
        auto fold_spec = spec;
        fold_spec.seed = detail::derive_seed(spec.seed, f);
        auto model = fit_model(scaled.train, ytr, fold_spec, &fold_diag[f]);
        auto pred = predict_all(model, scaled.test);
        for (std::size_t j = 0; j < test.size(); ++j)
            cv.predictions[test[j]] = {data.words[test[j]], yte[j], pred[j], pred[j] - yte[j], f};
        cv.metrics.per_fold[f] = {rmse(yte, pred), yte.size() >= 2 ? r2(yte, pred) : std::nullopt};
    });
    for (auto& d : fold_diag)
        for (auto& w : d.warnings) warn(diag, std::move(w));
    detail::summarize(cv.metrics, diag);
    return cv;
}

struct LeaderboardEntry {
    std::size_t grid_index = 0;
    ModelSpec spec;
    RegressionMetrics metrics;
};

struct GridSearchResult {
    ModelSpec best;
    RegressionMetrics best_metrics;
    std::vector<PredictionRecord> best_predictions;
    std::vector<LeaderboardEntry> leaderboard;  // best first
    std::optional<RegressionMetrics> nested;    // outer-fold scores when nested CV was requested
};

struct GridSearchOptions {
    std::size_t k = 10;
    std::uint64_t split_seed = 0;
    bool nested = false;
};

namespace detail {

inline bool ranks_before(const LeaderboardEntry& a, const LeaderboardEntry& b) {
    auto key = [](double v) { return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v; };
    double ra = key(a.metrics.r2_mean), rb = key(b.metrics.r2_mean);
    if (ra != rb) return ra > rb;
    if (a.metrics.rmse_mean != b.metrics.rmse_mean) return a.metrics.rmse_mean < b.metrics.rmse_mean;
    return a.grid_index < b.grid_index;
}

}  // namespace detail

inline GridSearchResult grid_search(const FeatureMatrix& data, const Grid& grid, const GridSearchOptions& options = {},
                                    Diagnostics* diag = nullptr) {
    if (grid.empty()) throw Error("grid search: empty grid");
    GridSearchResult result;
    std::vector<std::vector<PredictionRecord>> preds(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        auto cv = cross_validate(data, grid[g], options.k, options.split_seed, diag);
        result.leaderboard.push_back({g, grid[g], cv.metrics});
        preds[g] = std::move(cv.predictions);
    }
    std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(), detail::ranks_before);
    const auto& top = result.leaderboard.front();
    result.best = top.spec;
    result.best_metrics = top.metrics;
    result.best_predictions = std::move(preds[top.grid_index]);

    if (options.nested && grid.size() > 1) {
        auto fold = fold_assignment(data.rows(), options.k, detail::derive_seed(options.split_seed, 1));
        RegressionMetrics outer;
        for (std::size_t f = 0; f < options.k; ++f) {
            std::vector<std::size_t> train, test;
            for (std::size_t i = 0; i < data.rows(); ++i) (fold[i] == f ? test : train).push_back(i);
            auto inner_data = subset(data, train);
            GridSearchOptions inner{std::min(options.k, train.size()), detail::derive_seed(options.split_seed, 100 + f),
                                    false};
            auto inner_best = grid_search(inner_data, grid, inner, nullptr).best;
            auto xtr = to_matrix(inner_data);
            auto test_data = subset(data, test);
            auto model = ScaledModel::fit(xtr, inner_data.target, inner_best, diag);
            std::vector<double> pred;
            for (std::size_t j = 0; j < test_data.rows(); ++j) pred.push_back(model.predict(test_data.row(j)));
            outer.per_fold.push_back({rmse(test_data.target, pred),
                                      test.size() >= 2 ? r2(test_data.target, pred) : std::nullopt});
        }
        detail::summarize(outer, diag);
        result.nested = outer;
    } else if (options.nested) {
        result.nested = result.best_metrics;
    }
    return result;
}

inline nlohmann::ordered_json metrics_json(const RegressionMetrics& m) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
    nlohmann::ordered_json j;
    j["rmse_mean"] = num(m.rmse_mean);
    j["rmse_se"] = num(m.rmse_se);
    j["rmse_std"] = num(m.rmse_std);
    j["r2_mean"] = num(m.r2_mean);
    j["r2_se"] = num(m.r2_se);
    j["r2_std"] = num(m.r2_std);
    auto folds = nlohmann::ordered_json::array();
    for (std::size_t f = 0; f < m.per_fold.size(); ++f) {
        nlohmann::ordered_json row;
        row["fold"] = f;
        row["rmse"] = num(m.per_fold[f].rmse);
        row["r2"] = m.per_fold[f].r2 ? num(*m.per_fold[f].r2) : nlohmann::ordered_json();
        folds.push_back(row);
    }
    j["per_fold"] = folds;
    return j;
}

inline nlohmann::ordered_json spec_json(const ModelSpec& spec) {
    nlohmann::ordered_json j;
    j["family"] = std::string(family_name(spec.family));
    nlohmann::ordered_json h = nlohmann::ordered_json::object();
    for (const auto& [k, v] : spec.hyper) h[k] = v;
    j["hyperparameters"] = h;
    j["seed"] = spec.seed;
    return j;
}

/// Metrics report: strategy, target, family, spec, then the metric fields.
inline nlohmann::ordered_json metrics_report(const FeatureMatrix& data, const GridSearchResult& result,
                                             const nlohmann::ordered_json& config = nullptr) {
    nlohmann::ordered_json j;
    j["strategy"] = strategy_tag(data.strategy);
    j["target"] = std::string(feature_name(data.target_feature));
    j["family"] = std::string(family_name(result.best.family));
    j["spec"] = spec_json(result.best);
    auto metrics = metrics_json(result.best_metrics);
    for (auto& [k, v] : metrics.items()) j[k] = v;
    if (result.nested) j["nested"] = metrics_json(*result.nested);
    j["rows"] = data.rows();
    j["grid_size"] = result.leaderboard.size();
    if (!config.is_null()) j["config"] = config;
    return j;
}

inline void write_predictions_csv(std::ostream& out, std::span<const PredictionRecord> records) {
    out << "word,y_true,y_pred,residual,fold\n";
    for (const auto& r : records)
        out << detail::csv_field(r.word) << ',' << detail::format_double(r.y_true) << ','
            << detail::format_double(r.y_pred) << ',' << detail::format_double(r.residual) << ',' << r.fold << '\n';
}

inline void write_leaderboard_csv(std::ostream& out, std::span<const LeaderboardEntry> board) {
    out << "rank,grid_index,spec,rmse_mean,rmse_se,r2_mean,r2_se\n";
    for (std::size_t i = 0; i < board.size(); ++i) {
        const auto& e = board[i];
        out << i + 1 << ',' << e.grid_index << ',' << detail::csv_field(e.spec.describe()) << ','
            << detail::format_double(e.metrics.rmse_mean) << ',' << detail::format_double(e.metrics.rmse_se) << ','
            << detail::format_double(e.metrics.r2_mean) << ',' << detail::format_double(e.metrics.r2_se) << '\n';
    }
}

}  // namespace hypercog
