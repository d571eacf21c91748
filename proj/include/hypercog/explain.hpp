#pragma once

// Exact interventional Shapley attribution and residual scatter data.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hypercog/aggregate.hpp"
#include "hypercog/detail/parallel.hpp"
#include "hypercog/detail/text.hpp"
#include "hypercog/error.hpp"
#include "hypercog/metrics.hpp"
#include "hypercog/models.hpp"
#include "hypercog/validate.hpp"

namespace hypercog {

inline constexpr std::size_t kMaxShapFeatures = 15;

struct ShapRecord {
    std::string word;
    std::vector<double> feature_values;
    std::vector<double> attributions;
    double base_value = 0.0;
    double prediction = 0.0;

    double efficiency_gap() const {
        return base_value + std::accumulate(attributions.begin(), attributions.end(), 0.0) - prediction;
    }
};

namespace detail {

/// weight[s] = s! (d-s-1)! / d!
inline std::vector<double> shapley_weights(std::size_t d) {
    std::vector<double> w(d);
    for (std::size_t s = 0; s < d; ++s)
        w[s] = std::exp(std::lgamma(double(s) + 1) + std::lgamma(double(d - s)) - std::lgamma(double(d) + 1));
    return w;
}

inline void check_shap_inputs(std::size_t d, const Matrix& background) {
    if (d > kMaxShapFeatures)
        throw Error(fmt::format("shapley: {} features exceeds the enumeration cap of {}; subsample features first", d,
                                kMaxShapFeatures));
    if (background.rows == 0) throw Error("shapley: empty background");
    if (background.cols != d) throw Error("shapley: background width mismatch");
}

inline double factorial(std::size_t n) {
    static const auto table = [] {
        std::array<double, kMaxShapFeatures + 1> t{};
        t[0] = 1.0;
        for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<double>(i);
        return t;
    }();
    return table[n];
}

/// Adds one tree's exact interventional Shapley values against one background row.
/// A leaf contributes value * [N_x in S][N_b disjoint from S]; that game has a closed form.
inline void tree_shap_single(const RegressionTree& tree, std::span<const double> x, std::span<const double> b,
                             double scale, std::span<double> phi) {
    const auto& nodes = tree.nodes();
    const std::size_t d = x.size();
    // side[j]: 0 unconstrained, 1 must come from x, 2 must come from background
    std::vector<std::uint8_t> side(d, 0);
    std::size_t a = 0, c = 0;
    auto visit = [&](auto&& self, std::int32_t id) -> void {
        const auto& nd = nodes[static_cast<std::size_t>(id)];
        if (nd.feature < 0) {
            if (a + c == 0) return;
            double wx = a > 0 ? factorial(a - 1) * factorial(c) / factorial(a + c) : 0.0;
            double wb = c > 0 ? factorial(a) * factorial(c - 1) / factorial(a + c) : 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                if (side[j] == 1) phi[j] += scale * nd.value * wx;
                if (side[j] == 2) phi[j] -= scale * nd.value * wb;
            }
            return;
        }
        auto f = static_cast<std::size_t>(nd.feature);
        bool x_left = x[f] <= nd.threshold, b_left = b[f] <= nd.threshold;
        for (int dir = 0; dir < 2; ++dir) {
            bool left = dir == 0;
            bool xs = x_left == left, bs = b_left == left;
            std::int32_t child = left ? nd.left : nd.right;
            if (xs && bs) {
                self(self, child);
            } else if (xs) {
                if (side[f] == 2) continue;
                bool fresh = side[f] == 0;
                if (fresh) side[f] = 1, ++a;
                self(self, child);
                if (fresh) side[f] = 0, --a;
            } else if (bs) {
                if (side[f] == 1) continue;
                bool fresh = side[f] == 0;
                if (fresh) side[f] = 2, ++c;
                self(self, child);
                if (fresh) side[f] = 0, --c;
            }
        }
    };
    visit(visit, 0);
}

}  // namespace detail

/// Exact Shapley values by enumerating all 2^d coalitions. v(S) averages f over
/// background rows with the features in S taken from `instance`.
template <typename Predict>
ShapRecord shapley_values(Predict&& f, std::span<const double> instance, const Matrix& background) {
    const std::size_t d = instance.size();
    detail::check_shap_inputs(d, background);
    const std::size_t coalitions = std::size_t{1} << d;
    std::vector<double> v(coalitions, 0.0);
    std::vector<double> mixed(d);
    for (std::size_t r = 0; r < background.rows; ++r) {
        auto b = background.row(r);
        for (std::size_t mask = 0; mask < coalitions; ++mask) {
            for (std::size_t j = 0; j < d; ++j) mixed[j] = (mask >> j) & 1U ? instance[j] : b[j];
            v[mask] += f(std::span<const double>(mixed));
        }
    }
    for (auto& val : v) val /= static_cast<double>(background.rows);

    auto w = detail::shapley_weights(d);
    ShapRecord rec;
    rec.feature_values.assign(instance.begin(), instance.end());
    rec.attributions.assign(d, 0.0);
    for (std::size_t mask = 0; mask < coalitions; ++mask) {
        auto s = static_cast<std::size_t>(__builtin_popcountll(mask));
        for (std::size_t i = 0; i < d; ++i)
            if (!((mask >> i) & 1U)) rec.attributions[i] += w[s] * (v[mask | (std::size_t{1} << i)] - v[mask]);
    }
    rec.base_value = v.front();
    rec.prediction = v.back();
    return rec;
}

/// Same quantity as shapley_values for a forest, computed leaf by leaf.
inline ShapRecord tree_shapley_values(const ForestModel& forest, std::span<const double> instance,
                                      const Matrix& background) {
    const std::size_t d = instance.size();
    detail::check_shap_inputs(d, background);
    ShapRecord rec;
    rec.feature_values.assign(instance.begin(), instance.end());
    rec.attributions.assign(d, 0.0);
    const double scale = 1.0 / static_cast<double>(forest.trees.size() * background.rows);
    double base = 0.0, pred = 0.0;
    for (const auto& tree : forest.trees) {
        double px = tree.predict(instance);
        for (std::size_t r = 0; r < background.rows; ++r) {
            auto b = background.row(r);
            base += scale * tree.predict(b);
            pred += scale * px;
            detail::tree_shap_single(tree, instance, b, scale, rec.attributions);
        }
    }
    rec.base_value = base;
    rec.prediction = pred;
    return rec;
}

/// Attribution for a standardized model; inputs are raw rows. Shapley values are
/// unchanged by the per-feature scaling, so the work happens in scaled space.
inline ShapRecord explain_instance(const ScaledModel& model, std::span<const double> instance,
                                   const Matrix& background) {
    Matrix bg = model.scaler.apply(background);
    std::vector<double> z(instance.size());
    model.scaler.apply_row(instance, z);
    ShapRecord rec;
    if (const auto* forest = std::get_if<ForestModel>(&model.model))
        rec = tree_shapley_values(*forest, z, bg);
    else
        rec = shapley_values([&](std::span<const double> row) { return predict(model.model, row); }, z, bg);
    rec.feature_values.assign(instance.begin(), instance.end());
    return rec;
}

struct ShapOptions {
    double train_fraction = 0.8;
    std::size_t background_size = 100;
    std::size_t max_instances = 0;  // 0 = every test row
    std::uint64_t seed = 0;
};

struct ShapSummary {
    std::vector<std::string> feature_names;
    std::vector<double> mean_abs;
    std::vector<std::size_t> order;  // feature indices, most important first
    std::vector<ShapRecord> records;
    ModelSpec spec;
    double max_efficiency_gap = 0.0;
};

inline ShapSummary summarize_shap(std::vector<ShapRecord> records, std::vector<std::string> names) {
    ShapSummary s;
    s.feature_names = std::move(names);
    const std::size_t d = s.feature_names.size();
    s.mean_abs.assign(d, 0.0);
    for (const auto& r : records) {
        for (std::size_t j = 0; j < d; ++j) s.mean_abs[j] += std::abs(r.attributions[j]);
        s.max_efficiency_gap = std::max(s.max_efficiency_gap, std::abs(r.efficiency_gap()));
    }
    if (!records.empty())
        for (auto& m : s.mean_abs) m /= static_cast<double>(records.size());
    s.order.resize(d);
    std::iota(s.order.begin(), s.order.end(), std::size_t{0});
    std::stable_sort(s.order.begin(), s.order.end(), [&](auto a, auto b) { return s.mean_abs[a] > s.mean_abs[b]; });
    s.records = std::move(records);
    return s;
}

/// Single seeded train/test split; fits `spec` on train and explains test rows
/// against a background sampled from train.
inline ShapSummary shap_summary(const FeatureMatrix& data, const ModelSpec& spec, const ShapOptions& options = {},
                                Diagnostics* diag = nullptr) {
    if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0))
        throw Error("shap_summary: train_fraction must lie in (0, 1)");
    if (options.background_size == 0) throw Error("shap_summary: background_size must be positive");
    const std::size_t n = data.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(detail::derive_seed(options.seed, 0));
    std::shuffle(order.begin(), order.end(), rng);
    auto n_train = static_cast<std::size_t>(std::floor(options.train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n) throw Error("shap_summary: dataset too small for the requested split");
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(test.begin(), test.end());
    if (options.max_instances > 0 && test.size() > options.max_instances) test.resize(options.max_instances);

    Matrix x = to_matrix(data);
    Matrix xtr = x.select_rows(train);
    std::vector<double> ytr;
    for (auto i : train) ytr.push_back(data.target[i]);
    auto model = ScaledModel::fit(xtr, ytr, spec, diag);

    std::vector<std::size_t> bg_idx = train;
    std::mt19937_64 bg_rng(detail::derive_seed(options.seed, 1));
    std::shuffle(bg_idx.begin(), bg_idx.end(), bg_rng);
    if (bg_idx.size() > options.background_size) bg_idx.resize(options.background_size);
    std::sort(bg_idx.begin(), bg_idx.end());
    Matrix background = x.select_rows(bg_idx);

    std::vector<ShapRecord> records(test.size());
    detail::parallel_for(test.size(), [&](std::size_t t) {
        records[t] = explain_instance(model, x.row(test[t]), background);
        records[t].word = data.words[test[t]];
    });
    auto summary = summarize_shap(std::move(records), data.column_names());
    summary.spec = spec;
    if (summary.max_efficiency_gap > 1e-6)
        warn(diag, fmt::format("shapley: efficiency gap {} exceeds 1e-6", summary.max_efficiency_gap));
    return summary;
}

inline void write_shap_csv(std::ostream& out, const ShapSummary& s) {
    out << "word,feature,feature_value,attribution\n";
    for (const auto& r : s.records)
        for (std::size_t j = 0; j < s.feature_names.size(); ++j)
            out << detail::csv_field(r.word) << ',' << s.feature_names[j] << ','
                << detail::format_double(r.feature_values[j]) << ',' << detail::format_double(r.attributions[j])
                << '\n';
}

inline void write_shap_summary_csv(std::ostream& out, const ShapSummary& s) {
    out << "feature,mean_abs_attribution,rank\n";
    for (std::size_t rank = 0; rank < s.order.size(); ++rank) {
        auto j = s.order[rank];
        out << s.feature_names[j] << ',' << detail::format_double(s.mean_abs[j]) << ',' << rank + 1 << '\n';
    }
}

struct ResidualPoint {
    std::string word;
    double x = 0.0;
    double y = 0.0;
    double residual = 0.0;
};

struct ResidualScatter {
    std::string feature_x;
    std::string feature_y;
    std::vector<ResidualPoint> points;
};

/// Feature values come from the aggregated matrix; the target column is
/// available under its own name.
inline ResidualScatter residual_report(std::span<const PredictionRecord> records, const FeatureMatrix& data,
                                       Feature fx, Feature fy) {
    auto column_of = [&](Feature f) -> std::function<double(std::size_t)> {
        for (std::size_t c = 0; c < data.cols(); ++c)
            if (data.predictors[c] == f) return [&data, c](std::size_t r) { return data.at(r, c); };
        if (f == data.target_feature) return [&data](std::size_t r) { return data.target[r]; };
        throw Error("residual_report: feature '" + std::string(feature_name(f)) + "' not in the matrix");
    };
    auto gx = column_of(fx), gy = column_of(fy);
    std::map<std::string, std::size_t, std::less<>> row_of;
    for (std::size_t r = 0; r < data.rows(); ++r) row_of.emplace(data.words[r], r);
    ResidualScatter out{std::string(feature_name(fx)), std::string(feature_name(fy)), {}};
    for (const auto& rec : records) {
        auto it = row_of.find(rec.word);
        if (it == row_of.end()) throw Error("residual_report: word '" + rec.word + "' missing from the matrix");
        out.points.push_back({rec.word, gx(it->second), gy(it->second), rec.y_pred - rec.y_true});
    }
    return out;
}

inline void write_residual_csv(std::ostream& out, const ResidualScatter& s) {
    out << "word," << s.feature_x << ',' << s.feature_y << ",residual\n";
    for (const auto& p : s.points)
        out << detail::csv_field(p.word) << ',' << detail::format_double(p.x) << ',' << detail::format_double(p.y)
            << ',' << detail::format_double(p.residual) << '\n';
}

}  // namespace hypercog
