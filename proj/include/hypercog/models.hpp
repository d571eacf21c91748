#pragma once

// The four regression families: OLS, random forest, AdaBoost.R2 and linear SVR.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "hypercog/detail/parallel.hpp"
#include "hypercog/detail/text.hpp"
#include "hypercog/error.hpp"
#include "hypercog/metrics.hpp"
#include "hypercog/tree.hpp"

namespace hypercog {

enum class ModelFamily { Linear, RandomForest, AdaBoostR2, SVR };

inline constexpr ModelFamily kAllFamilies[] = {ModelFamily::Linear, ModelFamily::RandomForest,
                                               ModelFamily::AdaBoostR2, ModelFamily::SVR};

inline std::string_view family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::Linear: return "linear";
        case ModelFamily::RandomForest: return "random_forest";
        case ModelFamily::AdaBoostR2: return "adaboost_r2";
        case ModelFamily::SVR: return "svr";
    }
    return "?";
}

inline ModelFamily parse_family(std::string_view name) {
    auto n = detail::normalize_token(name);
    if (n == "linear" || n == "ols") return ModelFamily::Linear;
    if (n == "random_forest" || n == "rf" || n == "randomforest") return ModelFamily::RandomForest;
    if (n == "adaboost_r2" || n == "adaboost" || n == "adaboostr2") return ModelFamily::AdaBoostR2;
    if (n == "svr" || n == "svm") return ModelFamily::SVR;
    throw Error("unknown model family '" + std::string(name) + "'");
}

/// max_features encoding: 0 = all columns, -1 = sqrt(cols), n >= 1 = n columns.
inline constexpr double kMaxFeaturesAll = 0.0;
inline constexpr double kMaxFeaturesSqrt = -1.0;

using Hyperparameters = std::map<std::string, double>;

struct ModelSpec {
    ModelFamily family = ModelFamily::Linear;
    Hyperparameters hyper;
    std::uint64_t seed = 0;

    double get(const std::string& key, double fallback) const {
        auto it = hyper.find(key);
        return it == hyper.end() ? fallback : it->second;
    }

    std::string describe() const {
        std::string out(family_name(family));
        for (const auto& [k, v] : hyper) out += fmt::format(" {}={}", k, detail::format_double(v));
        return out;
    }
};

using Grid = std::vector<ModelSpec>;

/// Cartesian product of the value lists, last key varying fastest.
inline Grid expand_grid(ModelFamily family, const std::vector<std::pair<std::string, std::vector<double>>>& axes,
                        std::uint64_t seed = 0) {
    Grid out{ModelSpec{family, {}, seed}};
    for (const auto& [key, values] : axes) {
        if (values.empty()) throw Error("grid axis '" + key + "' has no values");
        Grid next;
        for (const auto& spec : out)
            for (double v : values) {
                auto s = spec;
                s.hyper[key] = v;
                next.push_back(std::move(s));
            }
        out = std::move(next);
    }
    return out;
}

inline Grid default_grid(ModelFamily family, std::uint64_t seed = 0) {
    switch (family) {
        case ModelFamily::Linear: return {ModelSpec{family, {}, seed}};
        case ModelFamily::RandomForest:
            return expand_grid(family,
                               {{"n_estimators", {100, 300}},
                                {"max_features", {kMaxFeaturesSqrt, kMaxFeaturesAll}},
                                {"max_depth", {8, 16, 0}},
                                {"min_samples_split", {2, 8}},
                                {"min_samples_leaf", {1, 4}}},
                               seed);
        case ModelFamily::AdaBoostR2:
            return expand_grid(family, {{"n_estimators", {50, 100}}, {"learning_rate", {0.5, 1.0}}, {"max_depth", {1, 3}}},
                               seed);
        case ModelFamily::SVR:
            return expand_grid(family, {{"C", {0.1, 1.0, 10.0}}, {"epsilon", {0.0, 0.1, 0.5}}}, seed);
    }
    throw Error("default_grid: unknown family");
}

struct LinearModel {
    std::vector<double> coef;
    double intercept = 0.0;

    double predict(std::span<const double> row) const {
        double s = intercept;
        for (std::size_t c = 0; c < coef.size(); ++c) s += coef[c] * row[c];
        return s;
    }
};

struct ForestModel {
    std::vector<RegressionTree> trees;

    double predict(std::span<const double> row) const {
        double s = 0.0;
        for (const auto& t : trees) s += t.predict(row);
        return s / static_cast<double>(trees.size());
    }
};

struct BoostModel {
    std::vector<RegressionTree> estimators;
    std::vector<double> weights;

    double predict(std::span<const double> row) const {
        std::vector<std::pair<double, double>> votes;
        votes.reserve(estimators.size());
        for (std::size_t i = 0; i < estimators.size(); ++i) votes.emplace_back(estimators[i].predict(row), weights[i]);
        return weighted_median(votes);
    }

    /// Smallest prediction whose cumulative weight reaches half the total.
    static double weighted_median(std::vector<std::pair<double, double>> votes) {
        if (votes.empty()) throw Error("weighted_median: no votes");
        std::stable_sort(votes.begin(), votes.end(), [](auto& a, auto& b) { return a.first < b.first; });
        double total = 0.0;
        for (auto& v : votes) total += v.second;
        double cum = 0.0;
        for (auto& v : votes) {
            cum += v.second;
            if (cum >= 0.5 * total) return v.first;
        }
        return votes.back().first;
    }
};

struct SvrModel {
    std::vector<double> coef;
    double intercept = 0.0;
    std::size_t epochs = 0;
    bool converged = false;

    double predict(std::span<const double> row) const {
        double s = intercept;
        for (std::size_t c = 0; c < coef.size(); ++c) s += coef[c] * row[c];
        return s;
    }
};

using Model = std::variant<LinearModel, ForestModel, BoostModel, SvrModel>;

inline double predict(const Model& m, std::span<const double> row) {
    return std::visit([&](const auto& model) { return model.predict(row); }, m);
}

inline std::vector<double> predict_all(const Model& m, const Matrix& x) {
    std::vector<double> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict(m, x.row(r));
    return out;
}

namespace detail {

inline void check_xy(const Matrix& x, std::span<const double> y) {
    if (x.rows != y.size()) throw Error("fit: row count mismatch");
    if (x.rows == 0) throw Error("fit: empty training set");
}

inline std::size_t as_count(const ModelSpec& spec, const std::string& key, double fallback, double min_value) {
    double v = spec.get(key, fallback);
    if (!std::isfinite(v) || v < min_value || v != std::floor(v))
        throw Error(fmt::format("{}: invalid {}={}", family_name(spec.family), key, v));
    return static_cast<std::size_t>(v);
}

inline void check_keys(const ModelSpec& spec, std::initializer_list<std::string_view> allowed) {
    for (const auto& [k, v] : spec.hyper)
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw Error(fmt::format("{}: unknown hyperparameter '{}'", family_name(spec.family), k));
}

inline TreeParams tree_params(const ModelSpec& spec, std::size_t cols, double default_depth) {
    TreeParams p;
    p.max_depth = as_count(spec, "max_depth", default_depth, 0);
    p.min_samples_split = as_count(spec, "min_samples_split", 2, 2);
    p.min_samples_leaf = as_count(spec, "min_samples_leaf", 1, 1);
    double mf = spec.get("max_features", kMaxFeaturesAll);
    if (mf == kMaxFeaturesAll)
        p.max_features = 0;
    else if (mf == kMaxFeaturesSqrt)
        p.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(cols))));
    else if (mf >= 1 && mf == std::floor(mf))
        p.max_features = std::min(cols, static_cast<std::size_t>(mf));
    else
        throw Error(fmt::format("{}: invalid max_features={}", family_name(spec.family), mf));
    return p;
}

}  // namespace detail

inline LinearModel fit_linear(const Matrix& x, std::span<const double> y, Diagnostics* diag = nullptr) {
    detail::check_xy(x, y);
    const auto n = static_cast<Eigen::Index>(x.rows);
    const auto d = static_cast<Eigen::Index>(x.cols);
    Eigen::MatrixXd a(n, d + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) a(r, c) = x(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        a(r, d) = 1.0;
        b(r) = y[static_cast<std::size_t>(r)];
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    if (cod.rank() < d + 1)
        warn(diag, fmt::format("linear: design matrix rank {} < {}, using minimum-norm solution", cod.rank(), d + 1));
    Eigen::VectorXd beta = cod.solve(b);
    LinearModel m;
    m.coef.assign(beta.data(), beta.data() + d);
    m.intercept = beta(d);
    return m;
}

inline ForestModel fit_random_forest(const Matrix& x, std::span<const double> y, const ModelSpec& spec) {
    detail::check_xy(x, y);
    detail::check_keys(spec, {"n_estimators", "max_features", "max_depth", "min_samples_split", "min_samples_leaf",
                              "bootstrap"});
    auto n_trees = detail::as_count(spec, "n_estimators", 100, 1);
    auto params = detail::tree_params(spec, x.cols, 0);
    bool bootstrap = spec.get("bootstrap", 1.0) != 0.0;
    ForestModel forest;
    forest.trees.resize(n_trees);
    detail::parallel_for(n_trees, [&](std::size_t t) {
        std::mt19937_64 rng(detail::derive_seed(spec.seed, t));
        std::vector<double> w(x.rows, 1.0);
        if (bootstrap) {
            std::fill(w.begin(), w.end(), 0.0);
            std::uniform_int_distribution<std::size_t> pick(0, x.rows - 1);
            for (std::size_t i = 0; i < x.rows; ++i) w[pick(rng)] += 1.0;
        }
        forest.trees[t] = RegressionTree::fit(x, y, w, params, rng);
    });
    return forest;
}

inline BoostModel fit_adaboost_r2(const Matrix& x, std::span<const double> y, const ModelSpec& spec,
                                  Diagnostics* diag = nullptr) {
    detail::check_xy(x, y);
    detail::check_keys(spec, {"n_estimators", "learning_rate", "max_depth", "min_samples_split", "min_samples_leaf",
                              "max_features"});
    auto rounds = detail::as_count(spec, "n_estimators", 50, 1);
    double lr = spec.get("learning_rate", 1.0);
    if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(fmt::format("adaboost_r2: invalid learning_rate={}", lr));
    auto params = detail::tree_params(spec, x.cols, 1);
    if (params.max_depth == 0) throw Error("adaboost_r2: base learner needs max_depth >= 1");

    const std::size_t n = x.rows;
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::mt19937_64 rng(detail::derive_seed(spec.seed, 0));
    BoostModel model;
    std::vector<double> loss(n);
    for (std::size_t round = 0; round < rounds; ++round) {
        auto tree = RegressionTree::fit(x, y, w, params, rng);
        double max_err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            loss[i] = std::abs(tree.predict(x.row(i)) - y[i]);
            max_err = std::max(max_err, loss[i]);
        }
        if (max_err <= 0.0) {
            model.estimators.push_back(std::move(tree));
            model.weights.push_back(1.0);
            break;
        }
        double avg = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            loss[i] /= max_err;
            avg += w[i] * loss[i];
        }
        if (avg >= 0.5) {
            if (model.estimators.empty()) {
                model.estimators.push_back(std::move(tree));
                model.weights.push_back(1.0);
            }
            break;
        }
        double beta = avg / (1.0 - avg);
        double alpha = avg > 0.0 ? lr * std::log(1.0 / beta) : 1.0;
        model.estimators.push_back(std::move(tree));
        model.weights.push_back(alpha);
        if (avg <= 0.0) break;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= std::pow(beta, (1.0 - loss[i]) * lr);
            total += w[i];
        }
        if (!(total > 0.0) || !std::isfinite(total)) {
            warn(diag, fmt::format("adaboost_r2: degenerate sample weights after round {}, stopping", round + 1));
            break;
        }
        for (auto& v : w) v /= total;
    }
    return model;
}

/// Epsilon-insensitive linear SVR, L1 loss, solved by dual coordinate descent.
/// The intercept is an extra constant feature and is regularized with the weights.
inline SvrModel fit_svr(const Matrix& x, std::span<const double> y, const ModelSpec& spec,
                        Diagnostics* diag = nullptr) {
    detail::check_xy(x, y);
    detail::check_keys(spec, {"C", "epsilon", "tol", "max_epochs"});
    double c_reg = spec.get("C", 1.0);
    double eps = spec.get("epsilon", 0.0);
    double tol = spec.get("tol", 1e-6);
    auto max_epochs = detail::as_count(spec, "max_epochs", 5000, 1);
    if (!(c_reg > 0.0) || !std::isfinite(c_reg)) throw Error(fmt::format("svr: C must be > 0, got {}", c_reg));
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error(fmt::format("svr: epsilon must be >= 0, got {}", eps));

    const std::size_t n = x.rows, d = x.cols;
    std::vector<double> w(d + 1, 0.0), beta(n, 0.0), qd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.0;
        for (double v : x.row(i)) s += v * v;
        qd[i] = s;
    }
    auto dot = [&](std::size_t i) {
        double s = w[d];
        auto r = x.row(i);
        for (std::size_t c = 0; c < d; ++c) s += w[c] * r[c];
        return s;
    };
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(detail::derive_seed(spec.seed, 0));

    SvrModel m;
    for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double worst = 0.0;
        for (auto i : order) {
            double g = dot(i) - y[i];
            double gp = g + eps, gn = g - eps, h = qd[i];
            double viol = 0.0;
            if (beta[i] == 0.0)
                viol = gp < 0.0 ? -gp : (gn > 0.0 ? gn : 0.0);
            else if (beta[i] >= c_reg)
                viol = gp > 0.0 ? gp : 0.0;
            else if (beta[i] <= -c_reg)
                viol = gn < 0.0 ? -gn : 0.0;
            else
                viol = beta[i] > 0.0 ? std::abs(gp) : std::abs(gn);
            worst = std::max(worst, viol);

            double z;
            if (gp < h * beta[i])
                z = -gp / h;
            else if (gn > h * beta[i])
                z = -gn / h;
            else
                z = -beta[i];
            if (std::abs(z) < 1e-14) continue;
            double old = beta[i];
            beta[i] = std::clamp(beta[i] + z, -c_reg, c_reg);
            double delta = beta[i] - old;
            auto r = x.row(i);
            for (std::size_t c = 0; c < d; ++c) w[c] += delta * r[c];
            w[d] += delta;
        }
        m.epochs = epoch + 1;
        if (worst < tol) {
            m.converged = true;
            break;
        }
    }
    if (!m.converged) warn(diag, fmt::format("svr: no convergence after {} epochs (C={}, epsilon={})", m.epochs, c_reg, eps));
    m.coef.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
    m.intercept = w[d];
    return m;
}

inline Model fit_model(const Matrix& x, std::span<const double> y, const ModelSpec& spec,
                       Diagnostics* diag = nullptr) {
    switch (spec.family) {
        case ModelFamily::Linear:
            detail::check_keys(spec, {});
            return fit_linear(x, y, diag);
        case ModelFamily::RandomForest: return fit_random_forest(x, y, spec);
        case ModelFamily::AdaBoostR2: return fit_adaboost_r2(x, y, spec, diag);
        case ModelFamily::SVR: return fit_svr(x, y, spec, diag);
    }
    throw Error("fit_model: unknown family");
}

/// A model trained on standardized inputs, applied to raw rows.
struct ScaledModel {
    Scaler scaler;
    Model model;

    static ScaledModel fit(const Matrix& x, std::span<const double> y, const ModelSpec& spec,
                           Diagnostics* diag = nullptr) {
        auto scaler = Scaler::fit(x);
        return {scaler, fit_model(scaler.apply(x), y, spec, diag)};
    }

    double predict(std::span<const double> row) const {
        std::vector<double> z(row.size());
        scaler.apply_row(row, z);
        return hypercog::predict(model, z);
    }
};

}  // namespace hypercog
