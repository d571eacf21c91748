#pragma once

// Weighted CART regression tree (variance reduction splits).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "hypercog/error.hpp"
#include "hypercog/metrics.hpp"

namespace hypercog {

struct TreeParams {
    std::size_t max_depth = 0;          // 0 = unbounded
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;       // 0 = all columns
};

class RegressionTree {
public:
    struct Node {
        std::int32_t feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0;
        double weight = 0.0;
    };

    /// Rows with zero weight are ignored. `rng` drives per-node feature sampling.
    static RegressionTree fit(const Matrix& x, std::span<const double> y, std::span<const double> weights,
                              const TreeParams& params, std::mt19937_64& rng) {
        if (x.rows != y.size() || weights.size() != y.size()) throw Error("tree: input size mismatch");
        if (params.min_samples_leaf < 1 || params.min_samples_split < 2)
            throw Error("tree: min_samples_leaf >= 1 and min_samples_split >= 2 required");
        RegressionTree tree;
        tree.features_ = x.cols;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (weights[i] > 0.0) idx.push_back(i);
        if (idx.empty()) throw Error("tree: no training rows with positive weight");
        Builder b{x, y, weights, params, rng, tree.nodes_};
        b.build(idx, 0);
        return tree;
    }

    static RegressionTree fit(const Matrix& x, std::span<const double> y, const TreeParams& params,
                              std::mt19937_64& rng) {
        std::vector<double> w(y.size(), 1.0);
        return fit(x, y, w, params, rng);
    }

    double predict(std::span<const double> row) const {
        std::size_t n = 0;
        while (nodes_[n].feature >= 0)
            n = static_cast<std::size_t>(row[static_cast<std::size_t>(nodes_[n].feature)] <= nodes_[n].threshold
                                             ? nodes_[n].left
                                             : nodes_[n].right);
        return nodes_[n].value;
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t feature_count() const { return features_; }

    std::size_t depth() const { return depth_from(0); }

private:
    std::size_t depth_from(std::size_t n) const {
        if (nodes_[n].feature < 0) return 0;
        return 1 + std::max(depth_from(static_cast<std::size_t>(nodes_[n].left)),
                            depth_from(static_cast<std::size_t>(nodes_[n].right)));
    }

    struct Builder {
        const Matrix& x;
        std::span<const double> y;
        std::span<const double> w;
        const TreeParams& params;
        std::mt19937_64& rng;
        std::vector<Node>& nodes;

        std::int32_t build(std::vector<std::size_t>& idx, std::size_t depth) {
            double sw = 0.0, swy = 0.0;
            for (auto i : idx) {
                sw += w[i];
                swy += w[i] * y[i];
            }
            auto id = static_cast<std::int32_t>(nodes.size());
            nodes.push_back(Node{-1, 0.0, -1, -1, swy / sw, sw});

            bool pure = std::all_of(idx.begin(), idx.end(), [&](auto i) { return y[i] == y[idx.front()]; });
            if (pure || idx.size() < params.min_samples_split || idx.size() < 2 * params.min_samples_leaf ||
                (params.max_depth > 0 && depth >= params.max_depth))
                return id;

            auto split = best_split(idx, sw, swy);
            if (!split.valid) return id;

            std::vector<std::size_t> left, right;
            for (auto i : idx) (x(i, split.feature) <= split.threshold ? left : right).push_back(i);
            idx.clear();
            idx.shrink_to_fit();
            auto l = build(left, depth + 1);
            auto r = build(right, depth + 1);
            nodes[static_cast<std::size_t>(id)].feature = static_cast<std::int32_t>(split.feature);
            nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
            nodes[static_cast<std::size_t>(id)].left = l;
            nodes[static_cast<std::size_t>(id)].right = r;
            return id;
        }

        struct Split {
            bool valid = false;
            std::size_t feature = 0;
            double threshold = 0.0;
            double score = 0.0;
        };

        Split best_split(const std::vector<std::size_t>& idx, double sw, double swy) {
            const std::size_t d = x.cols;
            std::size_t wanted = params.max_features == 0 ? d : std::min(params.max_features, d);
            std::vector<std::size_t> order(d);
            std::iota(order.begin(), order.end(), std::size_t{0});
            if (wanted < d) std::shuffle(order.begin(), order.end(), rng);

            Split best;
            double parent = swy * swy / sw;
            std::vector<std::size_t> sorted = idx;
            std::size_t visited = 0;
            for (std::size_t k = 0; k < d; ++k) {
                // Keep drawing past `wanted` only while no valid split exists.
                if (visited >= wanted && best.valid) break;
                std::size_t f = order[k];
                std::sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return x(a, f) < x(b, f); });
                if (x(sorted.front(), f) == x(sorted.back(), f)) continue;  // constant column here
                ++visited;
                double lw = 0.0, lwy = 0.0;
                const std::size_t n = sorted.size();
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    auto r = sorted[i];
                    lw += w[r];
                    lwy += w[r] * y[r];
                    double xv = x(r, f), xn = x(sorted[i + 1], f);
                    if (xv == xn) continue;
                    if (i + 1 < params.min_samples_leaf || n - i - 1 < params.min_samples_leaf) continue;
                    double rw = sw - lw, rwy = swy - lwy;
                    if (lw <= 0.0 || rw <= 0.0) continue;
                    double score = lwy * lwy / lw + rwy * rwy / rw - parent;
                    if (!best.valid || score > best.score + 1e-12 * std::abs(best.score)) {
                        double thr = 0.5 * (xv + xn);
                        if (!(thr < xn)) thr = xv;
                        best = Split{true, f, thr, score};
                    }
                }
            }
            return best;
        }
    };

    std::vector<Node> nodes_;
    std::size_t features_ = 0;
};

}  // namespace hypercog
