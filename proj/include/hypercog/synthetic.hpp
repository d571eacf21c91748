#pragma once

// Planted-cluster association data: words in the same cluster share a latent
// value that drives every feature, and cues mostly answer inside their cluster.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hypercog/error.hpp"
#include "hypercog/features.hpp"
#include "hypercog/lexicon.hpp"

namespace hypercog {

struct SyntheticOptions {
    std::size_t words = 600;
    std::size_t clusters = 12;
    std::size_t rows_per_cue = 2;
    std::size_t responses_per_row = 3;
    double homophily = 0.85;      // probability a response comes from the cue's cluster
    double within_spread = 0.35;  // latent spread inside a cluster
    double noise = 0.6;           // per-feature idiosyncratic noise
    std::uint64_t seed = 7;
};

struct SyntheticDataset {
    Lexicon lexicon;
    ResponseTable responses;
    std::vector<std::size_t> cluster_of;  // aligned with lexicon order
};

inline SyntheticDataset make_synthetic(const SyntheticOptions& opt = {}) {
    if (opt.words < 4 || opt.clusters == 0 || opt.clusters > opt.words)
        throw Error("synthetic: need at least 4 words and 1 <= clusters <= words");
    if (opt.responses_per_row == 0 || opt.responses_per_row >= opt.words)
        throw Error("synthetic: responses_per_row out of range");
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> center(opt.clusters);
    for (std::size_t k = 0; k < opt.clusters; ++k)
        center[k] = -2.0 + 4.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(opt.clusters);

    // Loadings of each feature on the latent value; concreteness is the most direct readout.
    const FeatureVector loading{0.9, -0.5, 0.6, -0.7, 1.0, 0.4, -0.9, 0.7, 0.6, 0.8, -0.8};
    std::set<std::string> used;
    std::vector<LexiconEntry> entries;
    std::vector<std::size_t> cluster;
    for (std::size_t i = 0; i < opt.words; ++i) {
        std::size_t k = i % opt.clusters;
        double latent = center[k] + opt.within_spread * gauss(rng);
        auto len = static_cast<std::size_t>(
            std::clamp<long>(std::lround(6.0 + loading[index_of(Feature::Length)] * latent + 0.8 * gauss(rng)), 3, 12));
        std::string word;
        do {
            word.clear();
            for (std::size_t c = 0; c < len; ++c) word += static_cast<char>('a' + static_cast<int>(unit(rng) * 26) % 26);
        } while (!used.insert(word).second);
        LexiconEntry e{word, {}};
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            e.features[f] = 5.0 + 1.2 * loading[f] * latent + opt.noise * gauss(rng);
        e.features[index_of(Feature::LogFrequency)] =
            std::max(0.0, 3.0 + 0.8 * loading[index_of(Feature::LogFrequency)] * latent + opt.noise * gauss(rng));
        e.features[index_of(Feature::Polysemy)] = static_cast<double>(
            std::max<long>(0, std::lround(4.0 + loading[index_of(Feature::Polysemy)] * latent + opt.noise * gauss(rng))));
        e.features[index_of(Feature::Length)] = static_cast<double>(len);
        entries.push_back(std::move(e));
        cluster.push_back(k);
    }

    std::vector<std::vector<std::size_t>> members(opt.clusters);
    for (std::size_t i = 0; i < opt.words; ++i) members[cluster[i]].push_back(i);

    SyntheticDataset out;
    std::uniform_int_distribution<std::size_t> any(0, opt.words - 1);
    for (std::size_t cue = 0; cue < opt.words; ++cue) {
        const auto& own = members[cluster[cue]];
        for (std::size_t r = 0; r < opt.rows_per_cue; ++r) {
            ResponseRow row{entries[cue].word, {}};
            std::set<std::size_t> picked{cue};
            std::size_t guard = 0;
            while (row.responses.size() < opt.responses_per_row && guard++ < 100 * opt.responses_per_row) {
                std::size_t w = unit(rng) < opt.homophily && own.size() > 1
                                    ? own[std::uniform_int_distribution<std::size_t>(0, own.size() - 1)(rng)]
                                    : any(rng);
                if (!picked.insert(w).second) continue;
                row.responses.push_back(entries[w].word);
            }
            out.responses.push_back(std::move(row));
        }
    }

    std::vector<std::pair<std::string, std::size_t>> order;
    for (std::size_t i = 0; i < opt.words; ++i) order.emplace_back(entries[i].word, cluster[i]);
    std::sort(order.begin(), order.end());
    for (auto& [w, k] : order) out.cluster_of.push_back(k);
    out.lexicon = Lexicon(std::move(entries));
    return out;
}

}  // namespace hypercog
