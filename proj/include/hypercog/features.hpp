#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace hypercog {

enum class Feature : std::size_t {
    Valence,
    Arousal,
    Dominance,
    SemanticSize,
    Concreteness,
    Gender,
    Aoa,
    Familiarity,
    LogFrequency,
    Polysemy,
    Length,
};

inline constexpr std::size_t kFeatureCount = 11;

using FeatureVector = std::array<double, kFeatureCount>;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "valence",     "arousal", "dominance",   "semantic_size", "concreteness", "gender",
    "aoa",         "familiarity", "log_frequency", "polysemy", "length",
};

inline constexpr std::size_t index_of(Feature f) { return static_cast<std::size_t>(f); }

inline constexpr std::string_view feature_name(Feature f) { return kFeatureNames[index_of(f)]; }

inline constexpr Feature feature_at(std::size_t i) { return static_cast<Feature>(i); }

inline std::optional<Feature> parse_feature(std::string_view name) {
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        if (kFeatureNames[i] == name) return feature_at(i);
    // common aliases used by norm files and configs
    if (name == "age_of_acquisition") return Feature::Aoa;
    if (name == "size") return Feature::SemanticSize;
    if (name == "frequency_log" || name == "logfreq") return Feature::LogFrequency;
    return std::nullopt;
}

}  // namespace hypercog
