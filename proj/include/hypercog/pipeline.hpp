#pragma once

// End-to-end run: ingest, structures, aggregation, regression, explanation,
// compartments, reports and figures.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "hypercog/aggregate.hpp"
#include "hypercog/community.hpp"
#include "hypercog/compartments.hpp"
#include "hypercog/detail/digest.hpp"
#include "hypercog/detail/text.hpp"
#include "hypercog/error.hpp"
#include "hypercog/explain.hpp"
#include "hypercog/lemon.hpp"
#include "hypercog/lexicon.hpp"
#include "hypercog/models.hpp"
#include "hypercog/network.hpp"
#include "hypercog/svg.hpp"
#include "hypercog/validate.hpp"

namespace hypercog {

inline constexpr const char* kOutputDirEnv = "HYPERCOG_OUTPUT_DIR";

struct RunConfig {
    std::vector<std::string> responses;
    std::vector<std::string> norms;
    std::string cover;  // optional Lemon cover file replacing detection
    Construction construction = Construction::R123;
    std::vector<Strategy> strategies{Strategy{StrategyKind::HypergraphStar, false}};
    bool gap = false;
    Feature target = Feature::Concreteness;
    std::vector<ModelFamily> models{ModelFamily::RandomForest};
    std::string grid = "default";  // default | fast
    std::size_t k = 10;
    bool nested_cv = false;
    double alpha = 0.8;
    double gamma = 1.0;
    std::size_t lemon_max_size = 4;
    std::size_t lemon_min_size = 3;
    bool dedup = false;
    bool include_target_predictor = false;
    std::uint64_t split_seed = 0;
    std::uint64_t model_seed = 0;
    std::uint64_t null_seed = 0;
    std::string explain = "auto";  // auto | none | <family>
    std::size_t shap_background = 100;
    std::size_t shap_max_instances = 0;
    bool compartments = true;
    std::size_t null_permutations = 50;
    std::vector<Feature> compartment_features{Feature::Aoa, Feature::Valence, Feature::Concreteness};
    std::vector<std::pair<Feature, Feature>> residual_pairs{{Feature::Aoa, Feature::Valence}};
    std::string response_delimiter = "tab";
    std::string cue_column = "cue";
    std::vector<std::string> response_columns{"R1", "R2", "R3"};
    std::string output_dir = "hypercog_out";
};

/// Every key accepted by config files and mirrored by CLI flags.
inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "responses", "norms", "cover", "construction", "strategy", "gap", "target", "models", "grid", "k",
        "nested_cv", "alpha", "gamma", "lemon_max_size", "lemon_min_size", "dedup", "include_target_predictor",
        "seed", "split_seed", "model_seed", "null_seed", "explain", "shap_background", "shap_max_instances",
        "compartments", "null_permutations", "compartment_features", "residual_pairs", "response_delimiter",
        "cue_column", "response_columns", "output_dir"};
    return keys;
}

namespace detail {

inline bool parse_bool(std::string_view key, std::string_view v) {
    auto n = normalize_token(v);
    if (n == "1" || n == "true" || n == "yes" || n == "on") return true;
    if (n == "0" || n == "false" || n == "no" || n == "off") return false;
    throw Error(fmt::format("config: {} expects a boolean, got '{}'", key, v));
}

inline std::uint64_t parse_uint(std::string_view key, std::string_view v, std::uint64_t min_value = 0) {
    std::uint64_t out = 0;
    auto t = trim(v);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || p != t.data() + t.size() || out < min_value)
        throw Error(fmt::format("config: {} expects an integer >= {}, got '{}'", key, min_value, v));
    return out;
}

inline double parse_real(std::string_view key, std::string_view v) {
    auto d = parse_double(trim(v));
    if (!d) throw Error(fmt::format("config: {} expects a number, got '{}'", key, v));
    return *d;
}

inline Feature parse_feature_or_throw(std::string_view key, std::string_view v) {
    auto f = parse_feature(normalize_token(v));
    if (!f) throw Error(fmt::format("config: {} has unknown feature '{}'", key, v));
    return *f;
}

}  // namespace detail

/// Applies one key=value setting; all enumerations are validated here.
inline void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
    using namespace detail;
    std::string k = normalize_token(key);
    for (auto& ch : k)
        if (ch == '-') ch = '_';
    std::string v(trim(value));
    if (k == "responses") c.responses = split_list(v);
    else if (k == "norms") c.norms = split_list(v);
    else if (k == "cover") c.cover = v;
    else if (k == "construction") c.construction = parse_construction(v);
    else if (k == "strategy" || k == "strategies") {
        c.strategies.clear();
        for (const auto& s : split_list(v)) c.strategies.push_back(parse_strategy(normalize_token(s)));
        if (c.strategies.empty()) throw Error("config: strategy list is empty");
    } else if (k == "gap") c.gap = parse_bool(k, v);
    else if (k == "target") c.target = parse_feature_or_throw(k, v);
    else if (k == "models" || k == "model") {
        c.models.clear();
        auto n = normalize_token(v);
        if (n == "all") c.models.assign(std::begin(kAllFamilies), std::end(kAllFamilies));
        else if (n != "none")
            for (const auto& m : split_list(v)) c.models.push_back(parse_family(m));
    } else if (k == "grid") {
        auto n = normalize_token(v);
        if (n != "default" && n != "fast") throw Error("config: grid must be 'default' or 'fast'");
        c.grid = n;
    } else if (k == "k") c.k = parse_uint(k, v, 2);
    else if (k == "nested_cv") c.nested_cv = parse_bool(k, v);
    else if (k == "alpha") {
        c.alpha = parse_real(k, v);
        if (c.alpha < 0.0 || c.alpha > 1.0) throw Error("config: alpha must lie in [0, 1]");
    } else if (k == "gamma") {
        c.gamma = parse_real(k, v);
        if (!(c.gamma > 0.0)) throw Error("config: gamma must be positive");
    } else if (k == "lemon_max_size") c.lemon_max_size = parse_uint(k, v, 1);
    else if (k == "lemon_min_size") c.lemon_min_size = parse_uint(k, v, 1);
    else if (k == "dedup") c.dedup = parse_bool(k, v);
    else if (k == "include_target_predictor") c.include_target_predictor = parse_bool(k, v);
    else if (k == "seed") c.split_seed = c.model_seed = c.null_seed = parse_uint(k, v);
    else if (k == "split_seed") c.split_seed = parse_uint(k, v);
    else if (k == "model_seed") c.model_seed = parse_uint(k, v);
    else if (k == "null_seed") c.null_seed = parse_uint(k, v);
    else if (k == "explain") {
        auto n = normalize_token(v);
        if (n != "auto" && n != "none") n = std::string(family_name(parse_family(n)));
        c.explain = n;
    } else if (k == "shap_background") c.shap_background = parse_uint(k, v, 1);
    else if (k == "shap_max_instances") c.shap_max_instances = parse_uint(k, v);
    else if (k == "compartments") c.compartments = parse_bool(k, v);
    else if (k == "null_permutations") c.null_permutations = parse_uint(k, v, 1);
    else if (k == "compartment_features") {
        c.compartment_features.clear();
        for (const auto& f : split_list(v)) c.compartment_features.push_back(parse_feature_or_throw(k, f));
    } else if (k == "residual_pairs") {
        c.residual_pairs.clear();
        for (const auto& p : split_list(v)) {
            auto parts = split_list(p, ':');
            if (parts.size() != 2) throw Error("config: residual_pairs entries look like 'aoa:valence'");
            c.residual_pairs.emplace_back(parse_feature_or_throw(k, parts[0]), parse_feature_or_throw(k, parts[1]));
        }
    } else if (k == "response_delimiter") {
        auto n = normalize_token(v);
        if (n != "tab" && n != "comma") throw Error("config: response_delimiter must be 'tab' or 'comma'");
        c.response_delimiter = n;
    } else if (k == "cue_column") c.cue_column = v;
    else if (k == "response_columns") c.response_columns = split_list(v);
    else if (k == "output_dir") c.output_dir = v;
    else throw Error("config: unknown key '" + std::string(key) + "'");
}

/// Reads key=value lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_pairs(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        std::string_view s = detail::trim(std::string_view(line).substr(0, hash));
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string_view::npos) throw Error(fmt::format("config: line {} lacks '='", lineno));
        out.emplace_back(std::string(detail::trim(s.substr(0, eq))), std::string(detail::trim(s.substr(eq + 1))));
    }
    return out;
}

inline void apply_config_file(RunConfig& c, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open " + path.string());
    for (const auto& [k, v] : read_config_pairs(in)) apply_setting(c, k, v);
}

/// Output directory from the environment, if set.
inline void apply_environment(RunConfig& c) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') c.output_dir = dir;
}

inline std::vector<Strategy> effective_strategies(const RunConfig& c) {
    auto out = c.strategies;
    if (c.gap)
        for (auto& s : out)
            if (s.kind != StrategyKind::NonNetwork) s.gap = true;
    return out;
}

/// Key=value form of the config; reading it back reproduces the run.
inline std::vector<std::pair<std::string, std::string>> config_pairs(const RunConfig& c, bool with_output_dir) {
    auto join = [](const auto& items, auto&& fn) {
        std::string out;
        for (const auto& it : items) {
            if (!out.empty()) out += ',';
            out += fn(it);
        }
        return out;
    };
    std::vector<std::pair<std::string, std::string>> p;
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    p.emplace_back("responses", join(c.responses, [](auto& s) { return s; }));
    p.emplace_back("norms", join(c.norms, [](auto& s) { return s; }));
    p.emplace_back("cover", c.cover);
    p.emplace_back("construction", std::string(construction_name(c.construction)));
    p.emplace_back("strategy", join(c.strategies, [](auto& s) { return strategy_tag(s); }));
    p.emplace_back("gap", b(c.gap));
    p.emplace_back("target", std::string(feature_name(c.target)));
    p.emplace_back("models", c.models.empty() ? "none" : join(c.models, [](auto m) { return std::string(family_name(m)); }));
    p.emplace_back("grid", c.grid);
    p.emplace_back("k", std::to_string(c.k));
    p.emplace_back("nested_cv", b(c.nested_cv));
    p.emplace_back("alpha", detail::format_double(c.alpha));
    p.emplace_back("gamma", detail::format_double(c.gamma));
    p.emplace_back("lemon_max_size", std::to_string(c.lemon_max_size));
    p.emplace_back("lemon_min_size", std::to_string(c.lemon_min_size));
    p.emplace_back("dedup", b(c.dedup));
    p.emplace_back("include_target_predictor", b(c.include_target_predictor));
    p.emplace_back("split_seed", std::to_string(c.split_seed));
    p.emplace_back("model_seed", std::to_string(c.model_seed));
    p.emplace_back("null_seed", std::to_string(c.null_seed));
    p.emplace_back("explain", c.explain);
    p.emplace_back("shap_background", std::to_string(c.shap_background));
    p.emplace_back("shap_max_instances", std::to_string(c.shap_max_instances));
    p.emplace_back("compartments", b(c.compartments));
    p.emplace_back("null_permutations", std::to_string(c.null_permutations));
    p.emplace_back("compartment_features",
                   join(c.compartment_features, [](auto f) { return std::string(feature_name(f)); }));
    p.emplace_back("residual_pairs", join(c.residual_pairs, [](auto& pr) {
                       return fmt::format("{}:{}", feature_name(pr.first), feature_name(pr.second));
                   }));
    p.emplace_back("response_delimiter", c.response_delimiter);
    p.emplace_back("cue_column", c.cue_column);
    p.emplace_back("response_columns", join(c.response_columns, [](auto& s) { return s; }));
    if (with_output_dir) p.emplace_back("output_dir", c.output_dir);
    return p;
}

inline nlohmann::ordered_json config_json(const RunConfig& c, bool with_output_dir = false) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (auto& [k, v] : config_pairs(c, with_output_dir)) j[k] = v;
    return j;
}

inline void write_config(std::ostream& out, const RunConfig& c) {
    for (auto& [k, v] : config_pairs(c, true)) out << k << " = " << v << '\n';
}

inline Grid grid_for(ModelFamily family, const RunConfig& c) {
    if (c.grid == "default") return default_grid(family, c.model_seed);
    switch (family) {
        case ModelFamily::Linear: return default_grid(family, c.model_seed);
        case ModelFamily::RandomForest:
            return expand_grid(family, {{"n_estimators", {50}}, {"max_features", {kMaxFeaturesSqrt}}, {"max_depth", {8, 0}}},
                               c.model_seed);
        case ModelFamily::AdaBoostR2:
            return expand_grid(family, {{"n_estimators", {50}}, {"learning_rate", {1.0}}, {"max_depth", {3}}},
                               c.model_seed);
        case ModelFamily::SVR:
            return expand_grid(family, {{"C", {1.0}}, {"epsilon", {0.1}}}, c.model_seed);
    }
    throw Error("grid_for: unknown family");
}

struct StrategyResult {
    Strategy strategy;
    ModelFamily family = ModelFamily::Linear;
    ModelSpec best;
    RegressionMetrics metrics;
    std::optional<RegressionMetrics> nested;
};

struct RunManifest {
    nlohmann::ordered_json config;
    std::vector<SourceDigest> inputs;
    std::vector<std::pair<std::string, double>> timings;
    std::vector<std::string> artifacts;
    std::vector<std::string> warnings;
    std::vector<StrategyResult> results;
    nlohmann::ordered_json structures = nlohmann::ordered_json::object();
    nlohmann::ordered_json compartments = nlohmann::ordered_json::object();
    bool complete = false;
    std::string failure;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["config"] = config;
        auto ins = nlohmann::ordered_json::array();
        for (const auto& d : inputs) ins.push_back({{"path", d.path}, {"sha256", d.sha256}});
        j["inputs"] = ins;
        j["structures"] = structures;
        auto res = nlohmann::ordered_json::array();
        for (const auto& r : results)
            res.push_back({{"strategy", strategy_tag(r.strategy)},
                           {"family", std::string(family_name(r.family))},
                           {"spec", r.best.describe()},
                           {"rmse_mean", r.metrics.rmse_mean},
                           {"r2_mean", std::isfinite(r.metrics.r2_mean) ? nlohmann::ordered_json(r.metrics.r2_mean)
                                                                       : nlohmann::ordered_json()}});
        j["results"] = res;
        auto t = nlohmann::ordered_json::object();
        for (const auto& [k, v] : timings) t[k] = v;
        j["timings_seconds"] = t;
        j["artifacts"] = artifacts;
        j["warnings"] = warnings;
        j["complete"] = complete;
        if (!failure.empty()) j["failure"] = failure;
        return j;
    }
};

namespace detail {

class Stopwatch {
public:
    explicit Stopwatch(RunManifest& m) : manifest_(m), start_(std::chrono::steady_clock::now()) {}
    void lap(std::string name) {
        auto now = std::chrono::steady_clock::now();
        manifest_.timings.emplace_back(std::move(name), std::chrono::duration<double>(now - start_).count());
        start_ = now;
    }

private:
    RunManifest& manifest_;
    std::chrono::steady_clock::time_point start_;
};

class Emitter {
public:
    Emitter(std::filesystem::path root, RunManifest& m) : root_(std::move(root)), manifest_(m) {
        std::filesystem::create_directories(root_);
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        std::ofstream out(root_ / name, std::ios::binary);
        if (!out) throw Error("cannot write " + (root_ / name).string());
        body(out);
        if (!out) throw Error("write failed for " + (root_ / name).string());
        manifest_.artifacts.push_back(name);
    }

    void write_unlisted(const std::string& name, const std::string& text) {
        std::ofstream out(root_ / name, std::ios::binary);
        out << text;
        if (!out) throw Error("write failed for " + (root_ / name).string());
    }

    void json(const std::string& name, const nlohmann::ordered_json& j) {
        write(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    }

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    RunManifest& manifest_;
};

inline std::string file_tag(const Strategy& s) {
    auto t = strategy_tag(s);
    for (auto& c : t)
        if (c == ':') c = '-';
    return t;
}

inline bool needs_graph(StrategyKind k) {
    return k == StrategyKind::EgoNetwork || k == StrategyKind::LouvainCommunity || k == StrategyKind::EvaCommunity ||
           k == StrategyKind::LemonCover;
}

}  // namespace detail

struct LoadedData {
    FilteredDataset data;
    std::vector<SourceDigest> inputs;
};

inline LoadedData load_inputs(const RunConfig& c, Diagnostics* diag) {
    if (c.responses.empty()) throw Error("config: at least one responses file is required");
    if (c.norms.empty()) throw Error("config: at least one norms file is required");
    LoadedData out;
    ResponseFormat format;
    format.delimiter = c.response_delimiter == "comma" ? ',' : '\t';
    format.cue_column = c.cue_column;
    format.response_columns = c.response_columns;
    ResponseTable responses;
    for (const auto& p : c.responses) {
        auto part = parse_responses(std::filesystem::path(p), format, diag);
        responses.insert(responses.end(), part.begin(), part.end());
        out.inputs.push_back({p, detail::sha256_file(p)});
    }
    std::vector<std::filesystem::path> norm_paths(c.norms.begin(), c.norms.end());
    auto lexicon = parse_norms(norm_paths, diag);
    for (const auto& p : c.norms) out.inputs.push_back({p, detail::sha256_file(p)});
    out.data = intersect_vocabulary(responses, lexicon, diag);
    out.data.provenance = out.inputs;
    return out;
}

namespace detail {

inline std::vector<ScatterPoint> moment_points(std::span<const ContextMoments> m) {
    std::vector<ScatterPoint> pts;
    for (const auto& x : m) pts.push_back({x.mean, x.std, static_cast<double>(x.size)});
    return pts;
}

}  // namespace detail

/// Runs every configured strategy and family; writes all artifacts under the
/// output directory. On failure the partial manifest is written before rethrowing.
inline RunManifest run_pipeline(const RunConfig& config) {
    RunManifest manifest;
    manifest.config = config_json(config, true);
    Diagnostics diag;
    detail::Emitter emit(config.output_dir, manifest);
    auto finish = [&] {
        manifest.warnings = diag.warnings;
        manifest.artifacts.push_back("manifest.json");
        emit.write_unlisted("manifest.json", manifest.to_json().dump(2) + "\n");
    };
    try {
        const auto report_config = config_json(config, false);
        const auto strategies = effective_strategies(config);
        if (config.k < 2) throw Error("config: k must be >= 2");
        detail::Stopwatch clock(manifest);

        auto loaded = load_inputs(config, &diag);
        manifest.inputs = loaded.inputs;
        const auto& data = loaded.data;
        const Lexicon& lex = data.lexicon;
        clock.lap("ingest");

        bool want_graph = config.compartments;
        bool want_hyper = config.compartments;
        for (const auto& s : strategies) {
            want_graph = want_graph || detail::needs_graph(s.kind);
            want_hyper = want_hyper || s.kind == StrategyKind::HypergraphStar;
        }
        std::optional<PairwiseGraph> graph;
        std::optional<Hypergraph> hyper;
        manifest.structures["vocabulary"] = lex.size();
        manifest.structures["rows"] = data.responses.size();
        if (want_graph) {
            graph = build_pairwise(data, config.construction);
            manifest.structures["graph"] = {{"construction", std::string(construction_name(config.construction))},
                                            {"nodes", graph->active_node_count()},
                                            {"edges", graph->edge_count()}};
            emit.write("graph_edges.tsv", [&](std::ostream& o) { write_edge_list(o, *graph); });
        }
        if (want_hyper) {
            hyper = build_hypergraph(data, config.dedup);
            manifest.structures["hypergraph"] = {{"nodes", hyper->active_node_count()},
                                                 {"hyperedges", hyper->edge_count()},
                                                 {"dedup", config.dedup}};
        }
        clock.lap("structures");

        std::optional<Partition> louvain_part, eva_part;
        std::optional<Cover> cover;
        for (const auto& s : strategies) {
            if (s.kind == StrategyKind::LouvainCommunity && !louvain_part) {
                louvain_part = louvain(*graph, config.gamma, config.model_seed);
                manifest.structures["louvain_communities"] = louvain_part->community_count();
                emit.write("communities_louvain.csv",
                           [&](std::ostream& o) { write_partition(o, *louvain_part, graph->vocabulary()); });
            }
            if (s.kind == StrategyKind::EvaCommunity && !eva_part) {
                auto attrs = quantile_bins(lex);
                eva_part = eva(*graph, attrs, config.alpha, config.gamma, config.model_seed);
                manifest.structures["eva_communities"] = eva_part->community_count();
                emit.write("communities_eva.csv",
                           [&](std::ostream& o) { write_partition(o, *eva_part, graph->vocabulary()); });
            }
            if (s.kind == StrategyKind::LemonCover && !cover) {
                if (!config.cover.empty()) {
                    std::ifstream in(config.cover);
                    if (!in) throw Error("cannot open cover file " + config.cover);
                    cover = read_cover(in, graph->vocabulary());
                    manifest.inputs.push_back({config.cover, detail::sha256_file(config.cover)});
                } else {
                    LemonParams params;
                    params.max_size = config.lemon_max_size;
                    params.min_size = std::min(config.lemon_min_size, config.lemon_max_size);
                    cover = lemon_cover(*graph, params, &diag);
                }
                manifest.structures["lemon_communities"] = cover->size();
                emit.write("cover_lemon.tsv", [&](std::ostream& o) { write_cover(o, *cover, graph->vocabulary()); });
            }
        }
        clock.lap("communities");

        auto source_for = [&](const Strategy& s) -> ContextSource {
            switch (s.kind) {
                case StrategyKind::NonNetwork: return std::monostate{};
                case StrategyKind::EgoNetwork: return std::cref(*graph);
                case StrategyKind::LouvainCommunity: return std::cref(*louvain_part);
                case StrategyKind::EvaCommunity: return std::cref(*eva_part);
                case StrategyKind::LemonCover: return std::cref(*cover);
                case StrategyKind::HypergraphStar: return std::cref(*hyper);
            }
            return std::monostate{};
        };

        for (const auto& s : strategies) {
            const auto tag = detail::file_tag(s);
            AggregationStats agg;
            MatrixOptions mopt{config.include_target_predictor};
            auto matrix = build_feature_matrix(lex, source_for(s), s, config.target, mopt, &agg);
            if (agg.fallbacks > 0)
                diag.warn(fmt::format("aggregate[{}]: {} cell(s) fell back to the word's own value", tag, agg.fallbacks));
            emit.write("features_" + tag + ".csv", [&](std::ostream& o) { write_feature_matrix(o, matrix); });
            clock.lap("aggregate:" + tag);

            std::optional<ModelFamily> explain_family;
            if (config.explain == "auto") {
                for (auto m : config.models)
                    if (m == ModelFamily::RandomForest) explain_family = m;
                if (!explain_family && !config.models.empty()) explain_family = config.models.front();
            } else if (config.explain != "none") {
                explain_family = parse_family(config.explain);
            }

            for (auto family : config.models) {
                const std::string stem = tag + "_" + std::string(family_name(family));
                GridSearchOptions gopt{config.k, config.split_seed, config.nested_cv};
                auto result = grid_search(matrix, grid_for(family, config), gopt, &diag);
                emit.json("metrics_" + stem + ".json", metrics_report(matrix, result, report_config));
                emit.write("predictions_" + stem + ".csv",
                           [&](std::ostream& o) { write_predictions_csv(o, result.best_predictions); });
                emit.write("leaderboard_" + stem + ".csv",
                           [&](std::ostream& o) { write_leaderboard_csv(o, result.leaderboard); });
                manifest.results.push_back({s, family, result.best, result.best_metrics, result.nested});
                clock.lap("regress:" + stem);

                for (const auto& [fx, fy] : config.residual_pairs) {
                    auto scatter = residual_report(result.best_predictions, matrix, fx, fy);
                    auto name = fmt::format("residuals_{}_{}_{}", stem, feature_name(fx), feature_name(fy));
                    emit.write(name + ".csv", [&](std::ostream& o) { write_residual_csv(o, scatter); });
                    std::vector<ScatterPoint> pts;
                    for (const auto& p : scatter.points) pts.push_back({p.x, p.y, p.residual});
                    ScatterStyle style{fmt::format("Residuals, {} ({})", tag, family_name(family)),
                                       scatter.feature_x, scatter.feature_y, "predicted - observed", true};
                    emit.write(name + ".svg", [&](std::ostream& o) { write_scatter_svg(o, pts, style); });
                }

                if (explain_family && *explain_family == family) {
                    ShapOptions sopt{0.8, config.shap_background, config.shap_max_instances, config.split_seed};
                    auto summary = shap_summary(matrix, result.best, sopt, &diag);
                    emit.write("shap_" + stem + ".csv", [&](std::ostream& o) { write_shap_csv(o, summary); });
                    emit.write("shap_summary_" + stem + ".csv",
                               [&](std::ostream& o) { write_shap_summary_csv(o, summary); });
                    clock.lap("explain:" + stem);
                }
            }

            if (!config.residual_pairs.empty()) {
                auto [fx, fy] = config.residual_pairs.front();
                std::size_t cx = matrix.cols(), cy = matrix.cols();
                for (std::size_t c = 0; c < matrix.cols(); ++c) {
                    if (matrix.predictors[c] == fx) cx = c;
                    if (matrix.predictors[c] == fy) cy = c;
                }
                if (cx < matrix.cols() && cy < matrix.cols()) {
                    std::vector<ScatterPoint> pts;
                    for (std::size_t r = 0; r < matrix.rows(); ++r)
                        pts.push_back({matrix.at(r, cx), matrix.at(r, cy), matrix.target[r]});
                    ScatterStyle style{fmt::format("Aggregated features, {}", tag), std::string(feature_name(fx)),
                                       std::string(feature_name(fy)), std::string(feature_name(config.target))};
                    emit.write(fmt::format("scatter_{}_{}_{}.svg", tag, feature_name(fx), feature_name(fy)),
                               [&](std::ostream& o) { write_scatter_svg(o, pts, style); });
                }
            }
        }

        if (config.compartments) {
            std::vector<std::pair<std::string, ContextSet>> structures;
            structures.emplace_back("ego", ego_contexts(*graph));
            structures.emplace_back("hyperedge", hyperedge_contexts(*hyper));
            nlohmann::ordered_json comp = nlohmann::ordered_json::object();
            comp["null_model"] = "global feature permutation";
            comp["std"] = "population";
            comp["permutations"] = config.null_permutations;
            comp["null_seed"] = config.null_seed;
            auto entries = nlohmann::ordered_json::array();
            std::ostringstream moments;
            write_moments_header(moments);
            for (const auto& [name, contexts] : structures) {
                for (auto f : config.compartment_features) {
                    auto emp = context_moments(contexts, lex, f);
                    auto nulls = null_shuffle_moments(contexts, lex, f, config.null_permutations, config.null_seed);
                    write_moments_rows(moments, name, emp, "empirical");
                    write_moments_rows(moments, name, nulls.front(), "0");
                    auto gap = extremes_gap_statistic(emp, nulls);
                    nlohmann::ordered_json e{{"structure", name}, {"feature", std::string(feature_name(f))},
                                             {"contexts", emp.size()}};
                    if (gap) {
                        auto [lo, hi] = null_interval(*gap);
                        e["statistic"] = gap->statistic;
                        e["empirical_tail_std"] = gap->empirical;
                        e["null_mean"] = gap->null_mean;
                        e["null_sd"] = gap->null_sd;
                        e["z"] = std::isfinite(gap->z) ? nlohmann::ordered_json(gap->z) : nlohmann::ordered_json();
                        e["null_central95"] = {lo, hi};
                    } else {
                        e["statistic"] = nullptr;
                        e["note"] = "needs at least 20 contexts and 10 permutations";
                    }
                    entries.push_back(e);
                    auto stem = fmt::format("moments_{}_{}", name, feature_name(f));
                    ScatterStyle es{fmt::format("{} contexts, {}", name, feature_name(f)), "mean", "std", "size"};
                    emit.write(stem + "_empirical.svg",
                               [&](std::ostream& o) { write_scatter_svg(o, detail::moment_points(emp), es); });
                    ScatterStyle ns{fmt::format("{} contexts, {} (shuffled)", name, feature_name(f)), "mean", "std",
                                    "size"};
                    emit.write(stem + "_null.svg", [&](std::ostream& o) {
                        write_scatter_svg(o, detail::moment_points(nulls.front()), ns);
                    });
                }
            }
            comp["results"] = entries;
            manifest.compartments = comp;
            emit.write("moments.csv", [&](std::ostream& o) { o << moments.str(); });
            emit.json("compartments.json", comp);
            clock.lap("compartments");
        }

        if (manifest.results.size() > 0) {
            emit.write("comparison.csv", [&](std::ostream& o) {
                o << "strategy,family,spec,rmse_mean,rmse_se,rmse_std,r2_mean,r2_se,r2_std\n";
                for (const auto& r : manifest.results)
                    o << strategy_tag(r.strategy) << ',' << family_name(r.family) << ','
                      << detail::csv_field(r.best.describe()) << ',' << detail::format_double(r.metrics.rmse_mean)
                      << ',' << detail::format_double(r.metrics.rmse_se) << ','
                      << detail::format_double(r.metrics.rmse_std) << ',' << detail::format_double(r.metrics.r2_mean)
                      << ',' << detail::format_double(r.metrics.r2_se) << ','
                      << detail::format_double(r.metrics.r2_std) << '\n';
            });
            emit.write("comparison.md", [&](std::ostream& o) {
                o << fmt::format("Target: {}. {}-fold cross-validation, mean +/- standard error.\n\n",
                                 feature_name(config.target), config.k);
                o << "| Strategy | Model | RMSE | R2 |\n|---|---|---|---|\n";
                for (const auto& r : manifest.results)
                    o << fmt::format("| {} | {} | {:.2f} +/- {:.2f} | {:.2f} +/- {:.2f} |\n", strategy_tag(r.strategy),
                                     family_name(r.family), r.metrics.rmse_mean, r.metrics.rmse_se,
                                     r.metrics.r2_mean, r.metrics.r2_se);
            });
        }
        emit.write("config.txt", [&](std::ostream& o) { write_config(o, config); });
        manifest.complete = true;
    } catch (const std::exception& e) {
        manifest.failure = e.what();
        manifest.complete = false;
        finish();
        throw;
    }
    finish();
    return manifest;
}

/// Sizes of every construction plus the containment checks R1 in R123 in Clique.
inline nlohmann::ordered_json structure_counts(const FilteredDataset& data, bool dedup = false) {
    nlohmann::ordered_json j;
    j["vocabulary"] = data.vocabulary_size();
    j["rows"] = data.responses.size();
    std::map<Construction, PairwiseGraph> graphs;
    for (auto c : {Construction::R1, Construction::R123, Construction::Chain, Construction::Clique}) {
        graphs.emplace(c, build_pairwise(data, c));
        const auto& g = graphs.at(c);
        j[std::string(construction_name(c))] = {{"nodes", g.active_node_count()}, {"edges", g.edge_count()}};
    }
    auto h = build_hypergraph(data, dedup);
    j["hypergraph"] = {{"nodes", h.active_node_count()}, {"hyperedges", h.edge_count()}, {"dedup", dedup}};
    j["r1_in_r123"] = edge_subset(graphs.at(Construction::R1), graphs.at(Construction::R123));
    j["r123_in_clique"] = edge_subset(graphs.at(Construction::R123), graphs.at(Construction::Clique));
    j["chain_in_clique"] = edge_subset(graphs.at(Construction::Chain), graphs.at(Construction::Clique));
    return j;
}

/// Same as run_pipeline, requiring at least two strategies.
inline RunManifest compare_strategies(const RunConfig& config) {
    if (effective_strategies(config).size() < 2) throw Error("compare: needs at least two strategies");
    if (config.models.empty()) throw Error("compare: needs at least one model family");
    return run_pipeline(config);
}

}  // namespace hypercog
