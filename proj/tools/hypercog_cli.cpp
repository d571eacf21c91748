// hypercog command line: run, compare, build, synth.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hypercog/hypercog.hpp"

namespace fs = std::filesystem;
using namespace hypercog;

namespace {

struct RunFlags {
    std::string config_file;
    std::map<std::string, std::string> values;
    std::vector<std::string> sets;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--config", flags.config_file, "key=value config file; flags override it")
        ->check(CLI::ExistingFile);
    for (const auto& key : config_keys()) {
        std::string flag = "--" + key;
        for (auto& c : flag)
            if (c == '_') c = '-';
        cmd->add_option(flag, flags.values[key], "config key " + key);
    }
    cmd->add_option("--set", flags.sets, "extra key=value setting (repeatable)");
}

RunConfig resolve_config(const CLI::App* cmd, const RunFlags& flags) {
    RunConfig config;
    if (!flags.config_file.empty()) apply_config_file(config, flags.config_file);
    apply_environment(config);
    for (const auto& key : config_keys()) {
        std::string flag = "--" + key;
        for (auto& c : flag)
            if (c == '_') c = '-';
        if (cmd->count(flag) > 0) apply_setting(config, key, flags.values.at(key));
    }
    for (const auto& s : flags.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw Error("--set expects key=value, got '" + s + "'");
        apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
    return config;
}

void print_summary(const RunManifest& m) {
    for (const auto& r : m.results)
        std::cout << fmt::format("{:<22} {:<14} RMSE {:.4f} +/- {:.4f}  R2 {:.4f} +/- {:.4f}\n",
                                 strategy_tag(r.strategy), family_name(r.family), r.metrics.rmse_mean,
                                 r.metrics.rmse_se, r.metrics.r2_mean, r.metrics.r2_se);
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << fmt::format("{} artifact(s) written to {}\n", m.artifacts.size(),
                             m.config.value("output_dir", std::string("?")));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature aggregation over free-association networks and hypergraphs"};
    app.require_subcommand(1);

    RunFlags run_flags, compare_flags;
    auto* run = app.add_subcommand("run", "Run the full pipeline for the configured strategies");
    add_run_flags(run, run_flags);
    auto* compare = app.add_subcommand("compare", "Run several strategies and write a comparison table");
    add_run_flags(compare, compare_flags);

    std::vector<std::string> responses, norms;
    std::string build_out;
    bool build_dedup = false;
    auto* build = app.add_subcommand("build", "Report graph and hypergraph sizes for every construction");
    build->add_option("--responses", responses, "response TSV file(s)")->required()->delimiter(',');
    build->add_option("--norms", norms, "norm CSV file(s)")->required()->delimiter(',');
    build->add_flag("--dedup", build_dedup, "collapse identical hyperedges");
    build->add_option("--output-dir", build_out, "also write edge lists here");

    SyntheticOptions synth_opt;
    std::string synth_out = "synthetic";
    auto* synth = app.add_subcommand("synth", "Write a planted-cluster dataset (responses.tsv, norms.csv)");
    synth->add_option("--words", synth_opt.words, "vocabulary size");
    synth->add_option("--clusters", synth_opt.clusters, "number of planted clusters");
    synth->add_option("--rows-per-cue", synth_opt.rows_per_cue, "association rows per cue");
    synth->add_option("--homophily", synth_opt.homophily, "probability of a within-cluster response");
    synth->add_option("--seed", synth_opt.seed, "random seed");
    synth->add_option("--output-dir", synth_out, "destination directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            auto manifest = run_pipeline(resolve_config(run, run_flags));
            print_summary(manifest);
        } else if (compare->parsed()) {
            auto manifest = compare_strategies(resolve_config(compare, compare_flags));
            print_summary(manifest);
        } else if (build->parsed()) {
            Diagnostics diag;
            ResponseTable table;
            for (const auto& p : responses) {
                auto part = parse_responses(fs::path(p), ResponseFormat{}, &diag);
                table.insert(table.end(), part.begin(), part.end());
            }
            std::vector<fs::path> norm_paths(norms.begin(), norms.end());
            auto data = intersect_vocabulary(table, parse_norms(norm_paths, &diag), &diag);
            auto counts = structure_counts(data, build_dedup);
            std::cout << counts.dump(2) << '\n';
            if (!build_out.empty()) {
                fs::create_directories(build_out);
                for (auto c : {Construction::R1, Construction::R123, Construction::Chain, Construction::Clique}) {
                    std::ofstream out(fs::path(build_out) / fmt::format("edges_{}.tsv", construction_name(c)));
                    write_edge_list(out, build_pairwise(data, c));
                }
                std::ofstream out(fs::path(build_out) / "hyperedges.tsv");
                write_hyperedge_list(out, build_hypergraph(data, build_dedup));
            }
            for (const auto& w : diag.warnings) std::cerr << "warning: " << w << '\n';
            bool ok = counts["r1_in_r123"].get<bool>() && counts["r123_in_clique"].get<bool>();
            return ok ? EXIT_SUCCESS : EXIT_FAILURE;
        } else if (synth->parsed()) {
            auto ds = make_synthetic(synth_opt);
            fs::create_directories(synth_out);
            std::ofstream r(fs::path(synth_out) / "responses.tsv");
            write_responses(r, ds.responses);
            std::ofstream n(fs::path(synth_out) / "norms.csv");
            write_norms(n, ds.lexicon);
            std::cout << fmt::format("wrote {} rows and {} words to {}\n", ds.responses.size(), ds.lexicon.size(),
                                     synth_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
