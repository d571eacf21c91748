#pragma once

// Ingestion of free-association responses and psycholinguistic norm tables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "hypercog/detail/digest.hpp"
#include "hypercog/detail/text.hpp"
#include "hypercog/error.hpp"
#include "hypercog/features.hpp"

namespace hypercog {

/// One participant instance: a cue and its 1..3 ordered responses.
struct ResponseRow {
    std::string cue;
    std::vector<std::string> responses;

    friend bool operator==(const ResponseRow&, const ResponseRow&) = default;
};

using ResponseTable = std::vector<ResponseRow>;

struct ResponseFormat {
    char delimiter = '\t';
    std::string cue_column = "cue";
    std::vector<std::string> response_columns = {"R1", "R2", "R3"};
    /// Compared after normalisation, so "NA" and "na" are equivalent.
    std::vector<std::string> missing_tokens = {"", "na"};
};

struct ResponseParseStats {
    std::size_t lines = 0;
    std::size_t kept = 0;
    std::size_t malformed = 0;
    std::size_t without_responses = 0;
};

namespace detail {

inline std::size_t find_column(const std::vector<std::string>& header, std::string_view name) {
    auto wanted = normalize_token(name);
    for (std::size_t i = 0; i < header.size(); ++i)
        if (normalize_token(header[i]) == wanted) return i;
    return header.size();
}

}  // namespace detail

inline ResponseTable parse_responses(std::istream& in, const ResponseFormat& format,
                                     Diagnostics* diag = nullptr,
                                     ResponseParseStats* stats_out = nullptr) {
    std::string line;
    if (!std::getline(in, line)) throw Error("responses: empty input, header row expected");
    auto header = detail::split_record(detail::strip_cr(line), format.delimiter);
    std::size_t cue_col = detail::find_column(header, format.cue_column);
    if (cue_col == header.size())
        throw Error("responses: header lacks cue column '" + format.cue_column + "'");
    std::vector<std::size_t> resp_cols;
    for (const auto& name : format.response_columns) {
        auto c = detail::find_column(header, name);
        if (c == header.size()) throw Error("responses: header lacks response column '" + name + "'");
        resp_cols.push_back(c);
    }
    std::set<std::string> missing;
    for (const auto& t : format.missing_tokens) missing.insert(detail::normalize_token(t));

    std::size_t needed = std::max(cue_col, *std::max_element(resp_cols.begin(), resp_cols.end())) + 1;
    ResponseParseStats stats;
    ResponseTable table;
    while (std::getline(in, line)) {
        auto rec = detail::strip_cr(line);
        if (detail::trim(rec).empty()) continue;
        ++stats.lines;
        auto fields = detail::split_record(rec, format.delimiter);
        // Trailing empty response fields are sometimes omitted entirely.
        if (fields.size() < needed && fields.size() > cue_col) fields.resize(needed);
        auto cue = fields.size() > cue_col ? detail::normalize_token(fields[cue_col]) : std::string{};
        if (fields.size() < needed || cue.empty() || missing.count(cue) != 0) {
            ++stats.malformed;
            continue;
        }
        ResponseRow row{cue, {}};
        for (auto c : resp_cols) {
            auto tok = detail::normalize_token(fields[c]);
            if (missing.count(tok) == 0) row.responses.push_back(std::move(tok));
        }
        if (row.responses.empty()) {
            ++stats.without_responses;
            continue;
        }
        table.push_back(std::move(row));
    }
    stats.kept = table.size();
    if (stats.malformed > 0)
        warn(diag, fmt::format("responses: skipped {} malformed row(s)", stats.malformed));
    if (stats.without_responses > 0)
        warn(diag, fmt::format("responses: dropped {} row(s) with no valid response",
                               stats.without_responses));
    if (stats_out != nullptr) *stats_out = stats;
    if (table.empty()) throw Error("responses: no valid rows");
    return table;
}

inline ResponseTable parse_responses(const std::filesystem::path& path, const ResponseFormat& format,
                                     Diagnostics* diag = nullptr,
                                     ResponseParseStats* stats_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw Error("responses: cannot open " + path.string());
    return parse_responses(in, format, diag, stats_out);
}

/// Writes the canonical TSV layout (cue, R1, R2, R3), missing responses empty.
inline void write_responses(std::ostream& out, const ResponseTable& table) {
    out << "cue\tR1\tR2\tR3\n";
    for (const auto& row : table) {
        out << row.cue;
        for (std::size_t i = 0; i < 3; ++i) out << '\t' << (i < row.responses.size() ? row.responses[i] : "");
        out << '\n';
    }
}

/// ln(1 + count). Monotone, maps 0 to 0.
inline double log_transform_frequency(double raw_count) {
    if (!(raw_count >= 0.0) || !std::isfinite(raw_count))
        throw Error(fmt::format("frequency: count must be a finite non-negative number, got {}", raw_count));
    return std::log1p(raw_count);
}

struct LexiconEntry {
    std::string word;
    FeatureVector features{};

    double operator[](Feature f) const { return features[index_of(f)]; }
};

/// Word-sorted collection of feature vectors. Entry index doubles as node id
/// for every structure built over the same dataset.
class Lexicon {
public:
    Lexicon() = default;

    explicit Lexicon(std::vector<LexiconEntry> entries) : entries_(std::move(entries)) {
        std::stable_sort(entries_.begin(), entries_.end(),
                         [](const auto& a, const auto& b) { return a.word < b.word; });
        auto dup = std::adjacent_find(entries_.begin(), entries_.end(),
                                      [](const auto& a, const auto& b) { return a.word == b.word; });
        if (dup != entries_.end()) throw Error("lexicon: duplicate word '" + dup->word + "'");
        for (const auto& e : entries_) validate(e);
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const LexiconEntry& operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<LexiconEntry>& entries() const { return entries_; }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    std::optional<std::size_t> find(std::string_view word) const {
        auto it = std::lower_bound(entries_.begin(), entries_.end(), word,
                                   [](const LexiconEntry& e, std::string_view w) { return e.word < w; });
        if (it == entries_.end() || it->word != word) return std::nullopt;
        return static_cast<std::size_t>(it - entries_.begin());
    }
    bool contains(std::string_view word) const { return find(word).has_value(); }

    double value(std::size_t i, Feature f) const { return entries_[i].features[index_of(f)]; }

    std::vector<double> column(Feature f) const {
        std::vector<double> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(e[f]);
        return out;
    }

    std::vector<std::string> words() const {
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(e.word);
        return out;
    }

    /// Same lexicon with feature `f` replaced by `values` (index-aligned).
    Lexicon with_column(Feature f, std::span<const double> values) const {
        if (values.size() != entries_.size()) throw Error("lexicon: column length mismatch");
        Lexicon copy = *this;
        for (std::size_t i = 0; i < values.size(); ++i) copy.entries_[i].features[index_of(f)] = values[i];
        return copy;
    }

    Lexicon restricted_to(const std::set<std::string>& words) const {
        Lexicon out;
        for (const auto& e : entries_)
            if (words.count(e.word) != 0) out.entries_.push_back(e);
        return out;
    }

private:
    static void validate(const LexiconEntry& e) {
        for (std::size_t i = 0; i < kFeatureCount; ++i)
            if (!std::isfinite(e.features[i]))
                throw Error(fmt::format("lexicon: non-finite {} for '{}'", kFeatureNames[i], e.word));
        if (e[Feature::LogFrequency] < 0.0)
            throw Error("lexicon: negative log_frequency for '" + e.word + "'");
        double poly = e[Feature::Polysemy];
        if (poly < 0.0 || poly != std::floor(poly))
            throw Error("lexicon: polysemy must be a non-negative integer for '" + e.word + "'");
        if (e[Feature::Length] != static_cast<double>(detail::utf8_length(e.word)) || e.word.empty())
            throw Error("lexicon: length does not match character count of '" + e.word + "'");
    }

    std::vector<LexiconEntry> entries_;
};

struct NormJoinStats {
    std::size_t candidate_words = 0;
    std::size_t kept = 0;
    std::size_t dropped_incomplete = 0;
    std::size_t conflicting_duplicates = 0;
};

namespace detail {

enum class NormColumnKind { Feature, RawFrequency, Ignored };

struct NormColumn {
    NormColumnKind kind = NormColumnKind::Ignored;
    Feature feature = Feature::Valence;
};

inline NormColumn classify_norm_column(std::string_view header) {
    auto name = normalize_token(header);
    if (name == "frequency" || name == "raw_frequency" || name == "count" || name == "freq")
        return {NormColumnKind::RawFrequency, Feature::LogFrequency};
    if (auto f = parse_feature(name)) return {NormColumnKind::Feature, *f};
    return {};
}

}  // namespace detail

/// Inner-joins norm tables keyed by `word`. Length is derived from the word;
/// a raw `frequency` column is log-transformed. Words missing any feature are
/// dropped and counted.
inline Lexicon parse_norms(std::span<std::istream* const> sources, std::span<const std::string> names,
                           Diagnostics* diag = nullptr, NormJoinStats* stats_out = nullptr) {
    constexpr std::size_t kLength = index_of(Feature::Length);
    std::map<std::string, std::array<std::optional<double>, kFeatureCount>> values;
    std::array<bool, kFeatureCount> covered{};
    covered[kLength] = true;
    NormJoinStats stats;

    for (std::size_t s = 0; s < sources.size(); ++s) {
        auto& in = *sources[s];
        const std::string& name = s < names.size() ? names[s] : std::string("norms");
        std::string line;
        if (!std::getline(in, line)) throw Error("norms: " + name + " is empty");
        char delim = line.find('\t') != std::string::npos && line.find(',') == std::string::npos ? '\t' : ',';
        auto header = detail::split_record(detail::strip_cr(line), delim);
        std::size_t word_col = detail::find_column(header, "word");
        if (word_col == header.size()) throw Error("norms: " + name + " lacks a 'word' column");
        std::vector<detail::NormColumn> cols;
        for (const auto& h : header) {
            auto c = detail::classify_norm_column(h);
            if (c.kind != detail::NormColumnKind::Ignored && c.feature != Feature::Length)
                covered[index_of(c.feature)] = true;
            if (c.feature == Feature::Length) c.kind = detail::NormColumnKind::Ignored;
            cols.push_back(c);
        }
        std::set<std::string> seen_here;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            auto rec = detail::strip_cr(line);
            if (detail::trim(rec).empty()) continue;
            auto fields = detail::split_record(rec, delim);
            if (fields.size() <= word_col) {
                warn(diag, fmt::format("norms: {}:{} malformed row skipped", name, lineno));
                continue;
            }
            auto word = detail::normalize_token(fields[word_col]);
            if (word.empty()) continue;
            bool duplicate = !seen_here.insert(word).second;
            auto& slot = values[word];
            for (std::size_t c = 0; c < cols.size() && c < fields.size(); ++c) {
                if (cols[c].kind == detail::NormColumnKind::Ignored) continue;
                auto v = detail::parse_double(fields[c]);
                if (!v) continue;
                double val = cols[c].kind == detail::NormColumnKind::RawFrequency
                                 ? log_transform_frequency(*v)
                                 : *v;
                auto& cell = slot[index_of(cols[c].feature)];
                if (!cell) {
                    cell = val;
                } else if (*cell != val) {
                    ++stats.conflicting_duplicates;
                    if (duplicate || stats.conflicting_duplicates <= 20)
                        warn(diag, fmt::format("norms: conflicting {} for '{}' in {}; keeping first",
                                               feature_name(cols[c].feature), word, name));
                }
            }
        }
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        if (!covered[i]) throw Error(fmt::format("norms: no source provides column '{}'", kFeatureNames[i]));

    std::vector<LexiconEntry> entries;
    stats.candidate_words = values.size();
    for (auto& [word, slot] : values) {
        LexiconEntry e{word, {}};
        bool complete = true;
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            if (i == kLength) continue;
            if (!slot[i]) {
                complete = false;
                break;
            }
            e.features[i] = *slot[i];
        }
        if (!complete) {
            ++stats.dropped_incomplete;
            continue;
        }
        e.features[kLength] = static_cast<double>(detail::utf8_length(word));
        entries.push_back(std::move(e));
    }
    stats.kept = entries.size();
    if (stats.dropped_incomplete > 0)
        warn(diag, fmt::format("norms: dropped {} word(s) missing at least one feature",
                               stats.dropped_incomplete));
    if (stats_out != nullptr) *stats_out = stats;
    return Lexicon(std::move(entries));
}

inline Lexicon parse_norms(std::span<const std::filesystem::path> paths, Diagnostics* diag = nullptr,
                           NormJoinStats* stats_out = nullptr) {
    if (paths.empty()) throw Error("norms: at least one norm file is required");
    std::vector<std::ifstream> files;
    files.reserve(paths.size());
    std::vector<std::istream*> streams;
    std::vector<std::string> names;
    for (const auto& p : paths) {
        files.emplace_back(p);
        if (!files.back()) throw Error("norms: cannot open " + p.string());
        names.push_back(p.filename().string());
    }
    for (auto& f : files) streams.push_back(&f);
    return parse_norms(streams, names, diag, stats_out);
}

/// Writes the lexicon as a single norm CSV that parse_norms reads back.
inline void write_norms(std::ostream& out, const Lexicon& lexicon) {
    out << "word";
    for (auto name : kFeatureNames) out << ',' << name;
    out << '\n';
    for (const auto& e : lexicon) {
        out << detail::csv_field(e.word);
        for (double v : e.features) out << ',' << detail::format_double(v);
        out << '\n';
    }
}

struct SourceDigest {
    std::string path;
    std::string sha256;
};

struct FilteredDataset {
    Lexicon lexicon;
    ResponseTable responses;
    std::vector<SourceDigest> provenance;

    std::size_t vocabulary_size() const { return lexicon.size(); }
};

/// Drops out-of-vocabulary responses, rows whose cue is out of vocabulary and
/// rows left without responses. The lexicon is then restricted to the words
/// that still occur in some row.
inline FilteredDataset intersect_vocabulary(const ResponseTable& responses, const Lexicon& lexicon,
                                            Diagnostics* diag = nullptr) {
    if (responses.empty() || lexicon.empty()) throw Error("intersect: empty responses or lexicon");
    FilteredDataset out;
    std::set<std::string> used;
    std::size_t dropped_rows = 0;
    for (const auto& row : responses) {
        if (!lexicon.contains(row.cue)) {
            ++dropped_rows;
            continue;
        }
        ResponseRow kept{row.cue, {}};
        for (const auto& r : row.responses)
            if (lexicon.contains(r)) kept.responses.push_back(r);
        if (kept.responses.empty()) {
            ++dropped_rows;
            continue;
        }
        used.insert(kept.cue);
        used.insert(kept.responses.begin(), kept.responses.end());
        out.responses.push_back(std::move(kept));
    }
    if (out.responses.empty()) throw Error("intersect: responses and lexicon share no usable rows");
    if (dropped_rows > 0) warn(diag, fmt::format("intersect: removed {} row(s)", dropped_rows));
    out.lexicon = lexicon.restricted_to(used);
    return out;
}

}  // namespace hypercog
