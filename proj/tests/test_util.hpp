#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "hypercog/hypercog.hpp"

namespace testutil {

using namespace hypercog;

/// Five-word toy: (dog; box, cat), (zebra; dog, box), (dog; zebra, elephant).
inline ResponseTable toy_rows() {
    return {{"dog", {"box", "cat"}}, {"zebra", {"dog", "box"}}, {"dog", {"zebra", "elephant"}}};
}

inline LexiconEntry entry(const std::string& word, double base) {
    LexiconEntry e{word, {}};
    for (std::size_t f = 0; f < kFeatureCount; ++f) e.features[f] = base + 0.1 * static_cast<double>(f);
    e.features[index_of(Feature::Polysemy)] = 2;
    e.features[index_of(Feature::Length)] = static_cast<double>(word.size());
    return e;
}

inline Lexicon toy_lexicon() {
    return Lexicon({entry("dog", 5), entry("box", 4), entry("cat", 6), entry("zebra", 3), entry("elephant", 7)});
}

inline FilteredDataset toy_dataset() { return intersect_vocabulary(toy_rows(), toy_lexicon()); }

inline NodeId id_of(const Lexicon& lex, const std::string& w) { return static_cast<NodeId>(*lex.find(w)); }

/// Undirected graph on words w0..w{n-1} from index pairs.
inline PairwiseGraph graph_from(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::string(1, static_cast<char>('a' + i)));
    return PairwiseGraph(Vocabulary(words), edges);
}

/// Two triangles {0,1,2} and {3,4,5} joined by the bridge 2-3.
inline PairwiseGraph two_triangles() {
    return graph_from(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}});
}

inline FeatureMatrix matrix_from(const Matrix& x, const std::vector<double>& y) {
    FeatureMatrix m;
    for (std::size_t r = 0; r < x.rows; ++r) m.words.push_back("r" + std::to_string(1000 + r));
    for (std::size_t c = 0; c < x.cols; ++c) m.predictors.push_back(feature_at(c));
    m.values = x.data;
    m.target = y;
    m.target_feature = Feature::Length;
    return m;
}

inline long count_lines(const std::string& text) { return static_cast<long>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace testutil
