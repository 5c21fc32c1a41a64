#ifndef UASR_EVAL_TOPK_HPP
#define UASR_EVAL_TOPK_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uasr/align/cloud.hpp"
#include "uasr/align/icp.hpp"
#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"

namespace uasr {

struct TopKResult {
    double accuracy = 0.0;
    std::size_t evaluated = 0;  // audio tokens with a ground-truth entry
    std::size_t hits = 0;
};

// Rank of text point `truth` among all T_ba-transformed text points by distance to the
// query (0 = nearest); ties count the lower index as nearer.
inline std::size_t neighbour_rank(std::span<const double> query, const Matrix& transformed, std::size_t truth) {
    const double dt = squared_distance(query, transformed.row(truth));
    std::size_t rank = 0;
    for (std::size_t j = 0; j < transformed.rows(); ++j) {
        const double d = squared_distance(query, transformed.row(j));
        if (d < dt || (d == dt && j < truth)) ++rank;
    }
    return rank;
}

// Fraction of audio tokens in `truth` whose true text token is among the k nearest
// transformed text points. A true text token missing from the text cloud is a miss.
inline TopKResult topk_evaluate(const std::map<std::string, std::string>& truth, const ProjectedCloud& a,
                                const ProjectedCloud& b, const AffineTransformPair& t, std::size_t k) {
    detail::require_same_dim(a, b, t);
    if (k == 0 || k > b.size()) {
        throw ShapeError("top-k with k = " + std::to_string(k) + " over " + std::to_string(b.size()) + " text points");
    }
    const Matrix transformed = detail::transform_rows(b.points, t.ba, t.ba_shift);
    const auto text_index = b.label_index();
    TopKResult r;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto it = truth.find(a.labels[i]);
        if (it == truth.end()) continue;
        ++r.evaluated;
        auto j = text_index.find(it->second);
        if (j == text_index.end()) continue;
        if (neighbour_rank(a.points.row(i), transformed, j->second) < k) ++r.hits;
    }
    if (r.evaluated == 0) throw CoverageError("no audio token has a ground-truth text token");
    r.accuracy = static_cast<double>(r.hits) / static_cast<double>(r.evaluated);
    return r;
}

inline double topk_accuracy(const std::map<std::string, std::string>& truth, const ProjectedCloud& a,
                            const ProjectedCloud& b, const AffineTransformPair& t, std::size_t k) {
    return topk_evaluate(truth, a, b, t, k).accuracy;
}

// Ground truth that maps every token to itself (audio and text share the word inventory).
inline std::map<std::string, std::string> identity_truth(const std::vector<std::string>& tokens) {
    std::map<std::string, std::string> m;
    for (const auto& t : tokens) m.emplace(t, t);
    return m;
}

} // namespace uasr

#endif
