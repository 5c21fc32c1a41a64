#ifndef UASR_EVAL_PROBE_HPP
#define UASR_EVAL_PROBE_HPP

#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"

namespace uasr {

// Nearest-centroid classifier scored on held-out data: centroids come from the
// even-indexed items, accuracy is measured on the odd-indexed ones.
inline double nearest_centroid_accuracy(std::span<const Vector> vectors, std::span<const std::string> labels) {
    if (vectors.size() != labels.size()) throw ShapeError("probe: vectors and labels differ in count");
    if (vectors.size() < 2) throw DataError("probe: need at least two items");
    std::map<std::string, std::pair<Vector, std::size_t>> sums;
    for (std::size_t i = 0; i < vectors.size(); i += 2) {
        auto& [sum, count] = sums[labels[i]];
        if (sum.empty()) sum.assign(vectors[i].size(), 0.0);
        axpy(1.0, vectors[i], sum);
        ++count;
    }
    std::vector<std::pair<std::string, Vector>> centroids;
    for (auto& [label, sc] : sums) {
        Vector c = sc.first;
        for (double& x : c) x /= static_cast<double>(sc.second);
        centroids.emplace_back(label, std::move(c));
    }
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 1; i < vectors.size(); i += 2) {
        double best = std::numeric_limits<double>::infinity();
        const std::string* pick = nullptr;
        for (const auto& [label, c] : centroids) {
            const double d = squared_distance(vectors[i], c);
            if (d < best) {
                best = d;
                pick = &label;
            }
        }
        correct += (pick && *pick == labels[i]) ? 1 : 0;
        ++total;
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

} // namespace uasr

#endif
