#ifndef UASR_ALIGN_CLOUD_HPP
#define UASR_ALIGN_CLOUD_HPP

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"
#include "uasr/core/pca.hpp"
#include "uasr/semantic/table.hpp"

namespace uasr {

// Labelled points in a K-dimensional space; points.row(i) is the point of labels[i].
struct ProjectedCloud {
    std::vector<std::string> labels;
    Matrix points;  // N x K
    PcaBasis basis;
    Vector scale;   // per-dimension divisor applied after projection (all 1 when not normalised)

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return points.cols(); }

    std::optional<std::size_t> find(const std::string& label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return i;
        return std::nullopt;
    }

    std::map<std::string, std::size_t> label_index() const {
        std::map<std::string, std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) idx.emplace(labels[i], i);
        return idx;
    }
};

// Cloud taken directly from given points (no projection).
inline ProjectedCloud make_cloud(std::vector<std::string> labels, Matrix points) {
    if (labels.size() != points.rows()) {
        throw ShapeError("cloud has " + std::to_string(points.rows()) + " points for " + std::to_string(labels.size()) +
                         " labels");
    }
    ProjectedCloud c;
    c.labels = std::move(labels);
    c.scale.assign(points.cols(), 1.0);
    c.points = std::move(points);
    return c;
}

// Keeps the `cap` most frequent tokens, fits PCA with k components on them and projects
// every kept token. With normalize set, each component is divided by its standard
// deviation (components with zero variance are left unscaled).
inline ProjectedCloud project_cloud(const WordEmbeddingTable& table, std::size_t k, std::size_t cap,
                                    bool normalize = false) {
    const auto order = table.frequency_order();
    const std::size_t n = std::min(cap, order.size());
    if (n < k || n < 2) {
        throw ShapeError("project_cloud: " + std::to_string(n) + " tokens after capping cannot support k = " +
                         std::to_string(k));
    }
    Matrix raw(n, table.dim());
    ProjectedCloud c;
    c.labels.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto v = table.vector(order[r]);
        std::copy(v.begin(), v.end(), raw.row(r).begin());
        c.labels.push_back(table.token(order[r]));
    }
    c.basis = pca_fit(raw, k);
    c.scale.assign(k, 1.0);
    if (normalize) {
        for (std::size_t d = 0; d < k; ++d) {
            const double sd = std::sqrt(c.basis.explained_variance[d]);
            if (sd > 1e-12) c.scale[d] = sd;
        }
    }
    c.points = Matrix(n, k);
    for (std::size_t r = 0; r < n; ++r) {
        const Vector p = pca_project(c.basis, raw.row(r));
        auto dst = c.points.row(r);
        for (std::size_t d = 0; d < k; ++d) dst[d] = p[d] / c.scale[d];
    }
    return c;
}

} // namespace uasr

#endif
