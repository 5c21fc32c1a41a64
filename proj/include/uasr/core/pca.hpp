#ifndef UASR_CORE_PCA_HPP
#define UASR_CORE_PCA_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"

namespace uasr {

struct SymmetricEigen {
    Vector values;   // descending
    Matrix vectors;  // row i is the eigenvector of values[i]
};

// Cyclic Jacobi rotations on a symmetric matrix.
inline SymmetricEigen symmetric_eigen(Matrix a, int max_sweeps = 100) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw ShapeError("symmetric_eigen: matrix is not square");
    Matrix v = Matrix::identity(n);

    double scale = 0.0;
    for (double x : a.values()) scale += x * x;
    const double tol = 1e-30 * std::max(scale, 1e-300);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off <= tol) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymmetricEigen out{Vector(n), Matrix(n, n)};
    for (std::size_t r = 0; r < n; ++r) {
        out.values[r] = a(order[r], order[r]);
        for (std::size_t k = 0; k < n; ++k) out.vectors(r, k) = v(k, order[r]);
    }
    return out;
}

struct PcaBasis {
    Vector mean;
    Matrix components;  // K x D, orthonormal rows
    Vector explained_variance;
    // set when some kept component carries (numerically) zero variance
    bool degenerate = false;

    std::size_t input_dim() const { return mean.size(); }
    std::size_t output_dim() const { return components.rows(); }
};

// Rows of `points` are samples.
inline PcaBasis pca_fit(const Matrix& points, std::size_t k) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    if (k == 0) throw ShapeError("pca_fit: k must be at least 1");
    if (k > d) throw ShapeError("pca_fit: k = " + std::to_string(k) + " exceeds dimension " + std::to_string(d));
    if (n < k) throw ShapeError("pca_fit: " + std::to_string(n) + " samples cannot support k = " + std::to_string(k));

    PcaBasis basis;
    basis.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) axpy(1.0, points.row(i), basis.mean);
    for (double& m : basis.mean) m /= static_cast<double>(n);

    Matrix cov(d, d);
    Vector centered(d);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = points.row(i);
        for (std::size_t j = 0; j < d; ++j) centered[j] = row[j] - basis.mean[j];
        for (std::size_t a = 0; a < d; ++a) {
            const double ca = centered[a];
            if (ca == 0.0) continue;
            for (std::size_t b = a; b < d; ++b) cov(a, b) += ca * centered[b];
        }
    }
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov(a, b) /= denom;
            cov(b, a) = cov(a, b);
        }

    auto eig = symmetric_eigen(std::move(cov));
    const double top = std::max(eig.values.empty() ? 0.0 : eig.values[0], 0.0);

    basis.components = Matrix(k, d);
    basis.explained_variance.resize(k);
    for (std::size_t r = 0; r < k; ++r) {
        auto src = eig.vectors.row(r);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(src[j]) > std::abs(src[arg]) + 1e-12) arg = j;
        const double sign = src[arg] < 0 ? -1.0 : 1.0;
        auto dst = basis.components.row(r);
        for (std::size_t j = 0; j < d; ++j) dst[j] = sign * src[j];
        const double var = std::max(eig.values[r], 0.0);
        basis.explained_variance[r] = var;
        if (var <= 1e-12 * std::max(top, 1e-300) || top == 0.0) basis.degenerate = true;
    }
    return basis;
}

inline Vector pca_project(const PcaBasis& basis, std::span<const double> v) {
    if (v.size() != basis.input_dim()) {
        throw ShapeError("pca_project: vector of length " + std::to_string(v.size()) + ", basis expects " +
                         std::to_string(basis.input_dim()));
    }
    Vector centered(v.begin(), v.end());
    for (std::size_t j = 0; j < centered.size(); ++j) centered[j] -= basis.mean[j];
    return matvec(basis.components, centered);
}

} // namespace uasr

#endif
