#ifndef UASR_ALIGN_ICP_HPP
#define UASR_ALIGN_ICP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "uasr/align/cloud.hpp"
#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"
#include "uasr/core/optimizer.hpp"
#include "uasr/core/rng.hpp"

namespace uasr {

struct AlignConfig {
    double lambda = 0.1;            // cycle weight
    std::size_t iterations = 100;   // correspondence passes, each followed by one epoch
    std::size_t batch_size = 200;   // clamped to the larger cloud size
    std::size_t vocab_cap = 5000;
    std::size_t k = 100;
    double learning_rate = 0.01;
    std::uint64_t decay_interval = 40;  // optimizer steps
    double decay_rate = 0.90;
    bool squared = true;            // squared Euclidean terms; false uses plain norms
    bool normalize = true;          // unit variance per PCA dimension before ICP
    std::size_t restarts = 1;       // extra restarts start from random orthogonal maps
    bool early_stop = true;
    double tolerance = 1e-9;        // relative loss decrease counted as "no progress"
    std::uint64_t seed = 3;

    template <class V>
    void visit(V&& v) {
        v("lambda", lambda);
        v("iterations", iterations);
        v("batch_size", batch_size);
        v("vocab_cap", vocab_cap);
        v("k", k);
        v("learning_rate", learning_rate);
        v("decay_interval", decay_interval);
        v("decay_rate", decay_rate);
        v("squared", squared);
        v("normalize", normalize);
        v("restarts", restarts);
        v("early_stop", early_stop);
        v("tolerance", tolerance);
        v("seed", seed);
    }

    void validate() const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DataError("align.lambda must be a finite value >= 0");
        if (iterations == 0 || batch_size == 0 || vocab_cap == 0 || k == 0 || restarts == 0)
            throw DataError("align sizes and counts must be at least 1");
        if (!(learning_rate > 0.0)) throw DataError("align.learning_rate must be positive");
        if (decay_interval == 0) throw DataError("align.decay_interval must be at least 1");
        if (!(decay_rate > 0.0 && decay_rate <= 1.0)) throw DataError("align.decay_rate must lie in (0, 1]");
        if (!(tolerance >= 0.0)) throw DataError("align.tolerance must be non-negative");
    }
};

// T_ab maps the audio space into the text space, T_ba the reverse: x -> M x + t.
struct AffineTransformPair {
    Matrix ab;
    Matrix ba;
    Vector ab_shift;
    Vector ba_shift;

    static AffineTransformPair identity(std::size_t k) {
        return {Matrix::identity(k), Matrix::identity(k), Vector(k, 0.0), Vector(k, 0.0)};
    }
    static AffineTransformPair zeros(std::size_t k) { return {Matrix(k, k), Matrix(k, k), Vector(k, 0.0), Vector(k, 0.0)}; }

    std::size_t dim() const { return ab.rows(); }

    Vector apply_ab(std::span<const double> a) const {
        Vector y(ab_shift);
        gemv_add(ab, a, y);
        return y;
    }
    Vector apply_ba(std::span<const double> b) const {
        Vector y(ba_shift);
        gemv_add(ba, b, y);
        return y;
    }

    bool all_finite() const {
        return uasr::all_finite(ab.values()) && uasr::all_finite(ba.values()) && uasr::all_finite(ab_shift) &&
               uasr::all_finite(ba_shift);
    }

    bool operator==(const AffineTransformPair&) const = default;
};

// Haar-distributed orthogonal matrix (Gram-Schmidt on a Gaussian matrix, rows orthonormal).
inline Matrix random_orthogonal(std::size_t k, Rng& rng) {
    Matrix q(k, k);
    for (double& v : q.values()) v = rng.normal();
    for (std::size_t r = 0; r < k; ++r) {
        auto row = q.row(r);
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t p = 0; p < r; ++p) axpy(-dot(q.row(p), row), q.row(p), row);
        const double n = norm(row);
        for (double& v : row) v /= n;
    }
    return q;
}

// a_to_b[i] = i*: nearest T_ba b_j to a_i. b_to_a[j] = j*: nearest T_ab a_i to b_j.
struct Correspondences {
    std::vector<std::size_t> a_to_b;
    std::vector<std::size_t> b_to_a;

    bool operator==(const Correspondences&) const = default;
};

namespace detail {

inline void require_same_dim(const ProjectedCloud& a, const ProjectedCloud& b, const AffineTransformPair& t) {
    if (a.dim() != b.dim() || t.dim() != a.dim() || t.ab.cols() != a.dim() || t.ba.rows() != a.dim() ||
        t.ba.cols() != a.dim() || t.ab_shift.size() != a.dim() || t.ba_shift.size() != a.dim()) {
        throw ShapeError("clouds and transforms must share one dimension (audio " + std::to_string(a.dim()) + ", text " +
                         std::to_string(b.dim()) + ", transform " + std::to_string(t.dim()) + ")");
    }
}

// Rows of `points` mapped through x -> M x + t.
inline Matrix transform_rows(const Matrix& points, const Matrix& m, const Vector& shift) {
    Matrix out(points.rows(), m.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto dst = out.row(i);
        std::copy(shift.begin(), shift.end(), dst.begin());
        gemv_add(m, points.row(i), dst);
    }
    return out;
}

// For each query row, index of the nearest candidate row; ties go to the lowest index.
inline std::vector<std::size_t> nearest_rows(const Matrix& queries, const Matrix& candidates) {
    std::vector<std::size_t> out(queries.rows());
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = 0; j < candidates.rows(); ++j) {
            const double d = squared_distance(queries.row(i), candidates.row(j));
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        out[i] = arg;
    }
    return out;
}

} // namespace detail

inline Correspondences find_correspondences(const ProjectedCloud& a, const ProjectedCloud& b, const AffineTransformPair& t) {
    detail::require_same_dim(a, b, t);
    if (a.size() == 0 || b.size() == 0) throw ShapeError("find_correspondences: empty cloud");
    Correspondences c;
    c.a_to_b = detail::nearest_rows(a.points, detail::transform_rows(b.points, t.ba, t.ba_shift));
    c.b_to_a = detail::nearest_rows(b.points, detail::transform_rows(a.points, t.ab, t.ab_shift));
    return c;
}

// Index pairs (point, target) selecting which alignment loss terms to evaluate.
using TermList = std::vector<std::pair<std::size_t, std::size_t>>;

namespace detail {

// Value and d value / d prediction for one residual r = target - prediction.
inline double residual_term(std::span<const double> r, bool squared, double scale, Vector* d_pred) {
    const double sq = dot(r, r);
    const double value = squared ? sq : std::sqrt(sq);
    if (d_pred) {
        d_pred->assign(r.size(), 0.0);
        if (squared) {
            for (std::size_t k = 0; k < r.size(); ++k) (*d_pred)[k] = -2.0 * scale * r[k];
        } else if (value > 0.0) {
            for (std::size_t k = 0; k < r.size(); ++k) (*d_pred)[k] = -scale * r[k] / value;
        }
    }
    return value;
}

} // namespace detail

// Alignment loss restricted to the given terms. a_terms holds (i, target index in B) for the
// first and third terms; b_terms holds (j, target index in A) for the second and fourth.
// With grad set, accumulates a_scale * d(a-side terms) + b_scale * d(b-side terms).
inline double align_objective(const Matrix& a, const Matrix& b, const TermList& a_terms, const TermList& b_terms,
                              const AffineTransformPair& t, double lambda, bool squared,
                              AffineTransformPair* grad = nullptr, double a_scale = 1.0, double b_scale = 1.0) {
    const std::size_t k = t.dim();
    double total = 0.0;
    Vector y(k), z(k), r(k), g, dy(k);

    // Data term ||target - (M x + s)|| and cycle term ||x - (N (M x + s) + u)||.
    auto side = [&](const Matrix& src, const Matrix& dst, const TermList& terms, const Matrix& m, const Vector& s,
                    const Matrix& n, const Vector& u, Matrix* dm, Vector* ds, Matrix* dn, Vector* du, double scale) {
        for (const auto& [i, target] : terms) {
            const auto x = src.row(i);
            std::copy(s.begin(), s.end(), y.begin());
            gemv_add(m, x, y);
            const auto tgt = dst.row(target);
            for (std::size_t d = 0; d < k; ++d) r[d] = tgt[d] - y[d];
            total += detail::residual_term(r, squared, scale, grad ? &g : nullptr);
            if (grad) {
                add_outer(*dm, g, x);
                axpy(1.0, g, *ds);
            }
            if (lambda == 0.0) continue;
            std::copy(u.begin(), u.end(), z.begin());
            gemv_add(n, y, z);
            for (std::size_t d = 0; d < k; ++d) r[d] = x[d] - z[d];
            total += lambda * detail::residual_term(r, squared, lambda * scale, grad ? &g : nullptr);
            if (grad) {
                add_outer(*dn, g, y);
                axpy(1.0, g, *du);
                std::fill(dy.begin(), dy.end(), 0.0);
                gemv_t_add(n, g, dy);
                add_outer(*dm, dy, x);
                axpy(1.0, dy, *ds);
            }
        }
    };
    if (grad) {
        side(a, b, a_terms, t.ab, t.ab_shift, t.ba, t.ba_shift, &grad->ab, &grad->ab_shift, &grad->ba, &grad->ba_shift,
             a_scale);
        side(b, a, b_terms, t.ba, t.ba_shift, t.ab, t.ab_shift, &grad->ba, &grad->ba_shift, &grad->ab, &grad->ab_shift,
             b_scale);
    } else {
        side(a, b, a_terms, t.ab, t.ab_shift, t.ba, t.ba_shift, nullptr, nullptr, nullptr, nullptr, a_scale);
        side(b, a, b_terms, t.ba, t.ba_shift, t.ab, t.ab_shift, nullptr, nullptr, nullptr, nullptr, b_scale);
    }
    return total;
}

inline TermList terms_from(const std::vector<std::size_t>& targets) {
    TermList out(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) out[i] = {i, targets[i]};
    return out;
}

// Full alignment loss for the given correspondences.
inline double loss_align(const ProjectedCloud& a, const ProjectedCloud& b, const Correspondences& c,
                         const AffineTransformPair& t, double lambda, bool squared = true,
                         AffineTransformPair* grad = nullptr) {
    detail::require_same_dim(a, b, t);
    if (c.a_to_b.size() != a.size() || c.b_to_a.size() != b.size()) throw ShapeError("loss_align: correspondences do not match the clouds");
    return align_objective(a.points, b.points, terms_from(c.a_to_b), terms_from(c.b_to_a), t, lambda, squared, grad);
}

// Mean ||a - T_ba T_ab a|| over the audio cloud.
inline double cycle_residual(const ProjectedCloud& a, const AffineTransformPair& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Vector z = t.apply_ba(t.apply_ab(a.points.row(i)));
        s += std::sqrt(squared_distance(a.points.row(i), z));
    }
    return a.size() ? s / static_cast<double>(a.size()) : 0.0;
}

// Known (audio index, text index) pairs for the semi-supervised variant.
using AnchorList = std::vector<std::pair<std::size_t, std::size_t>>;

inline AnchorList resolve_anchors(const ProjectedCloud& a, const ProjectedCloud& b,
                                  const std::vector<std::pair<std::string, std::string>>& tokens,
                                  std::vector<std::string>* skipped = nullptr) {
    const auto ai = a.label_index();
    const auto bi = b.label_index();
    AnchorList out;
    for (const auto& [ta, tb] : tokens) {
        auto x = ai.find(ta);
        auto y = bi.find(tb);
        if (x == ai.end() || y == bi.end()) {
            if (skipped) skipped->push_back(ta + "\t" + tb);
            continue;
        }
        out.emplace_back(x->second, y->second);
    }
    return out;
}

struct AlignIteration {
    std::size_t iteration = 0;
    double loss_before = 0.0;  // alignment loss after recomputing correspondences
    double loss_after = 0.0;   // same correspondences, after the epoch
    std::size_t changed = 0;   // correspondences that differ from the previous iteration
};

struct AlignResult {
    AffineTransformPair transforms;
    std::vector<AlignIteration> history;  // of the kept restart
    std::vector<double> restart_losses;
    std::size_t kept_restart = 0;
    std::vector<std::string> warnings;
};

// Mini-Batch Cycle ICP. Each iteration recomputes correspondences (anchored points keep
// their known counterpart) and runs one epoch of mini-batch gradient descent on the alignment loss
// with the batch-mean gradient. Stops early once correspondences repeat and the last
// epoch made no relative progress beyond `tolerance`.
inline AlignResult train_align(const ProjectedCloud& a, const ProjectedCloud& b, const AlignConfig& cfg,
                               const AnchorList& anchors = {},
                               const std::function<void(const AlignIteration&)>& on_iteration = {}) {
    cfg.validate();
    if (a.dim() != b.dim()) throw ShapeError("train_align: clouds have dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
    if (a.size() == 0 || b.size() == 0) throw ShapeError("train_align: empty cloud");
    const std::size_t k = a.dim();

    std::vector<std::ptrdiff_t> anchor_ab(a.size(), -1), anchor_ba(b.size(), -1);
    for (const auto& [i, j] : anchors) {
        if (i >= a.size() || j >= b.size()) throw ShapeError("anchor index out of range");
        if (anchor_ab[i] >= 0 || anchor_ba[j] >= 0) {
            throw DataError("token anchored twice: '" + a.labels[i] + "' / '" + b.labels[j] + "'");
        }
        anchor_ab[i] = static_cast<std::ptrdiff_t>(j);
        anchor_ba[j] = static_cast<std::ptrdiff_t>(i);
    }

    AlignResult result;
    const std::size_t batch = std::min(cfg.batch_size, std::max(a.size(), b.size()));
    if (batch < cfg.batch_size) {
        result.warnings.push_back("batch size " + std::to_string(cfg.batch_size) + " exceeds the cloud size; using " +
                                  std::to_string(batch));
    }
    const std::size_t n_batches = (std::max(a.size(), b.size()) + batch - 1) / batch;

    Rng root(cfg.seed);
    Rng restart_rng = root.split("align/restart");
    Rng order_rng = root.split("align/order");
    const OptimizerSettings sgd = OptimizerSettings::sgd(cfg.learning_rate, cfg.decay_interval, cfg.decay_rate);

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
        AffineTransformPair t = AffineTransformPair::identity(k);
        if (restart > 0) {
            t.ab = random_orthogonal(k, restart_rng);
            t.ba = t.ab.transposed();
        }
        OptimizerState opt_ab(sgd, "align.T_ab"), opt_ba(sgd, "align.T_ba");
        OptimizerState opt_abs(sgd, "align.T_ab.shift"), opt_bas(sgd, "align.T_ba.shift");
        std::vector<AlignIteration> history;
        Correspondences prev;
        std::vector<std::size_t> perm_a(a.size()), perm_b(b.size());
        std::iota(perm_a.begin(), perm_a.end(), 0);
        std::iota(perm_b.begin(), perm_b.end(), 0);
        AffineTransformPair grad = AffineTransformPair::zeros(k);
        double final_loss = 0.0;

        for (std::size_t it = 1; it <= cfg.iterations; ++it) {
            Correspondences c = find_correspondences(a, b, t);
            for (std::size_t i = 0; i < a.size(); ++i)
                if (anchor_ab[i] >= 0) c.a_to_b[i] = static_cast<std::size_t>(anchor_ab[i]);
            for (std::size_t j = 0; j < b.size(); ++j)
                if (anchor_ba[j] >= 0) c.b_to_a[j] = static_cast<std::size_t>(anchor_ba[j]);

            AlignIteration rec;
            rec.iteration = it;
            if (it == 1) {
                rec.changed = a.size() + b.size();
            } else {
                for (std::size_t i = 0; i < a.size(); ++i) rec.changed += c.a_to_b[i] != prev.a_to_b[i];
                for (std::size_t j = 0; j < b.size(); ++j) rec.changed += c.b_to_a[j] != prev.b_to_a[j];
            }
            if (cfg.early_stop && it > 1 && rec.changed == 0) {
                const auto& last = history.back();
                if (last.loss_before - last.loss_after <= cfg.tolerance * std::max(1.0, last.loss_before)) break;
            }
            rec.loss_before = loss_align(a, b, c, t, cfg.lambda, cfg.squared);

            order_rng.shuffle(perm_a);
            order_rng.shuffle(perm_b);
            TermList ta, tb;
            for (std::size_t bi = 0; bi < n_batches; ++bi) {
                ta.clear();
                tb.clear();
                for (std::size_t p = bi * a.size() / n_batches; p < (bi + 1) * a.size() / n_batches; ++p)
                    ta.emplace_back(perm_a[p], c.a_to_b[perm_a[p]]);
                for (std::size_t p = bi * b.size() / n_batches; p < (bi + 1) * b.size() / n_batches; ++p)
                    tb.emplace_back(perm_b[p], c.b_to_a[perm_b[p]]);
                grad = AffineTransformPair::zeros(k);
                const double sa = ta.empty() ? 0.0 : 1.0 / static_cast<double>(ta.size());
                const double sb = tb.empty() ? 0.0 : 1.0 / static_cast<double>(tb.size());
                align_objective(a.points, b.points, ta, tb, t, cfg.lambda, cfg.squared, &grad, sa, sb);
                if (!grad.all_finite()) {
                    throw DivergenceError("alignment gradient became non-finite in iteration " + std::to_string(it));
                }
                opt_ab.step(t.ab.values(), grad.ab.values());
                opt_ba.step(t.ba.values(), grad.ba.values());
                opt_abs.step(t.ab_shift, grad.ab_shift);
                opt_bas.step(t.ba_shift, grad.ba_shift);
            }
            rec.loss_after = loss_align(a, b, c, t, cfg.lambda, cfg.squared);
            if (!std::isfinite(rec.loss_after) || !t.all_finite()) {
                throw DivergenceError("alignment loss became non-finite in iteration " + std::to_string(it));
            }
            history.push_back(rec);
            final_loss = rec.loss_after;
            if (on_iteration) on_iteration(rec);
            prev = std::move(c);
        }

        result.restart_losses.push_back(final_loss);
        if (final_loss < best) {
            best = final_loss;
            result.transforms = t;
            result.history = std::move(history);
            result.kept_restart = restart;
        }
    }
    return result;
}

// Recognition: each audio token maps to the label of its nearest transformed text point.
inline std::vector<std::pair<std::string, std::string>> recognize(const ProjectedCloud& a, const ProjectedCloud& b,
                                                                  const AffineTransformPair& t) {
    detail::require_same_dim(a, b, t);
    if (b.size() == 0) throw ShapeError("recognize: empty text cloud");
    const auto nearest = detail::nearest_rows(a.points, detail::transform_rows(b.points, t.ba, t.ba_shift));
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.emplace_back(a.labels[i], b.labels[nearest[i]]);
    return out;
}

} // namespace uasr

#endif
