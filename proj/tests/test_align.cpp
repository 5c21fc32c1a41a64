#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "uasr/align/cloud.hpp"
#include "uasr/align/icp.hpp"
#include "uasr/align/io.hpp"

using namespace uasr;

namespace {

std::vector<std::string> labels(std::size_t n, const std::string& prefix = "w") {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

ProjectedCloud random_cloud(std::size_t n, std::size_t k, Rng& rng, const std::string& prefix = "w") {
    return make_cloud(labels(n, prefix), oracle::random_matrix(n, k, rng));
}

AffineTransformPair random_transforms(std::size_t k, Rng& rng, double scale = 0.5) {
    AffineTransformPair t = AffineTransformPair::identity(k);
    for (double& v : t.ab.values()) v += scale * rng.normal();
    for (double& v : t.ba.values()) v += scale * rng.normal();
    t.ab_shift = oracle::random_vector(k, rng, scale);
    t.ba_shift = oracle::random_vector(k, rng, scale);
    return t;
}

// Rows of a mapped through m (b_i = m a_i).
Matrix rotate_rows(const Matrix& a, const Matrix& m) { return oracle::matmul(a, m.transposed()); }

double frobenius_diff(const Matrix& x, const Matrix& y) {
    Matrix d = x;
    d -= y;
    return frobenius_norm(d);
}

WordEmbeddingTable random_table(std::size_t n, std::size_t dim, Rng& rng) {
    WordEmbeddingTable t(dim);
    for (std::size_t i = 0; i < n; ++i) t.add("t" + std::to_string(i), oracle::random_vector(dim, rng), n - i);
    return t;
}

} // namespace

// ---- project_cloud

TEST(ProjectCloud, FullRankProjectionIsARotation) {
    Rng rng(1);
    const auto table = random_table(30, 5, rng);
    const auto c = project_cloud(table, 5, 5000);
    ASSERT_EQ(c.size(), 30u);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 30; ++j) {
            const double before = std::sqrt(squared_distance(table.vector(i), table.vector(j)));
            const double after = std::sqrt(squared_distance(c.points.row(*c.find(table.token(i))), c.points.row(*c.find(table.token(j)))));
            EXPECT_NEAR(before, after, 1e-8);
        }
}

TEST(ProjectCloud, MatchesFitThenProjectComposition) {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto table = random_table(40, 6, rng);
        const std::size_t cap = 25;
        for (bool normalize : {false, true}) {
            const auto c = project_cloud(table, 3, cap, normalize);
            ASSERT_EQ(c.size(), cap);
            Matrix raw(cap, 6);
            for (std::size_t r = 0; r < cap; ++r) {
                EXPECT_EQ(c.labels[r], table.token(r));  // counts descend with table order
                std::copy(table.vector(r).begin(), table.vector(r).end(), raw.row(r).begin());
            }
            const PcaBasis basis = pca_fit(raw, 3);
            for (std::size_t r = 0; r < cap; ++r) {
                Vector expected = pca_project(basis, raw.row(r));
                if (normalize)
                    for (std::size_t d = 0; d < 3; ++d) expected[d] /= std::sqrt(basis.explained_variance[d]);
                EXPECT_LE(oracle::max_abs_diff(c.points.row(r), expected), 1e-12);
            }
            if (normalize) {
                // Unit variance per projected dimension.
                for (std::size_t d = 0; d < 3; ++d) {
                    double ss = 0.0;
                    for (std::size_t r = 0; r < cap; ++r) ss += c.points(r, d) * c.points(r, d);
                    EXPECT_NEAR(ss / static_cast<double>(cap - 1), 1.0, 1e-10);
                }
            }
        }
    }
}

TEST(ProjectCloud, CapKeepsMostFrequentTokens) {
    WordEmbeddingTable t(2);
    t.add("rare", Vector{1, 0}, 1);
    t.add("common", Vector{0, 1}, 9);
    t.add("middle", Vector{1, 1}, 5);
    const auto c = project_cloud(t, 1, 2);
    EXPECT_EQ(c.labels, (std::vector<std::string>{"common", "middle"}));
}

TEST(ProjectCloud, TooFewTokensIsShapeError) {
    Rng rng(3);
    const auto table = random_table(5, 8, rng);
    EXPECT_THROW(project_cloud(table, 6, 5000), ShapeError);
    EXPECT_THROW(project_cloud(table, 3, 2), ShapeError);
    EXPECT_THROW(make_cloud(labels(3), Matrix(2, 2)), ShapeError);
}

TEST(RandomOrthogonal, RowsAreOrthonormal) {
    Rng rng(4);
    const Matrix q = random_orthogonal(12, rng);
    EXPECT_LE(oracle::max_abs_diff(oracle::matmul(q, q.transposed()), Matrix::identity(12)), 1e-12);
}

// ---- correspondences

TEST(Correspondences, MatchExhaustiveScan) {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_cloud(15, 4, rng), b = random_cloud(12, 4, rng, "v");
        const auto t = random_transforms(4, rng);
        const auto c = find_correspondences(a, b, t);
        EXPECT_EQ(c.a_to_b, oracle::nearest(a.points, b.points, t.ba, t.ba_shift));
        EXPECT_EQ(c.b_to_a, oracle::nearest(b.points, a.points, t.ab, t.ab_shift));
    }
}

TEST(Correspondences, IdenticalCloudsMapToThemselves) {
    Rng rng(6);
    const auto a = random_cloud(50, 5, rng);
    const auto c = find_correspondences(a, a, AffineTransformPair::identity(5));
    std::vector<std::size_t> id(50);
    std::iota(id.begin(), id.end(), 0);
    EXPECT_EQ(c.a_to_b, id);
    EXPECT_EQ(c.b_to_a, id);
}

TEST(Correspondences, RecoverPermutation) {
    Rng rng(7);
    const auto a = random_cloud(40, 3, rng);
    std::vector<std::size_t> pi(40);
    std::iota(pi.begin(), pi.end(), 0);
    rng.shuffle(pi);
    Matrix bp(40, 3);
    for (std::size_t i = 0; i < 40; ++i) std::copy(a.points.row(i).begin(), a.points.row(i).end(), bp.row(pi[i]).begin());
    const auto b = make_cloud(labels(40, "v"), bp);
    const auto c = find_correspondences(a, b, AffineTransformPair::identity(3));
    for (std::size_t i = 0; i < 40; ++i) {
        EXPECT_EQ(c.a_to_b[i], pi[i]);
        EXPECT_EQ(c.b_to_a[pi[i]], i);
    }
}

TEST(Correspondences, TiesGoToLowestIndex) {
    const auto a = make_cloud({"x"}, Matrix{{0.0}});
    const auto b = make_cloud({"p", "q", "r"}, Matrix{{2.0}, {-1.0}, {1.0}});
    EXPECT_EQ(find_correspondences(a, b, AffineTransformPair::identity(1)).a_to_b[0], 1u);
}

TEST(Correspondences, InvariantUnderUniformScaling) {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        auto a = random_cloud(20, 3, rng), b = random_cloud(25, 3, rng, "v");
        auto t = random_transforms(3, rng);
        const auto before = find_correspondences(a, b, t);
        const double s = 0.1 + 5.0 * rng.uniform();
        a.points *= s;
        b.points *= s;
        for (double& v : t.ab_shift) v *= s;
        for (double& v : t.ba_shift) v *= s;
        EXPECT_EQ(find_correspondences(a, b, t), before);
    }
}

TEST(Correspondences, DimensionMismatchIsShapeError) {
    Rng rng(9);
    EXPECT_THROW(find_correspondences(random_cloud(3, 2, rng), random_cloud(3, 3, rng), AffineTransformPair::identity(2)),
                 ShapeError);
}

// ---- alignment loss

TEST(LossAlign, MatchesBruteForceSummation) {
    Rng rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_cloud(12, 4, rng), b = random_cloud(9, 4, rng, "v");
        const auto t = random_transforms(4, rng);
        Correspondences c;
        for (std::size_t i = 0; i < a.size(); ++i) c.a_to_b.push_back(rng.index(b.size()));
        for (std::size_t j = 0; j < b.size(); ++j) c.b_to_a.push_back(rng.index(a.size()));
        for (bool squared : {true, false}) {
            const double lambda = 0.37;
            const double expected =
                oracle::loss_align(a.points, b.points, c.a_to_b, c.b_to_a, t.ab, t.ab_shift, t.ba, t.ba_shift, lambda, squared);
            EXPECT_NEAR(loss_align(a, b, c, t, lambda, squared), expected, 1e-10);
        }
    }
}

TEST(LossAlign, ZeroForIdenticalCloudsUnderIdentity) {
    Rng rng(11);
    const auto a = random_cloud(20, 3, rng);
    const auto t = AffineTransformPair::identity(3);
    EXPECT_EQ(loss_align(a, a, find_correspondences(a, a, t), t, 0.1), 0.0);
}

TEST(LossAlign, ZeroLambdaIsTwoSidedIcp) {
    Rng rng(12);
    const auto a = random_cloud(10, 3, rng), b = random_cloud(8, 3, rng, "v");
    const auto t = random_transforms(3, rng);
    const auto c = find_correspondences(a, b, t);
    long double expected = 0;
    for (std::size_t i = 0; i < a.size(); ++i) expected += oracle::sq_dist(b.points.row(c.a_to_b[i]), t.apply_ab(a.points.row(i)));
    for (std::size_t j = 0; j < b.size(); ++j) expected += oracle::sq_dist(a.points.row(c.b_to_a[j]), t.apply_ba(b.points.row(j)));
    EXPECT_NEAR(loss_align(a, b, c, t, 0.0), static_cast<double>(expected), 1e-10);
    // The cycle terms enter linearly in lambda.
    const double l0 = loss_align(a, b, c, t, 0.0), l1 = loss_align(a, b, c, t, 1.0);
    EXPECT_NEAR(loss_align(a, b, c, t, 0.25), l0 + 0.25 * (l1 - l0), 1e-10);
}

TEST(LossAlign, CycleTermsVanishForInversePair) {
    Rng rng(13);
    const auto a = random_cloud(10, 3, rng), b = random_cloud(10, 3, rng, "v");
    // Powers of two and a signed permutation keep T_ab T_ba = I exact in floating point.
    AffineTransformPair t = AffineTransformPair::zeros(3);
    t.ab = Matrix{{0.0, 2.0, 0.0}, {0.0, 0.0, -0.5}, {4.0, 0.0, 0.0}};
    t.ba = Matrix{{0.0, 0.0, 0.25}, {0.5, 0.0, 0.0}, {0.0, -2.0, 0.0}};
    ASSERT_EQ(oracle::matmul(t.ab, t.ba), Matrix::identity(3));
    ASSERT_EQ(oracle::matmul(t.ba, t.ab), Matrix::identity(3));
    const auto c = find_correspondences(a, b, t);
    EXPECT_EQ(loss_align(a, b, c, t, 0.8), loss_align(a, b, c, t, 0.0));
    EXPECT_EQ(cycle_residual(a, t), 0.0);
}

TEST(LossAlign, GradientMatchesFiniteDifferences) {
    Rng rng(14);
    for (bool squared : {true, false}) {
        for (int trial = 0; trial < 5; ++trial) {
            const auto a = random_cloud(8, 3, rng), b = random_cloud(7, 3, rng, "v");
            AffineTransformPair t = random_transforms(3, rng);
            const auto c = find_correspondences(a, b, t);
            AffineTransformPair grad = AffineTransformPair::zeros(3);
            loss_align(a, b, c, t, 0.3, squared, &grad);
            auto loss = [&] { return loss_align(a, b, c, t, 0.3, squared); };
            const auto check = oracle::check_gradient({{"T_ab", t.ab.values(), grad.ab.values()},
                                                       {"T_ba", t.ba.values(), grad.ba.values()},
                                                       {"T_ab.shift", t.ab_shift, grad.ab_shift},
                                                       {"T_ba.shift", t.ba_shift, grad.ba_shift}},
                                                      loss);
            EXPECT_LT(check.max_rel_error, 1e-4) << (squared ? "squared " : "plain ") << check.worst;
        }
    }
}

// ---- train_align

TEST(TrainAlign, IdenticalCloudsStayAtIdentity) {
    Rng rng(15);
    const auto a = random_cloud(200, 5, rng);
    AlignConfig cfg;
    cfg.k = 5;
    cfg.iterations = 20;
    const auto r = train_align(a, a, cfg);
    EXPECT_LE(oracle::max_abs_diff(r.transforms.ab, Matrix::identity(5)), 1e-6);
    EXPECT_LE(oracle::max_abs_diff(r.transforms.ba, Matrix::identity(5)), 1e-6);
    EXPECT_LE(oracle::max_abs_diff(r.transforms.ab_shift, Vector(5, 0.0)), 1e-6);
    for (const auto& h : r.history) EXPECT_LE(h.loss_after, 1e-10);
}

TEST(TrainAlign, FullyAnchoredRecoversRotation) {
    Rng rng(16);
    const std::size_t k = 10, n = 200;
    const Matrix pa = oracle::random_matrix(n, k, rng);
    const Matrix rot = random_orthogonal(k, rng);
    const auto a = make_cloud(labels(n), pa);
    const auto b = make_cloud(labels(n, "v"), rotate_rows(pa, rot));
    AnchorList anchors;
    for (std::size_t i = 0; i < n; ++i) anchors.emplace_back(i, i);
    AlignConfig cfg;
    cfg.k = k;
    cfg.iterations = 3000;
    const auto r = train_align(a, b, cfg, anchors);
    EXPECT_LT(frobenius_diff(r.transforms.ab, rot), 1e-2);
    EXPECT_LT(frobenius_diff(r.transforms.ba, rot.transposed()), 1e-2);
    // Smooth least squares on fixed pairs: no epoch may raise the alignment loss.
    for (const auto& h : r.history) EXPECT_LE(h.loss_after, h.loss_before + 1e-8) << "iteration " << h.iteration;
}

TEST(TrainAlign, LossFallsWithinMostIterationsOnNoiseFreeData) {
    Rng rng(17);
    const std::size_t k = 10, n = 200;
    const Matrix pa = oracle::random_matrix(n, k, rng);
    // A small rotation keeps the unsupervised problem within reach of the identity start.
    Matrix gen(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            gen(i, j) = 0.05 * rng.normal();
            gen(j, i) = -gen(i, j);
        }
    Matrix rot = Matrix::identity(k);
    rot += gen;
    for (std::size_t r = 0; r < k; ++r) {  // re-orthonormalise I + G
        auto row = rot.row(r);
        for (std::size_t p = 0; p < r; ++p) axpy(-dot(rot.row(p), row), rot.row(p), row);
        const double nr = norm(row);
        for (double& v : row) v /= nr;
    }
    const auto a = make_cloud(labels(n), pa);
    const auto b = make_cloud(labels(n, "v"), rotate_rows(pa, rot));
    AlignConfig cfg;
    cfg.k = k;
    cfg.iterations = 200;
    cfg.early_stop = false;
    const auto r = train_align(a, b, cfg);
    std::size_t ok = 0;
    for (const auto& h : r.history) ok += h.loss_after <= h.loss_before ? 1 : 0;
    EXPECT_GE(static_cast<double>(ok), 0.9 * static_cast<double>(r.history.size()));
    EXPECT_LT(r.history.back().loss_after, r.history.front().loss_before);
}

TEST(TrainAlign, DeterministicGivenSeed) {
    Rng rng(18);
    const auto a = random_cloud(60, 4, rng), b = random_cloud(50, 4, rng, "v");
    AlignConfig cfg;
    cfg.k = 4;
    cfg.iterations = 15;
    cfg.batch_size = 16;
    cfg.restarts = 2;
    const auto r1 = train_align(a, b, cfg), r2 = train_align(a, b, cfg);
    EXPECT_EQ(r1.transforms, r2.transforms);
    EXPECT_EQ(r1.restart_losses, r2.restart_losses);
    EXPECT_EQ(r1.restart_losses.size(), 2u);
    EXPECT_EQ(r1.transforms.ab.rows(), 4u);
}

TEST(TrainAlign, ClampsBatchAndRejectsBadAnchorsAndDiverges) {
    Rng rng(19);
    const auto a = random_cloud(20, 3, rng), b = random_cloud(20, 3, rng, "v");
    AlignConfig cfg;
    cfg.k = 3;
    cfg.iterations = 2;
    const auto r = train_align(a, b, cfg);
    EXPECT_EQ(r.warnings.size(), 1u);  // batch 200 > 20 points
    EXPECT_THROW(train_align(a, b, cfg, AnchorList{{0, 1}, {0, 2}}), DataError);
    EXPECT_THROW(train_align(a, b, cfg, AnchorList{{0, 99}}), ShapeError);
    cfg.learning_rate = 1e6;
    cfg.iterations = 50;
    EXPECT_THROW(train_align(a, b, cfg), DivergenceError);
    cfg.lambda = -1.0;
    EXPECT_THROW(train_align(a, b, cfg), DataError);
}

TEST(TrainAlign, ResolveAnchorsSkipsUnknownTokens) {
    const auto a = make_cloud({"x", "y"}, Matrix{{0.0}, {1.0}});
    const auto b = make_cloud({"p", "q"}, Matrix{{0.0}, {1.0}});
    std::vector<std::string> skipped;
    const auto anchors = resolve_anchors(a, b, {{"y", "p"}, {"z", "q"}}, &skipped);
    EXPECT_EQ(anchors, (AnchorList{{1, 0}}));
    EXPECT_EQ(skipped, (std::vector<std::string>{"z\tq"}));
}

// ---- recognition

TEST(Recognize, IdentityAndPermutedClones) {
    Rng rng(20);
    const auto a = random_cloud(30, 4, rng);
    const auto same = recognize(a, make_cloud(a.labels, a.points), AffineTransformPair::identity(4));
    for (const auto& [x, y] : same) EXPECT_EQ(x, y);

    std::vector<std::size_t> pi(30);
    std::iota(pi.begin(), pi.end(), 0);
    rng.shuffle(pi);
    Matrix bp(30, 4);
    std::vector<std::string> bl(30);
    for (std::size_t i = 0; i < 30; ++i) {
        std::copy(a.points.row(i).begin(), a.points.row(i).end(), bp.row(pi[i]).begin());
        bl[pi[i]] = "text_" + a.labels[i];
    }
    const auto out = recognize(a, make_cloud(bl, bp), AffineTransformPair::identity(4));
    for (const auto& [x, y] : out) EXPECT_EQ(y, "text_" + x);
}

TEST(Recognize, MatchesExhaustiveScan) {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_cloud(15, 3, rng), b = random_cloud(20, 3, rng, "v");
        const auto t = random_transforms(3, rng);
        const auto nearest = oracle::nearest(a.points, b.points, t.ba, t.ba_shift);
        const auto out = recognize(a, b, t);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(out[i].first, a.labels[i]);
            EXPECT_EQ(out[i].second, b.labels[nearest[i]]);
        }
    }
}

// ---- file formats

TEST(TransformFile, RoundTripIsBitExact) {
    Rng rng(22);
    TransformFile f{random_transforms(4, rng), 0.1, 37};
    const std::string text = format_transform(f);
    const auto back = parse_transform(text);
    EXPECT_EQ(back.transforms, f.transforms);
    EXPECT_EQ(back.lambda, 0.1);
    EXPECT_EQ(back.iterations, 37u);
    EXPECT_EQ(format_transform(back), text);
    const auto dir = std::filesystem::path(UASR_TEST_TMP) / "align";
    std::filesystem::create_directories(dir);
    save_transform(f, dir / "t.txt");
    EXPECT_EQ(load_transform(dir / "t.txt").transforms, f.transforms);
}

TEST(TransformFile, RejectsMalformedInput) {
    EXPECT_THROW(parse_transform(""), ParseError);
    EXPECT_THROW(parse_transform("2 0.1\n"), ParseError);
    EXPECT_THROW(parse_transform("1 0.1 3\n1\n2\n"), ParseError);  // missing blank separator
    EXPECT_THROW(parse_transform("1 0.1 3\n1 2\n"), ParseError);
    EXPECT_THROW(parse_transform("1 0.1 3\n1\n\n1\n\n0\n"), ParseError);  // truncated
}

TEST(TokenPairs, RoundTripAndComments) {
    const TokenPairs pairs{{"a1", "x"}, {"a2", "y"}};
    EXPECT_EQ(parse_token_pairs(format_token_pairs(pairs)), pairs);
    EXPECT_EQ(parse_token_pairs("# anchors\n\na1\tx\r\n"), (TokenPairs{{"a1", "x"}}));
    try {
        parse_token_pairs("a\tb\nonly\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}
