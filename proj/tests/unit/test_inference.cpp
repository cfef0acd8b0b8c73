#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "jlse/errors.hpp"
#include "jlse/inference.hpp"
#include "jlse/numkit.hpp"
#include "support.hpp"

using namespace jlse;
using namespace jlse::testing;

namespace {

ModelParams random_model(Rng& rng, std::size_t ds, std::size_t hs, std::size_t dt, std::size_t ht,
                         double w_scale) {
  ModelParams p;
  p.B = random_mat(rng, ds, hs);
  p.D = project_unit_ball_rows(random_mat(rng, dt, ht, 0.5));
  p.W = random_mat(rng, hs, ht, w_scale);
  p.lambdas = {0.1, 1.0, 0.1, 1.0, 0.01};
  return p;
}

SourceDataset classes_from(const Mat& x) {
  SourceDataset s{x, {}};
  for (std::size_t i = 0; i < x.rows(); ++i) s.labels.push_back(static_cast<ClassId>(10 + i));
  return s;
}

LatentCodes random_seen(Rng& rng, std::size_t C, std::size_t N, std::size_t hs, std::size_t ht) {
  LatentCodes codes{Mat(C, hs), random_mat(rng, N, ht)};
  for (std::size_t i = 0; i < C; ++i) codes.source.set_row(i, random_simplex(rng, hs));
  return codes;
}

ModelParams scoring_model(Mat W) {
  ModelParams p;
  p.B = Mat::identity(W.rows());
  p.D = Mat::identity(W.cols());
  p.W = std::move(W);
  return p;
}

}  // namespace

TEST_CASE("estimate_unseen_embeddings reduces to the plain encoders") {
  Rng rng(50);
  ModelParams p = random_model(rng, 5, 3, 6, 2, 1.0);
  const SourceDataset unseen = classes_from(random_mat(rng, 3, 5));
  const Mat tgt = random_mat(rng, 7, 6);
  const UnseenCodes plain = encode_plain(unseen, tgt, p);

  const LatentCodes empty{Mat(0, 3), Mat(0, 2)};
  const UnseenCodes none = estimate_unseen_embeddings(unseen, tgt, p, empty);
  CHECK(none.source == plain.source);
  CHECK(none.target == plain.target);

  p.W = Mat(3, 2);
  const UnseenCodes zero_w = estimate_unseen_embeddings(unseen, tgt, p, random_seen(rng, 4, 9, 3, 2));
  CHECK(zero_w.source == encode_plain(unseen, tgt, p).source);
  CHECK(zero_w.target == encode_plain(unseen, tgt, p).target);
}

TEST_CASE("estimate_unseen_embeddings never worsens the per-code objective") {
  Rng rng(51);
  for (int trial = 0; trial < 5; ++trial) {
    const ModelParams p = random_model(rng, 5, 3, 6, 2, 2.0);
    const SourceDataset unseen = classes_from(random_mat(rng, 3, 5));
    const Mat tgt = random_mat(rng, 6, 6);
    const LatentCodes seen = random_seen(rng, 4, 8, 3, 2);
    const UnseenCodes plain = encode_plain(unseen, tgt, p);
    const UnseenCodes est = estimate_unseen_embeddings(unseen, tgt, p, seen);

    const std::vector<PairLabel> neg_t(8, PairLabel::kDifferent), neg_s(4, PairLabel::kDifferent);
    const std::vector<double> w_t(8, 1.0 / 8.0), w_s(4, 1.0 / 4.0);
    const Coupling cs = source_coupling(p.W, seen.target, neg_t, w_t);
    const Coupling ct = target_coupling(p.W, seen.source, neg_s, w_s);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(source_code_objective(est.source.row(i), unseen.x.row(i), p, &cs) <=
            source_code_objective(plain.source.row(i), unseen.x.row(i), p, &cs) + 1e-10);
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(target_code_objective(est.target.row(j), tgt.row(j), p, &ct) <=
            target_code_objective(plain.target.row(j), tgt.row(j), p, &ct) + 1e-10);
  }
}

TEST_CASE("unseen code concentrates on the atoms its attribute mixes") {
  Rng rng(52);
  ModelParams p = random_model(rng, 8, 4, 5, 2, 1e-3);
  p.lambdas.source_code = 0.01;
  const Vec mix = [&] {
    Vec v(8);
    for (std::size_t r = 0; r < 8; ++r) v[r] = 0.5 * (p.B(r, 1) + p.B(r, 3));
    return v;
  }();
  const SourceDataset unseen = classes_from(Mat(1, 8, mix));
  const UnseenCodes est = estimate_unseen_embeddings(unseen, Mat(0, 5), p, random_seen(rng, 3, 6, 4, 2));
  CHECK(est.source(0, 0) + est.source(0, 2) < 0.05);
  CHECK(est.source(0, 1) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("predict_decision1: worked examples") {
  const ModelParams p = scoring_model(Mat::identity(2));
  const SourceDataset two = classes_from(Mat::identity(2));
  {
    const UnseenCodes codes{Mat::identity(2), Mat{{0.9, 0.1}}};
    CHECK(predict_decision1(codes, two, p)[0].class_index == 0);
  }
  {
    const UnseenCodes codes{Mat::identity(2), Mat{{1.5, 2.5}}};
    const Prediction pr = predict_decision1(codes, two, p)[0];
    CHECK(pr.class_index == 1);
    CHECK(pr.class_scores == Vec{0.0, 0.0});
  }
  {
    const UnseenCodes codes{Mat::identity(2), Mat{{0.4, 0.4}}};
    const Prediction pr = predict_decision1(codes, two, p)[0];
    CHECK(pr.class_index == 0);
    CHECK(pr.class_id == 10);
  }
  const UnseenCodes none{Mat(0, 2), Mat{{1, 1}}};
  CHECK_THROWS_AS(predict_decision1(none, SourceDataset{Mat(0, 2), {}}, p), InvalidArgument);
}

TEST_CASE("predict_decision1 is invariant to shrinking W below saturation") {
  Rng rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    ModelParams p = scoring_model(random_mat(rng, 3, 2, 0.2));
    UnseenCodes codes{Mat(4, 3), random_mat(rng, 5, 2)};
    for (std::size_t i = 0; i < 4; ++i) codes.source.set_row(i, random_simplex(rng, 3));
    const SourceDataset four = classes_from(random_mat(rng, 4, 3));
    bool saturated = false;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        saturated |= std::abs(bilinear_score(codes.source.row(i), codes.target.row(j), p.W)) >= 1.0;
    if (saturated) continue;
    const auto before = predict_decision1(codes, four, p);
    for (double& w : p.W.data()) w *= 0.37;
    const auto after = predict_decision1(codes, four, p);
    for (std::size_t j = 0; j < 5; ++j) CHECK(before[j].class_index == after[j].class_index);
  }
}

TEST_CASE("predict_decision2: worked examples") {
  // Equal source fit: an orthonormal B makes every class problem a permutation of the others.
  Rng rng(54);
  ModelParams p = scoring_model(random_mat(rng, 3, 2));
  const SourceDataset cls = classes_from(Mat::identity(3));
  const Mat tgt = random_mat(rng, 20, 2);
  const UnseenCodes codes = encode_plain(cls, tgt, p);
  const auto d1 = predict_decision1(codes, cls, p);
  const auto d2 = predict_decision2(codes, cls, p);
  for (std::size_t j = 0; j < 20; ++j) CHECK(d1[j].class_index == d2[j].class_index);

  // Same hinge, but the second attribute is outside the span of B.
  ModelParams q = scoring_model(Mat{{1.0}, {1.0}});
  q.lambdas = {0.1, 1.0, 0.1, 1.0, 0.0};
  const SourceDataset off{Mat{{0.0, 1.0, 3.0}, {0.0, 1.0, 0.0}}, {1, 2}};
  q.B = Mat{{1, 0}, {0, 1}, {0, 0}};
  const UnseenCodes same_hinge{Mat{{0.0, 1.0}, {0.0, 1.0}}, Mat{{0.5}}};
  CHECK(predict_decision1(same_hinge, off, q)[0].class_index == 0);
  CHECK(predict_decision2(same_hinge, off, q)[0].class_id == 2);

  const SourceDataset single = classes_from(Mat{{0.2, 0.8, 0.0}});
  const UnseenCodes one{Mat{{0.5, 0.5}}, Mat{{-3.0}, {4.0}}};
  for (const auto& pr : predict_decision2(one, single, q)) CHECK(pr.class_id == 10);
}

TEST_CASE("reject threshold flags low-scoring predictions") {
  const ModelParams p = scoring_model(Mat::identity(2));
  const SourceDataset two = classes_from(Mat::identity(2));
  const UnseenCodes codes{Mat::identity(2), Mat{{2.0, 0.0}, {0.1, 0.0}}};
  InferenceOptions opts;
  opts.reject_threshold = -0.5;
  const auto pr = predict_decision1(codes, two, p, opts);
  CHECK_FALSE(pr[0].rejected);
  CHECK(pr[1].rejected);
}

TEST_CASE("predict_full: zero W, single class, ascent over initialization") {
  Rng rng(55);
  ModelParams p = random_model(rng, 4, 3, 5, 2, 0.0);
  p.W = Mat(3, 2);
  // Class 1's attribute lies in the column span of B; class 0's is random.
  const Vec inside = matvec(p.B, Vec{0.2, 0.5, 0.3});
  Mat attrs = random_mat(rng, 2, 4, 3.0);
  attrs.set_row(1, inside);
  const SourceDataset cls = classes_from(attrs);
  const Vec x = random_vec(rng, 5);
  CHECK(predict_full(cls, x, p).class_index == 1);

  p = random_model(rng, 4, 3, 5, 2, 1.5);
  const SourceDataset one = classes_from(random_mat(rng, 1, 4));
  const Prediction pr = predict_full(one, x, p);
  CHECK(pr.class_id == 10);
  const Vec zs = encode_source(one.x.row(0), p);
  const Vec zt = encode_target(x, p);
  const double init = source_nll(zs, one.x.row(0), p) + target_nll(zt, x, p) +
                      pair_nll(zs, zt, PairLabel::kSame, p);
  CHECK(pr.score >= -init - 1e-10);

  InferenceOptions opts;
  opts.max_full_classes = 0;
  CHECK_THROWS_AS(predict_full(one, x, p, opts), InvalidArgument);
}

TEST_CASE("retrieve: ordering and stability") {
  const ModelParams p = scoring_model(Mat{{1.0}});
  const SourceDataset cls = classes_from(Mat{{1.0}});
  const UnseenCodes codes{Mat{{1.0}}, Mat{{0.9}, {0.1}, {0.5}}};
  std::vector<std::size_t> order;
  for (const auto& item : retrieve(0, codes, cls, p, DecisionRule::kSimilarity)) order.push_back(item.instance);
  CHECK(order == std::vector<std::size_t>{0, 2, 1});

  const UnseenCodes flat{Mat{{1.0}}, Mat{{0.3}, {0.3}, {0.3}, {0.3}}};
  order.clear();
  for (const auto& item : retrieve(0, flat, cls, p)) order.push_back(item.instance);
  CHECK(order == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(retrieve(1, flat, cls, p), InvalidArgument);
}

TEST_CASE("retrieve: separable planted data puts every true instance on top") {
  SynthSpec spec = acceptance_spec(21);
  spec.unseen_classes = 3;
  spec.samples_per_class = 10;
  spec.noise_sigma = 0.0;
  const SplitData d = split_synth(spec);
  TrainConfig cfg = acceptance_config();
  cfg.max_outer_iterations = 20;
  const FitResult fit = fit_simplified(d.seen_source, d.seen_target, cfg);
  const UnseenCodes codes = estimate_unseen_embeddings(d.unseen_source, d.unseen_target.x, fit.params, fit.codes);
  for (std::size_t c = 0; c < d.unseen_source.size(); ++c) {
    const auto ranked = retrieve(c, codes, d.unseen_source, fit.params);
    for (std::size_t k = 0; k < spec.samples_per_class; ++k)
      CHECK(d.unseen_target.labels[ranked[k].instance] == d.unseen_source.labels[c]);
  }
}

TEST_CASE("estimation and rule names round-trip") {
  for (Estimation e : {Estimation::kPlain, Estimation::kDissimilarity, Estimation::kFullPairwise})
    CHECK(parse_estimation(to_string(e)) == e);
  for (DecisionRule r : {DecisionRule::kSimilarity, DecisionRule::kSourceFit})
    CHECK(parse_decision_rule(to_string(r)) == r);
  CHECK_THROWS_AS(parse_decision_rule("eq99"), InvalidArgument);
}
