#include "jlse/inference.hpp"

#include <algorithm>
#include <cmath>

#include "jlse/errors.hpp"

namespace jlse {

std::string to_string(Estimation e) {
  switch (e) {
    case Estimation::kPlain: return "plain";
    case Estimation::kDissimilarity: return "alg4";
    case Estimation::kFullPairwise: return "alg3";
  }
  return "unknown";
}

std::string to_string(DecisionRule r) { return r == DecisionRule::kSimilarity ? "eq21" : "eq22"; }

Estimation parse_estimation(const std::string& s) {
  if (s == "plain") return Estimation::kPlain;
  if (s == "alg4") return Estimation::kDissimilarity;
  if (s == "alg3") return Estimation::kFullPairwise;
  throw InvalidArgument("unknown estimation '" + s + "'");
}

DecisionRule parse_decision_rule(const std::string& s) {
  if (s == "eq21") return DecisionRule::kSimilarity;
  if (s == "eq22") return DecisionRule::kSourceFit;
  throw InvalidArgument("unknown decision rule '" + s + "'");
}

namespace {

void check_shapes(const SourceDataset& unseen_src, const Mat& unseen_tgt, const ModelParams& p) {
  if (unseen_src.x.rows() > 0 && unseen_src.x.cols() != p.B.rows())
    throw DimensionError("unseen attribute dimension does not match B");
  if (unseen_tgt.rows() > 0 && unseen_tgt.cols() != p.D.rows())
    throw DimensionError("test feature dimension does not match D");
}

// True when every hinge term is constant in the code.
bool inert(const Coupling& c) {
  for (double v : c.directions.data())
    if (v != 0.0) return false;
  return true;
}

struct Candidate {
  double score;
  double raw;
};

// Lexicographic (score, raw) comparison; strict so the lowest index survives ties.
bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.raw > b.raw;
}

Prediction pick(const std::vector<Candidate>& candidates, const SourceDataset& unseen_src,
                const InferenceOptions& options) {
  Prediction p;
  p.class_scores.reserve(candidates.size());
  for (const auto& c : candidates) p.class_scores.push_back(c.score);
  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k)
    if (better(candidates[k], candidates[best])) best = k;
  p.class_index = best;
  p.class_id = unseen_src.labels[best];
  p.score = candidates[best].score;
  p.rejected = options.reject_threshold.has_value() && p.score < *options.reject_threshold;
  return p;
}

std::vector<Prediction> predict_with(const UnseenCodes& codes, const SourceDataset& unseen_src,
                                     const ModelParams& params, bool with_source_fit,
                                     const InferenceOptions& options) {
  const std::size_t classes = codes.source.rows();
  if (classes == 0 || unseen_src.size() == 0)
    throw InvalidArgument("prediction needs at least one unseen class");
  if (unseen_src.size() != classes) throw DimensionError("unseen codes do not match classes");

  Vec offsets(classes, 0.0);
  if (with_source_fit)
    for (std::size_t c = 0; c < classes; ++c)
      offsets[c] = -source_nll(codes.source.row(c), unseen_src.x.row(c), params);

  std::vector<Vec> projected(classes);
  for (std::size_t c = 0; c < classes; ++c) projected[c] = matvec_t(params.W, codes.source.row(c));

  std::vector<Prediction> out;
  out.reserve(codes.target.rows());
  std::vector<Candidate> cands(classes);
  for (std::size_t j = 0; j < codes.target.rows(); ++j) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double raw = dot(projected[c], codes.target.row(j));
      cands[c] = {offsets[c] - hinge(PairLabel::kSame, raw), raw};
    }
    out.push_back(pick(cands, unseen_src, options));
  }
  return out;
}

}  // namespace

UnseenCodes encode_plain(const SourceDataset& unseen_src, const Mat& unseen_tgt,
                         const ModelParams& params, const InferenceOptions& options) {
  check_shapes(unseen_src, unseen_tgt, params);
  UnseenCodes out{Mat(unseen_src.size(), params.B.cols()), Mat(unseen_tgt.rows(), params.D.cols())};
  for (std::size_t i = 0; i < unseen_src.size(); ++i)
    out.source.set_row(i, encode_source(unseen_src.x.row(i), params, nullptr, {}, options.encode));
  for (std::size_t j = 0; j < unseen_tgt.rows(); ++j)
    out.target.set_row(j, encode_target(unseen_tgt.row(j), params, nullptr, {}, options.encode));
  return out;
}

UnseenCodes estimate_unseen_embeddings(const SourceDataset& unseen_src, const Mat& unseen_tgt,
                                       const ModelParams& params, const LatentCodes& seen_codes,
                                       const InferenceOptions& options) {
  UnseenCodes out = encode_plain(unseen_src, unseen_tgt, params, options);
  const std::size_t C = seen_codes.source.rows();
  const std::size_t N = seen_codes.target.rows();
  if (N > 0 && seen_codes.target.cols() != params.D.cols())
    throw DimensionError("seen target codes do not match D");
  if (C > 0 && seen_codes.source.cols() != params.B.cols())
    throw DimensionError("seen source codes do not match B");

  if (N > 0) {
    const std::vector<PairLabel> labels(N, PairLabel::kDifferent);
    const std::vector<double> weights(N, options.dissimilarity_weight.value_or(1.0 / static_cast<double>(N)));
    const Coupling coupling = source_coupling(params.W, seen_codes.target, labels, weights);
    if (!inert(coupling)) {
      for (std::size_t i = 0; i < out.source.rows(); ++i) {
        const Vec z(out.source.row(i).begin(), out.source.row(i).end());
        out.source.set_row(i, encode_source(unseen_src.x.row(i), params, &coupling, z, options.encode));
      }
    }
  }
  if (C > 0) {
    const std::vector<PairLabel> labels(C, PairLabel::kDifferent);
    const std::vector<double> weights(C, options.dissimilarity_weight.value_or(1.0 / static_cast<double>(C)));
    const Coupling coupling = target_coupling(params.W, seen_codes.source, labels, weights);
    if (!inert(coupling)) {
      for (std::size_t j = 0; j < out.target.rows(); ++j) {
        const Vec z(out.target.row(j).begin(), out.target.row(j).end());
        out.target.set_row(j, encode_target(unseen_tgt.row(j), params, &coupling, z, options.encode));
      }
    }
  }
  return out;
}

std::vector<Prediction> predict_decision1(const UnseenCodes& codes, const SourceDataset& unseen_src,
                                          const ModelParams& params,
                                          const InferenceOptions& options) {
  return predict_with(codes, unseen_src, params, false, options);
}

std::vector<Prediction> predict_decision2(const UnseenCodes& codes, const SourceDataset& unseen_src,
                                          const ModelParams& params,
                                          const InferenceOptions& options) {
  return predict_with(codes, unseen_src, params, true, options);
}

std::vector<Prediction> predict(const UnseenCodes& codes, const SourceDataset& unseen_src,
                                const ModelParams& params, DecisionRule rule,
                                const InferenceOptions& options) {
  return rule == DecisionRule::kSimilarity ? predict_decision1(codes, unseen_src, params, options)
                                           : predict_decision2(codes, unseen_src, params, options);
}

Prediction predict_full(const SourceDataset& unseen_src, std::span<const double> x_t,
                        const ModelParams& params, const InferenceOptions& options) {
  const std::size_t classes = unseen_src.size();
  if (classes == 0) throw InvalidArgument("prediction needs at least one unseen class");
  if (classes > options.max_full_classes) {
    throw InvalidArgument("per-pair testing over " + std::to_string(classes) +
                          " classes exceeds the cap of " + std::to_string(options.max_full_classes));
  }
  if (x_t.size() != params.D.rows()) throw DimensionError("test feature dimension does not match D");

  const PairLabel same = PairLabel::kSame;
  const double one = 1.0;
  const double ridge = 0.5 * params.lambdas.similarity * frobenius_sq(params.W);
  const Vec zt0 = encode_target(x_t, params, nullptr, {}, options.encode);

  std::vector<Candidate> cands(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto xs = unseen_src.x.row(c);
    Vec zs = encode_source(xs, params, nullptr, {}, options.encode);
    Vec zt = zt0;
    auto value = [&] {
      return source_nll(zs, xs, params) + target_nll(zt, x_t, params) + ridge +
             hinge(same, bilinear_score(zs, zt, params.W));
    };
    double prev = value();
    for (std::size_t it = 0; it < options.pair_max_iterations; ++it) {
      const Coupling cs = source_coupling(params.W, Mat(1, zt.size(), zt), {&same, 1}, {&one, 1});
      zs = encode_source(xs, params, &cs, zs, options.encode);
      const Coupling ct = target_coupling(params.W, Mat(1, zs.size(), zs), {&same, 1}, {&one, 1});
      zt = encode_target(x_t, params, &ct, zt, options.encode);
      const double cur = value();
      const bool done = std::abs(prev - cur) <= options.pair_tolerance * std::max(std::abs(prev), 1e-12);
      prev = cur;
      if (done) break;
    }
    cands[c] = {-prev, bilinear_score(zs, zt, params.W)};
  }
  return pick(cands, unseen_src, options);
}

std::vector<Prediction> predict_full(const SourceDataset& unseen_src, const Mat& unseen_tgt,
                                     const ModelParams& params, const InferenceOptions& options) {
  std::vector<Prediction> out;
  out.reserve(unseen_tgt.rows());
  for (std::size_t j = 0; j < unseen_tgt.rows(); ++j)
    out.push_back(predict_full(unseen_src, unseen_tgt.row(j), params, options));
  return out;
}

std::vector<RankedItem> retrieve(std::size_t class_index, const UnseenCodes& codes,
                                 const SourceDataset& unseen_src, const ModelParams& params,
                                 DecisionRule rule) {
  if (class_index >= codes.source.rows() || class_index >= unseen_src.size())
    throw InvalidArgument("retrieve: class index " + std::to_string(class_index) + " out of range");
  const auto zs = codes.source.row(class_index);
  const double offset =
      rule == DecisionRule::kSourceFit ? -source_nll(zs, unseen_src.x.row(class_index), params) : 0.0;
  const Vec projected = matvec_t(params.W, zs);

  std::vector<RankedItem> items(codes.target.rows());
  for (std::size_t j = 0; j < items.size(); ++j) {
    const double raw = dot(projected, codes.target.row(j));
    items[j] = {j, offset - hinge(PairLabel::kSame, raw), raw};
  }
  std::stable_sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
    return better({a.score, a.raw_score}, {b.score, b.raw_score});
  });
  return items;
}

}  // namespace jlse
