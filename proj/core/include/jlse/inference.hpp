#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jlse/dataset.hpp"
#include "jlse/mat.hpp"
#include "jlse/model.hpp"
#include "jlse/training.hpp"

namespace jlse {

/// Codes for the unseen classes' attribute vectors and for test instances.
struct UnseenCodes {
  Mat source;  ///< C' x h_s, simplex rows
  Mat target;  ///< M x h_t
};

enum class Estimation {
  kPlain,          ///< data-fit terms only
  kDissimilarity,  ///< data fit plus label -1 hinge against every seen code
  kFullPairwise,   ///< per-(class, instance) coupled alternation
};

enum class DecisionRule {
  kSimilarity,  ///< argmax of the similarity log-likelihood alone
  kSourceFit,   ///< similarity plus the source data-fit term
};

std::string to_string(Estimation e);
std::string to_string(DecisionRule r);
Estimation parse_estimation(const std::string& s);
DecisionRule parse_decision_rule(const std::string& s);

struct InferenceOptions {
  EncodeOptions encode;
  /// Multiplier on each dissimilarity hinge relative to the fit term. Empty
  /// means 1/N for source codes and 1/C for target codes, the same balance the
  /// training objective uses.
  std::optional<double> dissimilarity_weight;
  /// Cap on C' for the per-pair test algorithm.
  std::size_t max_full_classes = 100;
  double pair_tolerance = 1e-6;
  std::size_t pair_max_iterations = 100;
  /// Predictions whose winning score falls below this are flagged rejected.
  std::optional<double> reject_threshold;
};

struct Prediction {
  std::size_t class_index = 0;  ///< row of the unseen source dataset
  ClassId class_id = 0;
  double score = 0.0;
  Vec class_scores;
  bool rejected = false;
};

/// Codes from the data-fit terms only.
UnseenCodes encode_plain(const SourceDataset& unseen_src, const Mat& unseen_tgt,
                         const ModelParams& params, const InferenceOptions& options = {});

/// Dissimilarity-regularized estimation, warm-started at the plain codes.
/// A seen-code matrix with zero rows reduces to encode_plain.
UnseenCodes estimate_unseen_embeddings(const SourceDataset& unseen_src, const Mat& unseen_tgt,
                                       const ModelParams& params, const LatentCodes& seen_codes,
                                       const InferenceOptions& options = {});

/// Similarity rule: rank classes by -hinge(+1, score); saturated ties go to the
/// larger raw score, then the lowest class index.
std::vector<Prediction> predict_decision1(const UnseenCodes& codes, const SourceDataset& unseen_src,
                                          const ModelParams& params,
                                          const InferenceOptions& options = {});

/// Source-fit rule: -source_nll(z_s, x_s) - hinge(+1, score); same tie rules.
std::vector<Prediction> predict_decision2(const UnseenCodes& codes, const SourceDataset& unseen_src,
                                          const ModelParams& params,
                                          const InferenceOptions& options = {});

std::vector<Prediction> predict(const UnseenCodes& codes, const SourceDataset& unseen_src,
                                const ModelParams& params, DecisionRule rule,
                                const InferenceOptions& options = {});

/// Coupled (z_s, z_t) alternation with label +1 for each unseen class; the
/// class with the largest converged log-likelihood wins.
Prediction predict_full(const SourceDataset& unseen_src, std::span<const double> x_t,
                        const ModelParams& params, const InferenceOptions& options = {});

std::vector<Prediction> predict_full(const SourceDataset& unseen_src, const Mat& unseen_tgt,
                                     const ModelParams& params,
                                     const InferenceOptions& options = {});

struct RankedItem {
  std::size_t instance = 0;
  double score = 0.0;
  double raw_score = 0.0;
};

/// All test instances ordered by the rule's score for class `class_index`,
/// descending. Saturated ties fall back to the raw bilinear score; remaining
/// ties keep index order.
std::vector<RankedItem> retrieve(std::size_t class_index, const UnseenCodes& codes,
                                 const SourceDataset& unseen_src, const ModelParams& params,
                                 DecisionRule rule = DecisionRule::kSourceFit);

}  // namespace jlse
