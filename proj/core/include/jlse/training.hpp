#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jlse/dataset.hpp"
#include "jlse/mat.hpp"
#include "jlse/model.hpp"
#include "jlse/w_solver.hpp"

namespace jlse {

enum class Algorithm { kSimplified, kFullPairwise };
enum class SourceInit { kAttributes, kKMeans };

struct TrainConfig {
  /// h_s; 0 means "one atom per seen class".
  std::size_t source_latent = 0;
  std::size_t target_latent = 6;
  Lambdas lambdas;
  /// 0 returns the initialization (codes and W fitted once, no alternation).
  std::size_t max_outer_iterations = 50;
  /// Relative change of the objective between outer iterations.
  double outer_tolerance = 1e-5;
  double code_tolerance = 1e-9;
  std::size_t code_max_iterations = 1000;
  /// Per-pair alternation in the full algorithm.
  double pair_tolerance = 1e-6;
  std::size_t pair_max_iterations = 100;
  std::size_t max_pairs = 10000;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::kSimplified;
  SourceInit source_init = SourceInit::kAttributes;
  bool normalize_objective = false;
  double positive_weight = 1.0;
  /// False keeps W at zero, which decouples the source and target problems.
  bool learn_similarity = true;
};

void validate(const TrainConfig& cfg);

std::string to_string(Algorithm a);
std::string to_string(SourceInit s);
Algorithm parse_algorithm(const std::string& s);
SourceInit parse_source_init(const std::string& s);

struct Dictionaries {
  Mat B;
  Mat D;
};

/// B from the attribute vectors (or k-means centroids when h_s < C or k-means is
/// requested); D from the top eigenvectors of the centered target covariance.
Dictionaries init_dictionaries(const SourceDataset& src, const TargetDataset& tgt,
                               const TrainConfig& cfg);

/// Hinge terms tying one code to fixed partner codes. Row k of `directions` is
/// the partner projected through W, so the k-th score is dot(z, directions.row(k)).
/// `weights` multiply each hinge relative to the data-fit term.
struct Coupling {
  Mat directions;
  std::vector<PairLabel> labels;
  std::vector<double> weights;

  std::size_t size() const noexcept { return labels.size(); }
};

/// Directions W zt_k for a source code against every target code.
Coupling source_coupling(const Mat& W, const Mat& target_codes, std::span<const PairLabel> labels,
                         std::span<const double> weights);
/// Directions W^T zs_k for a target code against every source code.
Coupling target_coupling(const Mat& W, const Mat& source_codes, std::span<const PairLabel> labels,
                         std::span<const double> weights);

struct EncodeOptions {
  double tolerance = 1e-9;
  std::size_t max_iterations = 1000;
};

/// source_nll(z) + sum_k w_k hinge_k(z).
double source_code_objective(std::span<const double> z, std::span<const double> x,
                             const ModelParams& params, const Coupling* coupling);
double target_code_objective(std::span<const double> z, std::span<const double> x,
                             const ModelParams& params, const Coupling* coupling);

/// Minimizes source_code_objective over the simplex. Starts from `warm_start`
/// when given, otherwise from the uniform code. Coupling terms whose direction
/// is exactly zero are constant and dropped.
Vec encode_source(std::span<const double> x, const ModelParams& params,
                  const Coupling* coupling = nullptr, std::span<const double> warm_start = {},
                  const EncodeOptions& options = {});

/// Unconstrained minimization of target_code_objective; default start is zero.
Vec encode_target(std::span<const double> x, const ModelParams& params,
                  const Coupling* coupling = nullptr, std::span<const double> warm_start = {},
                  const EncodeOptions& options = {});

/// Least squares min_B sum_i |x_i - B z_i|^2 with 1e-8 diagonal jitter.
Mat update_b(const Mat& source_codes, const SourceDataset& src, const Lambdas& lambdas);
Mat least_squares_dictionary(const Mat& codes, const Mat& data);

/// Projected least squares over D with unit-ball rows, started at `current`.
Mat update_d(const Mat& target_codes, const TargetDataset& tgt, const Mat& current,
             const Lambdas& lambdas);
Mat projected_least_squares_dictionary(const Mat& codes, const Mat& data, const Mat& current);

enum class Block { kInit, kSourceCodes, kTargetCodes, kSourceDictionary, kTargetDictionary, kSimilarity };
std::string to_string(Block b);

struct TraceEntry {
  std::size_t iteration = 0;
  Block block = Block::kInit;
  double objective = 0.0;
};

struct FitResult {
  ModelParams params;
  LatentCodes codes;
  std::vector<TraceEntry> trace;
  std::size_t outer_iterations = 0;
  bool converged = false;
  bool w_unbounded_warning = false;
};

/// Block-coordinate descent on N sum source_nll + C sum target_nll + sum pair_nll.
/// Each outer iteration updates source codes, target codes, B, D, W in that order.
FitResult fit_simplified(const SourceDataset& src, const TargetDataset& tgt, const TrainConfig& cfg);

struct PairwiseFitResult {
  ModelParams params;
  /// Plain per-class codes under the final dictionaries, for test-time estimation.
  LatentCodes codes;
  PairCodes pair_codes;
  std::vector<TraceEntry> trace;
  std::size_t outer_iterations = 0;
  bool converged = false;
};

/// Per-pair objective sum_ij [source_nll(z_ij^s) + target_nll(z_ij^t) + pair_nll].
double pairwise_objective(const PairCodes& pairs, const SourceDataset& src, const TargetDataset& tgt,
                          const ModelParams& params, const ObjectiveOptions& options = {});

/// Every (class, instance) pair keeps its own coupled codes. Refuses C*N above
/// cfg.max_pairs.
PairwiseFitResult fit_full_pairwise(const SourceDataset& src, const TargetDataset& tgt,
                                    const TrainConfig& cfg);

}  // namespace jlse
