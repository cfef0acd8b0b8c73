#pragma once

#include <span>
#include <vector>

#include "jlse/dataset.hpp"
#include "jlse/mat.hpp"

namespace jlse {

/// Regularization weights of the three negative log-likelihood terms.
struct Lambdas {
  double source_code = 0.1;  ///< weight on |z_s|^2
  double source_fit = 1.0;   ///< weight on |x_s - B z_s|^2
  double target_code = 0.1;  ///< weight on |z_t|^2
  double target_fit = 1.0;   ///< weight on |x_t - D z_t|^2
  double similarity = 3e-4;  ///< ridge on |W|_F^2, applied once per pair

  bool operator==(const Lambdas&) const = default;
};

void validate(const Lambdas& lambdas);

/// B is d_s x h_s, D is d_t x h_t (rows in the unit ball), W is h_s x h_t.
struct ModelParams {
  Mat B;
  Mat D;
  Mat W;
  Lambdas lambdas;

  std::size_t source_latent() const noexcept { return B.cols(); }
  std::size_t target_latent() const noexcept { return D.cols(); }
};

void validate(const ModelParams& params);

/// +1 when source and target share a class, -1 otherwise.
enum class PairLabel : int { kSame = 1, kDifferent = -1 };

inline double sign(PairLabel y) { return static_cast<double>(static_cast<int>(y)); }

/// Latent codes of the seen training data. Source rows lie on the simplex.
struct LatentCodes {
  Mat source;  ///< C x h_s
  Mat target;  ///< N x h_t
};

/// Row-major C x N table of pair labels derived from class agreement.
std::vector<PairLabel> pair_labels(std::span<const ClassId> source_labels,
                                   std::span<const ClassId> target_labels);

double bilinear_score(std::span<const double> zs, std::span<const double> zt, const Mat& W);

/// max(0, 1 - y * score).
double hinge(PairLabel y, double score);
/// d hinge / d score, with 0 at the kink.
double hinge_slope(PairLabel y, double score);

/// (l1s/2)|z|^2 + (l2s/2)|x - Bz|^2.
double source_nll(std::span<const double> z, std::span<const double> x, const ModelParams& params);
Vec source_nll_gradient(std::span<const double> z, std::span<const double> x,
                        const ModelParams& params);

/// (l1t/2)|z|^2 + (l2t/2)|x - Dz|^2.
double target_nll(std::span<const double> z, std::span<const double> x, const ModelParams& params);
Vec target_nll_gradient(std::span<const double> z, std::span<const double> x,
                        const ModelParams& params);

/// (lW/2)|W|_F^2 + hinge(y, zs^T W zt).
double pair_nll(std::span<const double> zs, std::span<const double> zt, PairLabel y,
                const ModelParams& params);

struct PairGradient {
  Vec source;  ///< d / d zs
  Vec target;  ///< d / d zt
  Mat W;       ///< d / d W
};
PairGradient pair_nll_gradient(std::span<const double> zs, std::span<const double> zt, PairLabel y,
                               const ModelParams& params);

struct ObjectiveOptions {
  /// Divide the whole objective by N*C.
  bool normalize = false;
  /// Multiplier on the hinge of positive (same-class) pairs.
  double positive_weight = 1.0;
};

/// N * sum_i source_nll + C * sum_j target_nll + sum_ij pair_nll (minimization form).
double total_objective(const LatentCodes& codes, const SourceDataset& src, const TargetDataset& tgt,
                       const ModelParams& params, const ObjectiveOptions& options = {});

/// The three blocks of total_objective, each already multiplied by its outer factor.
struct ObjectiveParts {
  double source = 0.0;
  double target = 0.0;
  double pairs = 0.0;

  double total() const { return source + target + pairs; }
};
ObjectiveParts objective_parts(const LatentCodes& codes, const SourceDataset& src,
                               const TargetDataset& tgt, const ModelParams& params,
                               const ObjectiveOptions& options = {});

}  // namespace jlse
