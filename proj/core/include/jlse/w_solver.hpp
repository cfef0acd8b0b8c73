#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "jlse/mat.hpp"
#include "jlse/model.hpp"

namespace jlse {

/// Training pairs for the similarity matrix. Row k of `source`/`target` holds
/// the codes of pair k.
struct PairCodes {
  Mat source;  ///< n x h_s
  Mat target;  ///< n x h_t
  std::vector<PairLabel> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

/// All C x N combinations of seen codes, labelled by class agreement.
PairCodes cross_pairs(const LatentCodes& codes, std::span<const PairLabel> labels);

struct WSolveOptions {
  double positive_weight = 1.0;
  /// Stop when every projected dual gradient in an epoch is below this in magnitude.
  double tolerance = 1e-9;
  /// Also stop once the duality gap falls below this fraction of the primal.
  double gap_tolerance = 1e-5;
  std::size_t max_epochs = 20000;
  /// Dual start point, one entry per pair; clipped to the feasible box. Empty
  /// starts from zero.
  Vec initial_dual;
};

struct WSolveResult {
  Mat W;
  /// Final dual variables, usable as a warm start for a nearby problem.
  Vec dual;
  double objective = 0.0;
  std::size_t epochs = 0;
  bool converged = false;
  /// lambda == 0: the problem may be unbounded, result is the capped iterate.
  bool unbounded_warning = false;
};

/// sum_k [ (lambda/2)|W|_F^2 + c_k * hinge(y_k, zs_k^T W zt_k) ].
double w_objective(const Mat& W, const PairCodes& pairs, double lambda,
                   double positive_weight = 1.0);

/// Minimizes w_objective exactly. The problem is a linear SVM without bias on
/// the features vec(zs zt^T); it is solved in the dual by cyclic coordinate
/// descent, which is deterministic.
WSolveResult solve_w(const PairCodes& pairs, double lambda, const WSolveOptions& options = {});

/// Convenience overload over all seen pairs.
WSolveResult solve_w(const LatentCodes& codes, std::span<const PairLabel> labels, double lambda,
                     const WSolveOptions& options = {});

}  // namespace jlse
