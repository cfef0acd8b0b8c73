#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "jlse/mat.hpp"

namespace jlse {

/// Euclidean projection onto the probability simplex {u >= 0, sum(u) = 1}.
/// Sort-and-threshold method, O(n log n).
Vec project_simplex(std::span<const double> v);

/// Rescales every row with l2 norm above 1 back onto the unit sphere.
Mat project_unit_ball_rows(const Mat& m);

/// Projected-gradient minimization problem.
///
/// `projection` may be empty, meaning the feasible set is the whole space.
/// The step size starts at `initial_step`, is multiplied by `shrink` until the
/// sufficient-decrease test
///     f(x+) <= f(x) - (armijo / t) * |x+ - x|^2
/// holds, and is multiplied by `grow` after each accepted step.
struct ProxProblem {
  using Objective = std::function<double(std::span<const double>)>;
  using Map = std::function<Vec(std::span<const double>)>;

  Objective objective;
  Map gradient;
  Map projection;
  Vec initial;

  double initial_step = 1.0;
  double shrink = 0.5;
  double grow = 2.0;
  double max_step = 1e6;
  double min_step = 1e-20;
  double armijo = 1e-4;
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
};

struct ProxResult {
  Vec point;
  /// Objective at the (projected) initial point followed by every accepted step.
  std::vector<double> trace;
  std::size_t iterations = 0;
  /// True when the step norm fell below tolerance or no descent step exists.
  bool converged = false;
};

/// Throws DivergedError when the objective is non-finite at the initial point.
ProxResult prox_minimize(const ProxProblem& problem);

struct EigenPairs {
  /// d x k, column c is the eigenvector of `values[c]`.
  Mat vectors;
  Vec values;
};

/// Top-k eigenpairs of a symmetric matrix by shifted power iteration with
/// deflation. Eigenvalues come out in decreasing order.
EigenPairs top_eigenpairs(const Mat& m, std::size_t k, double tolerance = 1e-10,
                          std::size_t max_iterations = 10000);

/// Convenience wrapper returning only the d x k eigenvector matrix.
Mat top_eigenvectors(const Mat& m, std::size_t k);

/// Lloyd's k-means with seeded farthest-point initialization.
/// Returns the k x d centroid matrix.
Mat kmeans_centroids(const Mat& x, std::size_t k, std::uint64_t seed,
                     std::size_t max_iterations = 300);

/// Solves A X = B for symmetric positive definite A via Cholesky.
/// `jitter` is added to the diagonal first.
Mat solve_spd(Mat a, const Mat& b, double jitter = 0.0);

/// Covariance of the rows of x after centering (d x d, normalized by n).
Mat centered_covariance(const Mat& x);

}  // namespace jlse
