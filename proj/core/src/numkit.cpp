#include "jlse/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "jlse/errors.hpp"

namespace jlse {

Vec project_simplex(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("project_simplex: empty vector");
  Vec sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  // Largest rho with sorted[rho] - (cumsum[rho] - 1) / (rho + 1) > 0.
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumsum += sorted[i];
    const double candidate = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }

  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

Mat project_unit_ball_rows(const Mat& m) {
  Mat out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double n = norm(row);
    if (n > 1.0) {
      for (double& x : row) x /= n;
    }
  }
  return out;
}

ProxResult prox_minimize(const ProxProblem& p) {
  if (!(p.tolerance > 0.0)) throw InvalidArgument("prox_minimize: tolerance must be positive");
  if (!p.objective || !p.gradient) throw InvalidArgument("prox_minimize: missing evaluator");

  auto project = [&](Vec x) { return p.projection ? p.projection(x) : x; };

  ProxResult result;
  Vec x = project(p.initial);
  double fx = p.objective(x);
  if (!std::isfinite(fx)) throw DivergedError("prox_minimize: non-finite objective at initial point");
  result.trace.push_back(fx);

  double step = p.initial_step;
  Vec candidate(x.size());
  for (std::size_t it = 0; it < p.max_iterations; ++it) {
    const Vec g = p.gradient(x);
    bool accepted = false;
    double step_sq = 0.0;
    double f_candidate = fx;
    while (step >= p.min_step) {
      for (std::size_t i = 0; i < x.size(); ++i) candidate[i] = x[i] - step * g[i];
      candidate = project(std::move(candidate));
      step_sq = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = candidate[i] - x[i];
        step_sq += d * d;
      }
      if (step_sq == 0.0) break;
      f_candidate = p.objective(candidate);
      if (std::isfinite(f_candidate) && f_candidate <= fx - (p.armijo / step) * step_sq) {
        accepted = true;
        break;
      }
      step *= p.shrink;
    }
    result.iterations = it + 1;
    if (!accepted) {
      // Stationary up to the smallest admissible step.
      result.converged = true;
      break;
    }
    x.swap(candidate);
    candidate.resize(x.size());
    fx = f_candidate;
    result.trace.push_back(fx);
    if (std::sqrt(step_sq) < p.tolerance) {
      result.converged = true;
      break;
    }
    step = std::min(step * p.grow, p.max_step);
  }
  result.point = std::move(x);
  return result;
}

EigenPairs top_eigenpairs(const Mat& m, std::size_t k, double tolerance,
                          std::size_t max_iterations) {
  const std::size_t d = m.rows();
  if (m.cols() != d) throw InvalidArgument("top_eigenvectors: matrix must be square");
  if (k == 0 || k > d) {
    throw InvalidArgument("top_eigenvectors: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(d) + "]");
  }

  // Gershgorin shift so that the largest-magnitude eigenvalue is the largest algebraic one.
  double shift = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    double s = 0.0;
    for (double v : m.row(r)) s += std::abs(v);
    shift = std::max(shift, s);
  }
  Mat work = m;
  for (std::size_t i = 0; i < d; ++i) work(i, i) += shift;

  std::mt19937_64 rng(0x5eed'e19e'0000'0001ULL);
  std::normal_distribution<double> normal;

  EigenPairs out{Mat(d, k), Vec(k)};
  for (std::size_t c = 0; c < k; ++c) {
    Vec v(d);
    for (double& x : v) x = normal(rng);
    double n = norm(v);
    for (double& x : v) x /= n;

    double lambda = 0.0;
    for (std::size_t it = 0; it < max_iterations; ++it) {
      Vec next = matvec(work, v);
      lambda = dot(v, next);
      n = norm(next);
      if (n == 0.0) break;  // remaining spectrum deflated to zero
      for (double& x : next) x /= n;
      double diff = 0.0;
      for (std::size_t i = 0; i < d; ++i) diff += (next[i] - v[i]) * (next[i] - v[i]);
      v.swap(next);
      if (std::sqrt(diff) < tolerance) break;
    }
    lambda = dot(v, matvec(work, v));

    // Deflate: work -= lambda v v^T.
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) work(i, j) -= lambda * v[i] * v[j];

    out.vectors.set_col(c, v);
    out.values[c] = lambda - shift;
  }
  return out;
}

Mat top_eigenvectors(const Mat& m, std::size_t k) { return top_eigenpairs(m, k).vectors; }

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Index of the nearest centroid; ties go to the lowest index.
std::size_t nearest(std::span<const double> x, const Mat& centroids, double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double dc = squared_distance(x, centroids.row(c));
    if (dc < best_d) {
      best_d = dc;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

// Row farthest from its nearest centroid among the first `active` centroids.
std::size_t farthest_row(const Mat& x, const Mat& centroids, std::size_t active) {
  std::size_t best = 0;
  double best_d = -1.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < active; ++c)
      dmin = std::min(dmin, squared_distance(x.row(r), centroids.row(c)));
    if (dmin > best_d) {
      best_d = dmin;
      best = r;
    }
  }
  return best;
}

}  // namespace

Mat kmeans_centroids(const Mat& x, std::size_t k, std::uint64_t seed, std::size_t max_iterations) {
  if (k == 0 || k > x.rows()) {
    throw InvalidArgument("kmeans_centroids: k=" + std::to_string(k) + " but only " +
                          std::to_string(x.rows()) + " rows");
  }
  const std::size_t n = x.rows();
  Mat centroids(k, x.cols());

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centroids.set_row(0, x.row(pick(rng)));
  for (std::size_t c = 1; c < k; ++c) centroids.set_row(c, x.row(farthest_row(x, centroids, c)));

  std::vector<std::size_t> assignment(n, k);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t a = nearest(x.row(r), centroids);
      if (a != assignment[r]) {
        assignment[r] = a;
        changed = true;
      }
    }
    if (!changed) break;

    Mat sums(k, x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t r = 0; r < n; ++r) {
      auto s = sums.row(assignment[r]);
      auto xr = x.row(r);
      for (std::size_t j = 0; j < x.cols(); ++j) s[j] += xr[j];
      ++counts[assignment[r]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto s = sums.row(c);
      for (double& v : s) v /= static_cast<double>(counts[c]);
      centroids.set_row(c, s);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // Empty cluster: reseed at the point worst served by the current centroids.
      const std::size_t r = farthest_row(x, centroids, k);
      centroids.set_row(c, x.row(r));
      assignment[r] = c;
    }
  }
  return centroids;
}

Mat solve_spd(Mat a, const Mat& b, double jitter) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw DimensionError("solve_spd: shape mismatch");
  for (std::size_t i = 0; i < n; ++i) a(i, i) += jitter;

  // In-place lower Cholesky factor.
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
    if (!(diag > 0.0)) throw InvalidArgument("solve_spd: matrix is not positive definite");
    const double ljj = std::sqrt(diag);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }

  Mat x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * x(k, c);
      x(i, c) = s / a(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= a(k, ii) * x(k, c);
      x(ii, c) = s / a(ii, ii);
    }
  }
  return x;
}

Mat centered_covariance(const Mat& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n == 0) throw InvalidArgument("centered_covariance: no rows");
  Vec mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(r, j);
  for (double& m : mean) m /= static_cast<double>(n);

  Mat centered = x;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) centered(r, j) -= mean[j];
  Mat cov = matmul_at_b(centered, centered);
  for (double& v : cov.data()) v /= static_cast<double>(n);
  return cov;
}

}  // namespace jlse
