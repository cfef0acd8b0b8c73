#include "jlse/w_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "jlse/errors.hpp"

namespace jlse {

namespace {

// Shrinking can freeze a coordinate too early on near-degenerate problems;
// the full set is restored on this period.
constexpr std::size_t kUnshrinkEvery = 100;

double dot_unchecked(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

PairCodes cross_pairs(const LatentCodes& codes, std::span<const PairLabel> labels) {
  const std::size_t C = codes.source.rows();
  const std::size_t N = codes.target.rows();
  if (labels.size() != C * N) throw DimensionError("cross_pairs: label table is not C x N");
  PairCodes pairs{Mat(C * N, codes.source.cols()), Mat(C * N, codes.target.cols()),
                  std::vector<PairLabel>(labels.begin(), labels.end())};
  for (std::size_t i = 0; i < C; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      pairs.source.set_row(i * N + j, codes.source.row(i));
      pairs.target.set_row(i * N + j, codes.target.row(j));
    }
  }
  return pairs;
}

double w_objective(const Mat& W, const PairCodes& pairs, double lambda, double positive_weight) {
  const double ridge = 0.5 * lambda * frobenius_sq(W);
  double total = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double c = pairs.labels[k] == PairLabel::kSame ? positive_weight : 1.0;
    total += ridge + c * hinge(pairs.labels[k],
                               bilinear_score(pairs.source.row(k), pairs.target.row(k), W));
  }
  return total;
}

WSolveResult solve_w(const PairCodes& pairs, double lambda, const WSolveOptions& options) {
  const std::size_t n = pairs.size();
  const std::size_t hs = pairs.source.cols();
  const std::size_t ht = pairs.target.cols();
  if (pairs.source.rows() != n || pairs.target.rows() != n)
    throw DimensionError("solve_w: pair code rows do not match labels");
  if (!(lambda >= 0.0)) throw InvalidArgument("solve_w: lambda must be >= 0");

  WSolveResult result;
  result.W = Mat(hs, ht);
  if (n == 0) return result;

  const std::size_t dim = hs * ht;
  // Rescaled primal: (1/2)|w|^2 + sum_k U_k hinge_k, with U_k = c_k / (n lambda).
  double box_scale = 0.0;
  if (lambda > 0.0) {
    box_scale = 1.0 / (static_cast<double>(n) * lambda);
  } else {
    box_scale = 1e8;
    result.unbounded_warning = true;
  }

  Mat features(n, dim);
  Vec q(n);
  Vec upper(n);
  Vec y(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto f = features.row(k);
    auto zs = pairs.source.row(k);
    auto zt = pairs.target.row(k);
    for (std::size_t a = 0; a < hs; ++a)
      for (std::size_t b = 0; b < ht; ++b) f[a * ht + b] = zs[a] * zt[b];
    q[k] = squared_norm(f);
    y[k] = sign(pairs.labels[k]);
    upper[k] = (pairs.labels[k] == PairLabel::kSame ? options.positive_weight : 1.0) * box_scale;
  }

  if (!options.initial_dual.empty() && options.initial_dual.size() != n)
    throw DimensionError("solve_w: warm start has the wrong length");
  Vec alpha(n, 0.0);
  Vec w(dim, 0.0);
  if (!options.initial_dual.empty()) {
    for (std::size_t k = 0; k < n; ++k) {
      if (q[k] == 0.0) continue;
      alpha[k] = std::clamp(options.initial_dual[k], 0.0, upper[k]);
      if (alpha[k] == 0.0) continue;
      auto f = features.row(k);
      for (std::size_t d = 0; d < dim; ++d) w[d] += alpha[k] * y[k] * f[d];
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t epochs = result.unbounded_warning ? std::min<std::size_t>(options.max_epochs, 1000)
                                                      : options.max_epochs;
  // Primal (1/2)|w|^2 + sum_k U_k hinge_k against dual sum_k alpha_k - (1/2)|w|^2.
  auto relative_gap = [&] {
    double hinges = 0.0;
    double alpha_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (q[k] == 0.0) continue;  // hinge 1 on both sides at alpha = U
      alpha_sum += alpha[k];
      const double m = 1.0 - y[k] * dot_unchecked(w.data(), features.row(k).data(), dim);
      if (m > 0.0) hinges += upper[k] * m;
    }
    const double ww = dot_unchecked(w.data(), w.data(), dim);
    const double primal = 0.5 * ww + hinges;
    const double dual = alpha_sum - 0.5 * ww;
    return (primal - dual) / std::max(primal, 1e-300);
  };

  // Coordinates pinned at a bound with a gradient pushing further out are
  // shrunk from the active set; a full pass re-checks them before stopping.
  std::mt19937_64 rng(0x5eed);
  std::size_t active = n;
  double pg_max_old = std::numeric_limits<double>::infinity();
  double pg_min_old = -std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    std::shuffle(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(active), rng);
    for (std::size_t s = 0; s < active;) {
      const std::size_t k = order[s];
      if (q[k] == 0.0) {  // hinge is constant in W
        std::swap(order[s], order[--active]);
        continue;
      }
      const double* f = features.row(k).data();
      const double g = y[k] * dot_unchecked(w.data(), f, dim) - 1.0;
      double pg = 0.0;
      if (alpha[k] == 0.0) {
        if (g > pg_max_old) {
          std::swap(order[s], order[--active]);
          continue;
        }
        pg = std::min(g, 0.0);
      } else if (alpha[k] == upper[k]) {
        if (g < pg_min_old) {
          std::swap(order[s], order[--active]);
          continue;
        }
        pg = std::max(g, 0.0);
      } else {
        pg = g;
      }
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      ++s;
      if (pg == 0.0) continue;
      const double old = alpha[k];
      alpha[k] = std::clamp(old - g / q[k], 0.0, upper[k]);
      const double delta = (alpha[k] - old) * y[k];
      if (delta != 0.0)
        for (std::size_t d = 0; d < dim; ++d) w[d] += delta * f[d];
    }
    result.epochs = epoch + 1;
    if (active == 0) {
      pg_max = 0.0;
      pg_min = 0.0;
    }
    const bool settled = std::max(pg_max, -pg_min) < options.tolerance;
    if (epoch % 5 == 4 && relative_gap() < options.gap_tolerance) {
      result.converged = true;
      break;
    }
    if (settled || epoch % kUnshrinkEvery == kUnshrinkEvery - 1) {
      if (settled && active == n) {
        result.converged = true;
        break;
      }
      active = n;
      pg_max_old = std::numeric_limits<double>::infinity();
      pg_min_old = -std::numeric_limits<double>::infinity();
      continue;
    }
    pg_max_old = pg_max > 0.0 ? pg_max : std::numeric_limits<double>::infinity();
    pg_min_old = pg_min < 0.0 ? pg_min : -std::numeric_limits<double>::infinity();
  }

  result.W = Mat(hs, ht, std::move(w));
  result.dual = std::move(alpha);
  result.objective = w_objective(result.W, pairs, lambda, options.positive_weight);
  if (!std::isfinite(result.objective)) throw DivergedError("solve_w: non-finite objective");
  return result;
}

WSolveResult solve_w(const LatentCodes& codes, std::span<const PairLabel> labels, double lambda,
                     const WSolveOptions& options) {
  return solve_w(cross_pairs(codes, labels), lambda, options);
}

}  // namespace jlse
