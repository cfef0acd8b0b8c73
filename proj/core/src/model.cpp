#include "jlse/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "jlse/errors.hpp"

namespace jlse {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace

void validate(const SourceDataset& src) {
  if (src.labels.size() != src.x.rows())
    throw InvalidArgument("source dataset: label count does not match rows");
  std::set<ClassId> seen(src.labels.begin(), src.labels.end());
  if (seen.size() != src.labels.size()) throw InvalidArgument("source dataset: duplicate class label");
  if (!src.x.all_finite()) throw InvalidArgument("source dataset: non-finite entry");
}

void validate(const TargetDataset& tgt) {
  if (tgt.labels.size() != tgt.x.rows())
    throw InvalidArgument("target dataset: label count does not match rows");
  if (tgt.x.rows() == 0) throw InvalidArgument("target dataset: no instances");
  if (!tgt.x.all_finite()) throw InvalidArgument("target dataset: non-finite entry");
}

void validate(const SourceDataset& src, const TargetDataset& tgt) {
  validate(src);
  validate(tgt);
  std::set<ClassId> classes(src.labels.begin(), src.labels.end());
  for (ClassId y : tgt.labels) {
    if (!classes.contains(y))
      throw InvalidArgument("target label " + std::to_string(y) + " has no source vector");
  }
}

void validate(const Lambdas& l) {
  for (double v : {l.source_code, l.source_fit, l.target_code, l.target_fit, l.similarity}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("lambdas must be finite and >= 0");
  }
}

void validate(const ModelParams& p) {
  validate(p.lambdas);
  if (p.W.rows() != p.B.cols() || p.W.cols() != p.D.cols())
    throw DimensionError("model: W must be h_s x h_t");
  for (std::size_t r = 0; r < p.D.rows(); ++r) {
    if (norm(p.D.row(r)) > 1.0 + 1e-9) throw InvalidArgument("model: D row outside the unit ball");
  }
}

std::vector<PairLabel> pair_labels(std::span<const ClassId> source_labels,
                                   std::span<const ClassId> target_labels) {
  std::vector<PairLabel> out;
  out.reserve(source_labels.size() * target_labels.size());
  for (ClassId ys : source_labels)
    for (ClassId yt : target_labels)
      out.push_back(ys == yt ? PairLabel::kSame : PairLabel::kDifferent);
  return out;
}

double bilinear_score(std::span<const double> zs, std::span<const double> zt, const Mat& W) {
  require(zs.size() == W.rows() && zt.size() == W.cols(), "bilinear_score: dimension mismatch");
  double s = 0.0;
  for (std::size_t a = 0; a < W.rows(); ++a) {
    if (zs[a] == 0.0) continue;
    s += zs[a] * dot(W.row(a), zt);
  }
  return s;
}

double hinge(PairLabel y, double score) { return std::max(0.0, 1.0 - sign(y) * score); }

double hinge_slope(PairLabel y, double score) { return 1.0 - sign(y) * score > 0.0 ? -sign(y) : 0.0; }

double source_nll(std::span<const double> z, std::span<const double> x, const ModelParams& p) {
  require(z.size() == p.B.cols() && x.size() == p.B.rows(), "source_nll: dimension mismatch");
  const Vec r = subtract(x, matvec(p.B, z));
  return 0.5 * p.lambdas.source_code * squared_norm(z) +
         0.5 * p.lambdas.source_fit * squared_norm(r);
}

Vec source_nll_gradient(std::span<const double> z, std::span<const double> x,
                        const ModelParams& p) {
  require(z.size() == p.B.cols() && x.size() == p.B.rows(), "source_nll: dimension mismatch");
  const Vec r = subtract(matvec(p.B, z), x);
  Vec g = matvec_t(p.B, r);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = p.lambdas.source_code * z[i] + p.lambdas.source_fit * g[i];
  return g;
}

double target_nll(std::span<const double> z, std::span<const double> x, const ModelParams& p) {
  require(z.size() == p.D.cols() && x.size() == p.D.rows(), "target_nll: dimension mismatch");
  const Vec r = subtract(x, matvec(p.D, z));
  return 0.5 * p.lambdas.target_code * squared_norm(z) +
         0.5 * p.lambdas.target_fit * squared_norm(r);
}

Vec target_nll_gradient(std::span<const double> z, std::span<const double> x,
                        const ModelParams& p) {
  require(z.size() == p.D.cols() && x.size() == p.D.rows(), "target_nll: dimension mismatch");
  const Vec r = subtract(matvec(p.D, z), x);
  Vec g = matvec_t(p.D, r);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = p.lambdas.target_code * z[i] + p.lambdas.target_fit * g[i];
  return g;
}

double pair_nll(std::span<const double> zs, std::span<const double> zt, PairLabel y,
                const ModelParams& p) {
  return 0.5 * p.lambdas.similarity * frobenius_sq(p.W) + hinge(y, bilinear_score(zs, zt, p.W));
}

PairGradient pair_nll_gradient(std::span<const double> zs, std::span<const double> zt, PairLabel y,
                               const ModelParams& p) {
  const double slope = hinge_slope(y, bilinear_score(zs, zt, p.W));
  PairGradient g;
  g.source = matvec(p.W, zt);
  g.target = matvec_t(p.W, zs);
  for (double& v : g.source) v *= slope;
  for (double& v : g.target) v *= slope;
  g.W = p.W;
  for (std::size_t a = 0; a < p.W.rows(); ++a)
    for (std::size_t b = 0; b < p.W.cols(); ++b)
      g.W(a, b) = p.lambdas.similarity * p.W(a, b) + slope * zs[a] * zt[b];
  return g;
}

ObjectiveParts objective_parts(const LatentCodes& codes, const SourceDataset& src,
                               const TargetDataset& tgt, const ModelParams& params,
                               const ObjectiveOptions& options) {
  const std::size_t C = src.size();
  const std::size_t N = tgt.size();
  if (codes.source.rows() != C || codes.target.rows() != N)
    throw DimensionError("total_objective: code rows do not match datasets");
  if (src.labels.size() != C || tgt.labels.size() != N)
    throw DimensionError("total_objective: label count mismatch");

  ObjectiveParts parts;
  for (std::size_t i = 0; i < C; ++i)
    parts.source += source_nll(codes.source.row(i), src.x.row(i), params);
  for (std::size_t j = 0; j < N; ++j)
    parts.target += target_nll(codes.target.row(j), tgt.x.row(j), params);
  parts.source *= static_cast<double>(N);
  parts.target *= static_cast<double>(C);

  const double ridge = 0.5 * params.lambdas.similarity * frobenius_sq(params.W);
  double hinge_sum = 0.0;
  for (std::size_t i = 0; i < C; ++i) {
    // W^T zs_i once per source row.
    const Vec projected = matvec_t(params.W, codes.source.row(i));
    for (std::size_t j = 0; j < N; ++j) {
      const PairLabel y = src.labels[i] == tgt.labels[j] ? PairLabel::kSame : PairLabel::kDifferent;
      const double w = y == PairLabel::kSame ? options.positive_weight : 1.0;
      hinge_sum += w * hinge(y, dot(projected, codes.target.row(j)));
    }
  }
  parts.pairs = static_cast<double>(C * N) * ridge + hinge_sum;

  if (options.normalize) {
    const double scale = 1.0 / static_cast<double>(C * N);
    parts.source *= scale;
    parts.target *= scale;
    parts.pairs *= scale;
  }
  return parts;
}

double total_objective(const LatentCodes& codes, const SourceDataset& src, const TargetDataset& tgt,
                       const ModelParams& params, const ObjectiveOptions& options) {
  return objective_parts(codes, src, tgt, params, options).total();
}

}  // namespace jlse
