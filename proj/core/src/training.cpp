#include "jlse/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jlse/errors.hpp"
#include "jlse/numkit.hpp"

namespace jlse {

void validate(const TrainConfig& cfg) {
  validate(cfg.lambdas);
  if (cfg.target_latent == 0) throw InvalidArgument("target latent dimension must be >= 1");
  if (!(cfg.outer_tolerance > 0.0) || !(cfg.code_tolerance > 0.0) || !(cfg.pair_tolerance > 0.0))
    throw InvalidArgument("tolerances must be positive");
  if (cfg.code_max_iterations == 0 || cfg.pair_max_iterations == 0)
    throw InvalidArgument("inner iteration caps must be >= 1");
  if (!(cfg.positive_weight > 0.0)) throw InvalidArgument("positive weight must be > 0");
}

std::string to_string(Algorithm a) { return a == Algorithm::kSimplified ? "simplified" : "full"; }

std::string to_string(SourceInit s) { return s == SourceInit::kAttributes ? "attributes" : "kmeans"; }

Algorithm parse_algorithm(const std::string& s) {
  if (s == "simplified") return Algorithm::kSimplified;
  if (s == "full") return Algorithm::kFullPairwise;
  throw InvalidArgument("unknown algorithm '" + s + "'");
}

SourceInit parse_source_init(const std::string& s) {
  if (s == "attributes") return SourceInit::kAttributes;
  if (s == "kmeans") return SourceInit::kKMeans;
  throw InvalidArgument("unknown source init '" + s + "'");
}

std::string to_string(Block b) {
  switch (b) {
    case Block::kInit: return "init";
    case Block::kSourceCodes: return "source_codes";
    case Block::kTargetCodes: return "target_codes";
    case Block::kSourceDictionary: return "source_dictionary";
    case Block::kTargetDictionary: return "target_dictionary";
    case Block::kSimilarity: return "similarity";
  }
  return "unknown";
}

Dictionaries init_dictionaries(const SourceDataset& src, const TargetDataset& tgt,
                               const TrainConfig& cfg) {
  const std::size_t C = src.size();
  const std::size_t hs = cfg.source_latent == 0 ? C : cfg.source_latent;
  if (hs > C) {
    throw InvalidArgument("source latent dimension " + std::to_string(hs) + " exceeds " +
                          std::to_string(C) + " seen classes");
  }
  if (cfg.target_latent > tgt.x.cols()) {
    throw InvalidArgument("target latent dimension " + std::to_string(cfg.target_latent) +
                          " exceeds feature dimension " + std::to_string(tgt.x.cols()));
  }

  Dictionaries out;
  if (cfg.source_init == SourceInit::kAttributes && hs == C) {
    out.B = src.x.transpose();
  } else {
    out.B = kmeans_centroids(src.x, hs, cfg.seed).transpose();
  }
  out.D = project_unit_ball_rows(top_eigenvectors(centered_covariance(tgt.x), cfg.target_latent));
  return out;
}

namespace {

Coupling make_coupling(Mat directions, std::span<const PairLabel> labels,
                       std::span<const double> weights) {
  if (labels.size() != directions.rows() || weights.size() != directions.rows())
    throw DimensionError("coupling: labels/weights do not match partner count");
  return {std::move(directions), {labels.begin(), labels.end()}, {weights.begin(), weights.end()}};
}

// `coupling` restricted to terms that depend on z.
struct ActiveTerms {
  std::vector<std::size_t> rows;
  const Coupling* coupling = nullptr;
};

ActiveTerms active_terms(const Coupling* coupling, std::size_t dim) {
  ActiveTerms out;
  if (!coupling) return out;
  if (coupling->directions.cols() != dim && coupling->size() != 0)
    throw DimensionError("coupling: direction length does not match code length");
  out.coupling = coupling;
  for (std::size_t k = 0; k < coupling->size(); ++k) {
    const auto d = coupling->directions.row(k);
    if (std::any_of(d.begin(), d.end(), [](double v) { return v != 0.0; })) out.rows.push_back(k);
  }
  return out;
}

double coupling_value(std::span<const double> z, const ActiveTerms& t) {
  double s = 0.0;
  for (std::size_t k : t.rows) {
    s += t.coupling->weights[k] *
         hinge(t.coupling->labels[k], dot(z, t.coupling->directions.row(k)));
  }
  return s;
}

void add_coupling_gradient(std::span<const double> z, const ActiveTerms& t, Vec& g) {
  for (std::size_t k : t.rows) {
    const auto d = t.coupling->directions.row(k);
    const double slope = t.coupling->weights[k] * hinge_slope(t.coupling->labels[k], dot(z, d));
    if (slope == 0.0) continue;
    for (std::size_t a = 0; a < g.size(); ++a) g[a] += slope * d[a];
  }
}

double step_guess(double code_weight, double fit_weight, const Mat& dict) {
  const double curvature = code_weight + fit_weight * frobenius_sq(dict);
  return curvature > 0.0 ? 1.0 / curvature : 1.0;
}

}  // namespace

Coupling source_coupling(const Mat& W, const Mat& target_codes, std::span<const PairLabel> labels,
                         std::span<const double> weights) {
  Mat dirs(target_codes.rows(), W.rows());
  for (std::size_t k = 0; k < target_codes.rows(); ++k) dirs.set_row(k, matvec(W, target_codes.row(k)));
  return make_coupling(std::move(dirs), labels, weights);
}

Coupling target_coupling(const Mat& W, const Mat& source_codes, std::span<const PairLabel> labels,
                         std::span<const double> weights) {
  Mat dirs(source_codes.rows(), W.cols());
  for (std::size_t k = 0; k < source_codes.rows(); ++k)
    dirs.set_row(k, matvec_t(W, source_codes.row(k)));
  return make_coupling(std::move(dirs), labels, weights);
}

double source_code_objective(std::span<const double> z, std::span<const double> x,
                             const ModelParams& params, const Coupling* coupling) {
  return source_nll(z, x, params) + coupling_value(z, active_terms(coupling, z.size()));
}

double target_code_objective(std::span<const double> z, std::span<const double> x,
                             const ModelParams& params, const Coupling* coupling) {
  return target_nll(z, x, params) + coupling_value(z, active_terms(coupling, z.size()));
}

Vec encode_source(std::span<const double> x, const ModelParams& params, const Coupling* coupling,
                  std::span<const double> warm_start, const EncodeOptions& options) {
  const std::size_t h = params.B.cols();
  if (x.size() != params.B.rows()) throw DimensionError("encode_source: x does not match B");
  if (!warm_start.empty() && warm_start.size() != h)
    throw DimensionError("encode_source: warm start length mismatch");
  const ActiveTerms terms = active_terms(coupling, h);
  const Vec xv(x.begin(), x.end());

  ProxProblem problem;
  problem.objective = [&](std::span<const double> z) {
    return source_nll(z, xv, params) + coupling_value(z, terms);
  };
  problem.gradient = [&](std::span<const double> z) {
    Vec g = source_nll_gradient(z, xv, params);
    add_coupling_gradient(z, terms, g);
    return g;
  };
  problem.projection = [](std::span<const double> z) { return project_simplex(z); };
  problem.initial = warm_start.empty() ? Vec(h, 1.0 / static_cast<double>(h))
                                       : Vec(warm_start.begin(), warm_start.end());
  problem.initial_step = step_guess(params.lambdas.source_code, params.lambdas.source_fit, params.B);
  problem.tolerance = options.tolerance;
  problem.max_iterations = options.max_iterations;
  return prox_minimize(problem).point;
}

Vec encode_target(std::span<const double> x, const ModelParams& params, const Coupling* coupling,
                  std::span<const double> warm_start, const EncodeOptions& options) {
  const std::size_t h = params.D.cols();
  if (x.size() != params.D.rows()) throw DimensionError("encode_target: x does not match D");
  if (!warm_start.empty() && warm_start.size() != h)
    throw DimensionError("encode_target: warm start length mismatch");
  const ActiveTerms terms = active_terms(coupling, h);
  const Vec xv(x.begin(), x.end());

  ProxProblem problem;
  problem.objective = [&](std::span<const double> z) {
    return target_nll(z, xv, params) + coupling_value(z, terms);
  };
  problem.gradient = [&](std::span<const double> z) {
    Vec g = target_nll_gradient(z, xv, params);
    add_coupling_gradient(z, terms, g);
    return g;
  };
  problem.initial = warm_start.empty() ? Vec(h, 0.0) : Vec(warm_start.begin(), warm_start.end());
  problem.initial_step = step_guess(params.lambdas.target_code, params.lambdas.target_fit, params.D);
  problem.tolerance = options.tolerance;
  problem.max_iterations = options.max_iterations;
  return prox_minimize(problem).point;
}

Mat least_squares_dictionary(const Mat& codes, const Mat& data) {
  if (codes.rows() != data.rows()) throw DimensionError("dictionary update: row counts differ");
  // B^T = (Z^T Z + eps I)^{-1} Z^T X.
  return solve_spd(matmul_at_b(codes, codes), matmul_at_b(codes, data), 1e-8).transpose();
}

Mat update_b(const Mat& source_codes, const SourceDataset& src, const Lambdas&) {
  return least_squares_dictionary(source_codes, src.x);
}

Mat projected_least_squares_dictionary(const Mat& codes, const Mat& data, const Mat& current) {
  if (codes.rows() != data.rows()) throw DimensionError("dictionary update: row counts differ");
  const std::size_t d = data.cols();
  const std::size_t h = codes.cols();
  if (current.rows() != d || current.cols() != h)
    throw DimensionError("dictionary update: current D has the wrong shape");

  const Mat gram = matmul_at_b(codes, codes);  // h x h
  const Mat cross = matmul_at_b(data, codes);  // d x h

  ProxProblem problem;
  const double data_sq = frobenius_sq(data);
  // (1/2)|X - Z D^T|^2 = (1/2)|X|^2 - <D, X^T Z> + (1/2) tr(D G D^T).
  problem.objective = [&](std::span<const double> flat) {
    double s = 0.5 * data_sq;
    for (std::size_t r = 0; r < d; ++r) {
      const double* row = flat.data() + r * h;
      for (std::size_t a = 0; a < h; ++a) {
        double gd = 0.0;
        for (std::size_t b = 0; b < h; ++b) gd += gram(a, b) * row[b];
        s += row[a] * (0.5 * gd - cross(r, a));
      }
    }
    return s;
  };
  problem.gradient = [&](std::span<const double> flat) {
    Vec g(d * h);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < h; ++c) {
        double s = -cross(r, c);
        for (std::size_t k = 0; k < h; ++k) s += flat[r * h + k] * gram(k, c);
        g[r * h + c] = s;
      }
    return g;
  };
  problem.projection = [d, h](std::span<const double> flat) {
    return project_unit_ball_rows(Mat(d, h, Vec(flat.begin(), flat.end()))).data();
  };
  problem.initial = current.data();
  const double gn = std::sqrt(frobenius_sq(gram));
  problem.initial_step = gn > 0.0 ? 1.0 / gn : 1.0;
  problem.tolerance = 1e-12;
  problem.max_iterations = 5000;
  return Mat(d, h, prox_minimize(problem).point);
}

Mat update_d(const Mat& target_codes, const TargetDataset& tgt, const Mat& current,
             const Lambdas& lambdas) {
  if (lambdas.target_fit == 0.0) return current;  // every D is optimal
  return projected_least_squares_dictionary(target_codes, tgt.x, current);
}

namespace {

struct Tracer {
  std::vector<TraceEntry>* trace;
  void operator()(std::size_t it, Block b, double obj) const { trace->push_back({it, b, obj}); }
};

double pair_weight(PairLabel y, const TrainConfig& cfg) {
  return y == PairLabel::kSame ? cfg.positive_weight : 1.0;
}

void check_finite(double obj, std::size_t iteration, Block block) {
  if (!std::isfinite(obj)) {
    throw DivergedError("objective became non-finite at outer iteration " +
                        std::to_string(iteration) + " (" + to_string(block) + ")");
  }
}

EncodeOptions encode_options(const TrainConfig& cfg) {
  return {cfg.code_tolerance, cfg.code_max_iterations};
}

}  // namespace

FitResult fit_simplified(const SourceDataset& src, const TargetDataset& tgt, const TrainConfig& cfg) {
  validate(src, tgt);
  validate(cfg);
  const std::size_t C = src.size();
  const std::size_t N = tgt.size();
  const auto labels = pair_labels(src.labels, tgt.labels);
  const ObjectiveOptions obj_opts{cfg.normalize_objective, cfg.positive_weight};
  WSolveOptions w_opts;
  w_opts.positive_weight = cfg.positive_weight;
  const EncodeOptions enc = encode_options(cfg);

  FitResult result;
  Tracer trace{&result.trace};
  Dictionaries dicts = init_dictionaries(src, tgt, cfg);
  ModelParams& params = result.params;
  params.B = std::move(dicts.B);
  params.D = std::move(dicts.D);
  params.W = Mat(params.B.cols(), params.D.cols());
  params.lambdas = cfg.lambdas;

  LatentCodes& codes = result.codes;
  codes.source = Mat(C, params.B.cols());
  codes.target = Mat(N, params.D.cols());
  for (std::size_t i = 0; i < C; ++i)
    codes.source.set_row(i, encode_source(src.x.row(i), params, nullptr, {}, enc));
  for (std::size_t j = 0; j < N; ++j)
    codes.target.set_row(j, encode_target(tgt.x.row(j), params, nullptr, {}, enc));
  if (cfg.learn_similarity) {
    WSolveResult w = solve_w(codes, labels, cfg.lambdas.similarity, w_opts);
    params.W = std::move(w.W);
    w_opts.initial_dual = std::move(w.dual);
    result.w_unbounded_warning = w.unbounded_warning;
  }

  double current = total_objective(codes, src, tgt, params, obj_opts);
  check_finite(current, 0, Block::kInit);
  trace(0, Block::kInit, current);

  // Hinge weights relative to the data-fit factor of each block (N for sources, C for targets).
  std::vector<double> source_weights(N);
  std::vector<double> target_weights(C);
  std::vector<PairLabel> target_side_labels(C);

  for (std::size_t it = 1; it <= cfg.max_outer_iterations; ++it) {
    const double start = current;

    for (std::size_t i = 0; i < C; ++i) {
      std::span<const PairLabel> row(labels.data() + i * N, N);
      for (std::size_t j = 0; j < N; ++j) source_weights[j] = pair_weight(row[j], cfg) / static_cast<double>(N);
      const Coupling coupling = source_coupling(params.W, codes.target, row, source_weights);
      const Vec z(codes.source.row(i).begin(), codes.source.row(i).end());
      codes.source.set_row(i, encode_source(src.x.row(i), params, &coupling, z, enc));
    }
    current = total_objective(codes, src, tgt, params, obj_opts);
    check_finite(current, it, Block::kSourceCodes);
    trace(it, Block::kSourceCodes, current);

    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t i = 0; i < C; ++i) {
        target_side_labels[i] = labels[i * N + j];
        target_weights[i] = pair_weight(target_side_labels[i], cfg) / static_cast<double>(C);
      }
      const Coupling coupling =
          target_coupling(params.W, codes.source, target_side_labels, target_weights);
      const Vec z(codes.target.row(j).begin(), codes.target.row(j).end());
      codes.target.set_row(j, encode_target(tgt.x.row(j), params, &coupling, z, enc));
    }
    current = total_objective(codes, src, tgt, params, obj_opts);
    check_finite(current, it, Block::kTargetCodes);
    trace(it, Block::kTargetCodes, current);

    // Dictionary and W steps are exact minimizers up to solver tolerance; a
    // candidate that does not lower the objective is discarded.
    {
      ModelParams candidate = params;
      candidate.B = update_b(codes.source, src, cfg.lambdas);
      const double obj = total_objective(codes, src, tgt, candidate, obj_opts);
      if (obj <= current) {
        params.B = std::move(candidate.B);
        current = obj;
      }
      check_finite(current, it, Block::kSourceDictionary);
      trace(it, Block::kSourceDictionary, current);
    }
    {
      ModelParams candidate = params;
      candidate.D = update_d(codes.target, tgt, params.D, cfg.lambdas);
      const double obj = total_objective(codes, src, tgt, candidate, obj_opts);
      if (obj <= current) {
        params.D = std::move(candidate.D);
        current = obj;
      }
      check_finite(current, it, Block::kTargetDictionary);
      trace(it, Block::kTargetDictionary, current);
    }
    if (cfg.learn_similarity) {
      WSolveResult w = solve_w(codes, labels, cfg.lambdas.similarity, w_opts);
      ModelParams candidate = params;
      candidate.W = std::move(w.W);
      const double obj = total_objective(codes, src, tgt, candidate, obj_opts);
      if (obj <= current) {
        params.W = std::move(candidate.W);
        w_opts.initial_dual = std::move(w.dual);
        current = obj;
      }
      result.w_unbounded_warning = result.w_unbounded_warning || w.unbounded_warning;
    }
    check_finite(current, it, Block::kSimilarity);
    trace(it, Block::kSimilarity, current);

    result.outer_iterations = it;
    const double scale = std::max(std::abs(start), 1e-300);
    if (std::abs(start - current) / scale < cfg.outer_tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

double pairwise_objective(const PairCodes& pairs, const SourceDataset& src, const TargetDataset& tgt,
                          const ModelParams& params, const ObjectiveOptions& options) {
  const std::size_t C = src.size();
  const std::size_t N = tgt.size();
  if (pairs.size() != C * N) throw DimensionError("pairwise_objective: expected C*N pairs");
  const double ridge = 0.5 * params.lambdas.similarity * frobenius_sq(params.W);
  double total = 0.0;
  for (std::size_t i = 0; i < C; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      const std::size_t k = i * N + j;
      const double w = pairs.labels[k] == PairLabel::kSame ? options.positive_weight : 1.0;
      total += source_nll(pairs.source.row(k), src.x.row(i), params) +
               target_nll(pairs.target.row(k), tgt.x.row(j), params) + ridge +
               w * hinge(pairs.labels[k],
                         bilinear_score(pairs.source.row(k), pairs.target.row(k), params.W));
    }
  }
  if (options.normalize) total /= static_cast<double>(C * N);
  return total;
}

PairwiseFitResult fit_full_pairwise(const SourceDataset& src, const TargetDataset& tgt,
                                    const TrainConfig& cfg) {
  validate(src, tgt);
  validate(cfg);
  const std::size_t C = src.size();
  const std::size_t N = tgt.size();
  if (C * N > cfg.max_pairs) {
    throw InvalidArgument("full pairwise training needs " + std::to_string(C * N) +
                          " coupled pairs, above the cap of " + std::to_string(cfg.max_pairs) +
                          "; use the simplified algorithm");
  }
  const ObjectiveOptions obj_opts{cfg.normalize_objective, cfg.positive_weight};
  WSolveOptions w_opts;
  w_opts.positive_weight = cfg.positive_weight;
  const EncodeOptions enc = encode_options(cfg);

  PairwiseFitResult result;
  Tracer trace{&result.trace};
  Dictionaries dicts = init_dictionaries(src, tgt, cfg);
  ModelParams& params = result.params;
  params.B = std::move(dicts.B);
  params.D = std::move(dicts.D);
  params.W = Mat(params.B.cols(), params.D.cols());
  params.lambdas = cfg.lambdas;

  LatentCodes& codes = result.codes;
  codes.source = Mat(C, params.B.cols());
  codes.target = Mat(N, params.D.cols());
  for (std::size_t i = 0; i < C; ++i)
    codes.source.set_row(i, encode_source(src.x.row(i), params, nullptr, {}, enc));
  for (std::size_t j = 0; j < N; ++j)
    codes.target.set_row(j, encode_target(tgt.x.row(j), params, nullptr, {}, enc));

  PairCodes& pairs = result.pair_codes;
  pairs = cross_pairs(codes, pair_labels(src.labels, tgt.labels));
  if (cfg.learn_similarity) params.W = solve_w(pairs, cfg.lambdas.similarity, w_opts).W;

  double current = pairwise_objective(pairs, src, tgt, params, obj_opts);
  check_finite(current, 0, Block::kInit);
  trace(0, Block::kInit, current);

  // Pair codes are warm-started from the previous outer iteration.
  Mat pair_source_x(C * N, src.x.cols());
  Mat pair_target_x(C * N, tgt.x.cols());
  for (std::size_t i = 0; i < C; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      pair_source_x.set_row(i * N + j, src.x.row(i));
      pair_target_x.set_row(i * N + j, tgt.x.row(j));
    }

  for (std::size_t it = 1; it <= cfg.max_outer_iterations; ++it) {
    const double start = current;

    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const PairLabel y = pairs.labels[k];
      const double w = pair_weight(y, cfg);
      const std::span<const PairLabel> label(&y, 1);
      const std::span<const double> weight(&w, 1);
      Vec zs(pairs.source.row(k).begin(), pairs.source.row(k).end());
      Vec zt(pairs.target.row(k).begin(), pairs.target.row(k).end());
      auto pair_value = [&] {
        return source_nll(zs, pair_source_x.row(k), params) +
               target_nll(zt, pair_target_x.row(k), params) +
               w * hinge(y, bilinear_score(zs, zt, params.W));
      };
      double prev = pair_value();
      for (std::size_t inner = 0; inner < cfg.pair_max_iterations; ++inner) {
        const Coupling cs = source_coupling(params.W, Mat(1, zt.size(), zt), label, weight);
        zs = encode_source(pair_source_x.row(k), params, &cs, zs, enc);
        const Coupling ct = target_coupling(params.W, Mat(1, zs.size(), zs), label, weight);
        zt = encode_target(pair_target_x.row(k), params, &ct, zt, enc);
        const double value = pair_value();
        const bool done = std::abs(prev - value) <= cfg.pair_tolerance * std::max(std::abs(prev), 1e-12);
        prev = value;
        if (done) break;
      }
      pairs.source.set_row(k, zs);
      pairs.target.set_row(k, zt);
    }
    current = pairwise_objective(pairs, src, tgt, params, obj_opts);
    check_finite(current, it, Block::kSourceCodes);
    trace(it, Block::kSourceCodes, current);

    {
      ModelParams candidate = params;
      candidate.B = least_squares_dictionary(pairs.source, pair_source_x);
      const double obj = pairwise_objective(pairs, src, tgt, candidate, obj_opts);
      if (obj <= current) {
        params.B = std::move(candidate.B);
        current = obj;
      }
      trace(it, Block::kSourceDictionary, current);
    }
    if (cfg.lambdas.target_fit != 0.0) {
      ModelParams candidate = params;
      candidate.D = projected_least_squares_dictionary(pairs.target, pair_target_x, params.D);
      const double obj = pairwise_objective(pairs, src, tgt, candidate, obj_opts);
      if (obj <= current) {
        params.D = std::move(candidate.D);
        current = obj;
      }
    }
    trace(it, Block::kTargetDictionary, current);
    if (cfg.learn_similarity) {
      ModelParams candidate = params;
      candidate.W = solve_w(pairs, cfg.lambdas.similarity, w_opts).W;
      const double obj = pairwise_objective(pairs, src, tgt, candidate, obj_opts);
      if (obj <= current) {
        params.W = std::move(candidate.W);
        current = obj;
      }
    }
    check_finite(current, it, Block::kSimilarity);
    trace(it, Block::kSimilarity, current);

    result.outer_iterations = it;
    if (std::abs(start - current) / std::max(std::abs(start), 1e-300) < cfg.outer_tolerance) {
      result.converged = true;
      break;
    }
  }
  // Per-class codes under the final dictionaries, for test-time estimation.
  for (std::size_t i = 0; i < C; ++i)
    codes.source.set_row(i, encode_source(src.x.row(i), params, nullptr, {}, enc));
  for (std::size_t j = 0; j < N; ++j)
    codes.target.set_row(j, encode_target(tgt.x.row(j), params, nullptr, {}, enc));
  return result;
}

}  // namespace jlse
