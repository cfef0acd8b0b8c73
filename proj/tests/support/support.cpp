#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <unistd.h>

namespace jlse::testing {

Vec random_vec(Rng& rng, std::size_t n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(n);
  for (double& e : v) e = g(rng);
  return v;
}

Mat random_mat(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  return Mat(rows, cols, random_vec(rng, rows * cols, scale));
}

Vec random_simplex(Rng& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  Vec v(n);
  double sum = 0.0;
  for (double& x : v) sum += (x = e(rng));
  for (double& x : v) x /= sum;
  return v;
}

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("jlse-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

SplitData split_synth(const SynthData& data, const std::filesystem::path& dir) {
  return load_bundle(write_bundle(data, dir));
}

SplitData split_synth(const SynthSpec& spec) {
  TempDir dir("split");
  return split_synth(synth_generate(spec), dir.path());
}

SynthSpec acceptance_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.seen_classes = 10;
  spec.unseen_classes = 4;
  spec.samples_per_class = 50;
  spec.source_dim = 12;
  spec.target_dim = 20;
  spec.latent_dim = 6;
  spec.noise_sigma = 0.05;
  spec.seed = seed;
  return spec;
}

TrainConfig acceptance_config() {
  TrainConfig cfg;
  cfg.source_latent = 6;
  cfg.target_latent = 6;
  cfg.source_init = SourceInit::kKMeans;
  return cfg;
}

Vec brute_simplex_projection(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0 || n > 20) throw std::invalid_argument("brute_simplex_projection: bad size");
  Vec best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned long mask = 1; mask < (1ul << n); ++mask) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1ul << i)) {
        sum += v[i];
        ++count;
      }
    const double shift = (sum - 1.0) / static_cast<double>(count);
    Vec u(n, 0.0);
    bool feasible = true;
    for (std::size_t i = 0; i < n && feasible; ++i)
      if (mask & (1ul << i)) {
        u[i] = v[i] - shift;
        feasible = u[i] >= 0.0;
      }
    if (!feasible) continue;
    const double d = distance(u, v);
    if (d < best_dist) {
      best_dist = d;
      best = std::move(u);
    }
  }
  return best;
}

Vec central_difference(const std::function<double(std::span<const double>)>& f,
                       std::span<const double> x, double h) {
  Vec probe(x.begin(), x.end());
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  double ref = 0.0;
  for (double e : b) ref += e * e;
  return distance(a, b) / std::max(std::sqrt(ref), 1.0);
}

double brute_average_precision(std::span<const int> relevance) {
  double precision_sum = 0.0;
  int relevant = 0;
  for (std::size_t pos = 0; pos < relevance.size(); ++pos) {
    if (!relevance[pos]) continue;
    ++relevant;
    int above = 0;
    for (std::size_t q = 0; q <= pos; ++q) above += relevance[q] ? 1 : 0;
    precision_sum += static_cast<double>(above) / static_cast<double>(pos + 1);
  }
  if (relevant == 0) throw std::invalid_argument("brute_average_precision: nothing relevant");
  return precision_sum / relevant;
}

SubgradientReference subgradient_w_reference(const PairCodes& pairs, double lambda,
                                             double positive_weight, std::size_t steps) {
  if (lambda <= 0.0) throw std::invalid_argument("subgradient_w_reference: needs lambda > 0");
  const std::size_t n = pairs.size();
  const std::size_t hs = pairs.source.cols();
  const std::size_t ht = pairs.target.cols();
  const std::size_t p = hs * ht;

  std::vector<Vec> feature(n, Vec(p));
  Vec scale(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t a = 0; a < hs; ++a)
      for (std::size_t b = 0; b < ht; ++b) feature[k][a * ht + b] = pairs.source(k, a) * pairs.target(k, b);
    const double y = sign(pairs.labels[k]);
    scale[k] = y * (pairs.labels[k] == PairLabel::kSame ? positive_weight : 1.0);
  }
  const double strong = lambda * static_cast<double>(n);

  auto objective = [&](const Vec& w) {
    double ridge = 0.0;
    for (double e : w) ridge += e * e;
    double total = 0.5 * strong * ridge;
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < p; ++i) s += w[i] * feature[k][i];
      const double y = sign(pairs.labels[k]);
      total += std::abs(scale[k]) * std::max(0.0, 1.0 - y * s);
    }
    return total;
  };

  Vec w(p, 0.0), avg(p, 0.0), step(p);
  Vec best = w;
  double best_obj = objective(w);
  for (std::size_t t = 1; t <= steps; ++t) {
    std::fill(step.begin(), step.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < p; ++i) s += w[i] * feature[k][i];
      if (sign(pairs.labels[k]) * s < 1.0)
        for (std::size_t i = 0; i < p; ++i) step[i] += scale[k] * feature[k][i];
    }
    const double eta = 1.0 / (strong * static_cast<double>(t));
    const double keep = 1.0 - 1.0 / static_cast<double>(t);
    for (std::size_t i = 0; i < p; ++i) {
      w[i] = keep * w[i] + eta * step[i];
      avg[i] += (w[i] - avg[i]) / static_cast<double>(t);
    }
    if (t % 1000 == 0 || t == steps) {
      for (const Vec* cand : {&w, &avg}) {
        const double f = objective(*cand);
        if (f < best_obj) {
          best_obj = f;
          best = *cand;
        }
      }
    }
  }
  return {Mat(hs, ht, best), best_obj};
}

}  // namespace jlse::testing
