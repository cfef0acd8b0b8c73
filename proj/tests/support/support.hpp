#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "jlse/io.hpp"
#include "jlse/mat.hpp"
#include "jlse/synth.hpp"
#include "jlse/training.hpp"
#include "jlse/w_solver.hpp"

namespace jlse::testing {

using Rng = std::mt19937_64;

Vec random_vec(Rng& rng, std::size_t n, double scale = 1.0);
Mat random_mat(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0);
/// Uniform on the simplex (normalized exponentials).
Vec random_simplex(Rng& rng, std::size_t n);

double distance(std::span<const double> a, std::span<const double> b);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Writes the generated data as a bundle and loads it back split into seen
/// and unseen parts.
SplitData split_synth(const SynthData& data, const std::filesystem::path& dir);
SplitData split_synth(const SynthSpec& spec);

/// The canonical 10 seen / 4 unseen planted bundle.
SynthSpec acceptance_spec(std::uint64_t seed = 7);
/// Six k-means source atoms, default weights.
TrainConfig acceptance_config();

// ---- independent oracles ----

/// argmin |u - v|^2 over the simplex, by enumerating every candidate support.
Vec brute_simplex_projection(std::span<const double> v);

/// Central differences with step h.
Vec central_difference(const std::function<double(std::span<const double>)>& f,
                       std::span<const double> x, double h = 1e-5);

/// |a - b| / max(|b|, 1).
double relative_error(std::span<const double> a, std::span<const double> b);

/// Sum of precision at each relevant position divided by the relevant count.
double brute_average_precision(std::span<const int> relevance);

struct SubgradientReference {
  Mat W;
  double objective = 0.0;
};

/// Best iterate of Pegasos-style subgradient descent with a running average,
/// on the same objective as w_objective.
SubgradientReference subgradient_w_reference(const PairCodes& pairs, double lambda,
                                             double positive_weight, std::size_t steps);

}  // namespace jlse::testing
