#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "jlse/dataset.hpp"
#include "jlse/io.hpp"
#include "jlse/mat.hpp"

namespace jlse {

/// Planted-model dataset description.
struct SynthSpec {
  std::size_t seen_classes = 10;
  std::size_t unseen_classes = 4;
  std::size_t samples_per_class = 50;
  std::size_t source_dim = 12;
  std::size_t target_dim = 20;
  std::size_t latent_dim = 6;
  /// Nonzero entries in each class code.
  std::size_t atoms_per_class = 2;
  double noise_sigma = 0.05;
  std::uint64_t seed = 7;
};

void validate(const SynthSpec& spec);

struct SynthData {
  /// All classes, ids 0..K-1 in row order.
  SourceDataset source;
  /// All instances in shuffled order.
  TargetDataset target;
  /// Sorted unseen class ids.
  std::vector<ClassId> unseen;
  Mat true_B;         ///< d_s x h
  Mat true_D;         ///< d_t x h, unit rows
  Mat class_codes;    ///< K x h, simplex rows
};

/// Each class c gets a simplex code z_c spread evenly over `atoms_per_class`
/// atoms; its attribute vector is B* z_c + sigma * noise and each instance is
/// D* (z_c + sigma * jitter) + sigma * noise.
/// Deterministic in `spec.seed`.
SynthData synth_generate(const SynthSpec& spec);

/// Writes the five bundle files into `dir` (created if needed).
DatasetBundle write_bundle(const SynthData& data, const std::filesystem::path& dir);

}  // namespace jlse
