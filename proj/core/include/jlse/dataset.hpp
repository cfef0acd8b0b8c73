#pragma once

#include <vector>

#include "jlse/mat.hpp"

namespace jlse {

using ClassId = int;

/// One side-information (attribute) vector per class. Labels are unique.
struct SourceDataset {
  Mat x;
  std::vector<ClassId> labels;

  std::size_t size() const noexcept { return x.rows(); }
};

/// One feature vector per instance.
struct TargetDataset {
  Mat x;
  std::vector<ClassId> labels;

  std::size_t size() const noexcept { return x.rows(); }
};

/// Throws InvalidArgument unless labels match rows, are unique, and x is finite.
void validate(const SourceDataset& src);
/// Throws InvalidArgument unless labels match rows, N >= 1, and x is finite.
void validate(const TargetDataset& tgt);
/// Additionally requires every target label to appear in `src`.
void validate(const SourceDataset& src, const TargetDataset& tgt);

}  // namespace jlse
