#pragma once

#include <cstdint>
#include <vector>

#include "jlse/dataset.hpp"
#include "jlse/inference.hpp"
#include "jlse/model.hpp"
#include "jlse/training.hpp"

namespace jlse {

struct CvRow {
  Lambdas lambdas;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct CvResult {
  Lambdas best;
  std::vector<CvRow> table;
};

/// Cartesian product of per-weight value lists.
std::vector<Lambdas> lambda_grid(const std::vector<double>& source_code,
                                 const std::vector<double>& source_fit,
                                 const std::vector<double>& target_code,
                                 const std::vector<double>& target_fit,
                                 const std::vector<double>& similarity);

/// Two-class holdouts of the seen classes, drawn once per fold from `seed` and
/// shared by every grid point. Returned sorted within each fold.
std::vector<std::vector<std::size_t>> holdout_folds(std::size_t classes, std::size_t folds,
                                                    std::uint64_t seed);

struct CvOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  Estimation estimation = Estimation::kDissimilarity;
  DecisionRule rule = DecisionRule::kSourceFit;
};

/// Each fold trains on C-2 classes and scores zero-shot accuracy on the two
/// held-out ones. The best mean wins; ties go to the lexicographically smallest
/// lambda vector. Needs C >= 4.
CvResult cross_validate(const SourceDataset& src, const TargetDataset& tgt,
                        const std::vector<Lambdas>& grid, const TrainConfig& base,
                        const CvOptions& options = {});

}  // namespace jlse
