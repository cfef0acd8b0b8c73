#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jlse/dataset.hpp"

namespace jlse {

/// Fraction of exact matches. Throws on empty or mismatched input.
double accuracy(std::span<const ClassId> predictions, std::span<const ClassId> truth);

/// Mean over relevant ranks r of hits(r) / r. Throws InvalidArgument when the
/// list has no relevant item.
double average_precision(std::span<const int> ranked_relevance);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;

  bool operator==(const PrPoint&) const = default;
};

/// One point per rank.
std::vector<PrPoint> precision_recall_curve(std::span<const int> ranked_relevance);

struct MapResult {
  double map = 0.0;
  /// Indices of input lists that were averaged.
  std::vector<std::size_t> included;
  /// Indices skipped for lacking a relevant item.
  std::vector<std::size_t> excluded;
};

/// Unweighted mean of per-class APs; classes without relevant items are skipped.
MapResult mean_average_precision(const std::vector<std::vector<int>>& per_class);

struct EvalReport {
  std::optional<double> accuracy;
  std::map<ClassId, double> per_class_ap;
  std::optional<double> map;
  std::map<ClassId, std::vector<PrPoint>> pr_curves;
  std::vector<std::string> warnings;

  /// key value lines: "accuracy", "ap <class>", "map", "warning".
  std::string to_text() const;
  /// class_id,rank,recall,precision
  std::string pr_csv() const;
};

}  // namespace jlse
