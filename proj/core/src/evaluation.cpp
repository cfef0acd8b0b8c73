#include "jlse/evaluation.hpp"

#include <sstream>

#include "jlse/errors.hpp"
#include "jlse/io.hpp"

namespace jlse {

double accuracy(std::span<const ClassId> predictions, std::span<const ClassId> truth) {
  if (predictions.size() != truth.size()) throw InvalidArgument("accuracy: length mismatch");
  if (predictions.empty()) throw InvalidArgument("accuracy: no predictions");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < predictions.size(); ++k)
    if (predictions[k] == truth[k]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double average_precision(std::span<const int> rel) {
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < rel.size(); ++r) {
    if (rel[r] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) throw InvalidArgument("average_precision: no relevant items");
  return sum / static_cast<double>(hits);
}

std::vector<PrPoint> precision_recall_curve(std::span<const int> rel) {
  std::size_t total = 0;
  for (int v : rel) total += v != 0;
  if (total == 0) throw InvalidArgument("precision_recall_curve: no relevant items");
  std::vector<PrPoint> out;
  out.reserve(rel.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < rel.size(); ++r) {
    hits += rel[r] != 0;
    out.push_back({static_cast<double>(hits) / static_cast<double>(total),
                   static_cast<double>(hits) / static_cast<double>(r + 1)});
  }
  return out;
}

MapResult mean_average_precision(const std::vector<std::vector<int>>& per_class) {
  MapResult out;
  double sum = 0.0;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    bool any = false;
    for (int v : per_class[c]) any = any || v != 0;
    if (!any) {
      out.excluded.push_back(c);
      continue;
    }
    sum += average_precision(per_class[c]);
    out.included.push_back(c);
  }
  if (out.included.empty()) throw InvalidArgument("mean_average_precision: no class has relevant items");
  out.map = sum / static_cast<double>(out.included.size());
  return out;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  if (accuracy) os << "accuracy " << format_double(*accuracy) << '\n';
  for (const auto& [cls, ap] : per_class_ap) os << "ap " << cls << ' ' << format_double(ap) << '\n';
  if (map) os << "map " << format_double(*map) << '\n';
  for (const auto& w : warnings) os << "warning " << w << '\n';
  return os.str();
}

std::string EvalReport::pr_csv() const {
  std::ostringstream os;
  os << "class_id,rank,recall,precision\n";
  for (const auto& [cls, curve] : pr_curves) {
    for (std::size_t r = 0; r < curve.size(); ++r) {
      os << cls << ',' << (r + 1) << ',' << format_double(curve[r].recall) << ','
         << format_double(curve[r].precision) << '\n';
    }
  }
  return os.str();
}

}  // namespace jlse
