#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "jlse/dataset.hpp"
#include "jlse/mat.hpp"
#include "jlse/model.hpp"

namespace jlse {

/// Shortest text that round-trips at 17 significant digits ("%.17g" style).
std::string format_double(double v);
/// Strict parse of a full token; throws ParseError(line) on failure or non-finite values.
double parse_double(const std::string& token, std::size_t line);

/// Matrix text format: a "ROWS COLS" header line, then ROWS lines of COLS
/// space-separated values.
///
/// `first_line` is the file line number of the header, used in error messages.
Mat read_matrix(std::istream& in, std::size_t first_line = 1, std::size_t* lines_consumed = nullptr);
void write_matrix(std::ostream& out, const Mat& m);
Mat load_matrix(const std::filesystem::path& path);
void save_matrix(const Mat& m, const std::filesystem::path& path);

/// One integer class id per line.
std::vector<ClassId> load_labels(const std::filesystem::path& path);
void save_labels(const std::vector<ClassId>& labels, const std::filesystem::path& path);

struct DatasetBundle {
  std::filesystem::path source;
  std::filesystem::path source_labels;
  std::filesystem::path target;
  std::filesystem::path target_labels;
  /// Unseen class ids, one per line.
  std::filesystem::path split;
};

/// Conventional file names inside a bundle directory.
DatasetBundle bundle_in(const std::filesystem::path& dir);

struct SplitData {
  SourceDataset seen_source;
  SourceDataset unseen_source;
  TargetDataset seen_target;
  TargetDataset unseen_target;
  /// Row of each unseen_target instance in the full target file.
  std::vector<std::size_t> unseen_target_rows;
};

/// Loads and validates a bundle, partitioning classes and instances by the split.
SplitData load_bundle(const DatasetBundle& bundle);

/// Trained model plus what test-time estimation needs from training.
struct ModelFile {
  ModelParams params;
  LatentCodes seen_codes;
  std::vector<ClassId> seen_classes;
  /// Echo of the training configuration, written as "config <key> <value>".
  std::vector<std::pair<std::string, std::string>> config;
};

void write_model(std::ostream& out, const ModelFile& model);
ModelFile read_model(std::istream& in);
void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

/// Writes `contents` to `path`, throwing std::runtime_error on failure.
void write_text(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

}  // namespace jlse
