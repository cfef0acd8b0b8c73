#include "jlse/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "jlse/errors.hpp"

namespace jlse {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return {buf, res.ptr};
}

double parse_double(const std::string& token, std::size_t line) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw ParseError("cannot parse '" + token + "' as a number", line);
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + token + "'", line);
  return v;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::size_t parse_count(const std::string& token, std::size_t line) {
  std::size_t v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw ParseError("cannot parse '" + token + "' as a count", line);
  return v;
}

int parse_int(const std::string& token, std::size_t line) {
  int v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw ParseError("cannot parse '" + token + "' as an integer", line);
  return v;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

template <class Fn>
auto with_path(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), path.string());
  }
}

}  // namespace

Mat read_matrix(std::istream& in, std::size_t first_line, std::size_t* lines_consumed) {
  std::string line;
  std::size_t lineno = first_line;
  if (!std::getline(in, line)) throw ParseError("missing matrix header", lineno);
  const auto header = split_ws(line);
  if (header.size() != 2) throw ParseError("matrix header must be 'ROWS COLS'", lineno);
  const std::size_t rows = parse_count(header[0], lineno);
  const std::size_t cols = parse_count(header[1], lineno);

  std::vector<double> data;
  data.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    ++lineno;
    if (!std::getline(in, line)) {
      throw ParseError("expected " + std::to_string(rows) + " rows, file ends after " +
                           std::to_string(r),
                       lineno);
    }
    const auto tokens = split_ws(line);
    if (tokens.size() != cols) {
      throw ParseError("expected " + std::to_string(cols) + " values, found " +
                           std::to_string(tokens.size()),
                       lineno);
    }
    for (const auto& t : tokens) data.push_back(parse_double(t, lineno));
  }
  if (lines_consumed) *lines_consumed = rows + 1;
  return Mat(rows, cols, std::move(data));
}

void write_matrix(std::ostream& out, const Mat& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Mat load_matrix(const fs::path& path) {
  return with_path(path, [&] {
    auto in = open_in(path);
    Mat m = read_matrix(in);
    std::string rest;
    std::size_t lineno = m.rows() + 1;
    while (std::getline(in, rest)) {
      ++lineno;
      if (!split_ws(rest).empty()) throw ParseError("unexpected data after declared rows", lineno);
    }
    return m;
  });
}

void save_matrix(const Mat& m, const fs::path& path) {
  auto out = open_out(path);
  write_matrix(out, m);
}

std::vector<ClassId> load_labels(const fs::path& path) {
  return with_path(path, [&] {
    auto in = open_in(path);
    std::vector<ClassId> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto tokens = split_ws(line);
      if (tokens.empty()) continue;
      if (tokens.size() != 1) throw ParseError("expected one label per line", lineno);
      labels.push_back(parse_int(tokens[0], lineno));
    }
    return labels;
  });
}

void save_labels(const std::vector<ClassId>& labels, const fs::path& path) {
  auto out = open_out(path);
  for (ClassId y : labels) out << y << '\n';
}

DatasetBundle bundle_in(const fs::path& dir) {
  return {dir / "source.txt", dir / "source_labels.txt", dir / "target.txt",
          dir / "target_labels.txt", dir / "split.txt"};
}

SplitData load_bundle(const DatasetBundle& bundle) {
  SourceDataset src{load_matrix(bundle.source), load_labels(bundle.source_labels)};
  TargetDataset tgt{load_matrix(bundle.target), load_labels(bundle.target_labels)};
  const std::vector<ClassId> unseen_list = load_labels(bundle.split);
  validate(src, tgt);

  const std::set<ClassId> unseen(unseen_list.begin(), unseen_list.end());
  const std::set<ClassId> classes(src.labels.begin(), src.labels.end());
  for (ClassId y : unseen)
    if (!classes.contains(y))
      throw InvalidArgument("split lists class " + std::to_string(y) + " with no source vector");

  SplitData out;
  std::vector<std::size_t> seen_rows, unseen_rows;
  for (std::size_t i = 0; i < src.size(); ++i) (unseen.contains(src.labels[i]) ? unseen_rows : seen_rows).push_back(i);
  out.seen_source.x = select_rows(src.x, seen_rows);
  out.unseen_source.x = select_rows(src.x, unseen_rows);
  for (std::size_t i : seen_rows) out.seen_source.labels.push_back(src.labels[i]);
  for (std::size_t i : unseen_rows) out.unseen_source.labels.push_back(src.labels[i]);

  std::vector<std::size_t> seen_inst;
  for (std::size_t j = 0; j < tgt.size(); ++j)
    (unseen.contains(tgt.labels[j]) ? out.unseen_target_rows : seen_inst).push_back(j);
  out.seen_target.x = select_rows(tgt.x, seen_inst);
  out.unseen_target.x = select_rows(tgt.x, out.unseen_target_rows);
  for (std::size_t j : seen_inst) out.seen_target.labels.push_back(tgt.labels[j]);
  for (std::size_t j : out.unseen_target_rows) out.unseen_target.labels.push_back(tgt.labels[j]);
  return out;
}

namespace {

constexpr const char* kMagic = "jlse-model";
constexpr int kVersion = 1;

void write_block(std::ostream& out, const std::string& name, const Mat& m) {
  out << "matrix " << name << '\n';
  write_matrix(out, m);
}

}  // namespace

void write_model(std::ostream& out, const ModelFile& model) {
  const Lambdas& l = model.params.lambdas;
  out << kMagic << ' ' << kVersion << '\n';
  out << "lambda source_code " << format_double(l.source_code) << '\n';
  out << "lambda source_fit " << format_double(l.source_fit) << '\n';
  out << "lambda target_code " << format_double(l.target_code) << '\n';
  out << "lambda target_fit " << format_double(l.target_fit) << '\n';
  out << "lambda similarity " << format_double(l.similarity) << '\n';
  for (const auto& [k, v] : model.config) out << "config " << k << ' ' << v << '\n';
  out << "classes " << model.seen_classes.size();
  for (ClassId y : model.seen_classes) out << ' ' << y;
  out << '\n';
  write_block(out, "B", model.params.B);
  write_block(out, "D", model.params.D);
  write_block(out, "W", model.params.W);
  write_block(out, "Zs", model.seen_codes.source);
  write_block(out, "Zt", model.seen_codes.target);
  out << "end\n";
}

ModelFile read_model(std::istream& in) {
  ModelFile model;
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("empty model file", 1);
  {
    const auto t = split_ws(line);
    if (t.size() != 2 || t[0] != kMagic) throw ParseError("not a model file", 1);
    if (parse_int(t[1], 1) != kVersion) throw ParseError("unsupported model version " + t[1], 1);
  }
  bool have[5] = {false, false, false, false, false};
  bool ended = false;
  while (!ended && std::getline(in, line)) {
    ++lineno;
    const auto t = split_ws(line);
    if (t.empty()) continue;
    if (t[0] == "lambda") {
      if (t.size() != 3) throw ParseError("expected 'lambda NAME VALUE'", lineno);
      const double v = parse_double(t[2], lineno);
      Lambdas& l = model.params.lambdas;
      if (t[1] == "source_code") l.source_code = v;
      else if (t[1] == "source_fit") l.source_fit = v;
      else if (t[1] == "target_code") l.target_code = v;
      else if (t[1] == "target_fit") l.target_fit = v;
      else if (t[1] == "similarity") l.similarity = v;
      else throw ParseError("unknown lambda '" + t[1] + "'", lineno);
    } else if (t[0] == "config") {
      if (t.size() < 2) throw ParseError("config line needs a key", lineno);
      const std::size_t keypos = line.find(t[1], line.find("config") + 6);
      std::string value = line.substr(keypos + t[1].size());
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      model.config.emplace_back(t[1], value);
    } else if (t[0] == "classes") {
      if (t.size() < 2) throw ParseError("classes line needs a count", lineno);
      const std::size_t n = parse_count(t[1], lineno);
      if (t.size() != n + 2) throw ParseError("class count does not match listed ids", lineno);
      for (std::size_t k = 0; k < n; ++k) model.seen_classes.push_back(parse_int(t[k + 2], lineno));
    } else if (t[0] == "matrix") {
      if (t.size() != 2) throw ParseError("expected 'matrix NAME'", lineno);
      std::size_t consumed = 0;
      Mat m = read_matrix(in, lineno + 1, &consumed);
      lineno += consumed;
      const std::string names[5] = {"B", "D", "W", "Zs", "Zt"};
      Mat* slots[5] = {&model.params.B, &model.params.D, &model.params.W, &model.seen_codes.source,
                       &model.seen_codes.target};
      bool known = false;
      for (int k = 0; k < 5; ++k) {
        if (t[1] == names[k]) {
          *slots[k] = std::move(m);
          have[k] = known = true;
        }
      }
      if (!known) throw ParseError("unknown matrix block '" + t[1] + "'", lineno);
    } else if (t[0] == "end") {
      ended = true;
    } else {
      throw ParseError("unknown model record '" + t[0] + "'", lineno);
    }
  }
  if (!ended) throw ParseError("model file is truncated (no 'end')", lineno);
  for (bool h : have)
    if (!h) throw ParseError("model file is missing a matrix block", 0);
  validate(model.params);
  return model;
}

void save_model(const ModelFile& model, const fs::path& path) {
  auto out = open_out(path);
  write_model(out, model);
}

ModelFile load_model(const fs::path& path) {
  return with_path(path, [&] {
    auto in = open_in(path);
    return read_model(in);
  });
}

void write_text(const fs::path& path, const std::string& contents) {
  auto out = open_out(path);
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace jlse
