#include <doctest.h>

#include <sstream>

#include "cli.hpp"
#include "jlse/io.hpp"
#include "jlse/training.hpp"
#include "support.hpp"

using namespace jlse;
using namespace jlse::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run jlse_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

/// Small bundle in a fresh directory.
struct Fixture {
  TempDir dir{"cli"};
  std::string data = (dir.path() / "data").string();
  std::string out = (dir.path() / "out").string();
  std::string model = (dir.path() / "out" / "model.txt").string();

  explicit Fixture(std::string unseen = "3") {
    const Run r = jlse_cli({"synth", "--seen", "6", "--unseen", unseen, "--samples", "10",
                            "--seed", "4", "--out-dir", data});
    REQUIRE(r.code == 0);
  }
  Run train(std::vector<std::string> extra = {}) const {
    std::vector<std::string> args{"train", "--data", data, "--out-dir", out, "--max-outer", "5",
                                  "--h-t", "4"};
    args.insert(args.end(), extra.begin(), extra.end());
    return jlse_cli(args);
  }
};

}  // namespace

TEST_CASE("cli: train writes a model and a monotone trace") {
  Fixture f;
  const Run r = f.train();
  REQUIRE(r.code == 0);
  CHECK(r.out.find("trained simplified") != std::string::npos);
  const ModelFile m = load_model(f.model);
  CHECK(m.params.D.cols() == 4);
  CHECK(m.seen_classes.size() == 6);

  const auto trace = lines_of(read_text(fs::path(f.out) / "trace.csv"));
  REQUIRE(trace.size() >= 2);
  CHECK(trace[0] == "iteration,block,objective");
  double prev = 1e300;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const double obj = std::stod(trace[k].substr(trace[k].rfind(',') + 1));
    CHECK(obj <= prev + 1e-8);
    prev = obj;
  }
}

TEST_CASE("cli: skipping dictionary learning keeps the initial dictionaries") {
  Fixture f;
  REQUIRE(f.train({"--skip-dictionary-learning"}).code == 0);
  const ModelFile m = load_model(f.model);
  const SplitData d = load_bundle(bundle_in(f.data));
  TrainConfig cfg;
  cfg.target_latent = 4;
  const Dictionaries init = init_dictionaries(d.seen_source, d.seen_target, cfg);
  CHECK(m.params.B == init.B);
  CHECK(m.params.D == init.D);
}

TEST_CASE("cli: one-point cross-validation echoes its weights") {
  Fixture f;
  const Run r = f.train({"--cv", "--cv-folds", "2", "--source-code-weight", "0.2",
                         "--similarity-weight", "0.001"});
  REQUIRE(r.code == 0);
  const ModelFile m = load_model(f.model);
  CHECK(m.params.lambdas == Lambdas{0.2, 1.0, 0.1, 1.0, 0.001});
  CHECK(fs::exists(fs::path(f.out) / "cv.csv"));

  CHECK(f.train({"--similarity-weight", "0.1,0.01"}).code == cli::kValidation);
}

TEST_CASE("cli: predict, retrieve and eval") {
  Fixture f;
  REQUIRE(f.train().code == 0);
  const SplitData d = load_bundle(bundle_in(f.data));
  for (const auto& [est, rule] : std::vector<std::pair<std::string, std::string>>{
           {"plain", "eq21"}, {"alg4", "eq22"}, {"alg3", "eq22"}}) {
    const Run r = jlse_cli({"predict", "--data", f.data, "--model", f.model, "--estimate", est,
                            "--rule", rule, "--out-dir", f.out});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("accuracy ") == 0);
    const auto preds = lines_of(read_text(fs::path(f.out) / "predictions.txt"));
    CHECK(preds.size() == d.unseen_target.size());
  }

  const std::string first = read_text(fs::path(f.out) / "predictions.txt");
  REQUIRE(jlse_cli({"predict", "--data", f.data, "--model", f.model, "--estimate", "alg3",
                    "--out-dir", f.out}).code == 0);
  CHECK(read_text(fs::path(f.out) / "predictions.txt") == first);

  const Run r = jlse_cli({"retrieve", "--data", f.data, "--model", f.model, "--out-dir", f.out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("map ") != std::string::npos);
  const auto pr = lines_of(read_text(fs::path(f.out) / "pr.csv"));
  REQUIRE(pr.size() == 1 + d.unseen_source.size() * d.unseen_target.size());
  CHECK(pr[0] == "class_id,rank,recall,precision");
  std::string last_class;
  double last_recall = 0.0;
  for (std::size_t k = 1; k < pr.size(); ++k) {
    std::istringstream row(pr[k]);
    std::string cls, rank, recall;
    std::getline(row, cls, ',');
    std::getline(row, rank, ',');
    std::getline(row, recall, ',');
    if (cls != last_class) last_recall = 0.0;
    CHECK(std::stod(recall) >= last_recall);
    last_recall = std::stod(recall);
    last_class = cls;
  }
  const auto rankings = lines_of(read_text(fs::path(f.out) / "rankings.txt"));
  CHECK(rankings[0] == "class_id rank instance score");
  CHECK(rankings.size() == pr.size());

  save_labels(d.unseen_target.labels, fs::path(f.out) / "truth.txt");
  const Run e = jlse_cli({"eval", "--predictions", (fs::path(f.out) / "truth.txt").string(), "--truth",
                          (fs::path(f.out) / "truth.txt").string()});
  CHECK(e.code == 0);
  CHECK(e.out == "accuracy 1\n");
}

TEST_CASE("cli: a single unseen class takes every prediction") {
  Fixture f("1");
  REQUIRE(f.train().code == 0);
  REQUIRE(jlse_cli({"predict", "--data", f.data, "--model", f.model, "--out-dir", f.out}).code == 0);
  const auto preds = lines_of(read_text(fs::path(f.out) / "predictions.txt"));
  REQUIRE(!preds.empty());
  for (const auto& p : preds) CHECK(p == preds.front());
  CHECK(read_text(fs::path(f.out) / "report.txt").find("accuracy 1\n") == 0);
}

TEST_CASE("cli: exit codes") {
  Fixture f;
  CHECK(jlse_cli({"--help"}).code == 0);
  CHECK(jlse_cli({}).code == cli::kValidation);
  CHECK(jlse_cli({"train", "--bogus"}).code == cli::kValidation);
  CHECK(jlse_cli({"predict", "--data", f.data}).code == cli::kValidation);
  CHECK(jlse_cli({"predict", "--data", f.data, "--model", f.model + ".missing"}).code == cli::kValidation);
  CHECK(f.train({"--h-t", "500"}).code == cli::kValidation);
  CHECK(jlse_cli({"eval", "--predictions", f.data + "/nope", "--truth", f.data + "/nope"}).code ==
        cli::kValidation);

  // A model trained on other dimensions does not fit this bundle.
  Fixture other;
  REQUIRE(jlse_cli({"synth", "--source-dim", "5", "--out-dir", other.data}).code == 0);
  REQUIRE(other.train().code == 0);
  const Run mismatch = jlse_cli({"predict", "--data", f.data, "--model", other.model, "--out-dir", f.out});
  CHECK(mismatch.code == cli::kValidation);
  CHECK(!mismatch.err.empty());

  // Overflowing features make the objective non-finite.
  Mat x = load_matrix(fs::path(f.data) / "target.txt");
  for (double& v : x.data()) v *= 1e200;
  save_matrix(x, fs::path(f.data) / "target.txt");
  CHECK(f.train().code == cli::kDiverged);
}
