#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "jlse/crossval.hpp"
#include "jlse/errors.hpp"
#include "jlse/evaluation.hpp"
#include "jlse/inference.hpp"
#include "jlse/io.hpp"
#include "jlse/synth.hpp"
#include "jlse/training.hpp"

namespace jlse::cli {

namespace fs = std::filesystem;

namespace {

// Bundle paths. --data fills in the conventional names; explicit flags win.
struct DataFlags {
  std::string dir;
  std::string source;
  std::string source_labels;
  std::string target;
  std::string target_labels;
  std::string split;

  DatasetBundle resolve() const {
    DatasetBundle b = dir.empty() ? DatasetBundle{} : bundle_in(dir);
    if (!source.empty()) b.source = source;
    if (!source_labels.empty()) b.source_labels = source_labels;
    if (!target.empty()) b.target = target;
    if (!target_labels.empty()) b.target_labels = target_labels;
    if (!split.empty()) b.split = split;
    const std::pair<const fs::path*, const char*> required[] = {
        {&b.source, "--source"},       {&b.source_labels, "--source-labels"},
        {&b.target, "--target"},       {&b.target_labels, "--target-labels"},
        {&b.split, "--split"}};
    for (const auto& [p, flag] : required)
      if (p->empty()) throw InvalidArgument(std::string("missing ") + flag + " (or --data DIR)");
    return b;
  }
};

void add_data_flags(CLI::App* app, DataFlags& f) {
  app->add_option("--data", f.dir, "Bundle directory with the conventional file names");
  app->add_option("--source", f.source, "Class attribute matrix (one row per class)");
  app->add_option("--source-labels", f.source_labels, "Class id of each attribute row");
  app->add_option("--target", f.target, "Instance feature matrix");
  app->add_option("--target-labels", f.target_labels, "Class id of each instance");
  app->add_option("--split", f.split, "Unseen class ids, one per line");
}

struct TrainFlags {
  std::string algo = "simplified";
  bool skip_dictionary_learning = false;
  std::vector<double> source_code{Lambdas{}.source_code};
  std::vector<double> source_fit{Lambdas{}.source_fit};
  std::vector<double> target_code{Lambdas{}.target_code};
  std::vector<double> target_fit{Lambdas{}.target_fit};
  std::vector<double> similarity{Lambdas{}.similarity};
  bool cv = false;
  std::size_t cv_folds = 5;
  bool normalize = false;
  double positive_weight = 1.0;
  std::size_t h_s = 0;
  std::size_t h_t = TrainConfig{}.target_latent;
  std::string b_init = "attributes";
  std::size_t max_outer = TrainConfig{}.max_outer_iterations;
  double tolerance = TrainConfig{}.outer_tolerance;
  std::uint64_t seed = 0;
};

void add_lambda_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--source-code-weight", f.source_code, "Weight on |z_s|^2")->delimiter(',');
  app->add_option("--source-fit-weight", f.source_fit, "Weight on the attribute residual")
      ->delimiter(',');
  app->add_option("--target-code-weight", f.target_code, "Weight on |z_t|^2")->delimiter(',');
  app->add_option("--target-fit-weight", f.target_fit, "Weight on the feature residual")
      ->delimiter(',');
  app->add_option("--similarity-weight", f.similarity, "Ridge weight on the similarity matrix")
      ->delimiter(',');
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  add_lambda_flags(app, f);
  app->add_option("--algo", f.algo, "simplified or full")->check(CLI::IsMember({"simplified", "full"}));
  app->add_flag("--skip-dictionary-learning", f.skip_dictionary_learning,
                "Keep the initial dictionaries and codes");
  app->add_flag("--normalize", f.normalize, "Divide the objective by C*N");
  app->add_option("--positive-weight", f.positive_weight, "Hinge weight of same-class pairs");
  app->add_option("--h-s", f.h_s, "Source latent dimension (0: one per seen class)");
  app->add_option("--h-t", f.h_t, "Target latent dimension");
  app->add_option("--b-init", f.b_init, "attributes or kmeans")
      ->check(CLI::IsMember({"attributes", "kmeans"}));
  app->add_option("--max-outer", f.max_outer, "Outer iteration cap");
  app->add_option("--tolerance", f.tolerance, "Relative objective change that stops training");
  app->add_option("--seed", f.seed, "Seed for k-means and fold selection");
}

TrainConfig train_config(const TrainFlags& f) {
  TrainConfig cfg;
  cfg.algorithm = parse_algorithm(f.algo);
  cfg.source_init = parse_source_init(f.b_init);
  cfg.source_latent = f.h_s;
  cfg.target_latent = f.h_t;
  cfg.max_outer_iterations = f.skip_dictionary_learning ? 0 : f.max_outer;
  cfg.outer_tolerance = f.tolerance;
  cfg.normalize_objective = f.normalize;
  cfg.positive_weight = f.positive_weight;
  cfg.seed = f.seed;
  cfg.lambdas = {f.source_code.front(), f.source_fit.front(), f.target_code.front(),
                 f.target_fit.front(), f.similarity.front()};
  validate(cfg);
  return cfg;
}

std::vector<Lambdas> grid_of(const TrainFlags& f) {
  for (const auto* v : {&f.source_code, &f.source_fit, &f.target_code, &f.target_fit, &f.similarity})
    if (v->empty()) throw InvalidArgument("empty weight list");
  return lambda_grid(f.source_code, f.source_fit, f.target_code, f.target_fit, f.similarity);
}

std::string cv_csv(const CvResult& cv) {
  std::ostringstream s;
  s << "source_code,source_fit,target_code,target_fit,similarity,mean_accuracy,fold_accuracies\n";
  for (const CvRow& r : cv.table) {
    const Lambdas& l = r.lambdas;
    s << format_double(l.source_code) << ',' << format_double(l.source_fit) << ','
      << format_double(l.target_code) << ',' << format_double(l.target_fit) << ','
      << format_double(l.similarity) << ',' << format_double(r.mean_accuracy) << ',';
    for (std::size_t k = 0; k < r.fold_accuracy.size(); ++k)
      s << (k ? ";" : "") << format_double(r.fold_accuracy[k]);
    s << '\n';
  }
  return s.str();
}

std::string trace_csv(const std::vector<TraceEntry>& trace) {
  std::ostringstream s;
  s << "iteration,block,objective\n";
  for (const TraceEntry& e : trace)
    s << e.iteration << ',' << to_string(e.block) << ',' << format_double(e.objective) << '\n';
  return s.str();
}

std::string lambdas_text(const Lambdas& l) {
  return "source_code=" + format_double(l.source_code) + " source_fit=" +
         format_double(l.source_fit) + " target_code=" + format_double(l.target_code) +
         " target_fit=" + format_double(l.target_fit) + " similarity=" +
         format_double(l.similarity);
}

void check_compatible(const ModelParams& p, const SplitData& d) {
  if (p.B.rows() != d.unseen_source.x.cols() && d.unseen_source.size() != 0)
    throw DimensionError("model expects attribute dimension " + std::to_string(p.B.rows()) +
                         ", bundle has " + std::to_string(d.unseen_source.x.cols()));
  if (p.D.rows() != d.unseen_target.x.cols() && d.unseen_target.size() != 0)
    throw DimensionError("model expects feature dimension " + std::to_string(p.D.rows()) +
                         ", bundle has " + std::to_string(d.unseen_target.x.cols()));
  if (d.unseen_source.size() == 0) throw InvalidArgument("split lists no unseen classes");
}

UnseenCodes estimate(Estimation e, const SplitData& d, const ModelFile& m) {
  switch (e) {
    case Estimation::kPlain: return encode_plain(d.unseen_source, d.unseen_target.x, m.params);
    case Estimation::kDissimilarity:
      return estimate_unseen_embeddings(d.unseen_source, d.unseen_target.x, m.params, m.seen_codes);
    case Estimation::kFullPairwise: break;
  }
  throw InvalidArgument("estimation " + to_string(e) + " has no standalone codes");
}

// ---------------------------------------------------------------------------

int cmd_synth(const SynthSpec& spec, const std::string& out_dir, std::ostream& out) {
  if (out_dir.empty()) throw InvalidArgument("synth needs --out-dir");
  const SynthData data = synth_generate(spec);
  write_bundle(data, out_dir);
  out << "wrote " << data.source.size() << " classes (" << data.unseen.size() << " unseen) and "
      << data.target.size() << " instances to " << out_dir << '\n';
  return kOk;
}

int cmd_train(const DataFlags& df, const TrainFlags& tf, std::string model_path,
              const std::string& out_dir, std::ostream& out) {
  const SplitData data = load_bundle(df.resolve());
  TrainConfig cfg = train_config(tf);
  const std::vector<Lambdas> grid = grid_of(tf);
  if (grid.size() > 1 && !tf.cv)
    throw InvalidArgument("several values given for a weight; pass --cv to search them");

  fs::create_directories(out_dir);
  if (tf.cv) {
    CvOptions opts;
    opts.folds = tf.cv_folds;
    opts.seed = tf.seed;
    const CvResult cv = cross_validate(data.seen_source, data.seen_target, grid, cfg, opts);
    write_text(fs::path(out_dir) / "cv.csv", cv_csv(cv));
    cfg.lambdas = cv.best;
    out << "cv best " << lambdas_text(cv.best) << '\n';
  }

  ModelFile model;
  std::vector<TraceEntry> trace;
  std::size_t outer = 0;
  bool converged = false;
  if (cfg.algorithm == Algorithm::kSimplified) {
    FitResult fit = fit_simplified(data.seen_source, data.seen_target, cfg);
    model.params = std::move(fit.params);
    model.seen_codes = std::move(fit.codes);
    trace = std::move(fit.trace);
    outer = fit.outer_iterations;
    converged = fit.converged;
    if (fit.w_unbounded_warning) out << "warning similarity weight 0: W solve was capped\n";
  } else {
    PairwiseFitResult fit = fit_full_pairwise(data.seen_source, data.seen_target, cfg);
    model.params = std::move(fit.params);
    model.seen_codes = std::move(fit.codes);
    trace = std::move(fit.trace);
    outer = fit.outer_iterations;
    converged = fit.converged;
  }
  model.seen_classes = data.seen_source.labels;
  model.config = {
      {"algo", to_string(cfg.algorithm)},
      {"b_init", to_string(cfg.source_init)},
      {"h_s", std::to_string(model.params.B.cols())},
      {"h_t", std::to_string(model.params.D.cols())},
      {"skip_dictionary_learning", tf.skip_dictionary_learning ? "1" : "0"},
      {"max_outer", std::to_string(cfg.max_outer_iterations)},
      {"tolerance", format_double(cfg.outer_tolerance)},
      {"normalize", cfg.normalize_objective ? "1" : "0"},
      {"positive_weight", format_double(cfg.positive_weight)},
      {"seed", std::to_string(cfg.seed)},
      {"cv", tf.cv ? "1" : "0"},
      {"outer_iterations", std::to_string(outer)},
      {"converged", converged ? "1" : "0"},
  };

  if (model_path.empty()) model_path = (fs::path(out_dir) / "model.txt").string();
  save_model(model, model_path);
  write_text(fs::path(out_dir) / "trace.csv", trace_csv(trace));
  out << "trained " << to_string(cfg.algorithm) << " on " << data.seen_source.size()
      << " seen classes, " << data.seen_target.size() << " instances: " << outer
      << " outer iterations, " << (converged ? "converged" : "not converged") << ", objective "
      << format_double(trace.back().objective) << '\n';
  out << "model " << model_path << '\n';
  return kOk;
}

int cmd_predict(const DataFlags& df, const std::string& model_path, const std::string& est_name,
                const std::string& rule_name, std::optional<double> reject,
                const std::string& out_dir, std::ostream& out) {
  if (model_path.empty()) throw InvalidArgument("predict needs --model");
  const SplitData data = load_bundle(df.resolve());
  const ModelFile model = load_model(model_path);
  check_compatible(model.params, data);
  const Estimation est = parse_estimation(est_name);
  const DecisionRule rule = parse_decision_rule(rule_name);
  InferenceOptions io;
  io.reject_threshold = reject;

  EvalReport report;
  std::vector<Prediction> preds;
  if (data.unseen_target.size() != 0) {
    if (est == Estimation::kFullPairwise) {
      preds = predict_full(data.unseen_source, data.unseen_target.x, model.params, io);
      report.warnings.push_back("alg3 ranks by its own converged sum; --rule " + rule_name +
                                " is not used");
    } else {
      preds = predict(estimate(est, data, model), data.unseen_source, model.params, rule, io);
    }
  } else {
    report.warnings.push_back("bundle has no unseen-class instances");
  }

  std::ostringstream lines;
  std::vector<ClassId> ids;
  std::size_t rejected = 0;
  for (const Prediction& p : preds) {
    lines << p.class_id << '\n';
    ids.push_back(p.class_id);
    rejected += p.rejected ? 1 : 0;
  }
  if (!ids.empty()) report.accuracy = accuracy(ids, data.unseen_target.labels);
  if (reject) report.warnings.push_back(std::to_string(rejected) + " predictions below threshold");

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "predictions.txt", lines.str());
  write_text(fs::path(out_dir) / "report.txt", report.to_text());
  out << report.to_text();
  return kOk;
}

int cmd_retrieve(const DataFlags& df, const std::string& model_path, const std::string& est_name,
                 const std::string& rule_name, const std::string& out_dir, std::ostream& out) {
  if (model_path.empty()) throw InvalidArgument("retrieve needs --model");
  const SplitData data = load_bundle(df.resolve());
  const ModelFile model = load_model(model_path);
  check_compatible(model.params, data);
  const Estimation est = parse_estimation(est_name);
  if (est == Estimation::kFullPairwise)
    throw InvalidArgument("retrieve supports --estimate plain or alg4");
  const DecisionRule rule = parse_decision_rule(rule_name);
  if (data.unseen_target.size() == 0) throw InvalidArgument("bundle has no unseen-class instances");
  const UnseenCodes codes = estimate(est, data, model);

  EvalReport report;
  std::ostringstream rankings;
  rankings << "class_id rank instance score\n";
  std::vector<std::vector<int>> relevance;
  for (std::size_t c = 0; c < data.unseen_source.size(); ++c) {
    const ClassId id = data.unseen_source.labels[c];
    const auto ranked = retrieve(c, codes, data.unseen_source, model.params, rule);
    std::vector<int> rel;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const std::size_t inst = ranked[r].instance;
      rel.push_back(data.unseen_target.labels[inst] == id ? 1 : 0);
      rankings << id << ' ' << r + 1 << ' ' << data.unseen_target_rows[inst] << ' '
               << format_double(ranked[r].score) << '\n';
    }
    const bool any = std::find(rel.begin(), rel.end(), 1) != rel.end();
    if (any) {
      report.per_class_ap[id] = average_precision(rel);
      report.pr_curves[id] = precision_recall_curve(rel);
    } else {
      report.warnings.push_back("class " + std::to_string(id) +
                                " has no test instances; excluded from map");
    }
    relevance.push_back(std::move(rel));
  }
  const MapResult m = mean_average_precision(relevance);
  report.map = m.map;

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "rankings.txt", rankings.str());
  write_text(fs::path(out_dir) / "pr.csv", report.pr_csv());
  write_text(fs::path(out_dir) / "report.txt", report.to_text());
  out << report.to_text();
  return kOk;
}

int cmd_crossval(const DataFlags& df, const TrainFlags& tf, const std::string& est_name,
                 const std::string& rule_name, const std::string& out_dir, std::ostream& out) {
  const SplitData data = load_bundle(df.resolve());
  const TrainConfig cfg = train_config(tf);
  CvOptions opts;
  opts.folds = tf.cv_folds;
  opts.seed = tf.seed;
  opts.estimation = parse_estimation(est_name);
  opts.rule = parse_decision_rule(rule_name);
  if (opts.estimation == Estimation::kFullPairwise)
    throw InvalidArgument("crossval supports --estimate plain or alg4");
  const CvResult cv = cross_validate(data.seen_source, data.seen_target, grid_of(tf), cfg, opts);
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "cv.csv", cv_csv(cv));
  for (const CvRow& r : cv.table)
    out << "cv " << lambdas_text(r.lambdas) << " accuracy " << format_double(r.mean_accuracy) << '\n';
  out << "best " << lambdas_text(cv.best) << '\n';
  return kOk;
}

int cmd_eval(const std::string& predictions, const std::string& truth, const std::string& out_dir,
             std::ostream& out) {
  if (predictions.empty() || truth.empty())
    throw InvalidArgument("eval needs --predictions and --truth");
  const std::vector<ClassId> p = load_labels(predictions);
  const std::vector<ClassId> t = load_labels(truth);
  EvalReport report;
  report.accuracy = accuracy(p, t);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "report.txt", report.to_text());
  }
  out << report.to_text();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-shot recognition and retrieval with joint latent similarity embeddings", "jlse"};
  app.require_subcommand(1);

  DataFlags df;
  TrainFlags tf;
  std::string model_path;
  std::string out_dir = ".";
  std::string est_name = to_string(Estimation::kDissimilarity);
  std::string rule_name = to_string(DecisionRule::kSourceFit);
  std::optional<double> reject;
  std::string predictions, truth;
  std::uint64_t seed = 0;
  SynthSpec spec;

  auto* train = app.add_subcommand("train", "Learn dictionaries and the similarity matrix");
  add_data_flags(train, df);
  add_train_flags(train, tf);
  train->add_flag("--cv", tf.cv, "Pick the weights by held-out-class cross-validation");
  train->add_option("--cv-folds", tf.cv_folds, "Two-class holdouts per grid point");
  train->add_option("--model", model_path, "Model output path (default OUT_DIR/model.txt)");
  train->add_option("--out-dir", out_dir, "Directory for trace.csv and cv.csv");

  auto add_inference = [&](CLI::App* sub) {
    add_data_flags(sub, df);
    sub->add_option("--model", model_path, "Trained model file")->required();
    sub->add_option("--estimate", est_name, "plain, alg4 or alg3")
        ->check(CLI::IsMember({"plain", "alg4", "alg3"}));
    sub->add_option("--rule", rule_name, "eq21 or eq22")->check(CLI::IsMember({"eq21", "eq22"}));
    sub->add_option("--out-dir", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Accepted for symmetry; inference is deterministic");
  };
  auto* predict_cmd = app.add_subcommand("predict", "Classify unseen-class instances");
  add_inference(predict_cmd);
  predict_cmd->add_option("--reject-threshold", reject, "Flag predictions scoring below this");
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank instances for each unseen class");
  add_inference(retrieve_cmd);

  auto* cv = app.add_subcommand("crossval", "Score a weight grid on held-out seen classes");
  add_data_flags(cv, df);
  add_train_flags(cv, tf);
  cv->add_option("--cv-folds", tf.cv_folds, "Two-class holdouts per grid point");
  cv->add_option("--estimate", est_name, "plain or alg4")->check(CLI::IsMember({"plain", "alg4"}));
  cv->add_option("--rule", rule_name, "eq21 or eq22")->check(CLI::IsMember({"eq21", "eq22"}));
  cv->add_option("--out-dir", out_dir, "Directory for cv.csv");

  auto* synth = app.add_subcommand("synth", "Write a planted-model dataset bundle");
  synth->add_option("--seen", spec.seen_classes, "Seen classes");
  synth->add_option("--unseen", spec.unseen_classes, "Unseen classes");
  synth->add_option("--samples", spec.samples_per_class, "Instances per class");
  synth->add_option("--source-dim", spec.source_dim, "Attribute dimension");
  synth->add_option("--target-dim", spec.target_dim, "Feature dimension");
  synth->add_option("--latent-dim", spec.latent_dim, "Planted latent dimension");
  synth->add_option("--atoms", spec.atoms_per_class, "Latent atoms mixed per class");
  synth->add_option("--sigma", spec.noise_sigma, "Noise level");
  synth->add_option("--seed", spec.seed, "Generator seed");
  synth->add_option("--out-dir", out_dir, "Bundle directory")->required();

  auto* eval = app.add_subcommand("eval", "Score a predictions file against true labels");
  eval->add_option("--predictions", predictions, "One predicted class id per line")->required();
  eval->add_option("--truth", truth, "One true class id per line")->required();
  eval->add_option("--out-dir", out_dir, "Where to write report.txt");

  std::vector<const char*> argv{"jlse"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  try {
    if (*train) return cmd_train(df, tf, model_path, out_dir, out);
    if (*predict_cmd) return cmd_predict(df, model_path, est_name, rule_name, reject, out_dir, out);
    if (*retrieve_cmd) return cmd_retrieve(df, model_path, est_name, rule_name, out_dir, out);
    if (*cv) return cmd_crossval(df, tf, est_name, rule_name, out_dir, out);
    if (*synth) return cmd_synth(spec, out_dir, out);
    if (*eval) return cmd_eval(predictions, truth, eval->count("--out-dir") ? out_dir : "", out);
  } catch (const DivergedError& e) {
    err << "error: numerical divergence: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kValidation;
}

}  // namespace jlse::cli
