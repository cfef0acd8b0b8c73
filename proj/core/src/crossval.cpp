#include "jlse/crossval.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "jlse/errors.hpp"

namespace jlse {

std::vector<Lambdas> lambda_grid(const std::vector<double>& source_code,
                                 const std::vector<double>& source_fit,
                                 const std::vector<double>& target_code,
                                 const std::vector<double>& target_fit,
                                 const std::vector<double>& similarity) {
  std::vector<Lambdas> grid;
  for (double a : source_code)
    for (double b : source_fit)
      for (double c : target_code)
        for (double d : target_fit)
          for (double e : similarity) grid.push_back({a, b, c, d, e});
  return grid;
}

std::vector<std::vector<std::size_t>> holdout_folds(std::size_t classes, std::size_t folds,
                                                    std::uint64_t seed) {
  if (classes < 4) throw InvalidArgument("cross-validation needs at least 4 seen classes");
  if (folds == 0) throw InvalidArgument("cross-validation needs at least one fold");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> perm(classes);
  for (std::size_t f = 0; f < folds; ++f) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> held{perm[0], perm[1]};
    std::sort(held.begin(), held.end());
    out.push_back(std::move(held));
  }
  return out;
}

namespace {

auto as_tuple(const Lambdas& l) {
  return std::make_tuple(l.source_code, l.source_fit, l.target_code, l.target_fit, l.similarity);
}

double fold_accuracy(const SourceDataset& src, const TargetDataset& tgt,
                     const std::vector<std::size_t>& held, const TrainConfig& cfg,
                     const CvOptions& options) {
  std::set<ClassId> held_ids;
  for (std::size_t i : held) held_ids.insert(src.labels[i]);

  SourceDataset train_src, test_src;
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < src.size(); ++i) {
    (held_ids.contains(src.labels[i]) ? test_rows : train_rows).push_back(i);
  }
  train_src.x = select_rows(src.x, train_rows);
  test_src.x = select_rows(src.x, test_rows);
  for (std::size_t i : train_rows) train_src.labels.push_back(src.labels[i]);
  for (std::size_t i : test_rows) test_src.labels.push_back(src.labels[i]);

  std::vector<std::size_t> train_inst, test_inst;
  for (std::size_t j = 0; j < tgt.size(); ++j)
    (held_ids.contains(tgt.labels[j]) ? test_inst : train_inst).push_back(j);
  if (test_inst.empty()) throw InvalidArgument("cross-validation fold has no held-out instances");
  TargetDataset train_tgt{select_rows(tgt.x, train_inst), {}};
  for (std::size_t j : train_inst) train_tgt.labels.push_back(tgt.labels[j]);
  const Mat test_x = select_rows(tgt.x, test_inst);

  TrainConfig fold_cfg = cfg;
  if (fold_cfg.source_latent > train_src.size()) fold_cfg.source_latent = 0;
  const FitResult fit = fit_simplified(train_src, train_tgt, fold_cfg);

  std::vector<Prediction> preds;
  if (options.estimation == Estimation::kFullPairwise) {
    preds = predict_full(test_src, test_x, fit.params);
  } else {
    const UnseenCodes codes = options.estimation == Estimation::kPlain
                                  ? encode_plain(test_src, test_x, fit.params)
                                  : estimate_unseen_embeddings(test_src, test_x, fit.params, fit.codes);
    preds = predict(codes, test_src, fit.params, options.rule);
  }
  std::size_t hits = 0;
  for (std::size_t k = 0; k < preds.size(); ++k)
    if (preds[k].class_id == tgt.labels[test_inst[k]]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace

CvResult cross_validate(const SourceDataset& src, const TargetDataset& tgt,
                        const std::vector<Lambdas>& grid, const TrainConfig& base,
                        const CvOptions& options) {
  validate(src, tgt);
  if (grid.empty()) throw InvalidArgument("cross-validation grid is empty");
  const auto folds = holdout_folds(src.size(), options.folds, options.seed);

  CvResult result;
  for (const Lambdas& lambdas : grid) {
    TrainConfig cfg = base;
    cfg.lambdas = lambdas;
    CvRow row{lambdas, {}, 0.0};
    for (const auto& held : folds) row.fold_accuracy.push_back(fold_accuracy(src, tgt, held, cfg, options));
    row.mean_accuracy = std::accumulate(row.fold_accuracy.begin(), row.fold_accuracy.end(), 0.0) /
                        static_cast<double>(row.fold_accuracy.size());
    result.table.push_back(std::move(row));
  }

  const CvRow* best = &result.table.front();
  for (const CvRow& row : result.table) {
    if (row.mean_accuracy > best->mean_accuracy ||
        (row.mean_accuracy == best->mean_accuracy && as_tuple(row.lambdas) < as_tuple(best->lambdas))) {
      best = &row;
    }
  }
  result.best = best->lambdas;
  return result;
}

}  // namespace jlse
