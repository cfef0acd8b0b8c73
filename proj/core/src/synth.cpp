#include "jlse/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "jlse/errors.hpp"

namespace jlse {

void validate(const SynthSpec& s) {
  if (s.seen_classes == 0 || s.unseen_classes == 0 || s.samples_per_class == 0)
    throw InvalidArgument("synth: class and sample counts must be >= 1");
  if (s.source_dim == 0 || s.target_dim == 0 || s.latent_dim == 0 || s.atoms_per_class == 0)
    throw InvalidArgument("synth: dimensions and atoms per class must be >= 1");
  if (!(s.noise_sigma >= 0.0)) throw InvalidArgument("synth: sigma must be >= 0");
}

SynthData synth_generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t K = spec.seen_classes + spec.unseen_classes;
  const std::size_t h = spec.latent_dim;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::exponential_distribution<double> exponential(1.0);

  SynthData out;
  out.true_B = Mat(spec.source_dim, h);
  for (double& v : out.true_B.data()) v = normal(rng);

  out.true_D = Mat(spec.target_dim, h);
  for (std::size_t r = 0; r < spec.target_dim; ++r) {
    auto row = out.true_D.row(r);
    for (double& v : row) v = normal(rng);
    const double n = norm(row);
    for (double& v : row) v /= n;
  }

  // Each class mixes a few shared atoms. Supports are distinct while enough
  // subsets exist; repeated supports get Dirichlet weights instead of equal ones.
  const std::size_t k = std::min(spec.atoms_per_class, h);
  std::vector<std::vector<std::size_t>> supports;
  std::vector<std::size_t> pick(k);
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    supports.push_back(pick);
    std::size_t pos = k;
    while (pos > 0 && pick[pos - 1] == h - k + pos - 1) --pos;
    if (pos == 0) break;
    ++pick[pos - 1];
    for (std::size_t a = pos; a < k; ++a) pick[a] = pick[a - 1] + 1;
  }
  std::shuffle(supports.begin(), supports.end(), rng);

  out.class_codes = Mat(K, h);
  for (std::size_t c = 0; c < K; ++c) {
    auto row = out.class_codes.row(c);
    const auto& support = supports[c % supports.size()];
    const bool repeated = c >= supports.size();
    double total = 0.0;
    for (std::size_t a : support) {
      row[a] = repeated ? exponential(rng) : 1.0;
      total += row[a];
    }
    for (std::size_t a : support) row[a] /= total;
  }

  out.source.x = Mat(K, spec.source_dim);
  for (std::size_t c = 0; c < K; ++c) {
    Vec a = matvec(out.true_B, out.class_codes.row(c));
    for (double& v : a) v += spec.noise_sigma * normal(rng);
    out.source.x.set_row(c, a);
    out.source.labels.push_back(static_cast<ClassId>(c));
  }

  std::vector<ClassId> ids(K);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  out.unseen.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(spec.unseen_classes));
  std::sort(out.unseen.begin(), out.unseen.end());

  const std::size_t M = K * spec.samples_per_class;
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  Mat features(M, spec.target_dim);
  std::vector<ClassId> labels(M);
  Vec z(h);
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t c = m / spec.samples_per_class;
    const auto zc = out.class_codes.row(c);
    for (std::size_t k = 0; k < h; ++k) z[k] = zc[k] + spec.noise_sigma * normal(rng);
    Vec x = matvec(out.true_D, z);
    for (double& v : x) v += spec.noise_sigma * normal(rng);
    features.set_row(order[m], x);
    labels[order[m]] = static_cast<ClassId>(c);
  }
  out.target = {std::move(features), std::move(labels)};
  return out;
}

DatasetBundle write_bundle(const SynthData& data, const std::filesystem::path& dir) {
  const DatasetBundle b = bundle_in(dir);
  save_matrix(data.source.x, b.source);
  save_labels(data.source.labels, b.source_labels);
  save_matrix(data.target.x, b.target);
  save_labels(data.target.labels, b.target_labels);
  save_labels(data.unseen, b.split);
  return b;
}

}  // namespace jlse
