#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "jlse/errors.hpp"
#include "jlse/evaluation.hpp"
#include "support.hpp"

using namespace jlse;
using namespace jlse::testing;

namespace {

std::vector<int> bits(unsigned mask, std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = (mask >> i) & 1u;
  return v;
}

}  // namespace

TEST_CASE("accuracy") {
  const std::vector<ClassId> a{1, 2, 1};
  CHECK(accuracy(a, a) == 1.0);
  CHECK(accuracy(std::vector<ClassId>{3, 3, 3}, a) == 0.0);
  CHECK(accuracy(std::vector<ClassId>{1, 1, 1}, a) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(accuracy(std::vector<ClassId>{}, std::vector<ClassId>{}), InvalidArgument);
  CHECK_THROWS_AS(accuracy(std::vector<ClassId>{1}, a), InvalidArgument);
}

TEST_CASE("average_precision: hand-computed lists") {
  CHECK(average_precision(std::vector<int>{1, 0, 1}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(average_precision(std::vector<int>{1, 1, 1}) == 1.0);
  CHECK(average_precision(std::vector<int>{0, 0, 1}) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(average_precision(std::vector<int>{0, 0}), InvalidArgument);
}

TEST_CASE("average_precision: properties over all short lists") {
  for (std::size_t n = 1; n <= 10; ++n)
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      const std::vector<int> rel = bits(mask, n);
      const double ap = average_precision(rel);
      CHECK(ap == doctest::Approx(brute_average_precision(rel)).epsilon(1e-12));
      CHECK(ap <= 1.0);
      const bool front_loaded = std::is_sorted(rel.rbegin(), rel.rend());
      CHECK((ap == 1.0) == front_loaded);
    }
}

TEST_CASE("average_precision ignores the order of the irrelevant tail") {
  Rng rng(60);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> rel = bits(static_cast<unsigned>(rng() % 4095 + 1), 12);
    const double ap = average_precision(rel);
    // Appending more misses after the last hit changes nothing.
    rel.insert(rel.end(), 5, 0);
    CHECK(average_precision(rel) == ap);
  }
}

TEST_CASE("mean_average_precision") {
  CHECK(mean_average_precision({{1, 1}, {0, 1}}).map == doctest::Approx(0.75));
  CHECK(mean_average_precision({{0, 0, 1}}).map == doctest::Approx(1.0 / 3.0));
  CHECK(mean_average_precision({{1, 0, 1}, {0, 0, 1}}).map == doctest::Approx((5.0 / 6.0 + 1.0 / 3.0) / 2.0));
  const MapResult m = mean_average_precision({{1, 0}, {0, 0}, {0, 1}});
  CHECK(m.included == std::vector<std::size_t>{0, 2});
  CHECK(m.excluded == std::vector<std::size_t>{1});
  CHECK(m.map == doctest::Approx((1.0 + 0.5) / 2.0));
  CHECK_THROWS_AS(mean_average_precision({{0}, {0, 0}}), InvalidArgument);

  Rng rng(61);
  std::vector<std::vector<int>> lists;
  double sum = 0.0;
  for (int c = 0; c < 7; ++c) {
    lists.push_back(bits(static_cast<unsigned>(rng() % 255 + 1), 8));
    sum += average_precision(lists.back());
  }
  CHECK(mean_average_precision(lists).map == doctest::Approx(sum / 7.0).epsilon(1e-14));
}

TEST_CASE("precision_recall_curve") {
  CHECK(precision_recall_curve(std::vector<int>{1}) == std::vector<PrPoint>{{1.0, 1.0}});
  CHECK(precision_recall_curve(std::vector<int>{1, 0}) == std::vector<PrPoint>{{1.0, 1.0}, {1.0, 0.5}});
  CHECK(precision_recall_curve(std::vector<int>{0, 1}) == std::vector<PrPoint>{{0.0, 0.0}, {1.0, 0.5}});
  const auto curve = precision_recall_curve(bits(0b1011001101u, 10));
  for (std::size_t r = 1; r < curve.size(); ++r) CHECK(curve[r].recall >= curve[r - 1].recall);
  CHECK(curve.back().recall == 1.0);
}

TEST_CASE("EvalReport serialization") {
  EvalReport r;
  r.accuracy = 0.5;
  r.per_class_ap = {{3, 1.0}, {7, 0.25}};
  r.map = 0.625;
  r.pr_curves[3] = {{1.0, 1.0}};
  r.warnings.push_back("class 9 has no relevant instances");
  CHECK(r.to_text() ==
        "accuracy 0.5\nap 3 1\nap 7 0.25\nmap 0.625\nwarning class 9 has no relevant instances\n");
  CHECK(r.pr_csv() == "class_id,rank,recall,precision\n3,1,1,1\n");
}
