#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mseg/error.hpp"
#include "mseg/eval_metrics.hpp"
#include "mseg/util.hpp"
#include "oracles.hpp"

using namespace mseg;

namespace {

using Labels = std::vector<std::int64_t>;

struct Scores {
  double h, c, v;
};

Scores score(const Labels& truth, const Labels& pred) {
  auto t = contingency(truth, pred);
  double h = homogeneity(t), c = completeness(t);
  return {h, c, v_measure(h, c)};
}

constexpr std::int64_t A = 0, B = 1;

Ipv4 ip(std::uint32_t last) { return Ipv4(0x0a000000u + last); }

}  // namespace

TEST_CASE("contingency") {
  auto t = contingency(Labels{A, A, B}, Labels{1, 2, 2});
  CHECK(t.n == 3);
  CHECK(t.at(A, 1) == 1);
  CHECK(t.at(A, 2) == 1);
  CHECK(t.at(B, 2) == 1);
  CHECK(t.at(B, 1) == 0);
  CHECK(t.class_totals == std::vector<std::size_t>{2, 1});
  CHECK(t.group_totals == std::vector<std::size_t>{1, 2});

  auto diag = contingency(Labels{4, 5, 6}, Labels{4, 5, 6});
  for (std::int64_t i = 4; i <= 6; ++i)
    for (std::int64_t j = 4; j <= 6; ++j) CHECK(diag.at(i, j) == (i == j ? 1u : 0u));

  auto single = contingency(Labels{9}, Labels{3});
  CHECK(single.n == 1);
  CHECK(single.at(9, 3) == 1);

  CHECK_THROWS_AS(contingency(Labels{1, 2}, Labels{1}), DataError);
  CHECK_THROWS_AS(contingency(Labels{}, Labels{}), DataError);
}

TEST_CASE("homogeneity completeness v-measure examples") {
  auto perfect = score({A, A, B, B}, {1, 1, 2, 2});
  CHECK(perfect.h == doctest::Approx(1.0));
  CHECK(perfect.c == doctest::Approx(1.0));

  CHECK(score({A, A, B, B}, {1, 2, 3, 4}).h == doctest::Approx(1.0));
  auto merged = score({A, A, B, B}, {1, 1, 1, 1});
  CHECK(merged.h == doctest::Approx(0.0));
  CHECK(merged.c == 1.0);
  CHECK(score({A, A, B, B}, {1, 1, 2, 3}).c == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  CHECK(v_measure(1, 1) == 1.0);
  CHECK(v_measure(1, 2.0 / 3.0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(v_measure(0, 0) == 0.0);

  auto crossed = score({A, A, B, B}, {1, 2, 1, 2});
  CHECK(std::abs(crossed.h) < 1e-12);
  CHECK(std::abs(crossed.c) < 1e-12);
  CHECK(crossed.v < 1e-12);
}

TEST_CASE("metrics agree with the mutual-information oracle on random labelings") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(50);
    const std::size_t classes = 1 + rng.index(8), clusters = 1 + rng.index(8);
    Labels truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<std::int64_t>(rng.index(classes));
      pred[i] = static_cast<std::int64_t>(rng.index(clusters)) + 100;
    }
    auto got = score(truth, pred);
    auto want = oracle::clustering_scores(truth, pred);
    CHECK(std::abs(got.h - want.homogeneity) <= 1e-9);
    CHECK(std::abs(got.c - want.completeness) <= 1e-9);
    CHECK(std::abs(got.v - want.v_measure) <= 1e-9);
    for (double x : {got.h, got.c, got.v}) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    if (got.h + got.c > 0) CHECK(std::abs(got.v - 2 * got.h * got.c / (got.h + got.c)) <= 1e-12);

    auto swapped = score(pred, truth);
    CHECK(std::abs(swapped.h - got.c) <= 1e-12);
    CHECK(std::abs(swapped.c - got.h) <= 1e-12);

    // Relabel clusters by a random bijection.
    std::vector<std::int64_t> perm(clusters);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = clusters - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
    Labels relabeled(n);
    for (std::size_t i = 0; i < n; ++i) relabeled[i] = perm[static_cast<std::size_t>(pred[i] - 100)] * 7 - 3;
    auto permuted = score(truth, relabeled);
    CHECK(std::abs(permuted.h - got.h) <= 1e-12);
    CHECK(std::abs(permuted.c - got.c) <= 1e-12);
    CHECK(std::abs(permuted.v - got.v) <= 1e-12);

    CHECK(std::abs(score(truth, truth).v - 1.0) <= 1e-12);
    Labels singletons(n), one(n, 0);
    std::iota(singletons.begin(), singletons.end(), 0);
    CHECK(std::abs(score(truth, singletons).h - 1.0) <= 1e-12);
    CHECK(score(truth, one).c == 1.0);
  }
}

TEST_CASE("evaluate") {
  GroundTruth truth = {{ip(1), "a"}, {ip(2), "a"}, {ip(3), "b"}, {ip(4), "b"}};
  SecurityGroups matching;
  matching.add(ip(1), 0);
  matching.add(ip(2), 0);
  matching.add(ip(3), 4);
  matching.add(ip(4), 4);
  auto r = evaluate(matching, truth, 1.5, "demo");
  CHECK(r.homogeneity == doctest::Approx(1.0));
  CHECK(r.v_measure == doctest::Approx(1.0));
  CHECK(r.asset_qty == 4);
  CHECK(r.true_group_qty == 2);
  CHECK(r.suggested_group_qty == 2);
  CHECK(r.run_time_seconds == 1.5);

  SecurityGroups singles;
  for (std::uint32_t i = 1; i <= 4; ++i) singles.add(ip(i), i);
  auto s = evaluate(singles, truth, 0);
  CHECK(s.homogeneity == doctest::Approx(1.0));
  CHECK(s.completeness == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.v_measure == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  singles.add(ip(9), 9);
  try {
    evaluate(singles, truth, 0);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("10.0.0.9") != std::string::npos);
  }
}

TEST_CASE("report formatting") {
  EvalReport r;
  r.dataset = "d1";
  r.asset_qty = 312;
  r.true_group_qty = 108;
  r.suggested_group_qty = 175;
  r.run_time_seconds = 30.0;
  r.homogeneity = 0.9824;
  r.completeness = 0.8476;
  r.v_measure = 0.9107;
  CHECK(std::string(kEvalReportHeader) ==
        "dataset,asset_qty,group_qty,suggested_group_qty,runtime_s,homogeneity,completeness,v_measure");
  CHECK(eval_report_row(r) == "d1,312,108,175,30.000,0.982400,0.847600,0.910700");
  CHECK(format_percent(0.9824) == "98.24%");
  CHECK(format_percent(1.0) == "100.00%");
  CHECK(format_percent(0.000125) == "0.01%");  // 0.0125 -> half to even
  CHECK(format_percent(0.000375) == "0.04%");
  CHECK(eval_report_summary(r).find("91.07%") != std::string::npos);
}
