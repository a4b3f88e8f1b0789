#include <doctest.h>

#include "indexbundle/axiom_suite.hpp"
#include "indexbundle/json_io.hpp"

using namespace indexbundle;

namespace {
const ToleranceConfig kCfg;
}

TEST_CASE("record_sum adds ranks, xors bits, adds curvature") {
  const InvariantRecord a{2, {1, 0}, {3}};
  const InvariantRecord b{-1, {1, 1}, {-1}};
  const auto sum = record_sum(a, b);
  CHECK(sum.rank == 1);
  CHECK(sum.w1 == std::vector<int>{0, 1});
  CHECK(sum.c1 == std::vector<int>{2});
}

TEST_CASE("the axiom suite passes on a small run and is deterministic") {
  // small homotopy base keeps this unit-level; the acceptance suite runs the
  // full-size configuration
  const auto report = run_axiom_suite(42, 2, kCfg, false, 16, 4);
  CHECK(report.pass());
  CHECK(report.checks.size() == 8);
  for (const auto& check : report.checks) {
    CHECK(check.trials == 2);
    CHECK(check.failures == 0);
  }

  const auto again = run_axiom_suite(42, 2, kCfg, false, 16, 4);
  Json first = run_report_to_json(report, kCfg);
  Json second = run_report_to_json(again, kCfg);
  first.erase("wall_ms");
  second.erase("wall_ms");
  CHECK(canonical_dump(first) == canonical_dump(second));
}

TEST_CASE("single-trial runs execute each check exactly once") {
  const auto report = run_axiom_suite(7, 1, kCfg, false, 16, 4);
  for (const auto& check : report.checks) CHECK(check.trials == 1);
  CHECK_THROWS_AS(run_axiom_suite(7, 0, kCfg), Error);
}

TEST_CASE("an injected break produces a failing report with a counterexample") {
  const auto report = run_axiom_suite(42, 1, kCfg, true, 16, 4);
  CHECK_FALSE(report.pass());
  bool found = false;
  for (const auto& check : report.checks) {
    if (check.name == "injected-break") {
      found = true;
      CHECK(check.failures == 1);
      CHECK(check.detail.find("counterexample") != std::string::npos);
    }
  }
  CHECK(found);
}
