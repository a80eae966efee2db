#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "test_support.hpp"

using namespace certfp;
using namespace testsupport;
using nlohmann::json;

namespace {

const std::string minimal = R"({
  "schema_version": 1,
  "interval": {"a": 0.0, "b": 1.0},
  "grid_size": 101,
  "operator": {
    "kind": "hammerstein",
    "forcing": "t",
    "kernel": {"separable": [{"phi": "t", "psi": "1"}, {"phi": "1", "psi": "s"}]},
    "nonlinearity": {"rule": "linear", "lambda": 0.25}
  },
  "x0": "zero"
})";

}  // namespace

TEST_CASE("document round trip is the identity") {
  for (const auto* name :
       {"hammerstein_linear.json", "bvp_dirichlet_linear.json", "volterra_monotone.json",
        "affine_contraction.json", "hammerstein_sin_noisy.json"}) {
    const auto doc = ProblemDocument::parse_file(problem_file(name));
    const json once = doc.to_json();
    const auto reparsed = ProblemDocument::parse_text(once.dump(), name);
    CHECK(reparsed.to_json() == once);
    // Serialization agrees with the original document field-for-field.
    std::ifstream in(problem_file(name));
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(once == json::parse(buf.str()));
  }
}

TEST_CASE("unknown fields are rejected with their location") {
  json doc = json::parse(minimal);
  doc["operator"]["mystery"] = 1;
  try {
    ProblemDocument::parse_text(doc.dump(), "doc");
    FAIL("expected ParseFailure");
  } catch (const ParseFailure& e) {
    CHECK(std::string(e.what()).find("mystery") != std::string::npos);
    CHECK(std::string(e.what()).find("operator") != std::string::npos);
  }
}

TEST_CASE("syntax errors carry line and column") {
  try {
    ProblemDocument::parse_text("{\n  \"schema_version\": 1,\n  oops\n}", "doc");
    FAIL("expected ParseFailure");
  } catch (const ParseFailure& e) {
    CHECK(e.line == 3);
    CHECK(e.column >= 1);
  }
}

TEST_CASE("schema validation") {
  auto expect_failure = [](json doc, const std::string& needle) {
    try {
      ProblemDocument::parse_text(doc.dump(), "doc");
      FAIL("expected ParseFailure for " + needle);
    } catch (const ParseFailure& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  json doc = json::parse(minimal);
  doc.erase("x0");
  expect_failure(doc, "x0");

  doc = json::parse(minimal);
  doc["schema_version"] = 2;
  expect_failure(doc, "schema_version");

  doc = json::parse(minimal);
  doc["operator"]["kind"] = "unknown";
  expect_failure(doc, "kind");

  doc = json::parse(minimal);
  doc["operator"]["nonlinearity"] = {{"rule", "expression"}, {"expr", "u/2"}};
  expect_failure(doc, "lip");

  doc = json::parse(minimal);
  doc["operator"]["forcing"] = "s";  // forcing is a function of t only
  expect_failure(doc, "forcing");

  doc = json::parse(minimal);
  doc["stop"] = {{"rule", "residual"}};
  expect_failure(doc, "eps");

  doc = json::parse(minimal);
  doc["x0"] = {{"table", {0.0, 0.0, 0.0}}};  // grid_size is 101
  expect_failure(doc, "grid_size");

  doc = json::parse(minimal);
  doc["operator"]["kernel"] = {{"table", {{0.0, 0.0}, {0.0, 0.0}}}};
  expect_failure(doc, "grid_size");
}

TEST_CASE("documents build working operators") {
  const auto doc = ProblemDocument::parse_text(minimal, "doc");
  const auto op = doc.build_operator();
  CHECK(op.kind() == FixedPointOperator::Kind::Hammerstein);
  CHECK(op.grid_size() == 101);
  const auto x0 = doc.build_x0();
  CHECK(sup_norm(x0) == 0.0);
  CHECK(op.kernel_bound() == Catch::Approx(1.5).margin(1e-12));

  // Refinement doubles the node count for expression-backed data.
  CHECK(doc.refinable());
  CHECK(doc.build_operator(201).grid_size() == 201);
}

TEST_CASE("documents with tables are not refinable") {
  json doc = json::parse(minimal);
  doc["grid_size"] = 3;
  doc["operator"]["kernel"] = {{"table", {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}}};
  const auto parsed = ProblemDocument::parse_text(doc.dump(), "doc");
  CHECK_FALSE(parsed.refinable());
  CHECK_THROWS_AS(parsed.build_operator(5), std::invalid_argument);
  CHECK(parsed.build_operator().kernel_bound() == 0.0);
}

TEST_CASE("noise and stop sections build engine inputs") {
  const auto doc = ProblemDocument::parse_file(problem_file("hammerstein_sin_noisy.json"));
  REQUIRE(doc.noise.has_value());
  const auto budget = doc.build_noise();
  CHECK(budget.kind == NoiseBudget::Kind::Constant);
  CHECK(budget.eta(3) == Catch::Approx(0.001));
  CHECK(budget.seed == 424242);

  REQUIRE(doc.stop.has_value());
  const auto rule = doc.build_stop();
  REQUIRE(rule.has_value());
  CHECK(rule->kind == StopRule::Kind::Residual);
  CHECK(rule->eps == Catch::Approx(0.01));
}

TEST_CASE("literal zero divisors surface as document warnings") {
  json doc = json::parse(minimal);
  doc["operator"]["forcing"] = "t / 0";
  const auto parsed = ProblemDocument::parse_text(doc.dump(), "doc");
  REQUIRE_FALSE(parsed.parse_warnings.empty());
  CHECK(parsed.parse_warnings[0].find("forcing") != std::string::npos);
  CHECK(parsed.parse_warnings[0].find("zero") != std::string::npos);
  // Evaluation of the bad expression is a runtime error.
  CHECK_THROWS_AS(parsed.build_operator(), expr::EvalError);
}

TEST_CASE("expression-rule nonlinearities match their closed-form twins") {
  json doc = json::parse(minimal);
  doc["operator"]["nonlinearity"] = {{"rule", "expression"},
                                     {"expr", "u / 4"},
                                     {"lip", 0.25},
                                     {"zero_bound", 0.0}};
  const auto expr_op = ProblemDocument::parse_text(doc.dump(), "doc").build_operator();

  doc["operator"]["nonlinearity"] = {{"rule", "linear"}, {"lambda", 0.25}};
  const auto linear_op = ProblemDocument::parse_text(doc.dump(), "doc").build_operator();

  const BallRegion ball(GridFunction::zero(Interval(0.0, 1.0), 101), 2.0);
  for (const auto& x : sample_ball(ball, 6, 13))
    CHECK(sup_distance(expr_op.apply(x), linear_op.apply(x)) < 1e-15);
}

TEST_CASE("green documents produce boundary-correct operators") {
  const auto doc = ProblemDocument::parse_file(problem_file("bvp_dirichlet_linear.json"));
  const auto op = doc.build_operator();
  CHECK(op.kind() == FixedPointOperator::Kind::Green);
  const auto y = op.apply(doc.build_x0());
  CHECK(std::abs(y[0]) < 1e-12);
  CHECK(std::abs(y[op.grid_size() - 1] - 1.0) < 1e-12);
}
