// Copyright 2026 The robust-loss-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <string>

#include "errors.hpp"
#include "harness.hpp"

using namespace rll;

namespace {

// 0 when the command runs without throwing.
int code_of(std::string_view command, std::string_view json) {
  try {
    run_command(command, json);
  } catch (const Error& e) {
    return static_cast<int>(e.code());
  }
  return 0;
}

int code(ErrorCode c) { return static_cast<int>(c); }

double num(const Table& t, std::size_t row, const std::string& col) { return t.at(row, col).get<double>(); }

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing") {
  const ExperimentConfig sym = parse_experiment_config("check-symmetry", "");
  CHECK(sym.losses.size() == 7);
  CHECK(sym.classes == std::vector<int>{2, 3, 5, 10});
  const ExperimentConfig rob = parse_experiment_config("robustness-muh", "{}");
  CHECK(rob.loss == "muh");
  CHECK(rob.rho == 0.4);
  CHECK(rob.seeds.size() == 5);
  const ExperimentConfig sw = parse_experiment_config("sweep-alpha", R"({"alpha_schedule": {"alpha0": 2, "ratio": 0.5, "count": 3}})");
  CHECK(sw.alpha_schedule.values() == std::vector<double>{2.0, 1.0, 0.5});
  const ExperimentConfig tr = parse_experiment_config("demo-mitigation", R"({"train": {"max_iters": 7, "init": "gaussian"}})");
  CHECK(tr.train.max_iters == 7);
  CHECK(tr.train.init == InitKind::Gaussian);

  CHECK(code_of("robustness-muh", R"({"bogus": 1})") == code(ErrorCode::Config));
  CHECK(code_of("robustness-muh", R"({"train": {"bogus": 1}})") == code(ErrorCode::Config));
  CHECK(code_of("robustness-muh", R"({"noise": {"rho": "high"}})") == code(ErrorCode::Config));
  CHECK(code_of("sweep-alpha", R"({"alpha_schedule": {"ratio": 1.5}})") == code(ErrorCode::Config));
  CHECK(code_of("robustness-muh", "{not json") == code(ErrorCode::Config));
  CHECK(code_of("no-such-command", "{}") == code(ErrorCode::Config));
  CHECK(code_of("robustness-muh", R"({"noise": {"rho": 0.9}})") == code(ErrorCode::InvalidNoise));

  const Json echoed = config_to_json(rob);
  CHECK(echoed["loss"] == "muh");
  CHECK(echoed["train"]["max_iters"] == 100000);
}

TEST_CASE("check-symmetry") {
  const Report r = run_command("check-symmetry", R"({"trials": 200})");
  CHECK(r.passed);
  const Table& t = r.table("symmetry");
  CHECK(t.size() == 28);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t.at(i, "symmetric") == t.at(i, "expected_symmetric"));
    const std::string loss = t.at(i, "loss").get<std::string>();
    if (loss == "muh") CHECK(num(t, i, "max_deviation") <= 1e-12);
    if (loss == "square_star") CHECK(num(t, i, "decomposition_spread") <= 1e-12);
  }
  const Report bad = run_command("check-symmetry", R"({"losses": ["softmax_ce"], "classes": [3], "tol": 1e300})");
  CHECK(!bad.passed);
}

TEST_CASE("verify-risk-identity") {
  const Report r = run_command("verify-risk-identity", R"({"rhos": [0, 0.3], "classes": [3], "models_per_cell": 2})");
  CHECK(r.passed);
  CHECK(r.summary["max_identity_residual"].get<double>() <= 1e-12);
  const Table& t = r.table("risk_identity");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (num(t, i, "rho") == 0.0) CHECK(num(t, i, "exact_noisy_risk") == num(t, i, "clean_risk"));
    if (t.at(i, "loss") == "muh") CHECK(std::abs(num(t, i, "total_label_risk")) <= 1e-12);
  }
}

TEST_CASE("robustness-muh") {
  const Report r = run_command("robustness-muh", R"({"seeds": [0, 1], "dataset": {"n_per_class": 30}})");
  CHECK(r.passed);
  const Table& t = r.table("robustness");
  REQUIRE(t.size() == 2);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(num(t, i, "agreement") == 1.0);
    CHECK(num(t, i, "scaling_gap") <= 1e-8);
    CHECK(num(t, i, "gd_gap_noisy") <= 1e-6);
  }
  bool has_model = false;
  for (const auto& [name, body] : r.files) has_model = has_model || name == "model_noisy_seed1.json";
  CHECK(has_model);

  const Report zero = run_command("robustness-muh", R"({"noise": {"rho": 0}, "seeds": [0], "dataset": {"n_per_class": 30}})");
  CHECK(num(zero.table("robustness"), 0, "scaling_gap") <= 1e-12);
  CHECK(num(zero.table("robustness"), 0, "lambda") == 1.0);

  const Report sq = run_command("robustness-muh", R"({"loss": "square_star", "seeds": [0], "dataset": {"n_per_class": 30}})");
  CHECK(sq.passed);
  CHECK(num(sq.table("robustness"), 0, "agreement") == 1.0);

  const Report traced = run_command("robustness-muh", R"({"seeds": [0], "dataset": {"n_per_class": 20}, "train": {"emit_trace": true}})");
  bool has_trace = false;
  for (const auto& [name, body] : traced.files) has_trace = has_trace || name.find("trace") != std::string::npos;
  CHECK(has_trace);
}

TEST_CASE("sweep-alpha") {
  const Report muh = run_command(
      "sweep-alpha", R"({"loss": "muh", "seeds": [0], "dataset": {"n_per_class": 30}, "alpha_schedule": {"count": 3}})");
  CHECK(muh.passed);
  const Table& t = muh.table("sweep");
  REQUIRE(t.size() == 3);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(num(t, i, "dist_to_reference") <= 1e-8);

  const Report ce = run_command("sweep-alpha", R"({"seeds": [0], "dataset": {"n_per_class": 30}})");
  CHECK(ce.passed);
  CHECK(ce.summary["asserted"] == true);
  CHECK(ce.summary.contains("disclaimer"));
  const Table& s = ce.table("sweep");
  CHECK(num(s, s.size() - 1, "dist_to_reference") <= 0.05);
  CHECK(num(ce.table("probe"), 0, "alpha0_threshold") > 0.0);

  CHECK(code_of("sweep-alpha", R"({"loss": "mae", "seeds": [0]})") == code(ErrorCode::Config));
  CHECK(code_of("sweep-alpha", R"({"loss": "gce:q=0.7", "seeds": [0]})") == code(ErrorCode::Config));
}

TEST_CASE("sweep-alpha on a non-convex family is reported but not asserted") {
  const Report r = run_command("sweep-alpha", R"({"seeds": [0], "dataset": {"n_per_class": 10},
      "model": {"arch": "mlp2", "hidden": 4}, "alpha_schedule": {"count": 2}, "train": {"max_iters": 300}})");
  CHECK(r.summary["asserted"] == false);
  CHECK(r.passed);
  CHECK(r.table("probe").size() == 1);
}

TEST_CASE("demo-mitigation") {
  const Report r = run_command("demo-mitigation", R"({"seeds": [0, 1], "lambdas": [0, 1], "dataset": {"n_per_class": 30},
      "n_test_per_class": 50, "train": {"max_iters": 500}})");
  const Table& t = r.table("mitigation");
  bool entropy = false;
  bool smoothing = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    entropy = entropy || t.at(i, "penalty") == "entropy";
    smoothing = smoothing || t.at(i, "penalty") == "label_smoothing";
    const double acc = num(t, i, "mean_accuracy");
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }
  CHECK(entropy);
  CHECK(smoothing);
  CHECK(r.table("mitigation_seeds").size() > t.size());
  CHECK(code_of("demo-mitigation", R"({"lambdas": []})") == code(ErrorCode::Config));
}

TEST_CASE("reports are deterministic") {
  const char* cfg = R"({"seeds": [3], "dataset": {"n_per_class": 20}})";
  CHECK(run_command("robustness-muh", cfg).json() == run_command("robustness-muh", cfg).json());
  CHECK(run_command("check-symmetry", R"({"trials": 50})").json() == run_command("check-symmetry", R"({"trials": 50})").json());
}

TEST_CASE("nearly non-increasing") {
  CHECK(nearly_non_increasing({3.0, 2.0, 1.0}));
  CHECK(nearly_non_increasing({3.0, 2.0, 2.1, 1.0}));
  CHECK(!nearly_non_increasing({3.0, 2.0, 2.5, 1.0}));
  CHECK(!nearly_non_increasing({3.0, 2.0, 2.1, 1.0, 1.05}));
  CHECK(nearly_non_increasing({}));
  CHECK(nearly_non_increasing({3e-13, 1.5e-12, 7.8e-12}));
  CHECK(!nearly_non_increasing({3e-13, 1.5e-12, 7.8e-12}, 0.1, 0.0));
}

}
