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

// robust-loss-lab: command-line front end over the robustloss C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "robustloss/robustloss.h"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config_path;
  std::string out_dir;
  bool print_json = false;
  bool quiet = false;

  std::vector<std::string> losses;
  std::vector<int> classes;
  std::optional<std::string> loss;
  std::optional<std::string> reg;
  std::vector<double> rho;
  std::vector<std::uint64_t> seeds;
  std::optional<double> alpha0;
  std::optional<double> ratio;
  std::optional<int> count;
  std::optional<std::string> arch;
  std::optional<std::string> csv;
  std::optional<int> max_iters;
  std::optional<double> grad_tol;
  bool trace = false;
  std::optional<int> trials;
  std::optional<double> tol;
  std::vector<double> lambdas;
  std::vector<std::string> penalties;
  std::optional<double> sigma;
  std::optional<int> n_per_class;
};

bool is_grid_command(const std::string& cmd) { return cmd == "check-symmetry" || cmd == "verify-risk-identity"; }

Json read_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

Json build_config(const std::string& cmd, const Options& o) {
  Json j = read_config(o.config_path);
  if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
  if (!o.losses.empty()) j["losses"] = o.losses;
  if (!o.classes.empty()) {
    if (is_grid_command(cmd)) {
      j["classes"] = o.classes;
    } else if (o.classes.size() == 1) {
      j["dataset"]["classes"] = o.classes.front();
    } else {
      throw std::runtime_error("--c takes a single class count for " + cmd);
    }
  }
  if (o.loss) j["loss"] = *o.loss;
  if (o.reg) j["regularizer"] = *o.reg;
  if (!o.rho.empty()) {
    if (cmd == "verify-risk-identity") {
      j["rhos"] = o.rho;
    } else if (o.rho.size() == 1) {
      j["noise"]["rho"] = o.rho.front();
    } else {
      throw std::runtime_error("--rho takes a single value for " + cmd);
    }
  }
  if (!o.seeds.empty()) j["seeds"] = o.seeds;
  if (o.alpha0) j["alpha_schedule"]["alpha0"] = *o.alpha0;
  if (o.ratio) j["alpha_schedule"]["ratio"] = *o.ratio;
  if (o.count) j["alpha_schedule"]["count"] = *o.count;
  if (o.arch) j["model"]["arch"] = *o.arch;
  if (o.csv) j["dataset"]["csv"] = *o.csv;
  if (o.max_iters) j["train"]["max_iters"] = *o.max_iters;
  if (o.grad_tol) j["train"]["grad_tol"] = *o.grad_tol;
  if (o.trace) j["train"]["emit_trace"] = true;
  if (o.trials) j["trials"] = *o.trials;
  if (o.tol) j["tol"] = *o.tol;
  if (!o.lambdas.empty()) j["lambdas"] = o.lambdas;
  if (!o.penalties.empty()) j["penalties"] = o.penalties;
  if (o.sigma) j["dataset"]["sigma"] = *o.sigma;
  if (o.n_per_class) j["dataset"]["n_per_class"] = *o.n_per_class;
  return j;
}

int exit_code_for(rll_status s) {
  switch (s) {
    case RLL_ERR_PARSE:
    case RLL_ERR_CONFIG:
    case RLL_ERR_INVALID_NOISE:
    case RLL_ERR_IO:
    case RLL_ERR_NULL_ARGUMENT:
      return kExitUsage;
    default:
      return kExitFail;
  }
}

std::string take(char* s) {
  std::string out = s ? s : "";
  rll_string_free(s);
  return out;
}

int run(const std::string& cmd, const Options& o) {
  std::string config;
  try {
    config = build_config(cmd, o).dump();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  rll_report* report = nullptr;
  rll_status s = rll_experiment_run(cmd.c_str(), config.c_str(), &report);
  if (s != RLL_OK) {
    std::fprintf(stderr, "error (%s): %s\n", rll_status_name(s), rll_last_error());
    return exit_code_for(s);
  }

  int passed = 0;
  rll_report_passed(report, &passed);
  if (!o.quiet) {
    char* text = nullptr;
    s = o.print_json ? rll_report_json(report, &text) : rll_report_text(report, &text);
    if (s == RLL_OK) std::fputs(take(text).c_str(), stdout);
  }
  if (!o.out_dir.empty()) {
    s = rll_report_write(report, o.out_dir.c_str());
    if (s != RLL_OK) {
      std::fprintf(stderr, "error (%s): %s\n", rll_status_name(s), rll_last_error());
      rll_report_free(report);
      return exit_code_for(s);
    }
  }
  rll_report_free(report);
  std::printf("%s: %s\n", cmd.c_str(), passed ? "PASS" : "FAIL");
  return passed ? kExitPass : kExitFail;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "JSON config mirroring the experiment fields")->check(CLI::ExistingFile);
  sub->add_option("--out", o.out_dir, "write report.json and per-table CSVs here");
  sub->add_flag("--json", o.print_json, "print report.json instead of tables");
  sub->add_flag("-q,--quiet", o.quiet, "only print the verdict");
}

void add_training(CLI::App* sub, Options& o) {
  sub->add_option("--loss", o.loss, "loss spec, e.g. softmax_ce or gce:q=0.7");
  sub->add_option("--reg", o.reg, "regularizer: quad:identity, quad:scale=<s>, quad:file=<path>, entropy, label_smoothing");
  sub->add_option("--rho", o.rho, "uniform noise level");
  sub->add_option("--seeds", o.seeds, "seed list")->delimiter(',');
  sub->add_option("--c", o.classes, "number of classes");
  sub->add_option("--arch", o.arch, "linear or mlp2");
  sub->add_option("--csv", o.csv, "dataset CSV (features..., label) instead of blobs");
  sub->add_option("--sigma", o.sigma, "blob standard deviation");
  sub->add_option("--n-per-class", o.n_per_class, "blob points per class");
  sub->add_option("--max-iters", o.max_iters, "gradient descent iteration cap");
  sub->add_option("--grad-tol", o.grad_tol, "relative gradient-norm stopping tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-robust loss verification lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rll_version());
  Options o;

  auto* sym = app.add_subcommand("check-symmetry", "check which losses sum to a constant over labels");
  add_common(sym, o);
  sym->add_option("--losses", o.losses, "comma-separated loss specs")->delimiter(',');
  sym->add_option("--c", o.classes, "class counts")->delimiter(',');
  sym->add_option("--trials", o.trials, "random logit vectors per loss");
  sym->add_option("--tol", o.tol, "absolute deviation tolerance");
  sym->add_option("--seeds", o.seeds, "master seed")->delimiter(',');

  auto* risk = app.add_subcommand("verify-risk-identity", "compare exact noisy risk with its clean decomposition");
  add_common(risk, o);
  risk->add_option("--losses", o.losses, "comma-separated loss specs")->delimiter(',');
  risk->add_option("--c", o.classes, "class counts")->delimiter(',');
  risk->add_option("--rho", o.rho, "noise levels")->delimiter(',');
  risk->add_option("--tol", o.tol, "residual tolerance");
  risk->add_option("--seeds", o.seeds, "master seed")->delimiter(',');

  auto* rob = app.add_subcommand("robustness-muh", "train MUH on clean and noisy labels and compare");
  add_common(rob, o);
  add_training(rob, o);
  rob->add_flag("--trace", o.trace, "write per-iteration optimizer traces");

  auto* sweep = app.add_subcommand("sweep-alpha", "shrink the loss weight and track distance to the reference loss");
  add_common(sweep, o);
  add_training(sweep, o);
  sweep->add_option("--alpha0", o.alpha0, "first alpha");
  sweep->add_option("--ratio", o.ratio, "geometric ratio in (0, 1)");
  sweep->add_option("--count", o.count, "number of alphas");

  auto* demo = app.add_subcommand("demo-mitigation", "clean test accuracy against penalty strength under label noise");
  add_common(demo, o);
  add_training(demo, o);
  demo->add_option("--lambdas", o.lambdas, "penalty weights")->delimiter(',');
  demo->add_option("--penalties", o.penalties, "entropy and/or label_smoothing")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitUsage;
  }
  return run(app.get_subcommands().front()->get_name(), o);
}
