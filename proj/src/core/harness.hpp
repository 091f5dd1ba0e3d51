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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "optimize.hpp"
#include "report.hpp"

namespace rll {

struct DatasetConfig {
  /// CSV file to load; empty selects Gaussian blobs.
  std::string csv;
  int classes = 3;
  /// 0 means dim = classes.
  int dim = 0;
  int n_per_class = 100;
  double sigma = 1.0;
  double center_scale = 3.0;
};

struct ModelConfig {
  std::string arch = "linear";  // linear | mlp2
  std::string feature_map = "append_constant";  // identity | append_constant | random_fourier
  int rff_dim = 64;
  double rff_bandwidth = 1.0;
  int hidden = 16;
  /// Scale of the seeded first-layer weights of mlp2.
  double init_scale = 1.0;
};

/// alpha_k = alpha0 * ratio^k, k < count.
struct AlphaSchedule {
  double alpha0 = 1.0;
  double ratio = 0.3;
  int count = 7;

  void validate() const;
  std::vector<double> values() const;
};

/// Settings for every subcommand. Fields a command does not use are ignored;
/// the resolved configuration is echoed in each report.
struct ExperimentConfig {
  DatasetConfig dataset;
  std::string loss = "softmax_ce";
  std::string regularizer = "quad:scale=0.5";
  double rho = 0.3;
  AlphaSchedule alpha_schedule;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  TrainConfig train;
  ModelConfig model;

  // check-symmetry / verify-risk-identity
  std::vector<std::string> losses;
  std::vector<int> classes;
  std::vector<double> rhos;
  int trials = 1000;
  double tol = 1e-12;
  int models_per_cell = 5;
  int samples = 20;

  // sweep-alpha
  int probe_dirs = 50;

  // demo-mitigation
  std::vector<double> lambdas = {0.0, 1.0, 10.0, 100.0};
  std::vector<std::string> penalties = {"entropy", "label_smoothing"};
  int n_test_per_class = 500;
  bool control_rho0 = true;
};

const std::vector<std::string>& command_names();

/// Defaults for `command` overlaid with the JSON object in `json_text`
/// (empty means {}). Unknown keys and ill-typed values throw Config.
ExperimentConfig parse_experiment_config(std::string_view command, std::string_view json_text);
Json config_to_json(const ExperimentConfig& cfg);

/// Dataset for one seed: blobs from derive_seed(seed, 1), or the CSV file.
Dataset experiment_dataset(const DatasetConfig& cfg, std::uint64_t seed);
Model experiment_model(const ModelConfig& cfg, int input_dim, int num_classes, bool reduced, std::uint64_t seed);

Report check_symmetry(const ExperimentConfig& cfg);
Report verify_risk_identity(const ExperimentConfig& cfg);
Report robustness_muh(const ExperimentConfig& cfg);
Report sweep_alpha(const ExperimentConfig& cfg);
Report demo_mitigation(const ExperimentConfig& cfg);

Report run_command(std::string_view command, std::string_view config_json);

/// At most one increase between neighbours, of at most `slack` relative size.
/// Increases of at most `floor` are ignored.
bool nearly_non_increasing(const std::vector<double>& values, double slack = 0.1, double floor = 1e-9);

}  // namespace rll
