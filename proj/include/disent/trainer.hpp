/* Copyright 2026 The Disent Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Mini-batch Adam training with early stopping on the validation task loss,
// hyperparameter sweeps across worker threads, and versioned JSON
// checkpoints that round-trip every parameter bit-exactly.

#ifndef DISENT_TRAINER_HPP_
#define DISENT_TRAINER_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "disent/bench.hpp"
#include "disent/kv.hpp"
#include "disent/model.hpp"

namespace disent {

struct TrainConfig {
  ModelConfig model;
  double lr = 3e-3;
  double adam_b1 = 0.9;
  double adam_b2 = 0.98;
  double adam_eps = 1e-6;
  int batch = 32;
  int max_epochs = 25;
  int patience = 5;
  std::uint64_t seed = 1;

  void validate() const;
  Kv to_kv() const;
  static TrainConfig from_kv(const Kv& kv);
};

struct LossNumbers {
  double total = 0, task = 0, rate = 0, tc = 0, reg = 0;
  double kl_raw = 0, tc_raw = 0, reg_raw = 0;

  void add(const LossBreakdown& lb);
  void scale(double s);
};

struct EpochStats {
  LossNumbers train;
  LossNumbers val;
};

struct ExperimentRecord {
  Kv config;
  std::uint64_t seed = 0;
  std::vector<EpochStats> epochs;
  int selected_epoch = -1;
  double clean_acc = -1.0;
  double source_acc = -1.0;
  double target_acc = -1.0;
  double attack_acc = -1.0;
  double wall_seconds = 0.0;
  std::string version = kVersionString;
  std::string error;

  std::string to_json_line() const;
};

struct TrainResult {
  Model model;
  ExperimentRecord record;
};

TrainResult train(const TrainConfig& cfg, const bench::Dataset& train_set,
                  const bench::Dataset& val_set);

// Adam with bias correction; one state slot per parameter array.
class Adam {
 public:
  Adam(std::vector<Array*> params, double lr, double b1, double b2, double eps);
  void step(double grad_scale);  // applies grads * grad_scale, then zeroes them

 private:
  std::vector<Array*> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, b1_, b2_, eps_;
  long long t_ = 0;
};

enum class SweepParam { Beta, LambdaTc };

struct SweepEval {
  const bench::Dataset* test = nullptr;          // clean accuracy
  const bench::Dataset* test_target = nullptr;   // optional shifted accuracy
  const bench::SynonymTable* synonyms = nullptr; // enables the attack column
  bench::AttackConfig attack;
};

// Full grid x seeds cross product; cells run on `jobs` worker threads and a
// failed cell records its error without aborting the rest.
std::vector<ExperimentRecord> sweep(const TrainConfig& tmpl, SweepParam param,
                                    const std::vector<double>& grid,
                                    const std::vector<std::uint64_t>& seeds,
                                    const bench::Dataset& train_set,
                                    const bench::Dataset& val_set,
                                    const SweepEval* eval, int jobs);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace disent

#endif  // DISENT_TRAINER_HPP_
