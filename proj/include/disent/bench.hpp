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

// Desk-scale robustness benchmark: a synthetic domain-shift generator with a
// controllable spurious feature, synonym tables, greedy and genetic
// word-substitution attacks, and the attack evaluation loop.

#ifndef DISENT_BENCH_HPP_
#define DISENT_BENCH_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "disent/model.hpp"
#include "disent/vocab.hpp"

namespace disent::bench {

enum class Domain { Source, Target };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

struct Example {
  std::vector<int> tokens;
  int label = 0;
  Domain domain = Domain::Source;
};

using Dataset = std::vector<Example>;

// Synthetic task layout per example: one core token whose class identity is
// correct with probability rho_core (both domains), a bundle of spur_tokens
// spurious tokens jointly aligned with the label with probability rho_src
// (source) / rho_tgt (target), and label-independent filler tokens drawn from
// synonym groups with a rare tail.
struct ShiftSpec {
  int classes = 2;
  double rho_core = 0.8;
  double rho_src = 0.95;
  double rho_tgt = 0.05;
  int len_min = 8;
  int len_max = 16;
  int core_variants = 2;
  int spur_variants = 24;
  int spur_tokens = 4;
  int filler_groups = 10;
  int filler_group_size = 3;
  double filler_rare_mass = 0.2;  // probability mass spread over the tail
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynonymTable {
  std::map<int, std::vector<int>> subs;

  const std::vector<int>* find(int token) const;
  void validate(const Vocabulary& vocab) const;
  void save(const std::filesystem::path& path, const Vocabulary& vocab) const;
  static SynonymTable load(const std::filesystem::path& path,
                           const Vocabulary& vocab);
};

struct ShiftBundle {
  Vocabulary vocab;
  Dataset train;         // source domain
  Dataset test_source;
  Dataset test_target;
  SynonymTable synonyms;
};

ShiftBundle generate_shift_dataset(const ShiftSpec& spec, int n_train,
                                   int n_test_source, int n_test_target);

// Dataset file: one example per line, `label<TAB>domain<TAB>tok tok ...`.
void save_dataset(const Dataset& ds, const Vocabulary& vocab,
                  const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path,
                     const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// attacks
// ---------------------------------------------------------------------------

enum class AttackKind { Greedy, Genetic };
enum class Scoring { ProbDrop, Saliency };

struct AttackConfig {
  AttackKind kind = AttackKind::Greedy;
  Scoring scoring = Scoring::ProbDrop;
  double budget_frac = 0.25;  // of token count, ceil
  int budget_override = -1;   // >= 0 wins over budget_frac
  int max_queries = 2000;
  int population = 20;
  int generations = 10;
  std::uint64_t seed = 0;
  int eval_samples = 0;  // decode mode used for every query

  int budget_for(std::size_t tokens) const;
};

struct Substitution {
  int position = 0;
  int old_token = 0;
  int new_token = 0;
};

struct AttackOutcome {
  Example original;
  std::vector<int> perturbed;
  std::vector<Substitution> substitutions;
  bool success = false;
  int queries = 0;
};

AttackOutcome saliency_order_attack(const Model& model, const Example& ex,
                                    const SynonymTable& table, int budget,
                                    Scoring scoring, int max_queries,
                                    int eval_samples = 0,
                                    std::uint64_t seed = 0);

AttackOutcome population_attack(const Model& model, const Example& ex,
                                const SynonymTable& table, int budget,
                                int population, int generations,
                                std::uint64_t seed, int max_queries,
                                int eval_samples = 0);

AttackOutcome run_attack(const Model& model, const Example& ex,
                         const SynonymTable& table, const AttackConfig& cfg,
                         std::uint64_t example_stream);

struct RobustnessReport {
  double clean_accuracy = 0.0;
  double attack_accuracy = 0.0;  // clean-correct and attack failed
  double mean_queries = 0.0;
  double mean_substitutions = 0.0;
  std::size_t n = 0;
};

RobustnessReport evaluate_robustness(const Model& model, const Dataset& test,
                                     const SynonymTable& table,
                                     const AttackConfig& cfg);

// Plain accuracy under the family's decoding rule.
double accuracy(const Model& model, const Dataset& ds, int eval_samples = 0,
                std::uint64_t seed = 0);

}  // namespace disent::bench

#endif  // DISENT_BENCH_HPP_
