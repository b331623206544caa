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

#include "disent.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "disent/bench.hpp"
#include "disent/common.hpp"
#include "disent/info_oracle.hpp"
#include "disent/kv.hpp"
#include "disent/model.hpp"
#include "disent/saliency.hpp"
#include "disent/trainer.hpp"
#include "disent/vocab.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

dsnt_status fail(dsnt_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

dsnt_status map_exception() {
  try {
    throw;
  } catch (const disent::DimensionError& e) {
    return fail(DSNT_ERR_DIMENSION, e.what());
  } catch (const disent::EmptyInputError& e) {
    return fail(DSNT_ERR_EMPTY_INPUT, e.what());
  } catch (const disent::TrainingError& e) {
    return fail(DSNT_ERR_TRAINING, e.what());
  } catch (const disent::PersistenceError& e) {
    return fail(DSNT_ERR_PERSISTENCE, e.what());
  } catch (const disent::ParseError& e) {
    return fail(DSNT_ERR_PARSE, e.what());
  } catch (const disent::IoError& e) {
    return fail(DSNT_ERR_IO, e.what());
  } catch (const disent::ContractError& e) {
    return fail(DSNT_ERR_CONTRACT, e.what());
  } catch (const std::exception& e) {
    return fail(DSNT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DSNT_ERR_INTERNAL, "unknown error");
  }
}

disent::bench::AttackConfig attack_from_kv(const disent::Kv& kv) {
  disent::bench::AttackConfig cfg;
  const std::string kind = kv.get_string("attack", "greedy");
  if (kind == "greedy")
    cfg.kind = disent::bench::AttackKind::Greedy;
  else if (kind == "genetic")
    cfg.kind = disent::bench::AttackKind::Genetic;
  else
    throw disent::ContractError("unknown attack kind '" + kind + "'");
  const std::string scoring = kv.get_string("scoring", "prob_drop");
  if (scoring == "prob_drop")
    cfg.scoring = disent::bench::Scoring::ProbDrop;
  else if (scoring == "saliency")
    cfg.scoring = disent::bench::Scoring::Saliency;
  else
    throw disent::ContractError("unknown attack scoring '" + scoring + "'");
  cfg.budget_frac = kv.get_double("budget_frac", 0.25);
  cfg.budget_override = static_cast<int>(kv.get_int("budget", -1));
  cfg.max_queries = static_cast<int>(kv.get_int("max_queries", 2000));
  cfg.population = static_cast<int>(kv.get_int("population", 20));
  cfg.generations = static_cast<int>(kv.get_int("generations", 10));
  cfg.seed = kv.get_u64("seed", 0);
  cfg.eval_samples = static_cast<int>(kv.get_int("eval_samples", 0));
  return cfg;
}

json report_to_json(const disent::bench::RobustnessReport& r) {
  return json{{"clean", r.clean_accuracy},
              {"under_attack", r.attack_accuracy},
              {"mean_queries", r.mean_queries},
              {"mean_substitutions", r.mean_substitutions},
              {"n", r.n}};
}

}  // namespace

struct dsnt_model {
  disent::Model model;
};

struct dsnt_dataset {
  disent::Vocabulary vocab;
  disent::bench::Dataset data;
};

struct dsnt_synonyms {
  disent::bench::SynonymTable table;
};

extern "C" {

const char* dsnt_status_name(dsnt_status status) {
  switch (status) {
    case DSNT_OK: return "ok";
    case DSNT_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case DSNT_ERR_DIMENSION: return "dimension_error";
    case DSNT_ERR_CONTRACT: return "contract_error";
    case DSNT_ERR_EMPTY_INPUT: return "empty_input";
    case DSNT_ERR_PARSE: return "parse_error";
    case DSNT_ERR_IO: return "io_error";
    case DSNT_ERR_PERSISTENCE: return "persistence_error";
    case DSNT_ERR_TRAINING: return "training_error";
    case DSNT_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* dsnt_version_string(void) { return disent::kVersionString; }

const char* dsnt_last_error(void) { return g_last_error.c_str(); }

void dsnt_string_free(char* s) { std::free(s); }

dsnt_status dsnt_gen_data(const char* spec_kv, const char* out_dir,
                          char** summary_json_out) {
  if (!spec_kv || !out_dir)
    return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    disent::Kv kv = disent::Kv::parse_text(spec_kv);
    disent::bench::ShiftSpec spec;
    spec.classes = static_cast<int>(kv.get_int("classes", spec.classes));
    spec.rho_core = kv.get_double("rho_core", spec.rho_core);
    spec.rho_src = kv.get_double("rho_src", spec.rho_src);
    spec.rho_tgt = kv.get_double("rho_tgt", spec.rho_tgt);
    spec.len_min = static_cast<int>(kv.get_int("len_min", spec.len_min));
    spec.len_max = static_cast<int>(kv.get_int("len_max", spec.len_max));
    spec.core_variants =
        static_cast<int>(kv.get_int("core_variants", spec.core_variants));
    spec.spur_variants =
        static_cast<int>(kv.get_int("spur_variants", spec.spur_variants));
    spec.spur_tokens =
        static_cast<int>(kv.get_int("spur_tokens", spec.spur_tokens));
    spec.filler_groups =
        static_cast<int>(kv.get_int("filler_groups", spec.filler_groups));
    spec.filler_group_size = static_cast<int>(
        kv.get_int("filler_group_size", spec.filler_group_size));
    spec.filler_rare_mass =
        kv.get_double("filler_rare_mass", spec.filler_rare_mass);
    spec.seed = kv.get_u64("seed", spec.seed);
    const int n_train = static_cast<int>(kv.get_int("n_train", 2000));
    const int n_src = static_cast<int>(kv.get_int("n_test_source", 500));
    const int n_tgt = static_cast<int>(kv.get_int("n_test_target", 500));

    disent::bench::ShiftBundle b =
        disent::bench::generate_shift_dataset(spec, n_train, n_src, n_tgt);
    namespace fs = std::filesystem;
    fs::path dir(out_dir);
    fs::create_directories(dir);
    b.vocab.save(dir / "vocab.txt");
    disent::bench::save_dataset(b.train, b.vocab, dir / "train.tsv");
    disent::bench::save_dataset(b.test_source, b.vocab, dir / "test_source.tsv");
    disent::bench::save_dataset(b.test_target, b.vocab, dir / "test_target.tsv");
    b.synonyms.save(dir / "synonyms.tsv", b.vocab);

    if (summary_json_out) {
      json s{{"vocab_size", b.vocab.size()},
             {"n_train", b.train.size()},
             {"n_test_source", b.test_source.size()},
             {"n_test_target", b.test_target.size()},
             {"files",
              {"vocab.txt", "train.tsv", "test_source.tsv", "test_target.tsv",
               "synonyms.tsv"}}};
      *summary_json_out = dup_string(s.dump());
    }
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

dsnt_status dsnt_dataset_open(const char* path, const char* vocab_path,
                              dsnt_dataset** out) {
  if (!path || !vocab_path || !out)
    return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    auto ds = std::make_unique<dsnt_dataset>();
    ds->vocab = disent::Vocabulary::load(vocab_path);
    ds->data = disent::bench::load_dataset(path, ds->vocab);
    *out = ds.release();
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

void dsnt_dataset_close(dsnt_dataset* ds) { delete ds; }

size_t dsnt_dataset_size(const dsnt_dataset* ds) {
  return ds ? ds->data.size() : 0;
}

dsnt_status dsnt_synonyms_open(const char* path, const char* vocab_path,
                               dsnt_synonyms** out) {
  if (!path || !vocab_path || !out)
    return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    disent::Vocabulary vocab = disent::Vocabulary::load(vocab_path);
    auto syn = std::make_unique<dsnt_synonyms>();
    syn->table = disent::bench::SynonymTable::load(path, vocab);
    *out = syn.release();
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

void dsnt_synonyms_close(dsnt_synonyms* syn) { delete syn; }

namespace {

// Deterministic train/val split used when no validation set is supplied.
void split_train_val(const disent::bench::Dataset& all, double val_fraction,
                     std::uint64_t seed, disent::bench::Dataset& train,
                     disent::bench::Dataset& val) {
  if (val_fraction <= 0.0 || val_fraction >= 1.0)
    throw disent::ContractError("val_fraction must be in (0, 1)");
  std::vector<std::size_t> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  disent::Rng rng(disent::Rng::mix(seed, 0x5EED));
  rng.shuffle(idx);
  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(val_fraction * static_cast<double>(all.size())));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i < n_val)
      val.push_back(all[idx[i]]);
    else
      train.push_back(all[idx[i]]);
  }
}

}  // namespace

dsnt_status dsnt_train(const char* config_kv, const dsnt_dataset* train_set,
                       const dsnt_dataset* val_set, dsnt_model** out,
                       char** record_json_out) {
  if (!config_kv || !train_set || !out)
    return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    disent::Kv kv = disent::Kv::parse_text(config_kv);
    disent::TrainConfig cfg = disent::TrainConfig::from_kv(kv);
    cfg.model.vocab_size = train_set->vocab.size();
    int max_label = 0;
    for (const auto& ex : train_set->data)
      max_label = std::max(max_label, ex.label);
    if (!kv.has("classes")) cfg.model.classes = max_label + 1;
    disent::TrainResult r = [&] {
      if (val_set) return disent::train(cfg, train_set->data, val_set->data);
      disent::bench::Dataset tr, va;
      split_train_val(train_set->data, kv.get_double("val_fraction", 0.15),
                      cfg.seed, tr, va);
      return disent::train(cfg, tr, va);
    }();
    if (record_json_out)
      *record_json_out = dup_string(r.record.to_json_line());
    *out = new dsnt_model{std::move(r.model)};
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

dsnt_status dsnt_model_save(const dsnt_model* model, const char* path) {
  if (!model || !path) return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    disent::save_checkpoint(model->model, path);
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

dsnt_status dsnt_model_load(const char* path, dsnt_model** out) {
  if (!path || !out) return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    *out = new dsnt_model{disent::load_checkpoint(path)};
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

void dsnt_model_close(dsnt_model* model) { delete model; }

dsnt_status dsnt_model_config(const dsnt_model* model, char** config_kv_out) {
  if (!model || !config_kv_out)
    return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    disent::TrainConfig tc;
    tc.model = model->model.cfg;
    *config_kv_out = dup_string(tc.to_kv().dump());
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

dsnt_status dsnt_model_predict(const dsnt_model* model, const int32_t* tokens,
                               size_t n_tokens, int mode, int eval_samples,
                               uint64_t seed, int32_t* label_out,
                               double* probs_out) {
  if (!model || !tokens || !label_out)
    return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    std::vector<int> toks(tokens, tokens + n_tokens);
    disent::Prediction p;
    switch (mode) {
      case 0:
        p = model->model.predict(toks, eval_samples, seed);
        break;
      case 1:
        p = model->model.predict_mode(disent::PredictMode::Regularizer, toks,
                                      eval_samples, seed);
        break;
      case 2:
        p = model->model.predict_mode(disent::PredictMode::Vib, toks,
                                      eval_samples, seed);
        break;
      case 3:
        p = model->model.predict_mode(disent::PredictMode::VibTc, toks,
                                      eval_samples, seed);
        break;
      default:
        throw disent::ContractError("predict: unknown mode " +
                                    std::to_string(mode));
    }
    *label_out = p.label;
    if (probs_out)
      std::copy(p.probs.begin(), p.probs.end(), probs_out);
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

dsnt_status dsnt_evaluate_accuracy(const dsnt_model* model,
                                   const dsnt_dataset* ds, int eval_samples,
                                   uint64_t seed, double* accuracy_out) {
  if (!model || !ds || !accuracy_out)
    return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    *accuracy_out =
        disent::bench::accuracy(model->model, ds->data, eval_samples, seed);
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

dsnt_status dsnt_evaluate_attack(const dsnt_model* model,
                                 const dsnt_dataset* test,
                                 const dsnt_synonyms* synonyms,
                                 const char* attack_kv,
                                 char** report_json_out) {
  if (!model || !test || !synonyms || !attack_kv || !report_json_out)
    return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    disent::Kv kv = disent::Kv::parse_text(attack_kv);
    disent::bench::AttackConfig cfg = attack_from_kv(kv);
    disent::bench::RobustnessReport r = disent::bench::evaluate_robustness(
        model->model, test->data, synonyms->table, cfg);
    *report_json_out = dup_string(report_to_json(r).dump());
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

dsnt_status dsnt_sweep(const char* config_kv, const char* sweep_kv,
                       const dsnt_dataset* train_set,
                       const dsnt_dataset* val_set, const dsnt_dataset* test,
                       const dsnt_synonyms* synonyms,
                       char** records_jsonl_out) {
  if (!config_kv || !sweep_kv || !train_set || !records_jsonl_out)
    return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    disent::Kv ckv = disent::Kv::parse_text(config_kv);
    disent::TrainConfig tmpl = disent::TrainConfig::from_kv(ckv);
    tmpl.model.vocab_size = train_set->vocab.size();
    int max_label = 0;
    for (const auto& ex : train_set->data)
      max_label = std::max(max_label, ex.label);
    if (!ckv.has("classes")) tmpl.model.classes = max_label + 1;
    disent::Kv skv = disent::Kv::parse_text(sweep_kv);

    const std::string pname = skv.get_string("param", "beta");
    disent::SweepParam param;
    if (pname == "beta")
      param = disent::SweepParam::Beta;
    else if (pname == "lambda_tc" || pname == "gamma")
      param = disent::SweepParam::LambdaTc;
    else
      throw disent::ContractError("unknown sweep parameter '" + pname + "'");

    auto parse_list = [](const std::string& s) {
      std::vector<std::string> items;
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) items.push_back(item);
      return items;
    };
    std::vector<double> grid;
    for (const std::string& s : parse_list(skv.require_string("grid")))
      grid.push_back(std::stod(s));
    std::vector<std::uint64_t> seeds;
    for (const std::string& s : parse_list(skv.require_string("seeds")))
      seeds.push_back(std::stoull(s));
    const int jobs = static_cast<int>(skv.get_int("jobs", 2));

    disent::SweepEval eval;
    disent::SweepEval* eval_ptr = nullptr;
    if (test) {
      eval.test = &test->data;
      if (synonyms) {
        eval.synonyms = &synonyms->table;
        eval.attack = attack_from_kv(skv);
      }
      eval_ptr = &eval;
    }

    disent::bench::Dataset split_tr, split_va;
    const disent::bench::Dataset* tr = &train_set->data;
    const disent::bench::Dataset* va = val_set ? &val_set->data : nullptr;
    if (!va) {
      split_train_val(train_set->data, ckv.get_double("val_fraction", 0.15),
                      tmpl.seed, split_tr, split_va);
      tr = &split_tr;
      va = &split_va;
    }
    std::vector<disent::ExperimentRecord> records =
        disent::sweep(tmpl, param, grid, seeds, *tr, *va, eval_ptr, jobs);
    std::string out;
    for (const auto& r : records) {
      out += r.to_json_line();
      out += "\n";
    }
    *records_jsonl_out = dup_string(out);
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

dsnt_status dsnt_verify_bounds(const char* kv_text, char** summary_json_out) {
  if (!kv_text) return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    disent::Kv kv = disent::Kv::parse_text(kv_text);
    const int joints = static_cast<int>(kv.get_int("joints", 100));
    const std::size_t nx = static_cast<std::size_t>(kv.get_int("nx", 4));
    const std::size_t ny = static_cast<std::size_t>(kv.get_int("ny", 4));
    const std::size_t nz = static_cast<std::size_t>(kv.get_int("nz", 4));
    const std::uint64_t seed = kv.get_u64("seed", 17);
    if (nx * ny * nz > 4096)
      throw disent::ContractError(
          "verify_bounds: support capped at 16^3 table entries");

    namespace oc = disent::oracle;
    disent::Rng rng(seed);
    int violations = 0;
    double worst_lower_gap = 0.0, worst_upper_gap = 0.0;
    double max_tight_lower = 0.0, max_tight_upper = 0.0;
    for (int t = 0; t < joints; ++t) {
      oc::DiscreteJoint j = oc::DiscreteJoint::random(nx, ny, nz, rng);
      const double izy = oc::mutual_information(j.joint_zy(), nz, ny);
      const double izx = oc::mutual_information(j.joint_zx(), nz, nx);

      // random q rows and random r from Dirichlet(1)
      std::vector<double> q(nz * ny);
      for (std::size_t z = 0; z < nz; ++z) {
        double s = 0.0;
        for (std::size_t y = 0; y < ny; ++y) {
          q[z * ny + y] = -std::log(1.0 - rng.uniform());
          s += q[z * ny + y];
        }
        for (std::size_t y = 0; y < ny; ++y) q[z * ny + y] /= s;
      }
      std::vector<double> r(nz);
      double rs = 0.0;
      for (double& v : r) {
        v = -std::log(1.0 - rng.uniform());
        rs += v;
      }
      for (double& v : r) v /= rs;

      const double lb = oc::vib_lower_bound(j, q);
      const double ub = oc::vib_upper_bound(j, r);
      if (lb > izy + 1e-12 || ub < izx - 1e-12) ++violations;
      worst_lower_gap = std::max(worst_lower_gap, lb - izy);
      worst_upper_gap = std::max(worst_upper_gap, izx - ub);

      // tightness: q = p(y|z) and r = p(z) recover the exact quantities
      const double lb_tight = oc::vib_lower_bound(j, j.conditional_y_given_z());
      const double ub_tight = oc::vib_upper_bound(j, j.marginal_z());
      max_tight_lower = std::max(max_tight_lower, std::fabs(lb_tight - izy));
      max_tight_upper = std::max(max_tight_upper, std::fabs(ub_tight - izx));
      if (std::fabs(lb_tight - izy) > 1e-12 || std::fabs(ub_tight - izx) > 1e-12)
        ++violations;
    }
    json s{{"joints", joints},
           {"sizes", {nx, ny, nz}},
           {"seed", seed},
           {"violations", violations},
           {"worst_lower_overshoot", worst_lower_gap},
           {"worst_upper_undershoot", worst_upper_gap},
           {"max_tight_lower_error", max_tight_lower},
           {"max_tight_upper_error", max_tight_upper},
           {"pass", violations == 0}};
    if (summary_json_out) *summary_json_out = dup_string(s.dump());
    if (violations != 0)
      return fail(DSNT_ERR_CONTRACT,
                  "bound violations detected: " + std::to_string(violations));
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

dsnt_status dsnt_saliency(const dsnt_model* model, const char* vocab_path,
                          const char* text, const char* out_path,
                          char** heatmap_json_out, double* divergence_out,
                          int* divergence_defined_out) {
  if (!model || !vocab_path || !text)
    return fail(DSNT_ERR_INVALID_ARGUMENT, "null argument");
  try {
    disent::Vocabulary vocab = disent::Vocabulary::load(vocab_path);
    std::vector<int> toks;
    std::stringstream ss(text);
    std::string tok;
    while (ss >> tok) toks.push_back(vocab.lookup(tok));
    disent::SaliencyMap map =
        disent::head_saliency(model->model, toks, &vocab);
    if (out_path) disent::export_heatmap(map, out_path);
    if (heatmap_json_out)
      *heatmap_json_out = dup_string(disent::heatmap_json_string(map));
    if (divergence_defined_out) *divergence_defined_out = map.heads >= 2 ? 1 : 0;
    if (map.heads >= 2 && divergence_out)
      *divergence_out = disent::head_divergence(map);
    return DSNT_OK;
  } catch (...) {
    return map_exception();
  }
}

}  // extern "C"
