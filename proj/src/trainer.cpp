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

#include "disent/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "json.hpp"

#include "disent/common.hpp"

namespace disent {

namespace {

using nlohmann::json;

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (lr <= 0.0) throw ContractError("train config: lr must be positive");
  if (batch < 1 || max_epochs < 1 || patience < 0)
    throw ContractError("train config: batch/epochs/patience out of range");
  if (!(adam_b1 >= 0.0 && adam_b1 < 1.0 && adam_b2 >= 0.0 && adam_b2 < 1.0))
    throw ContractError("train config: adam betas must be in [0, 1)");
  if (adam_eps <= 0.0) throw ContractError("train config: adam eps must be positive");
}

Kv TrainConfig::to_kv() const {
  Kv kv;
  kv.set("family", to_string(model.family));
  kv.set("encoder", to_string(model.encoder));
  kv.set_int("vocab_size", model.vocab_size);
  kv.set_int("d", model.emb_dim);
  kv.set_int("hidden", model.hidden);
  kv.set_int("latent", model.latent_dim);
  kv.set_int("heads", model.heads);
  kv.set_int("classes", model.classes);
  kv.set_double("beta", model.beta);
  kv.set_double("lambda_tc", model.lambda_tc);
  kv.set_int("train_samples", model.train_samples);
  kv.set_int("eval_samples", model.eval_samples);
  kv.set_int("conv_width", model.conv_width);
  kv.set_bool("head_loss_mean", model.head_loss_mean);
  kv.set_bool("train_embeddings", model.train_embeddings);
  kv.set_double("lr", lr);
  kv.set_double("adam_b1", adam_b1);
  kv.set_double("adam_b2", adam_b2);
  kv.set_double("adam_eps", adam_eps);
  kv.set_int("batch", batch);
  kv.set_int("epochs", max_epochs);
  kv.set_int("patience", patience);
  kv.set_int("seed", static_cast<long long>(seed));
  return kv;
}

TrainConfig TrainConfig::from_kv(const Kv& kv) {
  TrainConfig c;
  c.model.family = family_from_string(kv.get_string("family", "baseline"));
  c.model.encoder = encoder_kind_from_string(kv.get_string("encoder", "bow"));
  c.model.vocab_size = static_cast<int>(kv.get_int("vocab_size", 0));
  c.model.emb_dim = static_cast<int>(kv.get_int("d", 16));
  c.model.hidden = static_cast<int>(kv.get_int("hidden", 16));
  c.model.latent_dim = static_cast<int>(kv.get_int("latent", 16));
  c.model.heads = static_cast<int>(kv.get_int("heads", 4));
  c.model.classes = static_cast<int>(kv.get_int("classes", 2));
  c.model.beta = kv.get_double("beta", 0.0);
  c.model.lambda_tc = kv.get_double("lambda_tc", 0.0);
  c.model.train_samples = static_cast<int>(kv.get_int("train_samples", 1));
  c.model.eval_samples = static_cast<int>(kv.get_int("eval_samples", 0));
  c.model.conv_width = static_cast<int>(kv.get_int("conv_width", 3));
  c.model.head_loss_mean = kv.get_bool("head_loss_mean", false);
  c.model.train_embeddings = kv.get_bool("train_embeddings", true);
  c.lr = kv.get_double("lr", 3e-3);
  c.adam_b1 = kv.get_double("adam_b1", 0.9);
  c.adam_b2 = kv.get_double("adam_b2", 0.98);
  c.adam_eps = kv.get_double("adam_eps", 1e-6);
  c.batch = static_cast<int>(kv.get_int("batch", 32));
  c.max_epochs = static_cast<int>(kv.get_int("epochs", 25));
  c.patience = static_cast<int>(kv.get_int("patience", 5));
  c.seed = kv.get_u64("seed", 1);
  return c;
}

void LossNumbers::add(const LossBreakdown& lb) {
  total += lb.total_value();
  task += lb.task;
  rate += lb.rate;
  tc += lb.tc;
  reg += lb.reg;
  kl_raw += lb.kl_raw;
  tc_raw += lb.tc_raw;
  reg_raw += lb.reg_raw;
}

void LossNumbers::scale(double s) {
  total *= s;
  task *= s;
  rate *= s;
  tc *= s;
  reg *= s;
  kl_raw *= s;
  tc_raw *= s;
  reg_raw *= s;
}

namespace {

json loss_to_json(const LossNumbers& l) {
  return json{{"total", l.total},   {"task", l.task},     {"rate", l.rate},
              {"tc", l.tc},         {"reg", l.reg},       {"kl_raw", l.kl_raw},
              {"tc_raw", l.tc_raw}, {"reg_raw", l.reg_raw}};
}

}  // namespace

std::string ExperimentRecord::to_json_line() const {
  json doc;
  doc["config"] = json::object();
  for (const auto& [k, v] : config.items()) doc["config"][k] = v;
  doc["seed"] = seed;
  json eps = json::array();
  for (const EpochStats& e : epochs)
    eps.push_back(json{{"train", loss_to_json(e.train)}, {"val", loss_to_json(e.val)}});
  doc["epochs"] = std::move(eps);
  doc["selected_epoch"] = selected_epoch;
  doc["clean_acc"] = clean_acc;
  doc["source_acc"] = source_acc;
  doc["target_acc"] = target_acc;
  doc["attack_acc"] = attack_acc;
  doc["wall_seconds"] = wall_seconds;
  doc["version"] = version;
  doc["error"] = error;
  return doc.dump();
}

Adam::Adam(std::vector<Array*> params, double lr, double b1, double b2,
           double eps)
    : params_(std::move(params)), lr_(lr), b1_(b1), b2_(b2), eps_(eps) {
  for (Array* p : params_) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::step(double grad_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Array& p = *params_[pi];
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i] * grad_scale;
      m[i] = b1_ * m[i] + (1.0 - b1_) * g;
      v[i] = b2_ * v[i] + (1.0 - b2_) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    p.zero_grad();
  }
}

TrainResult train(const TrainConfig& cfg, const bench::Dataset& train_set,
                  const bench::Dataset& val_set) {
  cfg.validate();
  if (train_set.empty() || val_set.empty())
    throw ContractError("train: datasets must be nonempty");
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult out{Model::init(cfg.model, cfg.seed), {}};
  Model& model = out.model;
  ExperimentRecord& rec = out.record;
  rec.config = cfg.to_kv();
  rec.seed = cfg.seed;

  Adam adam(model.parameters(), cfg.lr, cfg.adam_b1, cfg.adam_b2, cfg.adam_eps);
  Rng rng(Rng::mix(cfg.seed, 0x7261696e));  // training stream

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int bad_epochs = 0;
  std::vector<std::vector<double>> best_values;
  auto snapshot = [&] {
    best_values.clear();
    for (Array* a : model.all_arrays()) best_values.push_back(a->value);
  };
  auto restore = [&] {
    auto arrays = model.all_arrays();
    for (std::size_t i = 0; i < arrays.size(); ++i)
      arrays[i]->value = best_values[i];
  };
  snapshot();

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    LossNumbers train_stats;
    std::size_t seen = 0;
    const std::size_t n_batches =
        (order.size() + static_cast<std::size_t>(cfg.batch) - 1) /
        static_cast<std::size_t>(cfg.batch);
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t lo = b * static_cast<std::size_t>(cfg.batch);
      const std::size_t hi =
          std::min(order.size(), lo + static_cast<std::size_t>(cfg.batch));
      for (std::size_t k = lo; k < hi; ++k) {
        const bench::Example& ex = train_set[order[k]];
        Tape tape;
        try {
          LossBreakdown lb = model.example_loss(tape, ex.tokens, ex.label, rng);
          train_stats.add(lb);
          tape.backward(lb.total);
        } catch (const NonFiniteError& e) {
          throw TrainingError("training diverged at epoch " +
                              std::to_string(epoch) + " batch " +
                              std::to_string(b) + ": " + e.what());
        }
        ++seen;
      }
      adam.step(1.0 / static_cast<double>(hi - lo));
    }
    train_stats.scale(1.0 / static_cast<double>(seen));

    LossNumbers val_stats;
    for (const bench::Example& ex : val_set) {
      Tape tape;
      val_stats.add(model.example_loss_mean(tape, ex.tokens, ex.label));
    }
    val_stats.scale(1.0 / static_cast<double>(val_set.size()));
    rec.epochs.push_back(EpochStats{train_stats, val_stats});

    if (val_stats.task < best_val) {
      best_val = val_stats.task;
      best_epoch = epoch;
      bad_epochs = 0;
      snapshot();
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg.patience && cfg.patience > 0) break;
    }
  }
  restore();
  rec.selected_epoch = best_epoch;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

std::vector<ExperimentRecord> sweep(const TrainConfig& tmpl, SweepParam param,
                                    const std::vector<double>& grid,
                                    const std::vector<std::uint64_t>& seeds,
                                    const bench::Dataset& train_set,
                                    const bench::Dataset& val_set,
                                    const SweepEval* eval, int jobs) {
  if (grid.empty() || seeds.empty())
    throw ContractError("sweep: grid and seeds must be nonempty");
  struct Cell {
    double value;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double g : grid)
    for (std::uint64_t s : seeds) cells.push_back(Cell{g, s});
  std::vector<ExperimentRecord> records(cells.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      TrainConfig cfg = tmpl;
      cfg.seed = cells[i].seed;
      if (param == SweepParam::Beta)
        cfg.model.beta = cells[i].value;
      else
        cfg.model.lambda_tc = cells[i].value;
      try {
        TrainResult r = train(cfg, train_set, val_set);
        if (eval) {
          if (eval->test)
            r.record.clean_acc = bench::accuracy(r.model, *eval->test);
          if (eval->test_target)
            r.record.target_acc = bench::accuracy(r.model, *eval->test_target);
          if (eval->synonyms && eval->test) {
            bench::RobustnessReport rep = bench::evaluate_robustness(
                r.model, *eval->test, *eval->synonyms, eval->attack);
            r.record.clean_acc = rep.clean_accuracy;
            r.record.attack_acc = rep.attack_accuracy;
          }
        }
        records[i] = std::move(r.record);
      } catch (const std::exception& e) {
        ExperimentRecord rec;
        TrainConfig cfg_copy = cfg;
        rec.config = cfg_copy.to_kv();
        rec.seed = cfg.seed;
        rec.error = e.what();
        records[i] = std::move(rec);
      }
    }
  };

  const int n_threads = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  return records;
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

namespace {
constexpr int kCheckpointVersion = 1;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  json doc;
  doc["format_version"] = kCheckpointVersion;
  json cfg;
  TrainConfig tc;
  tc.model = model.cfg;
  for (const auto& [k, v] : tc.to_kv().items()) cfg[k] = v;
  doc["config"] = std::move(cfg);
  json arrays = json::object();
  for (const Array* a : model.all_arrays()) {
    json entry;
    json shape = json::array();
    if (a->shape.rank >= 1) shape.push_back(a->shape.d0);
    if (a->shape.rank == 2) shape.push_back(a->shape.d1);
    entry["shape"] = std::move(shape);
    json values = json::array();
    for (double v : a->value) values.push_back(format17(v));
    entry["values"] = std::move(values);
    arrays[a->name] = std::move(entry);
  }
  doc["arrays"] = std::move(arrays);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out << doc.dump(1) << "\n";
  if (!out) throw IoError("write failed for checkpoint: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw PersistenceError("checkpoint " + path.string() +
                           ": malformed JSON: " + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kCheckpointVersion)
      throw PersistenceError("checkpoint " + path.string() +
                             ": unsupported format_version");
    Kv kv;
    for (const auto& [k, v] : doc.at("config").items())
      kv.set(k, v.get<std::string>());
    TrainConfig tc = TrainConfig::from_kv(kv);
    Model model = Model::init(tc.model, 0);
    const json& arrays = doc.at("arrays");
    for (Array* a : model.all_arrays()) {
      if (!arrays.contains(a->name))
        throw PersistenceError("checkpoint " + path.string() +
                               ": missing array '" + a->name + "'");
      const json& entry = arrays.at(a->name);
      std::vector<std::size_t> shape =
          entry.at("shape").get<std::vector<std::size_t>>();
      Shape want = a->shape;
      std::vector<std::size_t> want_dims;
      if (want.rank >= 1) want_dims.push_back(want.d0);
      if (want.rank == 2) want_dims.push_back(want.d1);
      if (shape != want_dims)
        throw PersistenceError("checkpoint " + path.string() + ": array '" +
                               a->name + "' has mismatched shape");
      const json& values = entry.at("values");
      if (values.size() != a->size())
        throw PersistenceError("checkpoint " + path.string() + ": array '" +
                               a->name + "' has wrong element count");
      for (std::size_t i = 0; i < a->size(); ++i) {
        const std::string s = values[i].get<std::string>();
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0' || !std::isfinite(v))
          throw PersistenceError("checkpoint " + path.string() + ": array '" +
                                 a->name + "' has a malformed value '" + s +
                                 "'");
        a->value[i] = v;
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw PersistenceError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace disent
