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

// disent command-line tool. All numeric work happens behind the C API in
// libdisent; this binary parses flags, resolves configuration layers
// (defaults < DSNT_SEED < config file < explicit flags), writes run manifests
// and renders human-readable tables.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "disent.h"

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// small helpers
// ---------------------------------------------------------------------------

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

[[noreturn]] void die(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  std::exit(1);
}

void check(dsnt_status st, const std::string& what) {
  if (st != DSNT_OK)
    die(what + ": " + dsnt_status_name(st) + ": " + dsnt_last_error());
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  dsnt_string_free(s);
  return out;
}

struct KvMap {
  std::map<std::string, std::string> items;
  void set(const std::string& k, const std::string& v) { items[k] = v; }
  bool has(const std::string& k) const { return items.count(k) != 0; }
  std::string text() const {
    std::ostringstream os;
    for (const auto& [k, v] : items) os << k << " = " << v << "\n";
    return os.str();
  }
  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : items) j[k] = v;
    return j;
  }
};

KvMap parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) die("cannot read config file: " + path);
  KvMap kv;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      die("config file " + path + " line " + std::to_string(line_no) +
          ": expected 'key = value'");
    kv.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

// One configuration knob: a CLI flag bound to a kv key with a default.
// Resolution order: built-in default < DSNT_SEED (seed only) < config file
// < explicit flag.
class Options {
 public:
  explicit Options(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_,
                     "configuration file with key = value lines");
  }

  void add(const std::string& flag, const std::string& key,
           const std::string& dflt, const std::string& help) {
    auto value = std::make_shared<std::string>(dflt);
    CLI::Option* opt = app_->add_option(flag, *value, help)
                           ->default_str(dflt);
    entries_.push_back(Entry{key, dflt, value, opt});
  }

  KvMap resolve() {
    KvMap resolved;
    for (const Entry& e : entries_) resolved.set(e.key, e.dflt);
    if (const char* env_seed = std::getenv("DSNT_SEED");
        env_seed && resolved.has("seed"))
      resolved.set("seed", env_seed);
    if (!config_path_.empty()) {
      file_values_ = parse_kv_file(config_path_);
      for (const auto& [k, v] : file_values_.items) resolved.set(k, v);
    }
    for (const Entry& e : entries_)
      if (e.opt->count() > 0) {
        resolved.set(e.key, *e.value);
        explicit_flags_.set(e.key, *e.value);
      }
    return resolved;
  }

  const std::string& config_path() const { return config_path_; }
  const KvMap& file_values() const { return file_values_; }
  const KvMap& explicit_flags() const { return explicit_flags_; }

 private:
  struct Entry {
    std::string key;
    std::string dflt;
    std::shared_ptr<std::string> value;
    CLI::Option* opt;
  };
  CLI::App* app_;
  std::string config_path_;
  std::vector<Entry> entries_;
  KvMap file_values_;
  KvMap explicit_flags_;
};

void write_manifest(const std::string& path, const std::string& command,
                    const Options& opts, const KvMap& resolved,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const std::string& started, const json& extra = {}) {
  json doc;
  doc["command"] = command;
  doc["version"] = dsnt_version_string();
  doc["config_file"] = opts.config_path();
  doc["config_file_values"] = opts.file_values().to_json();
  doc["flags"] = opts.explicit_flags().to_json();
  doc["resolved"] = resolved.to_json();
  doc["inputs"] = inputs;
  doc["outputs"] = outputs;
  doc["seed"] = resolved.has("seed") ? resolved.items.at("seed") : "";
  doc["started_at"] = started;
  doc["finished_at"] = iso_timestamp();
  if (!extra.is_null()) doc["extra"] = extra;
  std::ofstream out(path);
  if (!out) die("cannot write manifest: " + path);
  out << doc.dump(2) << "\n";
}

struct DatasetHandle {
  dsnt_dataset* ds = nullptr;
  ~DatasetHandle() { dsnt_dataset_close(ds); }
};
struct ModelHandle {
  dsnt_model* m = nullptr;
  ~ModelHandle() { dsnt_model_close(m); }
};
struct SynonymsHandle {
  dsnt_synonyms* s = nullptr;
  ~SynonymsHandle() { dsnt_synonyms_close(s); }
};

void add_model_options(Options& o) {
  o.add("--family", "family", "baseline",
        "model family: baseline|regularizer|vib|vib_tc");
  o.add("--encoder", "encoder", "bow", "encoder kind: bow|cnn");
  o.add("--d", "d", "16", "embedding and encoder width");
  o.add("--hidden", "hidden", "16", "bow-mlp hidden width");
  o.add("--latent", "latent", "16", "latent dimension D (vib family)");
  o.add("--heads", "heads", "4", "number of heads K");
  o.add("--beta", "beta", "0", "regularizer / rate weight");
  o.add("--lambda-tc", "lambda_tc", "0",
        "total-correlation weight (alias of the gamma sweep axis)");
  o.add("--train-samples", "train_samples", "1",
        "reparameterization draws per training example");
  o.add("--eval-samples", "eval_samples", "0",
        "predictive draws at evaluation (0 = decode at the mean)");
  o.add("--conv-width", "conv_width", "3", "cnn window width");
  o.add("--head-loss-mean", "head_loss_mean", "false",
        "average instead of sum the per-head vib_tc task terms");
  o.add("--train-embeddings", "train_embeddings", "true",
        "update the embedding table during training");
  o.add("--lr", "lr", "0.003", "Adam learning rate");
  o.add("--adam-b1", "adam_b1", "0.9", "Adam beta1");
  o.add("--adam-b2", "adam_b2", "0.98", "Adam beta2");
  o.add("--adam-eps", "adam_eps", "1e-06", "Adam epsilon");
  o.add("--batch", "batch", "32", "batch size");
  o.add("--epochs", "epochs", "25", "maximum epochs");
  o.add("--patience", "patience", "5", "early-stopping patience");
  o.add("--val-fraction", "val_fraction", "0.15",
        "validation fraction carved from the training file");
  o.add("--seed", "seed", "1", "run seed (DSNT_SEED is the fallback)");
}

void add_attack_options(Options& o) {
  o.add("--attack", "attack", "greedy", "attack kind: greedy|genetic");
  o.add("--scoring", "scoring", "prob_drop",
        "greedy position ranking: prob_drop|saliency");
  o.add("--budget-frac", "budget_frac", "0.25",
        "substitution budget as a fraction of tokens (ceil)");
  o.add("--budget", "budget", "-1", "absolute budget override (-1 = use frac)");
  o.add("--max-queries", "max_queries", "2000", "model query limit per example");
  o.add("--population", "population", "20", "genetic population size");
  o.add("--generations", "generations", "10", "genetic generations");
  o.add("--attack-seed", "attack_seed", "0", "attack RNG seed");
}

std::string attack_kv_text(const KvMap& resolved) {
  KvMap atk;
  for (const char* k :
       {"attack", "scoring", "budget_frac", "budget", "max_queries",
        "population", "generations", "eval_samples"})
    if (resolved.has(k)) atk.set(k, resolved.items.at(k));
  if (resolved.has("attack_seed")) atk.set("seed", resolved.items.at("attack_seed"));
  return atk.text();
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_gen_data(Options& opts, const std::string& out_dir) {
  const std::string started = iso_timestamp();
  KvMap resolved = opts.resolve();
  char* summary = nullptr;
  check(dsnt_gen_data(resolved.text().c_str(), out_dir.c_str(), &summary),
        "gen-data");
  json s = json::parse(take_string(summary));
  std::cout << "wrote " << out_dir << ":\n"
            << "  vocab size        " << s["vocab_size"] << "\n"
            << "  train examples    " << s["n_train"] << "\n"
            << "  test source       " << s["n_test_source"] << "\n"
            << "  test target       " << s["n_test_target"] << "\n";
  write_manifest(out_dir + "/manifest.json", "gen-data", opts, resolved, {},
                 {out_dir + "/train.tsv", out_dir + "/test_source.tsv",
                  out_dir + "/test_target.tsv", out_dir + "/vocab.txt",
                  out_dir + "/synonyms.tsv"},
                 started);
  return 0;
}

int cmd_train(Options& opts, const std::string& data, const std::string& vocab,
              const std::string& checkpoint, std::string record_path,
              const std::string& test_source, const std::string& test_target) {
  const std::string started = iso_timestamp();
  KvMap resolved = opts.resolve();
  if (record_path.empty()) record_path = checkpoint + ".record.jsonl";

  DatasetHandle train;
  check(dsnt_dataset_open(data.c_str(), vocab.c_str(), &train.ds), "train data");
  ModelHandle model;
  char* record_raw = nullptr;
  check(dsnt_train(resolved.text().c_str(), train.ds, nullptr, &model.m,
                   &record_raw),
        "train");
  json record = json::parse(take_string(record_raw));
  check(dsnt_model_save(model.m, checkpoint.c_str()), "save checkpoint");

  std::vector<std::string> inputs{data, vocab};
  auto eval_split = [&](const std::string& path, const char* field) {
    if (path.empty()) return;
    DatasetHandle ds;
    check(dsnt_dataset_open(path.c_str(), vocab.c_str(), &ds.ds), "eval data");
    double acc = 0.0;
    check(dsnt_evaluate_accuracy(model.m, ds.ds, 0, 0, &acc), "accuracy");
    record[field] = acc;
    inputs.push_back(path);
  };
  eval_split(test_source, "source_acc");
  eval_split(test_target, "target_acc");

  {
    std::ofstream out(record_path);
    if (!out) die("cannot write record: " + record_path);
    out << record.dump() << "\n";
  }

  const auto& epochs = record["epochs"];
  std::cout << "family " << resolved.items.at("family") << ", "
            << epochs.size() << " epochs, selected epoch "
            << record["selected_epoch"] << "\n";
  std::cout << std::fixed << std::setprecision(4);
  if (!epochs.empty()) {
    const auto& last = epochs[std::min<std::size_t>(
        epochs.size() - 1,
        static_cast<std::size_t>(std::max(0, record["selected_epoch"].get<int>())))];
    std::cout << "  val total " << last["val"]["total"].get<double>()
              << "  val task " << last["val"]["task"].get<double>() << "\n";
  }
  if (record.contains("source_acc") && record["source_acc"].get<double>() >= 0)
    std::cout << "  source accuracy " << record["source_acc"].get<double>() << "\n";
  if (record.contains("target_acc") && record["target_acc"].get<double>() >= 0)
    std::cout << "  target accuracy " << record["target_acc"].get<double>() << "\n";

  write_manifest(checkpoint + ".manifest.json", "train", opts, resolved,
                 inputs, {checkpoint, record_path}, started);
  return 0;
}

int cmd_sweep(Options& opts, const std::string& data, const std::string& vocab,
              const std::string& test, const std::string& synonyms,
              const std::string& records_path, const std::string& param,
              const std::string& grid, const std::string& seeds, int jobs) {
  const std::string started = iso_timestamp();
  KvMap resolved = opts.resolve();
  resolved.set("sweep_param", param);
  resolved.set("sweep_grid", grid);
  resolved.set("sweep_seeds", seeds);
  resolved.set("sweep_jobs", std::to_string(jobs));

  DatasetHandle train;
  check(dsnt_dataset_open(data.c_str(), vocab.c_str(), &train.ds), "train data");
  DatasetHandle test_ds;
  SynonymsHandle syn;
  std::vector<std::string> inputs{data, vocab};
  if (!test.empty()) {
    check(dsnt_dataset_open(test.c_str(), vocab.c_str(), &test_ds.ds),
          "test data");
    inputs.push_back(test);
  }
  if (!synonyms.empty()) {
    check(dsnt_synonyms_open(synonyms.c_str(), vocab.c_str(), &syn.s),
          "synonym table");
    inputs.push_back(synonyms);
  }

  KvMap sweep_kv;
  sweep_kv.set("param", param);
  sweep_kv.set("grid", grid);
  sweep_kv.set("seeds", seeds);
  sweep_kv.set("jobs", std::to_string(jobs));
  for (const char* k :
       {"attack", "scoring", "budget_frac", "budget", "max_queries",
        "population", "generations"})
    if (resolved.has(k)) sweep_kv.set(k, resolved.items.at(k));
  if (resolved.has("attack_seed"))
    sweep_kv.set("seed", resolved.items.at("attack_seed"));

  char* records_raw = nullptr;
  check(dsnt_sweep(resolved.text().c_str(), sweep_kv.text().c_str(), train.ds,
                   nullptr, test_ds.ds, syn.s, &records_raw),
        "sweep");
  const std::string records = take_string(records_raw);
  {
    std::ofstream out(records_path);
    if (!out) die("cannot write records: " + records_path);
    out << records;
  }

  // human summary: one line per cell
  std::cout << std::left << std::setw(10) << param << std::setw(8) << "seed"
            << std::setw(12) << "clean" << std::setw(12) << "attack"
            << "error\n";
  std::istringstream lines(records);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    json r = json::parse(line);
    const std::string value = param == "beta"
                                  ? r["config"].value("beta", "?")
                                  : r["config"].value("lambda_tc", "?");
    std::cout << std::left << std::setw(10) << value << std::setw(8)
              << r["seed"].get<std::uint64_t>();
    std::cout << std::setw(12) << r["clean_acc"].get<double>() << std::setw(12)
              << r["attack_acc"].get<double>() << r["error"].get<std::string>()
              << "\n";
  }

  write_manifest(records_path + ".manifest.json", "sweep", opts, resolved,
                 inputs, {records_path}, started);
  return 0;
}

int cmd_attack(Options& opts, const std::string& checkpoint,
               const std::string& data, const std::string& vocab,
               const std::string& synonyms, const std::string& report_path) {
  const std::string started = iso_timestamp();
  KvMap resolved = opts.resolve();

  ModelHandle model;
  check(dsnt_model_load(checkpoint.c_str(), &model.m), "load checkpoint");
  DatasetHandle ds;
  check(dsnt_dataset_open(data.c_str(), vocab.c_str(), &ds.ds), "test data");
  SynonymsHandle syn;
  check(dsnt_synonyms_open(synonyms.c_str(), vocab.c_str(), &syn.s),
        "synonym table");

  char* report_raw = nullptr;
  check(dsnt_evaluate_attack(model.m, ds.ds, syn.s,
                             attack_kv_text(resolved).c_str(), &report_raw),
        "attack");
  const std::string report = take_string(report_raw);
  {
    std::ofstream out(report_path);
    if (!out) die("cannot write report: " + report_path);
    out << report << "\n";
  }
  json r = json::parse(report);
  std::cout << std::fixed << std::setprecision(4);
  std::cout << "examples            " << r["n"].get<std::size_t>() << "\n"
            << "clean accuracy      " << r["clean"].get<double>() << "\n"
            << "under attack        " << r["under_attack"].get<double>() << "\n"
            << "mean queries        " << r["mean_queries"].get<double>() << "\n"
            << "mean substitutions  " << r["mean_substitutions"].get<double>()
            << "\n";

  write_manifest(report_path + ".manifest.json", "attack", opts, resolved,
                 {checkpoint, data, vocab, synonyms}, {report_path}, started);
  return 0;
}

int cmd_verify_bounds(Options& opts, const std::string& out_path) {
  const std::string started = iso_timestamp();
  KvMap resolved = opts.resolve();
  char* summary_raw = nullptr;
  const dsnt_status st =
      dsnt_verify_bounds(resolved.text().c_str(), &summary_raw);
  const std::string summary = take_string(summary_raw);
  if (st != DSNT_OK && summary.empty())
    die(std::string("verify-bounds: ") + dsnt_last_error());
  json s = json::parse(summary);
  std::cout << "joints checked              " << s["joints"] << "\n"
            << "violations                  " << s["violations"] << "\n"
            << "worst lower-bound overshoot " << s["worst_lower_overshoot"]
            << "\n"
            << "worst upper-bound undershoot " << s["worst_upper_undershoot"]
            << "\n"
            << "tight q=p(y|z) max error    " << s["max_tight_lower_error"]
            << "\n"
            << "tight r=p(z) max error      " << s["max_tight_upper_error"]
            << "\n"
            << (s["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) die("cannot write summary: " + out_path);
    out << summary << "\n";
    write_manifest(out_path + ".manifest.json", "verify-bounds", opts,
                   resolved, {}, {out_path}, started);
  }
  return s["pass"].get<bool>() ? 0 : 1;
}

int cmd_saliency(Options& opts, const std::string& checkpoint,
                 const std::string& vocab, const std::string& text,
                 const std::string& out_path) {
  const std::string started = iso_timestamp();
  KvMap resolved = opts.resolve();

  ModelHandle model;
  check(dsnt_model_load(checkpoint.c_str(), &model.m), "load checkpoint");
  double divergence = 0.0;
  int divergence_defined = 0;
  check(dsnt_saliency(model.m, vocab.c_str(), text.c_str(), out_path.c_str(),
                      nullptr, &divergence, &divergence_defined),
        "saliency");
  if (divergence_defined)
    std::cout << "head_divergence " << std::setprecision(10) << divergence
              << "\n";
  else
    std::cout << "head_divergence undefined (single head)\n";

  // count tokens that fell back to <unk> for the manifest
  std::set<std::string> known;
  {
    std::ifstream vin(vocab);
    std::string line;
    while (std::getline(vin, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) known.insert(line);
    }
  }
  int unknown = 0;
  {
    std::istringstream ts(text);
    std::string tok;
    while (ts >> tok)
      if (!known.count(tok)) ++unknown;
  }
  json extra{{"unknown_tokens_mapped", unknown}};
  write_manifest(out_path + ".manifest.json", "saliency", opts, resolved,
                 {checkpoint, vocab}, {out_path}, started, extra);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disentangled-representation training and robustness bench"};
  app.require_subcommand(1);

  // gen-data ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic shift dataset");
  Options gen_opts(gen);
  std::string gen_out;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen_opts.add("--classes", "classes", "2", "number of classes");
  gen_opts.add("--rho-core", "rho_core", "0.8", "core-token predictiveness");
  gen_opts.add("--rho-src", "rho_src", "0.95", "spurious/label correlation, source");
  gen_opts.add("--rho-tgt", "rho_tgt", "0.05", "spurious/label correlation, target");
  gen_opts.add("--len-min", "len_min", "8", "minimum sentence length");
  gen_opts.add("--len-max", "len_max", "16", "maximum sentence length");
  gen_opts.add("--core-variants", "core_variants", "2", "core surface forms per class");
  gen_opts.add("--spur-variants", "spur_variants", "24", "spurious tokens per class");
  gen_opts.add("--spur-tokens", "spur_tokens", "4", "spurious bundle size per example");
  gen_opts.add("--filler-groups", "filler_groups", "10", "filler synonym groups");
  gen_opts.add("--filler-group-size", "filler_group_size", "3", "tokens per filler group");
  gen_opts.add("--filler-rare-mass", "filler_rare_mass", "0.2",
               "probability mass on rare filler variants");
  gen_opts.add("--n-train", "n_train", "2000", "training examples");
  gen_opts.add("--n-test-source", "n_test_source", "500", "source test examples");
  gen_opts.add("--n-test-target", "n_test_target", "500", "target test examples");
  gen_opts.add("--seed", "seed", "7", "generator seed (DSNT_SEED fallback)");

  // train ---------------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train one model family");
  Options tr_opts(tr);
  std::string tr_data, tr_vocab, tr_ckpt, tr_record, tr_src, tr_tgt;
  tr->add_option("--data", tr_data, "training dataset file")->required();
  tr->add_option("--vocab", tr_vocab, "vocabulary file")->required();
  tr->add_option("--checkpoint", tr_ckpt, "checkpoint output path")->required();
  tr->add_option("--record", tr_record, "experiment record output (JSON lines)");
  tr->add_option("--test-source", tr_src, "optional source test set to score");
  tr->add_option("--test-target", tr_tgt, "optional target test set to score");
  add_model_options(tr_opts);

  // sweep ---------------------------------------------------------------------
  auto* sw = app.add_subcommand("sweep", "grid x seeds hyperparameter sweep");
  Options sw_opts(sw);
  std::string sw_data, sw_vocab, sw_test, sw_syn, sw_records;
  std::string sw_param = "beta", sw_grid, sw_seeds;
  int sw_jobs = 2;
  sw->add_option("--data", sw_data, "training dataset file")->required();
  sw->add_option("--vocab", sw_vocab, "vocabulary file")->required();
  sw->add_option("--test", sw_test, "clean evaluation set");
  sw->add_option("--synonyms", sw_syn, "synonym table (enables attack column)");
  sw->add_option("--records", sw_records, "output records path")->required();
  sw->add_option("--param", sw_param, "swept parameter: beta|lambda_tc|gamma");
  sw->add_option("--grid", sw_grid, "comma-separated grid values")->required();
  sw->add_option("--seeds", sw_seeds, "comma-separated seeds")->required();
  sw->add_option("--jobs", sw_jobs, "parallel workers");
  add_model_options(sw_opts);
  add_attack_options(sw_opts);

  // attack ----------------------------------------------------------------------
  auto* at = app.add_subcommand("attack", "attack a trained checkpoint");
  Options at_opts(at);
  std::string at_ckpt, at_data, at_vocab, at_syn, at_report;
  at->add_option("--checkpoint", at_ckpt, "trained checkpoint")->required();
  at->add_option("--data", at_data, "test dataset file")->required();
  at->add_option("--vocab", at_vocab, "vocabulary file")->required();
  at->add_option("--synonyms", at_syn, "synonym table file")->required();
  at->add_option("--report", at_report, "output report JSON")->required();
  at_opts.add("--eval-samples", "eval_samples", "0",
              "predictive draws per query (0 = mean decoding)");
  add_attack_options(at_opts);

  // verify-bounds ------------------------------------------------------------------
  auto* vb = app.add_subcommand("verify-bounds",
                                "check the variational bound chain by enumeration");
  Options vb_opts(vb);
  std::string vb_out;
  vb->add_option("--out", vb_out, "optional summary JSON path");
  vb_opts.add("--joints", "joints", "100", "number of random joints");
  vb_opts.add("--nx", "nx", "4", "support size of X");
  vb_opts.add("--ny", "ny", "4", "support size of Y");
  vb_opts.add("--nz", "nz", "4", "support size of Z");
  vb_opts.add("--seed", "seed", "17", "sampling seed (DSNT_SEED fallback)");

  // saliency --------------------------------------------------------------------------
  auto* sa = app.add_subcommand("saliency", "export a head-saliency heatmap");
  Options sa_opts(sa);
  std::string sa_ckpt, sa_vocab, sa_text, sa_out;
  sa->add_option("--checkpoint", sa_ckpt, "trained checkpoint")->required();
  sa->add_option("--vocab", sa_vocab, "vocabulary file")->required();
  sa->add_option("--text", sa_text, "whitespace-tokenized input text")->required();
  sa->add_option("--out", sa_out, "heatmap JSON output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_opts, gen_out);
    if (tr->parsed())
      return cmd_train(tr_opts, tr_data, tr_vocab, tr_ckpt, tr_record, tr_src,
                       tr_tgt);
    if (sw->parsed())
      return cmd_sweep(sw_opts, sw_data, sw_vocab, sw_test, sw_syn, sw_records,
                       sw_param, sw_grid, sw_seeds, sw_jobs);
    if (at->parsed())
      return cmd_attack(at_opts, at_ckpt, at_data, at_vocab, at_syn, at_report);
    if (vb->parsed()) return cmd_verify_bounds(vb_opts, vb_out);
    if (sa->parsed()) return cmd_saliency(sa_opts, sa_ckpt, sa_vocab, sa_text, sa_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
