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

#include "disent/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "disent/common.hpp"
#include "disent/rng.hpp"
#include "disent/saliency.hpp"

namespace disent::bench {

std::string to_string(Domain d) {
  return d == Domain::Source ? "source" : "target";
}

Domain domain_from_string(const std::string& s) {
  if (s == "source") return Domain::Source;
  if (s == "target") return Domain::Target;
  throw ParseError("unknown domain tag '" + s + "'");
}

void ShiftSpec::validate() const {
  if (classes < 2) throw ContractError("shift spec: need at least 2 classes");
  if (!(rho_core > 0.5 && rho_core <= 1.0))
    throw ContractError("shift spec: rho_core must be in (0.5, 1]");
  if (rho_src < 0.0 || rho_src > 1.0 || rho_tgt < 0.0 || rho_tgt > 1.0)
    throw ContractError("shift spec: correlations must be in [0, 1]");
  if (len_min < spur_tokens + 2 || len_max < len_min)
    throw ContractError(
        "shift spec: length range must fit one core token, the spurious "
        "bundle and at least one filler");
  if (core_variants < 1 || spur_variants < 1 || spur_tokens < 1 ||
      filler_groups < 1 || filler_group_size < 1)
    throw ContractError("shift spec: counts must be positive");
  if (filler_rare_mass < 0.0 || filler_rare_mass >= 1.0)
    throw ContractError("shift spec: filler_rare_mass must be in [0, 1)");
}

const std::vector<int>* SynonymTable::find(int token) const {
  auto it = subs.find(token);
  return it == subs.end() ? nullptr : &it->second;
}

void SynonymTable::validate(const Vocabulary& vocab) const {
  for (const auto& [tok, alts] : subs) {
    if (alts.empty())
      throw ContractError("synonym table: empty substitute set for token " +
                          std::to_string(tok));
    for (int a : alts) {
      if (a == tok)
        throw ContractError("synonym table: token '" + vocab.token(tok) +
                            "' maps to itself");
      if (a < 0 || a >= vocab.size())
        throw ContractError("synonym table: substitute out of vocabulary");
    }
  }
}

void SynonymTable::save(const std::filesystem::path& path,
                        const Vocabulary& vocab) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write synonym table: " + path.string());
  for (const auto& [tok, alts] : subs) {
    out << vocab.token(tok) << "\t";
    for (std::size_t i = 0; i < alts.size(); ++i) {
      if (i) out << ",";
      out << vocab.token(alts[i]);
    }
    out << "\n";
  }
}

SynonymTable SynonymTable::load(const std::filesystem::path& path,
                                const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read synonym table: " + path.string());
  SynonymTable t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("synonym table " + path.string() + " line " +
                       std::to_string(line_no) + ": expected token<TAB>substitutes");
    const std::string tok = line.substr(0, tab);
    std::vector<int> alts;
    std::stringstream rest(line.substr(tab + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      if (item.empty()) continue;
      alts.push_back(vocab.lookup(item));
    }
    if (alts.empty())
      throw ParseError("synonym table " + path.string() + " line " +
                       std::to_string(line_no) + ": no substitutes");
    t.subs[vocab.lookup(tok)] = std::move(alts);
  }
  t.validate(vocab);
  return t;
}

namespace {

struct VocabLayout {
  // token index = f(role, class, variant)
  std::vector<std::vector<int>> core;    // [class][variant]
  std::vector<std::vector<int>> spur;    // [class][variant]
  std::vector<std::vector<int>> filler;  // [group][member]
};

VocabLayout build_vocab(const ShiftSpec& spec, Vocabulary& vocab) {
  VocabLayout lay;
  lay.core.resize(spec.classes);
  for (int c = 0; c < spec.classes; ++c)
    for (int v = 0; v < spec.core_variants; ++v)
      lay.core[c].push_back(
          vocab.add("core" + std::to_string(c) + "_" + std::to_string(v)));
  lay.spur.resize(spec.classes);
  for (int c = 0; c < spec.classes; ++c)
    for (int v = 0; v < spec.spur_variants; ++v)
      lay.spur[c].push_back(
          vocab.add("spur" + std::to_string(c) + "_" + std::to_string(v)));
  lay.filler.resize(spec.filler_groups);
  for (int g = 0; g < spec.filler_groups; ++g)
    for (int m = 0; m < spec.filler_group_size; ++m)
      lay.filler[g].push_back(
          vocab.add("fill" + std::to_string(g) + "_" + std::to_string(m)));
  return lay;
}

SynonymTable build_synonyms(const ShiftSpec& spec, const VocabLayout& lay) {
  SynonymTable t;
  auto mutual = [&t](const std::vector<int>& group) {
    if (group.size() < 2) return;
    for (int a : group) {
      std::vector<int> alts;
      for (int b : group)
        if (b != a) alts.push_back(b);
      t.subs[a] = std::move(alts);
    }
  };
  // core variants of the same class are interchangeable surface forms
  for (const auto& g : lay.core) mutual(g);
  // spurious tokens are style markers: all of them are interchangeable,
  // across classes - swapping them never touches the core meaning
  std::vector<int> all_spur;
  for (const auto& g : lay.spur)
    all_spur.insert(all_spur.end(), g.begin(), g.end());
  mutual(all_spur);
  for (const auto& g : lay.filler) mutual(g);
  (void)spec;
  return t;
}

int other_class(int y, int classes, Rng& rng) {
  int o = static_cast<int>(rng.integer(static_cast<std::uint64_t>(classes - 1)));
  return o >= y ? o + 1 : o;
}

Example make_example(const ShiftSpec& spec, const VocabLayout& lay, int label,
                     Domain dom, Rng& rng) {
  Example ex;
  ex.label = label;
  ex.domain = dom;
  const double rho_dom = dom == Domain::Source ? spec.rho_src : spec.rho_tgt;
  const int len =
      spec.len_min +
      static_cast<int>(rng.integer(
          static_cast<std::uint64_t>(spec.len_max - spec.len_min + 1)));

  std::vector<int> toks;
  toks.reserve(static_cast<std::size_t>(len));

  const int core_class =
      rng.uniform() < spec.rho_core ? label : other_class(label, spec.classes, rng);
  toks.push_back(lay.core[core_class][rng.integer(
      static_cast<std::uint64_t>(spec.core_variants))]);

  const int spur_class =
      rng.uniform() < rho_dom ? label : other_class(label, spec.classes, rng);
  for (int i = 0; i < spec.spur_tokens; ++i)
    toks.push_back(lay.spur[spur_class][rng.integer(
        static_cast<std::uint64_t>(spec.spur_variants))]);

  const int n_fill = len - 1 - spec.spur_tokens;
  for (int i = 0; i < n_fill; ++i) {
    const auto& group =
        lay.filler[rng.integer(static_cast<std::uint64_t>(spec.filler_groups))];
    std::size_t member = 0;
    if (group.size() > 1 && rng.uniform() < spec.filler_rare_mass)
      member = 1 + rng.integer(static_cast<std::uint64_t>(group.size() - 1));
    toks.push_back(group[member]);
  }
  rng.shuffle(toks);
  ex.tokens = std::move(toks);
  return ex;
}

Dataset make_split(const ShiftSpec& spec, const VocabLayout& lay, int n,
                   Domain dom, Rng& rng) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % spec.classes;
  rng.shuffle(labels);
  Dataset ds;
  ds.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    ds.push_back(make_example(spec, lay, labels[static_cast<std::size_t>(i)], dom, rng));
  return ds;
}

}  // namespace

ShiftBundle generate_shift_dataset(const ShiftSpec& spec, int n_train,
                                   int n_test_source, int n_test_target) {
  spec.validate();
  if (n_train < 1 || n_test_source < 1 || n_test_target < 1)
    throw ContractError("generate_shift_dataset: counts must be >= 1");
  ShiftBundle b;
  VocabLayout lay = build_vocab(spec, b.vocab);
  b.synonyms = build_synonyms(spec, lay);
  Rng rng_train(Rng::mix(spec.seed, 0));
  Rng rng_src(Rng::mix(spec.seed, 1));
  Rng rng_tgt(Rng::mix(spec.seed, 2));
  b.train = make_split(spec, lay, n_train, Domain::Source, rng_train);
  b.test_source = make_split(spec, lay, n_test_source, Domain::Source, rng_src);
  b.test_target = make_split(spec, lay, n_test_target, Domain::Target, rng_tgt);
  return b;
}

void save_dataset(const Dataset& ds, const Vocabulary& vocab,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset: " + path.string());
  for (const Example& ex : ds) {
    out << ex.label << "\t" << to_string(ex.domain) << "\t";
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
      if (i) out << " ";
      out << vocab.token(ex.tokens[i]);
    }
    out << "\n";
  }
}

Dataset load_dataset(const std::filesystem::path& path,
                     const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset: " + path.string());
  Dataset ds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t t1 = line.find('\t');
    std::size_t t2 = t1 == std::string::npos ? std::string::npos
                                             : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw ParseError("dataset " + path.string() + " line " +
                       std::to_string(line_no) +
                       ": expected label<TAB>domain<TAB>tokens");
    Example ex;
    try {
      std::size_t pos = 0;
      ex.label = std::stoi(line.substr(0, t1), &pos);
      if (pos != t1 || ex.label < 0) throw std::invalid_argument("label");
    } catch (const std::exception&) {
      throw ParseError("dataset " + path.string() + " line " +
                       std::to_string(line_no) + ": bad label '" +
                       line.substr(0, t1) + "'");
    }
    try {
      ex.domain = domain_from_string(line.substr(t1 + 1, t2 - t1 - 1));
    } catch (const ParseError&) {
      throw ParseError("dataset " + path.string() + " line " +
                       std::to_string(line_no) + ": bad domain tag");
    }
    std::stringstream toks(line.substr(t2 + 1));
    std::string tok;
    while (toks >> tok) ex.tokens.push_back(vocab.lookup(tok));
    if (ex.tokens.empty())
      throw ParseError("dataset " + path.string() + " line " +
                       std::to_string(line_no) + ": no tokens");
    ds.push_back(std::move(ex));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// attacks
// ---------------------------------------------------------------------------

int AttackConfig::budget_for(std::size_t tokens) const {
  if (budget_override >= 0) return budget_override;
  return static_cast<int>(
      std::ceil(budget_frac * static_cast<double>(tokens)));
}

namespace {

struct Querier {
  const Model& model;
  int gold;
  int eval_samples;
  std::uint64_t seed;
  int max_queries;
  int used = 0;

  bool exhausted() const { return used >= max_queries; }

  // one model forward = one query
  Prediction query(std::span<const int> tokens) {
    ++used;
    return model.predict(tokens, eval_samples, seed);
  }
  double gold_prob(const Prediction& p) const {
    return p.probs[static_cast<std::size_t>(gold)];
  }
};

}  // namespace

AttackOutcome saliency_order_attack(const Model& model, const Example& ex,
                                    const SynonymTable& table, int budget,
                                    Scoring scoring, int max_queries,
                                    int eval_samples, std::uint64_t seed) {
  if (budget < 0) throw ContractError("attack: budget must be >= 0");
  AttackOutcome out;
  out.original = ex;
  out.perturbed = ex.tokens;

  Querier q{model, ex.label, eval_samples, seed, max_queries};
  Prediction clean = q.query(ex.tokens);
  double cur_gold = q.gold_prob(clean);
  if (clean.label != ex.label) {
    out.success = true;
    out.queries = q.used;
    return out;
  }

  // candidate positions: those with a non-empty synonym set
  std::vector<std::size_t> cand;
  for (std::size_t p = 0; p < ex.tokens.size(); ++p)
    if (table.find(ex.tokens[p]) != nullptr) cand.push_back(p);
  if (cand.empty() || budget == 0) {
    out.queries = q.used;
    return out;
  }

  // rank positions once: probability drop under unk-neutralization, or
  // gradient saliency summed over heads
  std::vector<double> score(cand.size(), 0.0);
  if (scoring == Scoring::ProbDrop) {
    for (std::size_t i = 0; i < cand.size() && !q.exhausted(); ++i) {
      std::vector<int> probe = ex.tokens;
      probe[cand[i]] = Vocabulary::kUnk;
      score[i] = cur_gold - q.gold_prob(q.query(probe));
    }
  } else {
    SaliencyMap map = head_saliency(model, ex.tokens);
    for (std::size_t i = 0; i < cand.size(); ++i)
      for (std::size_t h = 0; h < map.heads; ++h)
        score[i] += map.scores[h][cand[i]];
  }
  std::vector<std::size_t> order(cand.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score[a] > score[b];
  });

  for (std::size_t oi = 0;
       oi < order.size() &&
       static_cast<int>(out.substitutions.size()) < budget && !q.exhausted();
       ++oi) {
    const std::size_t pos = cand[order[oi]];
    const std::vector<int>* alts = table.find(out.perturbed[pos]);
    if (!alts) continue;
    double best_prob = cur_gold;
    int best_tok = -1;
    bool best_flips = false;
    for (int alt : *alts) {
      if (q.exhausted()) break;
      std::vector<int> probe = out.perturbed;
      probe[pos] = alt;
      Prediction p = q.query(probe);
      const double gp = q.gold_prob(p);
      if (gp < best_prob) {
        best_prob = gp;
        best_tok = alt;
        best_flips = p.label != ex.label;
      }
    }
    if (best_tok < 0) continue;  // nothing lowered the gold probability
    out.substitutions.push_back(
        Substitution{static_cast<int>(pos), out.perturbed[pos], best_tok});
    out.perturbed[pos] = best_tok;
    cur_gold = best_prob;
    if (best_flips) {
      out.success = true;
      break;
    }
  }
  out.queries = q.used;
  return out;
}

AttackOutcome population_attack(const Model& model, const Example& ex,
                                const SynonymTable& table, int budget,
                                int population, int generations,
                                std::uint64_t seed, int max_queries,
                                int eval_samples) {
  if (population < 1 || generations < 1)
    throw ContractError("population_attack: population and generations must be >= 1");
  if (budget < 0) throw ContractError("attack: budget must be >= 0");
  AttackOutcome out;
  out.original = ex;
  out.perturbed = ex.tokens;

  Querier q{model, ex.label, eval_samples, seed, max_queries};
  Prediction clean = q.query(ex.tokens);
  if (clean.label != ex.label) {
    out.success = true;
    out.queries = q.used;
    return out;
  }

  std::vector<std::size_t> cand;
  for (std::size_t p = 0; p < ex.tokens.size(); ++p)
    if (table.find(ex.tokens[p]) != nullptr) cand.push_back(p);
  if (cand.empty() || budget == 0) {
    out.queries = q.used;
    return out;
  }

  Rng rng(seed);
  using Genome = std::map<std::size_t, int>;  // position -> substitute

  auto random_sub = [&](Genome& g) {
    const std::size_t pos = cand[rng.integer(cand.size())];
    const auto& alts = *table.find(ex.tokens[pos]);
    g[pos] = alts[rng.integer(alts.size())];
  };
  auto prune = [&](Genome& g) {
    while (static_cast<int>(g.size()) > budget) {
      std::size_t drop = rng.integer(g.size());
      auto it = g.begin();
      std::advance(it, static_cast<long>(drop));
      g.erase(it);
    }
  };
  auto apply = [&](const Genome& g) {
    std::vector<int> toks = ex.tokens;
    for (const auto& [pos, tok] : g) toks[pos] = tok;
    return toks;
  };

  std::vector<Genome> pop(static_cast<std::size_t>(population));
  for (Genome& g : pop) {
    random_sub(g);
    prune(g);
  }

  const double clean_gold = clean.probs[static_cast<std::size_t>(ex.label)];
  std::vector<double> fitness(pop.size(), 0.0);
  Genome best_genome;
  double best_fitness = -1.0;

  for (int gen = 0; gen < generations; ++gen) {
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (q.exhausted()) break;
      std::vector<int> toks = apply(pop[i]);
      Prediction p = q.query(toks);
      fitness[i] = clean_gold - q.gold_prob(p);
      if (fitness[i] > best_fitness) {
        best_fitness = fitness[i];
        best_genome = pop[i];
      }
      if (p.label != ex.label) {
        out.perturbed = std::move(toks);
        for (const auto& [pos, tok] : pop[i])
          out.substitutions.push_back(Substitution{
              static_cast<int>(pos), ex.tokens[pos], tok});
        out.success = true;
        out.queries = q.used;
        return out;
      }
    }
    if (gen + 1 >= generations || q.exhausted()) break;

    // roulette selection with elitism, positionwise crossover, one mutation
    double fmin = *std::min_element(fitness.begin(), fitness.end());
    std::vector<double> w(pop.size());
    double wsum = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      w[i] = fitness[i] - fmin + 1e-9;
      wsum += w[i];
    }
    auto pick_parent = [&]() -> const Genome& {
      double r = rng.uniform() * wsum;
      for (std::size_t i = 0; i < w.size(); ++i) {
        r -= w[i];
        if (r <= 0.0) return pop[i];
      }
      return pop.back();
    };
    std::vector<Genome> next;
    next.push_back(best_genome);  // elite
    while (next.size() < pop.size()) {
      const Genome& a = pick_parent();
      const Genome& b = pick_parent();
      Genome child;
      for (const auto& [pos, tok] : a)
        if (rng.uniform() < 0.5) child[pos] = tok;
      for (const auto& [pos, tok] : b)
        if (child.count(pos) == 0 && rng.uniform() < 0.5) child[pos] = tok;
      if (rng.uniform() < 0.5) random_sub(child);
      if (child.empty()) random_sub(child);
      prune(child);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
  }

  // no success: report the strongest genome found
  out.perturbed = apply(best_genome);
  for (const auto& [pos, tok] : best_genome)
    out.substitutions.push_back(
        Substitution{static_cast<int>(pos), ex.tokens[pos], tok});
  out.queries = q.used;
  return out;
}

AttackOutcome run_attack(const Model& model, const Example& ex,
                         const SynonymTable& table, const AttackConfig& cfg,
                         std::uint64_t example_stream) {
  const int budget = cfg.budget_for(ex.tokens.size());
  const std::uint64_t seed = Rng::mix(cfg.seed, example_stream);
  if (cfg.kind == AttackKind::Greedy)
    return saliency_order_attack(model, ex, table, budget, cfg.scoring,
                                 cfg.max_queries, cfg.eval_samples, seed);
  return population_attack(model, ex, table, budget, cfg.population,
                           cfg.generations, seed, cfg.max_queries,
                           cfg.eval_samples);
}

RobustnessReport evaluate_robustness(const Model& model, const Dataset& test,
                                     const SynonymTable& table,
                                     const AttackConfig& cfg) {
  if (test.empty()) throw ContractError("evaluate_robustness: empty test set");
  RobustnessReport r;
  r.n = test.size();
  std::size_t clean_ok = 0, robust = 0, attacked = 0;
  double queries = 0.0, subs = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Example& ex = test[i];
    Prediction p = model.predict(ex.tokens, cfg.eval_samples, Rng::mix(cfg.seed, i));
    if (p.label != ex.label) continue;  // clean miss, nothing to attack
    ++clean_ok;
    AttackOutcome o = run_attack(model, ex, table, cfg, i);
    ++attacked;
    queries += o.queries;
    subs += static_cast<double>(o.substitutions.size());
    if (!o.success) ++robust;
  }
  r.clean_accuracy = static_cast<double>(clean_ok) / static_cast<double>(r.n);
  r.attack_accuracy = static_cast<double>(robust) / static_cast<double>(r.n);
  r.mean_queries = attacked ? queries / static_cast<double>(attacked) : 0.0;
  r.mean_substitutions = attacked ? subs / static_cast<double>(attacked) : 0.0;
  return r;
}

double accuracy(const Model& model, const Dataset& ds, int eval_samples,
                std::uint64_t seed) {
  if (ds.empty()) throw ContractError("accuracy: empty dataset");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Prediction p = model.predict(ds[i].tokens, eval_samples, Rng::mix(seed, i));
    if (p.label == ds[i].label) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(ds.size());
}

}  // namespace disent::bench
