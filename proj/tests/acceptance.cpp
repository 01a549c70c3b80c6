// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Every check is recomputed here rather than delegated to
// the unit tests so the binary stands on its own.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "exide/cli.hpp"
#include "exide/exide.hpp"
#include "support.hpp"

namespace {

using namespace exide;
using testing::dependency_examples;
using testing::find_document;
using testing::fixture;
using testing::mini_corpus;

constexpr double kTol = 1e-9;

/// Collects the reasons a criterion failed; an empty list is a pass.
class Findings {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && problems_.size() < 5) problems_.push_back(what);
    failed_ = failed_ || !ok;
  }
  bool failed() const { return failed_; }
  std::string summary() const {
    std::string out;
    for (const auto& p : problems_) out += (out.empty() ? "" : "; ") + p;
    return out;
  }

 private:
  std::vector<std::string> problems_;
  bool failed_ = false;
};

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

// ------------------------------------------------------------ criteria

void round_trip(Findings& f) {
  auto check = [&](const BusinessRule& r, const std::string& where) {
    const std::string text = format_rule(r);
    try {
      const BusinessRule back = parse_rule(text);
      f.expect(back == r, where + " changed: " + text);
      f.expect(format_rule(back) == text, where + " reformatted differently: " + text);
    } catch (const Error& e) {
      f.expect(false, where + " failed to parse: " + e.what());
    }
  };
  testing::RuleGenerator gen(20240601);
  for (int i = 0; i < 10000; ++i) check(gen.rule(), "generated rule " + std::to_string(i));
  std::size_t fixture_rules = 0;
  for (const auto& d : mini_corpus()) {
    for (std::size_t i = 0; i < d.gold_rules.size(); ++i) {
      check(d.gold_rules[i], d.id + " rule " + std::to_string(i));
      ++fixture_rules;
    }
  }
  f.expect(fixture_rules == 21, "expected 21 fixture rules, found " + std::to_string(fixture_rules));
}

void bio_example(Findings& f) {
  const auto& d = find_document(dependency_examples(), "currency-purchase");
  const auto seq = rules_to_bio(d.text, {d.gold_rules.front()}).sequence;
  // Annotators 1 and 3 tag these tokens identically.
  const std::vector<std::pair<std::string, std::string>> expected{
      {"currency", "B-SlotType"}, {"types", "I-SlotType"},       {"of", "O"},
      {"popular", "O"},           {"including", "O"},            {"RMB", "B-ReferenceValue"},
      {"USD", "I-ReferenceValue"}, {"JPY", "I-ReferenceValue"}};
  for (const auto& [token, tag] : expected) {
    const auto it = std::find(seq.tokens.begin(), seq.tokens.end(), token);
    if (it == seq.tokens.end()) {
      f.expect(false, "token '" + token + "' missing");
      continue;
    }
    const std::string got = tag_string(seq.tags[static_cast<std::size_t>(it - seq.tokens.begin())]);
    f.expect(got == tag, token + " tagged " + got + ", expected " + tag);
  }
  f.expect(seq.is_well_formed(), "sequence is not well formed");
}

void pair_enumeration(Findings& f) {
  f.expect(enumerate_pairs(5).size() == 10, "n=5 did not give 10 pairs");
  for (std::size_t n = 0; n <= 50; ++n) {
    const auto pairs = enumerate_pairs(n);
    f.expect(pairs.size() == n * (n - (n > 0 ? 1 : 0)) / 2, "wrong count for n=" + std::to_string(n));
    std::set<std::pair<std::size_t, std::size_t>> unique;
    for (const auto& [a, b] : pairs) {
      f.expect(a < b && b < n, "bad pair for n=" + std::to_string(n));
      unique.insert({a, b});
    }
    f.expect(unique.size() == pairs.size(), "duplicate pairs for n=" + std::to_string(n));
  }
}

void metric_oracles(Findings& f) {
  namespace oracle = testing::oracle;
  std::mt19937 rng(977);
  int entity = 0, macro = 0, kappa = 0, icc_checked = 0;

  for (int t = 0; t < 250; ++t) {
    const std::size_t n = 1 + rng() % 12;
    BioSequence g, p;
    g.tags = testing::random_tags(rng, n);
    p.tags = rng() % 4 == 0 ? g.tags : testing::random_tags(rng, n);
    g.tokens = p.tokens = std::vector<std::string>(n, "x");
    const auto lib = entity_f1(g, p);
    const auto ref = oracle::entity_f1(g.tags, p.tags);
    f.expect(std::abs(lib.micro_f1 - ref.micro) <= kTol, "entity micro F1 " + num(lib.micro_f1) + " vs " + num(ref.micro));
    f.expect(std::abs(lib.macro_f1 - ref.macro) <= kTol, "entity macro F1 " + num(lib.macro_f1) + " vs " + num(ref.macro));
    ++entity;
  }

  for (int t = 0; t < 250; ++t) {
    const std::size_t k = 2 + rng() % 11, n = 1 + rng() % 12;
    std::vector<std::string> classes, gold, pred;
    for (std::size_t c = 0; c < k; ++c) classes.push_back("k" + std::to_string(c));
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(classes[rng() % k]);
      pred.push_back(rng() % 3 == 0 ? gold.back() : classes[rng() % k]);
    }
    const double lib = macro_f1(gold, pred, classes).macro_f1;
    const double ref = oracle::macro_f1(gold, pred, classes);
    f.expect(std::abs(lib - ref) <= kTol, "macro F1 " + num(lib) + " vs " + num(ref));
    ++macro;
  }

  while (kappa < 250) {
    const std::size_t items = 2 + rng() % 11, raters = 2 + rng() % 5, cats = 2 + rng() % 4;
    CategoricalGrid g(items);
    for (auto& row : g) {
      const std::string anchor = "c" + std::to_string(rng() % cats);
      for (std::size_t r = 0; r < raters; ++r) row.push_back(rng() % 2 ? anchor : "c" + std::to_string(rng() % cats));
    }
    const auto ref = oracle::fleiss_kappa(g);
    if (!ref) continue;
    const double lib = fleiss_kappa(g);
    f.expect(std::abs(lib - *ref) <= kTol, "kappa " + num(lib) + " vs " + num(*ref));
    ++kappa;
  }

  while (icc_checked < 250) {
    const std::size_t n = 2 + rng() % 11, k = 2 + rng() % 5;
    RatingsMatrix x(n, std::vector<double>(k));
    for (auto& row : x) {
      const double base = 1 + rng() % 7;
      for (double& v : row) v = rng() % 3 == 0 ? 1 + rng() % 7 : base;
    }
    for (const bool average : {false, true}) {
      const auto ref = oracle::icc(x, average);
      if (!ref) continue;
      const double lib = icc(x, average ? IccForm::TwoWayRandomAverage : IccForm::TwoWayRandomSingle);
      f.expect(std::abs(lib - *ref) <= kTol, "icc " + num(lib) + " vs " + num(*ref));
      ++icc_checked;
    }
  }
  f.expect(entity >= 200 && macro >= 200 && kappa >= 200 && icc_checked >= 200, "fewer than 200 instances");
}

void perfect_predictions(Findings& f) {
  RatingsMatrix counts;
  for (const auto& d : mini_corpus()) {
    const std::size_t n = d.gold_rules.size();
    const auto e = evaluate_extraction(d, d.gold_rules, d.gold_rules);
    f.expect(e.micro_f1 == 1.0 && e.macro_f1 == 1.0, d.id + ": entity F1 below 1");
    const auto j = eval_judgement(d.gold_rules, d.gold_rules);
    f.expect(j.macro_f1 == 1.0 && j.accuracy == 1.0, d.id + ": judgement macro-F1 below 1");
    const auto gold = gold_predictions(d.gold_dependencies, n);
    for (const bool three : {false, true}) {
      for (const bool present : {false, true}) {
        if (!present && three) continue;
        const auto dep = eval_dependencies(d.gold_dependencies, gold, n, three, present);
        // Averaging over every class scores absent classes 0, so only
        // classes that occur can reach 1.
        if (present) f.expect(dep.macro_f1 == 1.0, d.id + ": dependency macro-F1 below 1");
        f.expect(dep.accuracy == 1.0, d.id + ": dependency accuracy below 1");
      }
    }
    CategoricalGrid labels;
    for (const auto& r : d.gold_rules) {
      const std::string k(judgement_key(r.condition.judgement));
      labels.push_back({k, k});
    }
    f.expect(fleiss_kappa(labels) == 1.0, d.id + ": kappa below 1");
    counts.push_back({static_cast<double>(n), static_cast<double>(n)});
  }
  f.expect(icc(counts) == 1.0 && icc(counts, IccForm::TwoWayRandomSingle) == 1.0, "ICC below 1");
}

void ecommerce_replay(Findings& f) {
  const auto& d = find_document(mini_corpus(), "ecommerce-shopping");
  const auto gold = gold_predictions(d.gold_dependencies, d.gold_rules.size());
  for (const auto& [model, wrong_expected] : std::vector<std::pair<std::string, std::size_t>>{
           {"deepseek-v3", 4}, {"deepseek-r1", 0}}) {
    ReplayBackend replay(fixture("transcripts/" + model + ".jsonl"));
    PipelineOptions o;
    o.model = model;
    const auto r = run_pipeline(d, PromptVariant::ImplicitMapping, replay, o);
    f.expect(r.predictions.size() == 10, model + ": " + std::to_string(r.predictions.size()) + " predictions");
    if (r.predictions.size() != gold.size()) continue;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) wrong += gold[i].kind != r.predictions[i].predicted;
    f.expect(wrong == wrong_expected, model + ": " + std::to_string(wrong) + " mismatches");
    const double acc = eval_dependencies(d.gold_dependencies, prediction_labels(r.predictions), 5).accuracy;
    f.expect(std::abs(acc - (10.0 - static_cast<double>(wrong_expected)) / 10.0) <= kTol,
             model + ": accuracy " + num(acc));
  }
}

void graph_shapes(Findings& f) {
  {
    const auto& d = find_document(dependency_examples(), "currency-purchase");
    const auto g = build_graph(d.gold_rules, d.gold_dependencies).graph;
    f.expect(g.nodes.size() == 3, "banking: " + std::to_string(g.nodes.size()) + " nodes");
    f.expect(g.edges.size() == 2 && g.count(DependencyKind::Sequential) == 2, "banking: not two sequential edges");
    f.expect(g.edges.size() == 2 && g.edges[0].from == 0 && g.edges[0].to == 1 && g.edges[1].from == 1 &&
                 g.edges[1].to == 2,
             "banking: edges do not form a chain");
  }
  {
    const auto& d = find_document(dependency_examples(), "car-rental");
    const auto g = build_graph(d.gold_rules, d.gold_dependencies).graph;
    std::set<std::size_t> sources, targets;
    std::set<std::string> triggers;
    for (const auto& e : g.edges) {
      if (e.kind != DependencyKind::Conditional) continue;
      sources.insert(e.from);
      targets.insert(e.to);
      if (e.trigger) triggers.insert(*e.trigger);
    }
    const bool from_vehicle = sources.size() == 1 && text::ascii_lower(d.gold_rules.at(*sources.begin())
                                                                            .condition.slot_type)
                                                             .find("vehicle") != std::string::npos;
    f.expect(g.count(DependencyKind::Conditional) == 2, "car rental: not two conditional edges");
    f.expect(from_vehicle, "car rental: branches do not leave the vehicle-type node");
    f.expect(targets.size() == 2 && triggers.size() == 2, "car rental: branches are not distinct");
  }
  {
    const auto& d = find_document(dependency_examples(), "course-enrollment");
    const auto g = build_graph(d.gold_rules, d.gold_dependencies).graph;
    f.expect(g.count(DependencyKind::Parallel) == 1, "course: not exactly one parallel edge");
    for (const auto& par : g.edges) {
      if (par.kind != DependencyKind::Parallel) continue;
      std::set<std::size_t> a, b;
      for (const auto& e : g.edges) {
        if (e.kind != DependencyKind::Sequential) continue;
        if (e.from == par.from) a.insert(e.to);
        if (e.from == par.to) b.insert(e.to);
      }
      std::vector<std::size_t> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      f.expect(common.size() == 1, "course: parallel pair has " + std::to_string(common.size()) + " common successors");
    }
  }
}

void determinism(Findings& f) {
  testing::TempDir dir("acceptance");
  for (const std::string variant : {"p1", "p4"}) {
    for (const std::string concurrency : {"1", "8"}) {
      std::ostringstream out, err;
      const int code = cli::run_cli({"--corpus", fixture("mini_corpus.json").string(), "--backend", "replay",
                                     "--transcript", fixture("transcripts/gold-echo.jsonl").string(), "--model",
                                     "gold-echo", "--variant", variant, "--concurrency", concurrency, "--out",
                                     (dir / ("c" + concurrency)).string(), "pipeline"},
                                    out, err);
      f.expect(code == 0, "pipeline exited " + std::to_string(code) + ": " + err.str());
    }
  }
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "c1")) {
    names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  f.expect(names.size() == 12, std::to_string(names.size()) + " output files instead of 12");
  for (const auto& name : names) {
    const auto other = dir / "c8" / name;
    f.expect(std::filesystem::exists(other) && read_file(dir / "c1" / name) == read_file(other), name + " differs");
  }
}

void stats(Findings& f) {
  const CorpusStats s = corpus_stats(mini_corpus());
  CorpusStats hand;
  hand.texts = 3;
  hand.sentences = 20;
  hand.rules = 21;
  hand.tokens = 520;
  hand.judgements = {{LogicalJudgement::Contains, 13},       {LogicalJudgement::EqualTo, 4},
                     {LogicalJudgement::LessThan, 0},       {LogicalJudgement::GreaterThan, 2},
                     {LogicalJudgement::LessThanOrEqual, 2}, {LogicalJudgement::GreaterThanOrEqual, 0}};
  hand.dependencies = {{DependencyKind::Sequential, 16}, {DependencyKind::Conditional, 2}, {DependencyKind::Parallel, 2}};
  f.expect(s == hand, "mini-corpus counts differ from the hand counts");

  std::vector<Document> pool = mini_corpus();
  for (const auto& d : dependency_examples()) pool.push_back(d);
  std::mt19937 rng(31);
  for (int t = 0; t < 200; ++t) {
    std::vector<Document> a, b;
    for (const auto& d : pool) (rng() % 2 ? a : b).push_back(d);
    f.expect(corpus_stats(a) + corpus_stats(b) == corpus_stats(pool), "split " + std::to_string(t) + " not additive");
  }
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;  // 0 means untimed
  std::function<void(Findings&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "rule notation round-trip", 5.0, round_trip},
      {2, "BIO projection of the annotation example", 1.0, bio_example},
      {3, "pair enumeration", 0.0, pair_enumeration},
      {4, "metric oracles", 30.0, metric_oracles},
      {5, "perfect predictions score 1", 0.0, perfect_predictions},
      {6, "e-commerce transcript replay", 2.0, ecommerce_replay},
      {7, "flow graph shapes", 0.0, graph_shapes},
      {8, "determinism across concurrency", 0.0, determinism},
      {9, "corpus statistics", 0.0, stats},
  };
  // Load fixtures up front so the first timed criterion does not pay for it.
  mini_corpus();
  dependency_examples();

  int failures = 0;
  for (const auto& c : criteria) {
    Findings f;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(f);
    } catch (const std::exception& e) {
      f.expect(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && seconds > c.limit_seconds) {
      f.expect(false, "took " + num(seconds) + " s, limit " + num(c.limit_seconds) + " s");
    }
    failures += f.failed() ? 1 : 0;
    std::cout << (f.failed() ? "FAIL" : "PASS") << "  " << c.id << "  " << c.name << "  (" << std::fixed
              << std::setprecision(3) << seconds << " s)" << std::defaultfloat;
    if (f.failed()) std::cout << "  " << f.summary();
    std::cout << "\n";
  }
  return failures == 0 ? 0 : 1;
}
