#pragma once

// Evaluation: strict-span entity F1 over BIO sequences, macro-F1 over
// label confusion matrices, Fleiss' kappa and two-way random ICC.
// Scores are derived from integer counts so that perfect predictions
// yield exactly 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "exide/corpus.hpp"
#include "exide/error.hpp"
#include "exide/flowgraph.hpp"
#include "exide/rule.hpp"
#include "exide/text.hpp"

namespace exide {

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Counts counts;
};

/// P = tp/(tp+fp), R = tp/(tp+fn), each 0 on an empty denominator;
/// F1 = 2tp/(2tp+fp+fn), which equals 2PR/(P+R) and is 0 when P+R = 0.
inline Prf prf(const Counts& c) {
  Prf out;
  out.counts = c;
  if (c.tp + c.fp > 0) out.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) out.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.tp > 0) out.f1 = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
  return out;
}

// ---------------------------------------------------------------- entities

struct Entity {
  std::size_t begin = 0;  // token index, inclusive
  std::size_t end = 0;    // exclusive
  EntityKind kind = EntityKind::SlotType;

  auto operator<=>(const Entity&) const = default;
};

/// Maximal spans of one kind. An I- tag that cannot continue the previous
/// span opens a new one.
inline std::vector<Entity> entities(const std::vector<BioTag>& tags) {
  std::vector<Entity> out;
  std::optional<Entity> open;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const BioTag& t = tags[i];
    const bool continues = t.prefix == BioPrefix::I && open && t.kind == open->kind;
    if (open && !continues) {
      open->end = i;
      out.push_back(*open);
      open.reset();
    }
    if (t.prefix != BioPrefix::O && t.kind && !continues) open = Entity{i, i, *t.kind};
  }
  if (open) {
    open->end = tags.size();
    out.push_back(*open);
  }
  return out;
}

/// Per-kind counts; additive across documents.
struct EntityCounts {
  std::map<EntityKind, Counts> per_kind;

  EntityCounts& operator+=(const EntityCounts& o) {
    for (const auto& [k, c] : o.per_kind) per_kind[k] += c;
    return *this;
  }
};

struct EntityScore {
  /// Kinds occurring in gold or prediction.
  std::map<EntityKind, Prf> per_kind;
  double micro_f1 = 1.0;
  double macro_f1 = 1.0;
};

inline EntityCounts entity_counts(const BioSequence& gold, const BioSequence& pred) {
  if (gold.tags.size() != pred.tags.size()) {
    throw Error(Errc::LengthMismatch,
                std::to_string(gold.tags.size()) + " gold tags vs " + std::to_string(pred.tags.size()) + " predicted");
  }
  const std::vector<Entity> g = entities(gold.tags);
  const std::vector<Entity> p = entities(pred.tags);
  const std::set<Entity> gold_set(g.begin(), g.end());
  EntityCounts out;
  for (const Entity& e : p) {
    if (gold_set.contains(e)) {
      ++out.per_kind[e.kind].tp;
    } else {
      ++out.per_kind[e.kind].fp;
    }
  }
  const std::set<Entity> pred_set(p.begin(), p.end());
  for (const Entity& e : g) {
    if (!pred_set.contains(e)) ++out.per_kind[e.kind].fn;
  }
  return out;
}

/// With no entities on either side every score is 1.
inline EntityScore entity_score(const EntityCounts& counts) {
  EntityScore out;
  Counts pooled;
  double sum = 0.0;
  for (const auto& [kind, c] : counts.per_kind) {
    if (c.tp + c.fp + c.fn == 0) continue;
    out.per_kind[kind] = prf(c);
    sum += out.per_kind[kind].f1;
    pooled += c;
  }
  if (!out.per_kind.empty()) {
    out.micro_f1 = prf(pooled).f1;
    out.macro_f1 = sum / static_cast<double>(out.per_kind.size());
  }
  return out;
}

inline EntityScore entity_f1(const BioSequence& gold, const BioSequence& pred) {
  return entity_score(entity_counts(gold, pred));
}

inline EntityCounts extraction_counts(const Document& document, const std::vector<BusinessRule>& gold_rules,
                                      const std::vector<BusinessRule>& pred_rules) {
  return entity_counts(rules_to_bio(document.text, gold_rules).sequence,
                       rules_to_bio(document.text, pred_rules).sequence);
}

inline EntityScore evaluate_extraction(const Document& document, const std::vector<BusinessRule>& gold_rules,
                                       const std::vector<BusinessRule>& pred_rules) {
  return entity_score(extraction_counts(document, gold_rules, pred_rules));
}

// ---------------------------------------------------------- classification

/// Label used for gold items without a prediction and vice versa. It has a
/// confusion row and column but is never a scored class.
inline constexpr std::string_view kMissing = "MISSING";

/// Rows are gold labels, columns predicted labels. Additive across
/// documents.
class ConfusionMatrix {
 public:
  void add(const std::string& gold, const std::string& pred, std::size_t n = 1) { cells_[{gold, pred}] += n; }

  std::size_t at(const std::string& gold, const std::string& pred) const {
    auto it = cells_.find({gold, pred});
    return it == cells_.end() ? 0 : it->second;
  }

  std::size_t row_sum(const std::string& gold) const {
    std::size_t s = 0;
    for (const auto& [key, n] : cells_) {
      if (key.first == gold) s += n;
    }
    return s;
  }

  std::size_t column_sum(const std::string& pred) const {
    std::size_t s = 0;
    for (const auto& [key, n] : cells_) {
      if (key.second == pred) s += n;
    }
    return s;
  }

  std::size_t total() const {
    std::size_t s = 0;
    for (const auto& [key, n] : cells_) s += n;
    return s;
  }

  std::size_t correct() const {
    std::size_t s = 0;
    for (const auto& [key, n] : cells_) {
      if (key.first == key.second && key.first != kMissing) s += n;
    }
    return s;
  }

  std::set<std::string> labels() const {
    std::set<std::string> out;
    for (const auto& [key, n] : cells_) {
      out.insert(key.first);
      out.insert(key.second);
    }
    return out;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    for (const auto& [key, n] : o.cells_) cells_[key] += n;
    return *this;
  }

 private:
  std::map<std::pair<std::string, std::string>, std::size_t> cells_;
};

struct ClassificationScore {
  std::vector<std::string> classes;
  std::map<std::string, Prf> per_class;
  double macro_f1 = 1.0;
  double accuracy = 1.0;
  /// Row and column order of `confusion`: the classes, then any other label
  /// that occurs (such as MISSING), sorted.
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> confusion;
};

/// One-vs-rest F1 per class, averaged without weights. A class absent from
/// both gold and prediction scores 0, or is left out of the average when
/// `present_only` is set.
inline ClassificationScore score_confusion(const ConfusionMatrix& m, const std::vector<std::string>& class_set,
                                           bool present_only) {
  ClassificationScore out;
  out.classes = class_set;
  std::sort(out.classes.begin(), out.classes.end());
  out.classes.erase(std::unique(out.classes.begin(), out.classes.end()), out.classes.end());

  double sum = 0.0;
  std::size_t averaged = 0;
  for (const std::string& c : out.classes) {
    const std::size_t tp = m.at(c, c);
    const Counts counts{tp, m.column_sum(c) - tp, m.row_sum(c) - tp};
    const bool present = counts.tp + counts.fp + counts.fn > 0;
    out.per_class[c] = prf(counts);
    if (present_only && !present) continue;
    sum += out.per_class[c].f1;
    ++averaged;
  }
  if (averaged > 0) {
    out.macro_f1 = sum / static_cast<double>(averaged);
  } else {
    out.macro_f1 = present_only ? 1.0 : 0.0;
  }
  if (m.total() > 0) out.accuracy = static_cast<double>(m.correct()) / static_cast<double>(m.total());

  out.labels = out.classes;
  for (const std::string& l : m.labels()) {
    if (!std::binary_search(out.classes.begin(), out.classes.end(), l)) out.labels.push_back(l);
  }
  for (const std::string& g : out.labels) {
    std::vector<std::size_t> row;
    for (const std::string& p : out.labels) row.push_back(m.at(g, p));
    out.confusion.push_back(std::move(row));
  }
  return out;
}

inline ClassificationScore macro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                                    const std::vector<std::string>& class_set, bool present_only = false) {
  if (gold.size() != pred.size()) {
    throw Error(Errc::LengthMismatch,
                std::to_string(gold.size()) + " gold labels vs " + std::to_string(pred.size()) + " predicted");
  }
  const std::set<std::string> known(class_set.begin(), class_set.end());
  ConfusionMatrix m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (const std::string* l : {&gold[i], &pred[i]}) {
      if (!known.contains(*l)) throw Error(Errc::UnknownLabel, "'" + *l + "' at item " + std::to_string(i));
    }
    m.add(gold[i], pred[i]);
  }
  return score_confusion(m, class_set, present_only);
}

// ---------------------------------------------------- judgement evaluation

namespace detail {

inline std::vector<std::string> slot_tokens(const BusinessRule& r) {
  std::vector<std::string> out;
  for (const Token& t : tokenize(text::normalize(r.condition.slot_type))) out.push_back(t.text);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::size_t overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return common.size();
}

}  // namespace detail

/// For each gold rule, the index of the predicted rule paired with it.
/// First pass: the first unpaired prediction with the same normalized slot
/// type, gold rules in order. Second pass: the unpaired prediction sharing
/// the most slot-type tokens (at least one), earliest on ties.
inline std::vector<std::optional<std::size_t>> align_rules(const std::vector<BusinessRule>& gold,
                                                           const std::vector<BusinessRule>& pred) {
  std::vector<std::optional<std::size_t>> out(gold.size());
  std::vector<bool> used(pred.size(), false);
  std::vector<std::string> pred_slots;
  for (const auto& p : pred) pred_slots.push_back(text::normalize(p.condition.slot_type));

  for (std::size_t g = 0; g < gold.size(); ++g) {
    const std::string slot = text::normalize(gold[g].condition.slot_type);
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (!used[p] && pred_slots[p] == slot) {
        out[g] = p;
        used[p] = true;
        break;
      }
    }
  }

  std::vector<std::vector<std::string>> pred_tokens;
  for (const auto& p : pred) pred_tokens.push_back(detail::slot_tokens(p));
  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (out[g]) continue;
    const auto tokens = detail::slot_tokens(gold[g]);
    std::size_t best = 0;
    std::optional<std::size_t> pick;
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (used[p]) continue;
      const std::size_t n = detail::overlap(tokens, pred_tokens[p]);
      if (n > best) {
        best = n;
        pick = p;
      }
    }
    if (pick) {
      out[g] = pick;
      used[*pick] = true;
    }
  }
  return out;
}

inline std::vector<std::string> judgement_classes() {
  std::vector<std::string> out;
  for (LogicalJudgement j : kAllJudgements) out.emplace_back(judgement_key(j));
  return out;
}

inline ConfusionMatrix judgement_confusion(const std::vector<BusinessRule>& gold,
                                           const std::vector<BusinessRule>& pred) {
  const auto alignment = align_rules(gold, pred);
  ConfusionMatrix m;
  std::vector<bool> used(pred.size(), false);
  const std::string missing(kMissing);
  for (std::size_t g = 0; g < gold.size(); ++g) {
    const std::string gold_label(judgement_key(gold[g].condition.judgement));
    if (alignment[g]) {
      used[*alignment[g]] = true;
      m.add(gold_label, std::string(judgement_key(pred[*alignment[g]].condition.judgement)));
    } else {
      m.add(gold_label, missing);
    }
  }
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (!used[p]) m.add(missing, std::string(judgement_key(pred[p].condition.judgement)));
  }
  return m;
}

inline ClassificationScore eval_judgement(const std::vector<BusinessRule>& gold, const std::vector<BusinessRule>& pred,
                                          bool present_only = true) {
  return score_confusion(judgement_confusion(gold, pred), judgement_classes(), present_only);
}

// --------------------------------------------------- dependency evaluation

inline constexpr std::string_view kNoDependency = "no";

inline std::string dependency_label(const std::optional<DependencyKind>& k) {
  return k ? std::string(dependency_name(*k)) : std::string(kNoDependency);
}

inline std::vector<std::string> dependency_classes(bool three_class = false) {
  std::vector<std::string> out;
  for (DependencyKind k : kAllDependencyKinds) out.emplace_back(dependency_name(k));
  if (!three_class) out.emplace_back(kNoDependency);
  return out;
}

/// Type-only comparison over every unordered pair; unannotated gold pairs
/// are "no". With `three_class`, only annotated gold pairs are scored.
/// `predictions` must hold each pair a < b < n_rules exactly once, in
/// either orientation.
inline ConfusionMatrix dependency_confusion(const std::vector<DependencyLabel>& gold,
                                            const std::vector<PairLabel>& predictions, std::size_t n_rules,
                                            bool three_class = false) {
  std::map<std::pair<std::size_t, std::size_t>, std::string> predicted;
  for (const PairLabel& p : predictions) {
    const auto key = std::minmax(p.from, p.to);
    if (key.first == key.second || key.second >= n_rules) {
      throw Error(Errc::PairCoverage, "pair (" + std::to_string(p.from) + ", " + std::to_string(p.to) +
                                          ") is not a pair of " + std::to_string(n_rules) + " rules");
    }
    if (!predicted.emplace(key, dependency_label(p.kind)).second) {
      throw Error(Errc::PairCoverage,
                  "pair (" + std::to_string(key.first) + ", " + std::to_string(key.second) + ") predicted twice");
    }
  }
  const std::size_t expected = n_rules < 2 ? 0 : n_rules * (n_rules - 1) / 2;
  if (predicted.size() != expected) {
    throw Error(Errc::PairCoverage,
                std::to_string(predicted.size()) + " predicted pairs, expected " + std::to_string(expected));
  }

  std::map<std::pair<std::size_t, std::size_t>, std::string> annotated;
  for (const DependencyLabel& l : gold) {
    annotated.emplace(std::minmax(l.from, l.to), std::string(dependency_name(l.kind)));
  }
  ConfusionMatrix m;
  for (const auto& [key, label] : predicted) {
    auto it = annotated.find(key);
    if (it != annotated.end()) {
      m.add(it->second, label);
    } else if (!three_class) {
      m.add(std::string(kNoDependency), label);
    }
  }
  return m;
}

inline ClassificationScore eval_dependencies(const std::vector<DependencyLabel>& gold,
                                             const std::vector<PairLabel>& predictions, std::size_t n_rules,
                                             bool three_class = false, bool present_only = true) {
  return score_confusion(dependency_confusion(gold, predictions, n_rules, three_class),
                         dependency_classes(three_class), present_only);
}

/// The prediction list that agrees with the gold annotation on every pair.
inline std::vector<PairLabel> gold_predictions(const std::vector<DependencyLabel>& gold, std::size_t n_rules) {
  std::map<std::pair<std::size_t, std::size_t>, const DependencyLabel*> annotated;
  for (const auto& l : gold) annotated.emplace(std::minmax(l.from, l.to), &l);
  std::vector<PairLabel> out;
  for (std::size_t a = 0; a < n_rules; ++a) {
    for (std::size_t b = a + 1; b < n_rules; ++b) {
      auto it = annotated.find({a, b});
      if (it == annotated.end()) {
        out.push_back({a, b, std::nullopt, std::nullopt});
      } else {
        out.push_back({a, b, it->second->kind, it->second->trigger});
      }
    }
  }
  return out;
}

/// Moves predictions over predicted-rule indices onto gold indices. A gold
/// pair whose rules were not both aligned gets "no".
inline std::vector<PairLabel> align_predictions(const std::vector<std::optional<std::size_t>>& alignment,
                                                const std::vector<PairLabel>& predicted) {
  std::map<std::pair<std::size_t, std::size_t>, std::optional<DependencyKind>> by_pair;
  for (const auto& p : predicted) by_pair.emplace(std::minmax(p.from, p.to), p.kind);
  std::vector<PairLabel> out;
  const std::size_t n = alignment.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      PairLabel l{a, b, std::nullopt, std::nullopt};
      if (alignment[a] && alignment[b]) {
        auto it = by_pair.find(std::minmax(*alignment[a], *alignment[b]));
        if (it != by_pair.end()) l.kind = it->second;
      }
      out.push_back(l);
    }
  }
  return out;
}

// ------------------------------------------------------------- agreement

/// items × raters category labels.
using CategoricalGrid = std::vector<std::vector<std::string>>;
/// subjects × raters numeric ratings.
using RatingsMatrix = std::vector<std::vector<double>>;

/// κ = (P̄ − P̄e) / (1 − P̄e). Exactly 1 when every item is unanimous.
inline double fleiss_kappa(const CategoricalGrid& grid) {
  if (grid.size() < 2) throw Error(Errc::DegenerateGrid, "at least 2 items are required");
  const std::size_t raters = grid.front().size();
  if (raters < 2) throw Error(Errc::DegenerateGrid, "at least 2 raters are required");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].size() != raters) {
      throw Error(Errc::DegenerateGrid, "item " + std::to_string(i) + " has " + std::to_string(grid[i].size()) +
                                            " ratings, expected " + std::to_string(raters));
    }
  }

  std::map<std::string, std::size_t> marginal;
  std::size_t agreeing_pairs = 0;  // Σ_i Σ_j n_ij (n_ij − 1)
  for (const auto& item : grid) {
    std::map<std::string, std::size_t> n;
    for (const auto& label : item) ++n[label];
    for (const auto& [label, count] : n) {
      agreeing_pairs += count * (count - 1);
      marginal[label] += count;
    }
  }
  const std::size_t items = grid.size();
  const std::size_t all_pairs = items * raters * (raters - 1);
  if (agreeing_pairs == all_pairs) return 1.0;

  const double p_bar = static_cast<double>(agreeing_pairs) / static_cast<double>(all_pairs);
  const double total = static_cast<double>(items * raters);
  double p_e = 0.0;
  for (const auto& [label, count] : marginal) {
    const double p = static_cast<double>(count) / total;
    p_e += p * p;
  }
  if (1.0 - p_e == 0.0) throw Error(Errc::DegenerateGrid, "chance agreement is 1; kappa is undefined");
  return (p_bar - p_e) / (1.0 - p_e);
}

enum class IccForm { TwoWayRandomSingle, TwoWayRandomAverage };

constexpr std::string_view icc_form_name(IccForm f) noexcept {
  return f == IccForm::TwoWayRandomSingle ? "ICC(2,1)" : "ICC(2,k)";
}

/// Two-way random effects, absolute agreement. Exactly 1 when all raters
/// give identical ratings to every subject and subjects differ.
inline double icc(const RatingsMatrix& ratings, IccForm form = IccForm::TwoWayRandomAverage) {
  const std::size_t n = ratings.size();
  if (n < 2) throw Error(Errc::DegenerateMatrix, "at least 2 subjects are required");
  const std::size_t k = ratings.front().size();
  if (k < 2) throw Error(Errc::DegenerateMatrix, "at least 2 raters are required");
  for (std::size_t i = 0; i < n; ++i) {
    if (ratings[i].size() != k) {
      throw Error(Errc::DegenerateMatrix, "subject " + std::to_string(i) + " has " +
                                              std::to_string(ratings[i].size()) + " ratings, expected " +
                                              std::to_string(k));
    }
  }

  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += ratings[i][j];
      col_mean[j] += ratings[i][j];
      grand += ratings[i][j];
    }
  }
  for (double& m : row_mean) m /= static_cast<double>(k);
  for (double& m : col_mean) m /= static_cast<double>(n);
  grand /= static_cast<double>(n * k);

  double ss_total = 0.0, ss_rows = 0.0, ss_cols = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) ss_total += (ratings[i][j] - grand) * (ratings[i][j] - grand);
  }
  for (double m : row_mean) ss_rows += (m - grand) * (m - grand);
  ss_rows *= static_cast<double>(k);
  for (double m : col_mean) ss_cols += (m - grand) * (m - grand);
  ss_cols *= static_cast<double>(n);
  const double ss_error = std::max(0.0, ss_total - ss_rows - ss_cols);

  const double ms_rows = ss_rows / static_cast<double>(n - 1);
  const double ms_cols = ss_cols / static_cast<double>(k - 1);
  const double ms_error = ss_error / static_cast<double>((n - 1) * (k - 1));

  const bool unanimous = std::all_of(ratings.begin(), ratings.end(), [](const std::vector<double>& row) {
    return std::all_of(row.begin(), row.end(), [&](double x) { return x == row.front(); });
  });
  const bool subjects_differ = std::any_of(ratings.begin(), ratings.end(),
                                           [&](const std::vector<double>& row) { return row[0] != ratings[0][0]; });
  if (unanimous && !subjects_differ) throw Error(Errc::DegenerateMatrix, "all ratings are identical");
  if (unanimous) return 1.0;

  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  const double denominator = form == IccForm::TwoWayRandomSingle
                                 ? ms_rows + (kd - 1.0) * ms_error + kd * (ms_cols - ms_error) / nd
                                 : ms_rows + (ms_cols - ms_error) / nd;
  // Cancellation can leave a tiny nonzero residue where the exact value is 0.
  const double scale = ms_rows + ms_cols + ms_error;
  if (std::abs(denominator) <= 1e-12 * scale) throw Error(Errc::DegenerateMatrix, "zero denominator");
  return (ms_rows - ms_error) / denominator;
}

// ------------------------------------------------------------ reporting

inline nlohmann::json prf_to_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
          {"tp", p.counts.tp},        {"fp", p.counts.fp},  {"fn", p.counts.fn}};
}

inline nlohmann::json entity_score_to_json(const EntityScore& s) {
  nlohmann::json per_kind = nlohmann::json::object();
  for (const auto& [kind, p] : s.per_kind) per_kind[std::string(entity_name(kind))] = prf_to_json(p);
  return {{"per_kind", per_kind}, {"micro_f1", s.micro_f1}, {"macro_f1", s.macro_f1}};
}

inline nlohmann::json classification_to_json(const ClassificationScore& s) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, p] : s.per_class) per_class[label] = prf_to_json(p);
  return {{"classes", s.classes},   {"per_class", per_class}, {"macro_f1", s.macro_f1},
          {"accuracy", s.accuracy}, {"labels", s.labels},     {"confusion", s.confusion}};
}

/// Header row "gold\pred,<labels>", then one row per gold label.
inline std::string confusion_to_csv(const ClassificationScore& s) {
  std::ostringstream out;
  out << "gold\\pred";
  for (const auto& l : s.labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    out << s.labels[i];
    for (std::size_t n : s.confusion[i]) out << ',' << n;
    out << '\n';
  }
  return out.str();
}

}  // namespace exide
