#pragma once

// Test-only helpers: fixture paths, random generators and brute-force
// reference implementations of the metrics. The oracles deliberately take a
// different computational route from the library.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "exide/corpus.hpp"
#include "exide/rule.hpp"

namespace exide::testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(EXIDE_FIXTURES) / name; }

inline const std::vector<Document>& mini_corpus() {
  static const std::vector<Document> docs = load_corpus(fixture("mini_corpus.json"));
  return docs;
}

inline const std::vector<Document>& dependency_examples() {
  static const std::vector<Document> docs = load_corpus(fixture("dependency_examples.json"));
  return docs;
}

inline const Document& find_document(const std::vector<Document>& docs, const std::string& id) {
  for (const auto& d : docs) {
    if (d.id == id) return d;
  }
  throw std::runtime_error("no fixture document " + id);
}

/// A scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("exide-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// ------------------------------------------------------------- generators

class RuleGenerator {
 public:
  explicit RuleGenerator(std::uint32_t seed) : rng_(seed) {}

  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  std::string phrase(std::size_t max_words) {
    static const std::vector<std::string> words{
        "flight", "type",  "passenger", "amount", "Deposit", "account", "RMB",  "USD",    "payment", "method",
        "e-mail", "ID",    "card",      "VIP",    "store",   "cash/remittance", "age",  "group",  "币种",    "存款",
        "金额",   "x2",    "step-3",    "Ltd.",   "A&B",     "50%",   "(optional)", "O'Neil", "航班",    "type:"};
    std::string out;
    const std::size_t n = 1 + index(max_words);
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out += " ";
      out += words[index(words.size())];
    }
    return out;
  }

  NumericReference number() {
    static const std::vector<std::string> prefixes{"", "USD ", "RMB ", "equivalent of USD ", "¥"};
    static const std::vector<std::string> suffixes{"", " days", " per day", "%", " hours", " 元", " years old"};
    std::string digits = std::to_string(1 + index(999));
    if (coin(0.3)) digits += "," + std::to_string(100 + index(900));
    if (coin(0.3)) digits += "." + std::to_string(index(100));
    const std::string text = prefixes[index(prefixes.size())] + digits + suffixes[index(suffixes.size())];
    return *NumericReference::from_text(text);
  }

  BusinessRule rule() {
    for (;;) {
      BusinessRule r;
      r.condition.slot_type = phrase(4);
      r.condition.judgement = kAllJudgements[index(kAllJudgements.size())];
      if (is_comparison(r.condition.judgement)) {
        r.condition.reference = ReferenceValues::numeric(number());
      } else {
        std::vector<std::string> values;
        const std::size_t n = 1 + index(5);
        for (std::size_t i = 0; i < n; ++i) values.push_back(phrase(3));
        r.condition.reference = ReferenceValues::enumeration(std::move(values));
      }
      if (coin(0.8)) {
        std::string action = phrase(6);
        if (coin(0.3)) action += ", then " + phrase(3);
        r.action = action;
      }
      if (validate_rule(r).empty()) return r;
    }
  }

  std::mt19937& engine() { return rng_; }

 private:
  std::mt19937 rng_;
};

// ---------------------------------------------------------------- oracles

namespace oracle {

struct Span {
  std::size_t begin, end;
  EntityKind kind;
  bool operator==(const Span&) const = default;
};

inline bool tag_is(const BioTag& t, BioPrefix p, EntityKind k) { return t.prefix == p && t.kind == k; }

// Every [b, e) that a conlleval-style reader would report as one entity.
inline std::vector<Span> all_spans(const std::vector<BioTag>& tags) {
  std::vector<Span> out;
  const std::size_t n = tags.size();
  for (EntityKind k : kAllEntityKinds) {
    for (std::size_t b = 0; b < n; ++b) {
      const bool opens = tag_is(tags[b], BioPrefix::B, k) ||
                         (tag_is(tags[b], BioPrefix::I, k) &&
                          (b == 0 || tags[b - 1].prefix == BioPrefix::O || tags[b - 1].kind != k));
      if (!opens) continue;
      for (std::size_t e = b + 1; e <= n; ++e) {
        bool inside = true;
        for (std::size_t t = b + 1; t < e; ++t) inside = inside && tag_is(tags[t], BioPrefix::I, k);
        const bool closes = e == n || !tag_is(tags[e], BioPrefix::I, k);
        if (inside && closes) out.push_back({b, e, k});
      }
    }
  }
  return out;
}

struct EntityResult {
  double micro = 1.0;
  double macro = 1.0;
  std::map<EntityKind, double> f1;
};

inline double f1_from(double tp, double n_pred, double n_gold) {
  const double p = n_pred > 0 ? tp / n_pred : 0.0;
  const double r = n_gold > 0 ? tp / n_gold : 0.0;
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

inline EntityResult entity_f1(const std::vector<BioTag>& gold, const std::vector<BioTag>& pred) {
  const auto g = all_spans(gold);
  const auto p = all_spans(pred);
  EntityResult out;
  double tp_all = 0, g_all = 0, p_all = 0, sum = 0;
  int kinds = 0;
  for (EntityKind k : kAllEntityKinds) {
    double tp = 0, ng = 0, np = 0;
    for (const Span& s : g) {
      if (s.kind != k) continue;
      ++ng;
      for (const Span& t : p) tp += (s == t) ? 1 : 0;
    }
    for (const Span& t : p) np += t.kind == k ? 1 : 0;
    if (ng + np == 0) continue;
    out.f1[k] = f1_from(tp, np, ng);
    sum += out.f1[k];
    ++kinds;
    tp_all += tp;
    g_all += ng;
    p_all += np;
  }
  if (kinds > 0) {
    out.micro = f1_from(tp_all, p_all, g_all);
    out.macro = sum / kinds;
  }
  return out;
}

/// Unweighted mean over `classes` of one-vs-rest F1, absent classes as 0.
inline double macro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                       const std::vector<std::string>& classes) {
  double sum = 0;
  for (const auto& c : classes) {
    double tp = 0, np = 0, ng = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      tp += gold[i] == c && pred[i] == c;
      np += pred[i] == c;
      ng += gold[i] == c;
    }
    sum += f1_from(tp, np, ng);
  }
  return classes.empty() ? 0.0 : sum / static_cast<double>(classes.size());
}

/// Textbook form: P_i = (Σ_j n_ij² − n) / (n(n − 1)).
inline std::optional<double> fleiss_kappa(const std::vector<std::vector<std::string>>& grid) {
  const double N = static_cast<double>(grid.size());
  const double n = static_cast<double>(grid.front().size());
  std::set<std::string> categories;
  for (const auto& row : grid) categories.insert(row.begin(), row.end());
  double p_bar = 0, p_e = 0;
  for (const auto& c : categories) {
    double column = 0;
    for (const auto& row : grid) {
      double n_ij = 0;
      for (const auto& x : row) n_ij += x == c;
      column += n_ij;
    }
    p_e += (column / (N * n)) * (column / (N * n));
  }
  for (const auto& row : grid) {
    double squares = 0;
    for (const auto& c : categories) {
      double n_ij = 0;
      for (const auto& x : row) n_ij += x == c;
      squares += n_ij * n_ij;
    }
    p_bar += (squares - n) / (n * (n - 1)) / N;
  }
  if (p_bar == 1.0) return 1.0;
  if (std::abs(1 - p_e) < 1e-15) return std::nullopt;
  return (p_bar - p_e) / (1 - p_e);
}

/// Two-way random ICC from the residual sum of squares. nullopt when the
/// library is expected to reject the matrix.
inline std::optional<double> icc(const std::vector<std::vector<double>>& x, bool average) {
  const std::size_t n = x.size(), k = x.front().size();
  std::vector<double> row(n, 0), col(k, 0);
  double grand = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      row[i] += x[i][j] / static_cast<double>(k);
      col[j] += x[i][j] / static_cast<double>(n);
      grand += x[i][j] / static_cast<double>(n * k);
    }
  }
  double sse = 0, ssr = 0, ssc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double e = x[i][j] - row[i] - col[j] + grand;
      sse += e * e;
    }
  }
  for (double r : row) ssr += static_cast<double>(k) * (r - grand) * (r - grand);
  for (double c : col) ssc += static_cast<double>(n) * (c - grand) * (c - grand);
  const double msr = ssr / static_cast<double>(n - 1);
  const double msc = ssc / static_cast<double>(k - 1);
  const double mse = sse / static_cast<double>((n - 1) * (k - 1));
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  const double denom = average ? msr + (msc - mse) / nd : msr + (kd - 1) * mse + kd * (msc - mse) / nd;
  if (std::abs(denom) < 1e-12) return std::nullopt;
  return (msr - mse) / denom;
}

}  // namespace oracle

// Random BIO tag sequences, deliberately including ill-formed I- starts.
inline std::vector<BioTag> random_tags(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<int> pick(0, 6);
  std::vector<BioTag> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int v = pick(rng);
    if (v == 0 || v == 1) {
      out.push_back(BioTag::outside());
    } else {
      const EntityKind k = kAllEntityKinds[static_cast<std::size_t>(v - 2) % 3];
      out.push_back(v < 5 ? BioTag::begin(k) : BioTag::inside(k));
    }
  }
  return out;
}

}  // namespace exide::testing
