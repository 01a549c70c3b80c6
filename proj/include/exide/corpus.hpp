#pragma once

// Annotated documents: JSON persistence, tokenization, projection of rules
// onto BIO tags, and corpus statistics.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "exide/error.hpp"
#include "exide/rule.hpp"
#include "exide/text.hpp"

namespace exide {

enum class DependencyKind { Sequential, Conditional, Parallel };

inline constexpr std::array<DependencyKind, 3> kAllDependencyKinds{
    DependencyKind::Sequential, DependencyKind::Conditional, DependencyKind::Parallel};

constexpr std::string_view dependency_name(DependencyKind k) noexcept {
  switch (k) {
    case DependencyKind::Sequential: return "sequential";
    case DependencyKind::Conditional: return "conditional";
    case DependencyKind::Parallel: return "parallel";
  }
  return "";
}

inline std::optional<DependencyKind> parse_dependency_kind(std::string_view s) {
  const std::string k = text::normalize(s);
  for (DependencyKind d : kAllDependencyKinds) {
    if (k == dependency_name(d)) return d;
  }
  return std::nullopt;
}

/// A typed relation between two rules of one document. `trigger` names the
/// reference value selecting a conditional branch.
struct DependencyLabel {
  std::size_t from = 0;
  std::size_t to = 0;
  DependencyKind kind = DependencyKind::Sequential;
  std::optional<std::string> trigger;

  bool operator==(const DependencyLabel&) const = default;
};

enum class DocumentSource { Collected, Synthetic };

struct CharRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const CharRange&) const = default;
};

struct Document {
  std::string id;
  std::string domain;
  DocumentSource source = DocumentSource::Collected;
  std::string text;
  std::optional<std::vector<CharRange>> sentences;
  std::vector<BusinessRule> gold_rules;
  std::vector<DependencyLabel> gold_dependencies;

  bool operator==(const Document&) const = default;
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(Errc::Schema, path + ": " + what);
}

inline const nlohmann::json& require(const nlohmann::json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "/" + key, "missing");
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const std::string& path, const char* key) {
  const auto& v = require(obj, path, key);
  if (!v.is_string()) schema_error(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

inline std::optional<std::string> optional_string(const nlohmann::json& obj, const std::string& path,
                                                  const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_error(path + "/" + key, "expected a string or null");
  return it->get<std::string>();
}

inline std::size_t require_index(const nlohmann::json& obj, const std::string& path, const char* key) {
  const auto& v = require(obj, path, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) schema_error(path + "/" + key, "expected an index");
  return v.get<std::size_t>();
}

}  // namespace detail

inline nlohmann::json rule_to_json(const BusinessRule& rule) {
  nlohmann::json reference;
  if (rule.condition.reference.kind() == ReferenceKind::Enumeration) {
    reference = {{"kind", "enumeration"}, {"values", rule.condition.reference.values()}};
  } else {
    const NumericReference& n = rule.condition.reference.number();
    reference = {{"kind", "numeric"},
                 {"values",
                  {{"value", n.value},
                   {"unit", n.unit ? nlohmann::json(*n.unit) : nlohmann::json(nullptr)},
                   {"text", n.text}}}};
  }
  return {{"condition",
           {{"slot_type", rule.condition.slot_type},
            {"judgement", canonical_surface(rule.condition.judgement)},
            {"reference", reference}}},
          {"action", rule.action ? nlohmann::json(*rule.action) : nlohmann::json(nullptr)}};
}

inline BusinessRule rule_from_json(const nlohmann::json& j, const std::string& path) {
  BusinessRule rule;
  const auto& cond = detail::require(j, path, "condition");
  const std::string cpath = path + "/condition";
  rule.condition.slot_type = detail::require_string(cond, cpath, "slot_type");
  try {
    rule.condition.judgement = canonicalize_judgement(detail::require_string(cond, cpath, "judgement"));
  } catch (const Error& e) {
    detail::schema_error(cpath + "/judgement", e.what());
  }

  const auto& ref = detail::require(cond, cpath, "reference");
  const std::string rpath = cpath + "/reference";
  const std::string kind = detail::require_string(ref, rpath, "kind");
  const auto& values = detail::require(ref, rpath, "values");
  if (kind == "enumeration") {
    if (!values.is_array()) detail::schema_error(rpath + "/values", "expected an array of strings");
    std::vector<std::string> list;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!values[i].is_string()) detail::schema_error(rpath + "/values/" + std::to_string(i), "expected a string");
      list.push_back(values[i].get<std::string>());
    }
    rule.condition.reference = ReferenceValues::enumeration(std::move(list));
  } else if (kind == "numeric") {
    const std::string vpath = rpath + "/values";
    if (!values.is_object()) detail::schema_error(vpath, "expected {value, unit}");
    const std::string value = detail::require_string(values, vpath, "value");
    const auto unit = detail::optional_string(values, vpath, "unit");
    const auto verbatim = detail::optional_string(values, vpath, "text");
    const std::string source = verbatim ? *verbatim : (unit ? value + " " + *unit : value);
    auto number = NumericReference::from_text(source);
    if (!number || number->value != value || number->unit != unit) {
      detail::schema_error(vpath, "value/unit are inconsistent with '" + source + "'");
    }
    rule.condition.reference = ReferenceValues::numeric(std::move(*number));
  } else {
    detail::schema_error(rpath + "/kind", "expected \"enumeration\" or \"numeric\"");
  }
  rule.action = detail::optional_string(j, path, "action");
  return rule;
}

inline nlohmann::json document_to_json(const Document& d) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : d.gold_rules) rules.push_back(rule_to_json(r));
  nlohmann::json deps = nlohmann::json::array();
  for (const auto& l : d.gold_dependencies) {
    deps.push_back({{"from", l.from},
                    {"to", l.to},
                    {"kind", dependency_name(l.kind)},
                    {"trigger", l.trigger ? nlohmann::json(*l.trigger) : nlohmann::json(nullptr)}});
  }
  nlohmann::json out = {{"id", d.id},
                        {"domain", d.domain},
                        {"source", d.source == DocumentSource::Collected ? "collected" : "synthetic"},
                        {"text", d.text},
                        {"rules", rules},
                        {"dependencies", deps}};
  if (d.sentences) {
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& r : *d.sentences) ranges.push_back({r.begin, r.end});
    out["sentences"] = ranges;
  }
  return out;
}

/// Reports violated document invariants as InvariantError(doc_id, detail).
inline void check_document(const Document& d) {
  auto fail = [&](const std::string& what) { throw Error(Errc::Invariant, d.id + ": " + what); };
  const std::size_t n = d.gold_rules.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (const Violation& v : validate_rule(d.gold_rules[i])) {
      if (v.kind == ViolationKind::NonCanonicalText) continue;  // notation-only concern
      fail("rules[" + std::to_string(i) + "]." + v.field + ": " + std::string(violation_name(v.kind)));
    }
  }
  for (std::size_t i = 0; i < d.gold_dependencies.size(); ++i) {
    const auto& l = d.gold_dependencies[i];
    const std::string where = "dependencies[" + std::to_string(i) + "]";
    if (l.from >= n || l.to >= n) fail(where + " references a rule index outside [0, " + std::to_string(n) + ")");
    if (l.from == l.to) fail(where + " relates a rule to itself");
    if (l.trigger && l.kind != DependencyKind::Conditional) fail(where + " has a trigger but is not conditional");
  }
  if (d.sentences) {
    for (const auto& r : *d.sentences) {
      if (r.begin > r.end || r.end > d.text.size()) fail("sentence range outside the text");
    }
  }
}

inline Document document_from_json(const nlohmann::json& j, const std::string& path) {
  Document d;
  d.id = detail::require_string(j, path, "id");
  d.domain = detail::require_string(j, path, "domain");
  const std::string source = detail::require_string(j, path, "source");
  if (source == "collected") {
    d.source = DocumentSource::Collected;
  } else if (source == "synthetic") {
    d.source = DocumentSource::Synthetic;
  } else {
    detail::schema_error(path + "/source", "expected \"collected\" or \"synthetic\"");
  }
  d.text = detail::require_string(j, path, "text");

  const auto& rules = detail::require(j, path, "rules");
  if (!rules.is_array()) detail::schema_error(path + "/rules", "expected an array");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    d.gold_rules.push_back(rule_from_json(rules[i], path + "/rules/" + std::to_string(i)));
  }

  const auto& deps = detail::require(j, path, "dependencies");
  if (!deps.is_array()) detail::schema_error(path + "/dependencies", "expected an array");
  for (std::size_t i = 0; i < deps.size(); ++i) {
    const std::string dpath = path + "/dependencies/" + std::to_string(i);
    DependencyLabel l;
    l.from = detail::require_index(deps[i], dpath, "from");
    l.to = detail::require_index(deps[i], dpath, "to");
    const auto kind = parse_dependency_kind(detail::require_string(deps[i], dpath, "kind"));
    if (!kind) detail::schema_error(dpath + "/kind", "expected sequential, conditional or parallel");
    l.kind = *kind;
    l.trigger = detail::optional_string(deps[i], dpath, "trigger");
    d.gold_dependencies.push_back(std::move(l));
  }

  if (auto it = j.find("sentences"); it != j.end() && !it->is_null()) {
    std::vector<CharRange> ranges;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& r = (*it)[i];
      if (!r.is_array() || r.size() != 2 || !r[0].is_number_unsigned() || !r[1].is_number_unsigned()) {
        detail::schema_error(path + "/sentences/" + std::to_string(i), "expected [begin, end]");
      }
      ranges.push_back({r[0].get<std::size_t>(), r[1].get<std::size_t>()});
    }
    d.sentences = std::move(ranges);
  }
  return d;
}

inline std::vector<Document> corpus_from_json(const nlohmann::json& j) {
  if (!j.is_array()) detail::schema_error("", "a corpus is a JSON array of documents");
  std::vector<Document> docs;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Document d = document_from_json(j[i], "/" + std::to_string(i));
    if (!ids.insert(d.id).second) throw Error(Errc::Invariant, d.id + ": duplicate document id");
    check_document(d);
    docs.push_back(std::move(d));
  }
  return docs;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::Io, "cannot read " + path.string());
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
}

inline nlohmann::json parse_json(std::string_view content, const std::string& origin) {
  try {
    return nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::Schema, origin + ": " + e.what());
  }
}

inline std::vector<Document> load_corpus(const std::filesystem::path& path) {
  return corpus_from_json(parse_json(read_file(path), path.string()));
}

inline void save_corpus(const std::vector<Document>& docs, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& d : docs) j.push_back(document_to_json(d));
  write_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Tokenization

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

/// Every CJK character and every punctuation mark is a token; other letters
/// and digits group into words. Whitespace separates and is never covered.
inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  const auto cps = text::decode(s);
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i].value;
    if (text::is_space(c)) {
      ++i;
      continue;
    }
    const std::size_t begin = cps[i].offset;
    std::size_t j = i + 1;
    if (text::is_word(c)) {
      while (j < cps.size() && text::is_word(cps[j].value)) ++j;
    }
    const std::size_t end = cps[j - 1].offset + cps[j - 1].length;
    out.push_back({std::string(s.substr(begin, end - begin)), begin, end});
    i = j;
  }
  return out;
}

/// Segments on 。！？ and on . ! ? followed by whitespace or the end of text;
/// returns the number of segments holding any non-whitespace character.
inline std::size_t count_sentences(std::string_view s) {
  const auto cps = text::decode(s);
  std::size_t count = 0;
  bool content = false;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i].value;
    if (!text::is_space(c)) content = true;
    const bool cjk_stop = c == U'。' || c == U'！' || c == U'？';
    const bool ascii_stop =
        (c == '.' || c == '!' || c == '?') && (i + 1 == cps.size() || text::is_space(cps[i + 1].value));
    if ((cjk_stop || ascii_stop) && content) {
      ++count;
      content = false;
    }
  }
  return count + (content ? 1 : 0);
}

// ---------------------------------------------------------------------------
// BIO projection

enum class EntityKind { SlotType, ReferenceValue, Action };

inline constexpr std::array<EntityKind, 3> kAllEntityKinds{EntityKind::SlotType, EntityKind::ReferenceValue,
                                                           EntityKind::Action};

constexpr std::string_view entity_name(EntityKind k) noexcept {
  switch (k) {
    case EntityKind::SlotType: return "SlotType";
    case EntityKind::ReferenceValue: return "ReferenceValue";
    case EntityKind::Action: return "Action";
  }
  return "";
}

enum class BioPrefix { B, I, O };

struct BioTag {
  BioPrefix prefix = BioPrefix::O;
  std::optional<EntityKind> kind;

  static BioTag outside() { return {}; }
  static BioTag begin(EntityKind k) { return {BioPrefix::B, k}; }
  static BioTag inside(EntityKind k) { return {BioPrefix::I, k}; }

  bool operator==(const BioTag&) const = default;
};

inline std::string tag_string(const BioTag& t) {
  if (t.prefix == BioPrefix::O || !t.kind) return "O";
  return std::string(t.prefix == BioPrefix::B ? "B-" : "I-") + std::string(entity_name(*t.kind));
}

inline std::optional<BioTag> parse_tag(std::string_view s) {
  if (s == "O") return BioTag::outside();
  if (s.size() < 3 || s[1] != '-' || (s[0] != 'B' && s[0] != 'I')) return std::nullopt;
  for (EntityKind k : kAllEntityKinds) {
    if (s.substr(2) == entity_name(k)) return BioTag{s[0] == 'B' ? BioPrefix::B : BioPrefix::I, k};
  }
  return std::nullopt;
}

struct BioSequence {
  std::vector<std::string> tokens;
  std::vector<BioTag> tags;

  bool operator==(const BioSequence&) const = default;

  /// Equal lengths and no I- tag after O or after a tag of another kind.
  bool is_well_formed() const {
    if (tokens.size() != tags.size()) return false;
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (tags[i].prefix != BioPrefix::O && !tags[i].kind) return false;
      if (tags[i].prefix != BioPrefix::I) continue;
      if (i == 0 || tags[i - 1].prefix == BioPrefix::O || tags[i - 1].kind != tags[i].kind) return false;
    }
    return true;
  }
};

struct AlignmentWarning {
  std::size_t rule = 0;
  EntityKind kind = EntityKind::SlotType;
  std::string surface;
};

struct BioProjection {
  BioSequence sequence;
  std::vector<AlignmentWarning> warnings;
};

/// Tags the slot type, reference values and action of every rule where
/// their surfaces occur in `source`. Longer surfaces are placed first, each
/// at its earliest occurrence over still-untagged tokens.
inline BioProjection rules_to_bio(std::string_view source, const std::vector<BusinessRule>& rules) {
  const std::vector<Token> tokens = tokenize(source);
  std::vector<std::string> keys;
  keys.reserve(tokens.size());
  BioProjection out;
  for (const Token& t : tokens) {
    out.sequence.tokens.push_back(t.text);
    keys.push_back(text::normalize(t.text));
  }
  out.sequence.tags.assign(tokens.size(), BioTag::outside());

  struct Surface {
    std::size_t rule;
    EntityKind kind;
    std::string text;
    std::vector<std::string> keys;
  };
  std::vector<Surface> surfaces;
  auto add = [&](std::size_t rule, EntityKind kind, const std::string& s) {
    Surface surface{rule, kind, s, {}};
    for (const Token& t : tokenize(s)) surface.keys.push_back(text::normalize(t.text));
    if (!surface.keys.empty()) surfaces.push_back(std::move(surface));
  };
  for (std::size_t r = 0; r < rules.size(); ++r) {
    add(r, EntityKind::SlotType, rules[r].condition.slot_type);
    for (const std::string& v : rules[r].condition.reference.surfaces()) add(r, EntityKind::ReferenceValue, v);
    if (rules[r].action) add(r, EntityKind::Action, *rules[r].action);
  }
  std::stable_sort(surfaces.begin(), surfaces.end(),
                   [](const Surface& a, const Surface& b) { return a.keys.size() > b.keys.size(); });

  std::vector<bool> taken(tokens.size(), false);
  for (const Surface& s : surfaces) {
    const std::size_t len = s.keys.size();
    bool placed = false;
    for (std::size_t p = 0; !placed && p + len <= tokens.size(); ++p) {
      bool match = true;
      for (std::size_t k = 0; match && k < len; ++k) match = !taken[p + k] && keys[p + k] == s.keys[k];
      if (!match) continue;
      for (std::size_t k = 0; k < len; ++k) {
        taken[p + k] = true;
        out.sequence.tags[p + k] = k == 0 ? BioTag::begin(s.kind) : BioTag::inside(s.kind);
      }
      placed = true;
    }
    if (!placed) out.warnings.push_back({s.rule, s.kind, s.text});
  }
  std::sort(out.warnings.begin(), out.warnings.end(), [](const AlignmentWarning& a, const AlignmentWarning& b) {
    return std::pair(a.rule, a.kind) < std::pair(b.rule, b.kind);
  });
  return out;
}

/// "token<TAB>TAG" lines with a blank line after each sequence.
inline void write_bio(std::ostream& out, const std::vector<BioSequence>& sequences) {
  for (const BioSequence& seq : sequences) {
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) out << seq.tokens[i] << '\t' << tag_string(seq.tags[i]) << '\n';
    out << '\n';
  }
}

inline std::vector<BioSequence> read_bio(std::istream& in) {
  std::vector<BioSequence> out;
  BioSequence current;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!current.tokens.empty()) out.push_back(std::move(current));
      current = {};
      continue;
    }
    const auto tab = line.find('\t');
    const auto tag = tab == std::string::npos ? std::nullopt : parse_tag(std::string_view(line).substr(tab + 1));
    if (!tag) throw Error(Errc::Schema, "BIO line " + std::to_string(lineno) + ": expected token<TAB>TAG");
    current.tokens.push_back(line.substr(0, tab));
    current.tags.push_back(*tag);
  }
  if (!current.tokens.empty()) out.push_back(std::move(current));
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct CorpusStats {
  std::size_t texts = 0;
  std::size_t sentences = 0;
  std::size_t rules = 0;
  std::size_t tokens = 0;
  std::map<LogicalJudgement, std::size_t> judgements;
  std::map<DependencyKind, std::size_t> dependencies;

  CorpusStats() {
    for (LogicalJudgement j : kAllJudgements) judgements[j] = 0;
    for (DependencyKind k : kAllDependencyKinds) dependencies[k] = 0;
  }

  bool operator==(const CorpusStats&) const = default;

  CorpusStats& operator+=(const CorpusStats& o) {
    texts += o.texts;
    sentences += o.sentences;
    rules += o.rules;
    tokens += o.tokens;
    for (const auto& [k, v] : o.judgements) judgements[k] += v;
    for (const auto& [k, v] : o.dependencies) dependencies[k] += v;
    return *this;
  }

  friend CorpusStats operator+(CorpusStats a, const CorpusStats& b) { return a += b; }
};

inline CorpusStats corpus_stats(const std::vector<Document>& docs) {
  CorpusStats s;
  for (const Document& d : docs) {
    ++s.texts;
    s.sentences += d.sentences ? d.sentences->size() : count_sentences(d.text);
    s.rules += d.gold_rules.size();
    s.tokens += tokenize(d.text).size();
    for (const auto& r : d.gold_rules) ++s.judgements[r.condition.judgement];
    for (const auto& l : d.gold_dependencies) ++s.dependencies[l.kind];
  }
  return s;
}

}  // namespace exide
