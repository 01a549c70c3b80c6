#pragma once

// Business rules: <Condition, Action> pairs where a condition is the triple
// <slot type, logical judgement, reference values>. Conversion to and from
// the textual notation "< <slot, judgement, v1, v2, ...>, action>".

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "exide/error.hpp"
#include "exide/text.hpp"

namespace exide {

enum class LogicalJudgement {
  Contains,
  EqualTo,
  LessThan,
  GreaterThan,
  LessThanOrEqual,
  GreaterThanOrEqual,
};

inline constexpr std::array<LogicalJudgement, 6> kAllJudgements{
    LogicalJudgement::Contains,        LogicalJudgement::EqualTo,
    LogicalJudgement::LessThan,        LogicalJudgement::GreaterThan,
    LogicalJudgement::LessThanOrEqual, LogicalJudgement::GreaterThanOrEqual,
};

/// The surface emitted by format_rule and stored in corpus JSON.
constexpr std::string_view canonical_surface(LogicalJudgement j) noexcept {
  switch (j) {
    case LogicalJudgement::Contains: return "includes";
    case LogicalJudgement::EqualTo: return "equal to";
    case LogicalJudgement::LessThan: return "less than";
    case LogicalJudgement::GreaterThan: return "greater than";
    case LogicalJudgement::LessThanOrEqual: return "less than or equal to";
    case LogicalJudgement::GreaterThanOrEqual: return "greater than or equal to";
  }
  return "";
}

/// Stable identifier used for class labels and statistics keys.
constexpr std::string_view judgement_key(LogicalJudgement j) noexcept {
  switch (j) {
    case LogicalJudgement::Contains: return "contains";
    case LogicalJudgement::EqualTo: return "equal_to";
    case LogicalJudgement::LessThan: return "less_than";
    case LogicalJudgement::GreaterThan: return "greater_than";
    case LogicalJudgement::LessThanOrEqual: return "less_than_or_equal_to";
    case LogicalJudgement::GreaterThanOrEqual: return "greater_than_or_equal_to";
  }
  return "";
}

constexpr bool is_comparison(LogicalJudgement j) noexcept {
  return j != LogicalJudgement::Contains && j != LogicalJudgement::EqualTo;
}

namespace detail {

struct JudgementSynonyms {
  LogicalJudgement judgement;
  std::array<std::string_view, 8> surfaces;
};

// Compared against the trimmed, half-width, case-folded surface.
inline constexpr std::array<JudgementSynonyms, 6> kJudgementSynonyms{{
    {LogicalJudgement::Contains, {"contains", "contain", "includes", "including", "include", "包含"}},
    {LogicalJudgement::EqualTo, {"equal to", "equals", "is", "等于", "=", "is equal to"}},
    {LogicalJudgement::LessThan, {"less than", "fewer than", "below", "<", "小于"}},
    {LogicalJudgement::GreaterThan, {"greater than", "more than", "exceeds", "above", ">", "大于"}},
    {LogicalJudgement::LessThanOrEqual,
     {"less than or equal to", "at most", "no more than", "<=", "≤", "小于等于", "不超过"}},
    {LogicalJudgement::GreaterThanOrEqual,
     {"greater than or equal to", "at least", "no less than", ">=", "≥", "大于等于", "不少于"}},
}};

}  // namespace detail

/// Maps a judgement surface (any synonym, any case, surrounding whitespace
/// allowed) to its variant. Throws Errc::UnknownJudgement otherwise.
inline LogicalJudgement canonicalize_judgement(std::string_view surface) {
  const std::string key = text::normalize(surface);
  if (!key.empty()) {
    for (const auto& entry : detail::kJudgementSynonyms) {
      for (std::string_view s : entry.surfaces) {
        if (!s.empty() && key == s) return entry.judgement;
      }
    }
  }
  throw Error(Errc::UnknownJudgement, "'" + std::string(surface) + "'");
}

/// A numeric threshold. `text` is kept verbatim; `value` is the first
/// decimal number in it with thousands separators removed and `unit` is
/// whatever surrounds that number.
struct NumericReference {
  std::string text;
  std::string value;
  std::optional<std::string> unit;

  bool operator==(const NumericReference&) const = default;

  /// Returns nullopt when `text` contains no digits.
  static std::optional<NumericReference> from_text(std::string_view verbatim) {
    const std::string_view s = verbatim;
    std::size_t begin = 0;
    while (begin < s.size() && !text::is_ascii_digit(s[begin])) ++begin;
    if (begin == s.size()) return std::nullopt;

    std::size_t end = begin;
    std::string digits;
    while (end < s.size()) {
      if (text::is_ascii_digit(s[end])) {
        digits.push_back(s[end++]);
      } else if (s[end] == ',' && end + 3 < s.size() && text::is_ascii_digit(s[end + 1]) &&
                 text::is_ascii_digit(s[end + 2]) && text::is_ascii_digit(s[end + 3]) &&
                 (end + 4 >= s.size() || !text::is_ascii_digit(s[end + 4]))) {
        end += 1;  // thousands separator: exactly three digits follow
      } else {
        break;
      }
    }
    if (end + 1 < s.size() && s[end] == '.' && text::is_ascii_digit(s[end + 1])) {
      digits.push_back('.');
      ++end;
      while (end < s.size() && text::is_ascii_digit(s[end])) digits.push_back(s[end++]);
    }

    NumericReference out;
    out.text = std::string(verbatim);
    out.value = std::move(digits);
    std::string rest = text::collapse_whitespace(std::string(s.substr(0, begin)) + " " + std::string(s.substr(end)));
    if (!rest.empty()) out.unit = std::move(rest);
    return out;
  }
};

enum class ReferenceKind { Enumeration, Numeric };

/// Either an ordered, non-empty enumeration of discrete values or exactly
/// one numeric threshold.
class ReferenceValues {
 public:
  ReferenceValues() : data_(std::vector<std::string>{}) {}

  static ReferenceValues enumeration(std::vector<std::string> values) {
    ReferenceValues r;
    r.data_ = std::move(values);
    return r;
  }

  static ReferenceValues numeric(NumericReference n) {
    ReferenceValues r;
    r.data_ = std::move(n);
    return r;
  }

  ReferenceKind kind() const noexcept {
    return std::holds_alternative<NumericReference>(data_) ? ReferenceKind::Numeric : ReferenceKind::Enumeration;
  }

  const std::vector<std::string>& values() const { return std::get<std::vector<std::string>>(data_); }
  const NumericReference& number() const { return std::get<NumericReference>(data_); }

  /// Surface strings in source order: the enumeration, or the numeric text.
  std::vector<std::string> surfaces() const {
    if (kind() == ReferenceKind::Numeric) return {number().text};
    return values();
  }

  bool operator==(const ReferenceValues&) const = default;

 private:
  std::variant<std::vector<std::string>, NumericReference> data_;
};

struct Condition {
  std::string slot_type;
  LogicalJudgement judgement = LogicalJudgement::Contains;
  ReferenceValues reference;

  bool operator==(const Condition&) const = default;
};

/// A rule without an action terminates the process.
struct BusinessRule {
  Condition condition;
  std::optional<std::string> action;

  bool operator==(const BusinessRule&) const = default;
};

enum class ViolationKind {
  EmptySlotType,
  EmptyReferenceList,
  EmptyReferenceValue,
  KindMismatch,
  MissingNumericValue,
  EmptyAction,
  NonCanonicalText,
};

constexpr std::string_view violation_name(ViolationKind v) noexcept {
  switch (v) {
    case ViolationKind::EmptySlotType: return "EmptySlotType";
    case ViolationKind::EmptyReferenceList: return "EmptyReferenceList";
    case ViolationKind::EmptyReferenceValue: return "EmptyReferenceValue";
    case ViolationKind::KindMismatch: return "KindMismatch";
    case ViolationKind::MissingNumericValue: return "MissingNumericValue";
    case ViolationKind::EmptyAction: return "EmptyAction";
    case ViolationKind::NonCanonicalText: return "NonCanonicalText";
  }
  return "";
}

struct Violation {
  ViolationKind kind;
  std::string field;
  std::string detail;
};

namespace detail {

// A comma separates fields unless it sits between two digits ("10,000").
inline bool is_separator_comma(std::string_view s, std::size_t i) {
  if (s[i] != ',') return false;
  const bool digit_before = i > 0 && text::is_ascii_digit(s[i - 1]);
  const bool digit_after = i + 1 < s.size() && text::is_ascii_digit(s[i + 1]);
  return !(digit_before && digit_after);
}

inline bool has_separator_comma(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_separator_comma(s, i)) return true;
  }
  return false;
}

// Text that survives format -> parse unchanged.
inline std::optional<std::string> text_problem(std::string_view s, bool allow_separators) {
  if (text::collapse_whitespace(s) != s) return "untrimmed or repeated whitespace";
  if (text::halfwidth(s) != s) return "full-width characters";
  for (std::string_view bad : {"《", "》", "、", "〈", "〉"}) {
    if (s.find(bad) != std::string_view::npos) return "CJK bracket or enumeration comma";
  }
  if (!allow_separators) {
    if (s.find('<') != std::string_view::npos || s.find('>') != std::string_view::npos) return "angle bracket";
    if (has_separator_comma(s)) return "field separator comma";
  }
  return std::nullopt;
}

inline bool is_none_literal(std::string_view s) {
  const std::string k = text::normalize(s);
  return k == "none" || k == "无";
}

}  // namespace detail

/// Empty iff every rule invariant holds, including that the rule formats
/// to notation that parses back to itself.
inline std::vector<Violation> validate_rule(const BusinessRule& rule) {
  std::vector<Violation> out;
  const Condition& c = rule.condition;
  if (text::trim(c.slot_type).empty()) {
    out.push_back({ViolationKind::EmptySlotType, "condition.slot_type", "slot type is empty"});
  } else if (auto p = detail::text_problem(c.slot_type, false)) {
    out.push_back({ViolationKind::NonCanonicalText, "condition.slot_type", *p});
  }

  if (c.reference.kind() == ReferenceKind::Enumeration) {
    if (is_comparison(c.judgement)) {
      out.push_back({ViolationKind::KindMismatch, "condition.reference",
                     std::string(judgement_key(c.judgement)) + " requires a numeric reference"});
    }
    const auto& values = c.reference.values();
    if (values.empty()) {
      out.push_back({ViolationKind::EmptyReferenceList, "condition.reference.values", "enumeration is empty"});
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::string field = "condition.reference.values[" + std::to_string(i) + "]";
      if (text::trim(values[i]).empty()) {
        out.push_back({ViolationKind::EmptyReferenceValue, field, "reference value is empty"});
      } else if (auto p = detail::text_problem(values[i], false)) {
        out.push_back({ViolationKind::NonCanonicalText, field, *p});
      }
    }
  } else {
    const NumericReference& n = c.reference.number();
    if (!is_comparison(c.judgement)) {
      out.push_back({ViolationKind::KindMismatch, "condition.reference",
                     std::string(judgement_key(c.judgement)) + " requires an enumeration reference"});
    }
    if (n.value.empty() || !NumericReference::from_text(n.text) || *NumericReference::from_text(n.text) != n) {
      out.push_back({ViolationKind::MissingNumericValue, "condition.reference.value",
                     "numeric reference '" + n.text + "' has no consistent decimal value"});
    } else if (auto p = detail::text_problem(n.text, false)) {
      out.push_back({ViolationKind::NonCanonicalText, "condition.reference.text", *p});
    }
  }

  if (rule.action) {
    if (text::trim(*rule.action).empty()) {
      out.push_back({ViolationKind::EmptyAction, "action", "present action is empty"});
    } else if (detail::is_none_literal(*rule.action)) {
      out.push_back({ViolationKind::NonCanonicalText, "action", "the None sentinel denotes an absent action"});
    } else if (auto p = detail::text_problem(*rule.action, true)) {
      out.push_back({ViolationKind::NonCanonicalText, "action", *p});
    }
  }
  return out;
}

inline std::string format_rule(const BusinessRule& rule) {
  std::string out = "< <";
  out += rule.condition.slot_type;
  out += ", ";
  out += canonical_surface(rule.condition.judgement);
  for (const std::string& v : rule.condition.reference.surfaces()) {
    out += ", ";
    out += v;
  }
  out += ">, ";
  out += rule.action ? *rule.action : "None";
  out += ">";
  return out;
}

namespace detail {

// Full-width and CJK punctuation collapsed onto the ASCII notation.
inline std::string normalize_notation(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (const text::CodePoint& cp : text::decode(s)) {
    char32_t c = text::to_halfwidth(cp.value);
    switch (c) {
      case U'《':
      case U'〈':
        c = '<';
        break;
      case U'》':
      case U'〉':
        c = '>';
        break;
      case U'、':
        c = ',';
        break;
      default:
        break;
    }
    text::append_utf8(out, c);
  }
  return out;
}

// Length of a leading list marker such as "3. ", "12) ", "- ", "* ".
inline std::size_t list_marker_length(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && text::is_ascii_space(s[i])) ++i;
  const std::size_t start = i;
  while (i < s.size() && text::is_ascii_digit(s[i])) ++i;
  if (i > start) {
    if (i < s.size() && (s[i] == '.' || s[i] == ')' || s[i] == ':' || s[i] == ',')) {
      ++i;
      while (i < s.size() && text::is_ascii_space(s[i])) ++i;
      return i;
    }
    return 0;
  }
  if (i < s.size() && (s[i] == '-' || s[i] == '*')) {
    ++i;
    while (i < s.size() && text::is_ascii_space(s[i])) ++i;
    return i;
  }
  if (s.substr(i).starts_with("•")) {
    i += std::string_view("•").size();
    while (i < s.size() && text::is_ascii_space(s[i])) ++i;
    return i;
  }
  return 0;
}

[[noreturn]] inline void malformed(std::size_t pos, const std::string& reason) {
  throw Error(Errc::MalformedRule, "position " + std::to_string(pos) + ": " + reason);
}

}  // namespace detail

/// Inverse of format_rule. Tolerates list numbering, full-width punctuation,
/// irregular whitespace and a missing closing '>'.
inline BusinessRule parse_rule(std::string_view input) {
  const std::string s = detail::normalize_notation(input);
  std::size_t pos = detail::list_marker_length(s);
  auto skip_ws = [&] {
    while (pos < s.size() && text::is_ascii_space(s[pos])) ++pos;
  };

  skip_ws();
  if (pos >= s.size() || s[pos] != '<') detail::malformed(pos, "expected '<' opening the rule");
  ++pos;
  skip_ws();
  if (pos >= s.size() || s[pos] != '<') detail::malformed(pos, "expected '<' opening the condition");
  ++pos;

  // Slot type: up to the first separator comma.
  const std::size_t slot_begin = pos;
  while (pos < s.size() && !detail::is_separator_comma(s, pos) && s[pos] != '>') ++pos;
  if (pos >= s.size() || s[pos] == '>') detail::malformed(pos, "condition needs slot type, judgement and values");
  const std::string slot = text::collapse_whitespace(std::string_view(s).substr(slot_begin, pos - slot_begin));
  if (slot.empty()) detail::malformed(slot_begin, "empty slot type");
  ++pos;

  // Judgement: up to the next separator comma. Symbolic judgements such as
  // ">=" may contain angle brackets themselves.
  const std::size_t judgement_begin = pos;
  while (pos < s.size() && !detail::is_separator_comma(s, pos)) ++pos;
  std::string judgement_text =
      text::collapse_whitespace(std::string_view(s).substr(judgement_begin, pos - judgement_begin));
  if (const auto gt = judgement_text.find('>');
      gt != std::string::npos && judgement_text != ">" && judgement_text != ">=") {
    detail::malformed(judgement_begin + gt, "condition needs slot type, judgement and values");
  }
  if (pos >= s.size()) detail::malformed(pos, "condition needs slot type, judgement and values");
  const LogicalJudgement judgement = canonicalize_judgement(judgement_text);
  ++pos;

  // Reference values: comma-separated up to the closing '>'.
  std::vector<std::string> values;
  for (;;) {
    const std::size_t begin = pos;
    while (pos < s.size() && s[pos] != '>' && !detail::is_separator_comma(s, pos)) ++pos;
    if (pos >= s.size()) detail::malformed(pos, "unterminated condition");
    std::string value = text::collapse_whitespace(std::string_view(s).substr(begin, pos - begin));
    if (value.empty()) detail::malformed(begin, "empty reference value");
    values.push_back(std::move(value));
    if (s[pos++] == '>') break;
  }

  skip_ws();
  if (pos >= s.size() || s[pos] != ',') detail::malformed(pos, "expected ',' between condition and action");
  ++pos;

  std::string_view rest = std::string_view(s).substr(pos);
  if (const auto close = rest.rfind('>'); close != std::string_view::npos) rest = rest.substr(0, close);
  std::string action = text::collapse_whitespace(rest);
  if (action.empty()) detail::malformed(pos, "empty action");

  BusinessRule rule;
  rule.condition.slot_type = slot;
  rule.condition.judgement = judgement;
  if (is_comparison(judgement)) {
    if (values.size() != 1) detail::malformed(judgement_begin, "a comparison takes exactly one numeric value");
    auto number = NumericReference::from_text(values.front());
    if (!number) detail::malformed(judgement_begin, "numeric reference '" + values.front() + "' has no number");
    rule.condition.reference = ReferenceValues::numeric(std::move(*number));
  } else {
    rule.condition.reference = ReferenceValues::enumeration(std::move(values));
  }
  if (!detail::is_none_literal(action)) rule.action = std::move(action);
  return rule;
}

struct ParseWarning {
  std::size_t fragment;  // zero-based index among detected fragments
  std::string text;
  std::string message;
};

struct RuleBlock {
  std::vector<BusinessRule> rules;
  std::vector<ParseWarning> warnings;
  std::size_t fragments = 0;
};

namespace detail {

inline std::size_t find_opener(std::string_view s, std::size_t from) {
  for (std::size_t i = s.find('<', from); i != std::string_view::npos; i = s.find('<', i + 1)) {
    std::size_t j = i + 1;
    while (j < s.size() && text::is_ascii_space(s[j])) ++j;
    if (j < s.size() && s[j] == '<') return i;
  }
  return std::string_view::npos;
}

}  // namespace detail

/// Splits a block of rules (one per numbered line, or one per "< <" opener,
/// possibly wrapped over several lines) and parses each fragment. Failures
/// become warnings; parsed + warnings always equals the fragment count.
inline RuleBlock parse_rule_block(std::string_view block) {
  const std::string s = detail::normalize_notation(block);
  std::vector<std::string> fragments;
  bool open = false;

  std::size_t line_begin = 0;
  while (line_begin <= s.size()) {
    std::size_t line_end = s.find('\n', line_begin);
    if (line_end == std::string::npos) line_end = s.size();
    std::string_view line = std::string_view(s).substr(line_begin, line_end - line_begin);

    if (text::trim(line).empty()) {
      open = false;
    } else {
      std::vector<std::size_t> openers;
      for (std::size_t p = detail::find_opener(line, 0); p != std::string_view::npos;
           p = detail::find_opener(line, p + 1)) {
        openers.push_back(p);
      }
      const std::string_view trimmed = text::trim(line);
      const bool numbered = detail::list_marker_length(line) > 0 && text::is_ascii_digit(trimmed.front());

      std::vector<std::size_t> starts;
      if (numbered) {
        // The number and the first opener belong to one fragment.
        starts.push_back(0);
        if (!openers.empty()) starts.insert(starts.end(), openers.begin() + 1, openers.end());
      } else if (!openers.empty()) {
        if (open && openers.front() > 0) fragments.back() += " " + std::string(line.substr(0, openers.front()));
        starts = openers;
      } else if (open) {
        fragments.back() += " " + std::string(line);
      }
      for (std::size_t k = 0; k < starts.size(); ++k) {
        const std::size_t end = k + 1 < starts.size() ? starts[k + 1] : line.size();
        fragments.emplace_back(line.substr(starts[k], end - starts[k]));
        open = true;
      }
    }
    if (line_end == s.size()) break;
    line_begin = line_end + 1;
  }

  RuleBlock out;
  out.fragments = fragments.size();
  for (std::size_t i = 0; i < fragments.size(); ++i) {
    const std::string fragment = text::collapse_whitespace(fragments[i]);
    try {
      out.rules.push_back(parse_rule(fragment));
    } catch (const Error& e) {
      out.warnings.push_back({i, fragment, e.what()});
    }
  }
  return out;
}

}  // namespace exide
