#pragma once

// Prompt rendering for rule extraction (five variants of one shared
// template), pairwise dependency classification and synthetic text
// generation. Rendering is a pure function of its inputs.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "exide/corpus.hpp"
#include "exide/default_templates.hpp"
#include "exide/error.hpp"
#include "exide/rule.hpp"

namespace exide {

enum class PromptVariant { ImplicitMapping, ExplicitMapping, ClarifiedInput, LogicalJudgement, PseudoCode };

inline constexpr std::array<PromptVariant, 5> kAllVariants{
    PromptVariant::ImplicitMapping, PromptVariant::ExplicitMapping, PromptVariant::ClarifiedInput,
    PromptVariant::LogicalJudgement, PromptVariant::PseudoCode};

constexpr std::string_view variant_name(PromptVariant v) noexcept {
  switch (v) {
    case PromptVariant::ImplicitMapping: return "implicit-mapping";
    case PromptVariant::ExplicitMapping: return "explicit-mapping";
    case PromptVariant::ClarifiedInput: return "clarified-input";
    case PromptVariant::LogicalJudgement: return "logical-judgement";
    case PromptVariant::PseudoCode: return "pseudo-code";
  }
  return "";
}

/// p1..p5, in the order the variants are usually tabulated.
constexpr std::string_view variant_alias(PromptVariant v) noexcept {
  switch (v) {
    case PromptVariant::ImplicitMapping: return "p1";
    case PromptVariant::ExplicitMapping: return "p2";
    case PromptVariant::ClarifiedInput: return "p3";
    case PromptVariant::LogicalJudgement: return "p4";
    case PromptVariant::PseudoCode: return "p5";
  }
  return "";
}

inline std::optional<PromptVariant> parse_variant(std::string_view s) {
  std::string key = text::ascii_lower(text::trim(s));
  for (char& c : key) {
    if (c == '_' || c == ' ') c = '-';
  }
  for (PromptVariant v : kAllVariants) {
    if (key == variant_name(v) || key == variant_alias(v)) return v;
  }
  return std::nullopt;
}

enum class PromptTask { Extraction, Dependency, Generation };

enum class Language { En, Zh };

constexpr std::string_view language_code(Language l) noexcept { return l == Language::Zh ? "zh" : "en"; }

inline std::optional<Language> parse_language(std::string_view s) {
  const std::string k = text::ascii_lower(text::trim(s));
  if (k == "en") return Language::En;
  if (k == "zh") return Language::Zh;
  return std::nullopt;
}

struct PromptBundle {
  std::optional<std::string> system;
  std::string user;
  PromptTask task = PromptTask::Extraction;
  std::optional<PromptVariant> variant;
  std::set<int> definitions_included;

  bool operator==(const PromptBundle&) const = default;
};

/// The set of named template files used for rendering. Built-in sets are
/// compiled in; a directory of "<name>.txt" files may override any of them.
/// Lines starting with "#|" are template comments and never rendered.
class TemplateSet {
 public:
  static TemplateSet builtin(Language lang = Language::En) {
    TemplateSet set;
    const std::string prefix = std::string(language_code(lang)) + "/";
    for (const auto& [key, content] : detail::embedded_templates()) {
      if (key.starts_with(prefix)) set.files_[key.substr(prefix.size())] = strip_comments(content);
    }
    return set;
  }

  static TemplateSet load(const std::filesystem::path& dir, Language fallback = Language::En) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw Error(Errc::Io, "template directory " + dir.string());
    TemplateSet set = builtin(fallback);
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
      set.files_[entry.path().filename().string()] = strip_comments(read_file(entry.path()));
    }
    return set;
  }

  const std::string& get(std::string_view name) const {
    auto it = files_.find(name);
    if (it == files_.end()) throw Error(Errc::Config, "template '" + std::string(name) + "' is not available");
    return it->second;
  }

  /// Template content without trailing newlines, for splicing into a line.
  std::string fragment(std::string_view name) const {
    std::string s = get(name);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
  }

  void set(std::string name, std::string content) { files_[std::move(name)] = strip_comments(content); }

 private:
  static std::string strip_comments(std::string_view content) {
    std::string out;
    std::size_t pos = 0;
    while (pos < content.size()) {
      std::size_t end = content.find('\n', pos);
      const std::size_t next = end == std::string_view::npos ? content.size() : end + 1;
      const std::string_view line = content.substr(pos, next - pos);
      if (!line.starts_with("#|")) out.append(line);
      pos = next;
    }
    return out;
  }

  std::map<std::string, std::string, std::less<>> files_;
};

inline const TemplateSet& default_templates() {
  static const TemplateSet set = TemplateSet::builtin(Language::En);
  return set;
}

/// Single-pass "{{name}}" substitution; inserted values are never rescanned.
/// A line holding only a placeholder that expands to "" is dropped, and
/// unknown placeholders are left as they are.
inline std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tpl.size() * 2);
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    std::size_t line_end = tpl.find('\n', pos);
    const std::size_t next = line_end == std::string_view::npos ? tpl.size() : line_end + 1;
    const std::string_view line = tpl.substr(pos, next - pos);
    const std::string_view bare = text::trim(line);

    if (bare.starts_with("{{") && bare.ends_with("}}") && bare.find("{{", 2) == std::string_view::npos) {
      auto it = values.find(std::string(bare.substr(2, bare.size() - 4)));
      if (it != values.end() && it->second.empty()) {
        pos = next;
        continue;
      }
    }

    std::size_t i = 0;
    while (i < line.size()) {
      const std::size_t open = line.find("{{", i);
      if (open == std::string_view::npos) {
        out.append(line.substr(i));
        break;
      }
      const std::size_t close = line.find("}}", open + 2);
      if (close == std::string_view::npos) {
        out.append(line.substr(i));
        break;
      }
      out.append(line.substr(i, open - i));
      auto it = values.find(std::string(line.substr(open + 2, close - open - 2)));
      if (it != values.end()) {
        out.append(it->second);
      } else {
        out.append(line.substr(open, close + 2 - open));
      }
      i = close + 2;
    }
    pos = next;
  }
  return out;
}

namespace detail {

inline std::string definitions_block(const TemplateSet& templates, const std::set<int>& which) {
  std::string out;
  for (int d : which) {
    if (!out.empty()) out += "\n";
    out += templates.fragment("definition_" + std::to_string(d) + ".txt");
  }
  return out;
}

}  // namespace detail

inline PromptBundle render_extraction_prompt(PromptVariant variant, const Document& document,
                                             const TemplateSet& templates = default_templates()) {
  if (text::trim(document.text).empty()) throw Error(Errc::EmptyDocument, "document '" + document.id + "'");

  PromptBundle bundle;
  bundle.task = PromptTask::Extraction;
  bundle.variant = variant;
  bundle.definitions_included = {1, 2, 4};

  std::map<std::string, std::string> values{
      {"definitions", detail::definitions_block(templates, bundle.definitions_included)},
      {"input_field", templates.fragment("input_field.txt")},
      {"logical_judgement", ""},
      {"explain_guidance", templates.fragment("explain_implicit.txt")},
      {"example_explain", templates.fragment("example_implicit.txt")},
      {"text", document.text},
  };
  switch (variant) {
    case PromptVariant::ImplicitMapping:
      break;
    case PromptVariant::ExplicitMapping:
      values["explain_guidance"] = templates.fragment("explain_explicit.txt");
      values["example_explain"] = templates.fragment("example_explicit.txt");
      break;
    case PromptVariant::ClarifiedInput:
      values["input_field"] = templates.fragment("input_field_clarified.txt");
      break;
    case PromptVariant::LogicalJudgement:
      values["logical_judgement"] = templates.fragment("logical_judgement_note.txt");
      break;
    case PromptVariant::PseudoCode:
      values["explain_guidance"] += "\n" + templates.fragment("explain_pseudocode.txt");
      values["example_explain"] += "\n" + templates.fragment("example_pseudocode.txt");
      break;
  }
  bundle.user = render_template(templates.get("extraction.txt"), values);
  return bundle;
}

/// `context`, when given, contributes its text to the prompt.
inline PromptBundle render_dependency_prompt(const BusinessRule& rule_a, const BusinessRule& rule_b,
                                             const Document* context,
                                             const TemplateSet& templates = default_templates()) {
  if (rule_a == rule_b) throw Error(Errc::IdenticalRules, format_rule(rule_a));

  PromptBundle bundle;
  bundle.task = PromptTask::Dependency;
  bundle.definitions_included = {1, 2, 3, 4};
  std::string context_block;
  if (context != nullptr) {
    context_block = render_template(templates.fragment("dependency_context.txt"), {{"text", context->text}});
  }
  bundle.user = render_template(templates.get("dependency.txt"),
                                {{"definitions", detail::definitions_block(templates, bundle.definitions_included)},
                                 {"context", context_block},
                                 {"rule_a", format_rule(rule_a)},
                                 {"rule_b", format_rule(rule_b)}});
  return bundle;
}

/// The "rules" constraint states the target rule count; any other entry is
/// rendered as a generic constraint line, in key order.
inline PromptBundle render_generation_prompt(std::string_view domain,
                                             const std::map<std::string, std::string>& constraints = {},
                                             const TemplateSet& templates = default_templates()) {
  if (text::trim(domain).empty()) throw Error(Errc::EmptyDomain, "a domain is required");

  PromptBundle bundle;
  bundle.task = PromptTask::Generation;
  bundle.definitions_included = {1, 2, 3, 4, 5};

  std::string lines;
  for (const auto& [key, value] : constraints) {
    if (!lines.empty()) lines += "\n";
    if (key == "rules") {
      lines += render_template(templates.fragment("generation_rule_count.txt"), {{"rules", value}});
    } else {
      lines += render_template(templates.fragment("generation_constraint.txt"), {{"key", key}, {"value", value}});
    }
  }
  bundle.user = render_template(templates.get("generation.txt"),
                                {{"definitions", detail::definitions_block(templates, bundle.definitions_included)},
                                 {"domain", std::string(text::trim(domain))},
                                 {"constraints", lines}});
  return bundle;
}

}  // namespace exide
