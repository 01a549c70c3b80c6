#pragma once

// Two-stage pipeline: extract rules from a document, then classify the
// dependency of every rule pair and assemble the rule-flow graph.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "exide/corpus.hpp"
#include "exide/error.hpp"
#include "exide/flowgraph.hpp"
#include "exide/llm.hpp"
#include "exide/prompt.hpp"
#include "exide/rule.hpp"
#include "exide/text.hpp"

namespace exide {

struct PipelineOptions {
  std::string model = "default";
  double temperature = 0.0;
  std::optional<int> max_tokens;
  const TemplateSet* templates = nullptr;  // null: built-in English set
  std::size_t concurrency = 1;
  bool strict = false;
  bool keep_going = false;
  bool include_context = true;

  const TemplateSet& template_set() const { return templates ? *templates : default_templates(); }
};

struct ExtractionResult {
  std::string document_id;
  PromptVariant variant = PromptVariant::ImplicitMapping;
  std::vector<BusinessRule> rules;
  std::vector<ParseWarning> warnings;
  Exchange exchange;
};

/// `predicted` is empty for "no dependency". `error` is set instead of a
/// label when the pair failed under keep-going.
struct DependencyPrediction {
  std::size_t a = 0;
  std::size_t b = 0;
  std::optional<DependencyKind> predicted;
  std::optional<std::string> error;
  Exchange exchange;
};

struct PipelineResult {
  ExtractionResult extraction;
  std::vector<DependencyPrediction> predictions;
  RuleFlowGraph graph;
};

namespace detail {

inline constexpr std::string_view kExplicitLinkers[] = {"this sentence corresponds to the business rule:",
                                                        "该句对应的业务规则:"};

inline std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t end = s.find('\n', pos);
    if (end == std::string_view::npos) end = s.size();
    std::string line(s.substr(pos, end - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
    pos = end + 1;
  }
  return out;
}

inline std::string strip_code_fences(std::string_view s) {
  std::string out;
  bool in_fence = false;
  for (const std::string& line : split_lines(s)) {
    if (text::trim(line).starts_with("```")) {
      in_fence = !in_fence;
      continue;
    }
    if (!in_fence) out += line + "\n";
  }
  return out;
}

// Position just past an "Output:" header at the start of `line`, allowing
// markdown decoration around the word.
inline std::optional<std::size_t> output_header(std::string_view line) {
  std::size_t i = 0;
  auto skip = [&](std::string_view chars) {
    while (i < line.size() && (chars.find(line[i]) != std::string_view::npos)) ++i;
  };
  skip(" \t#*");
  const std::string_view rest = line.substr(i);
  if (text::starts_with_ci(rest, "output")) {
    i += 6;
  } else if (rest.starts_with("输出")) {
    i += std::string_view("输出").size();
  } else {
    return std::nullopt;
  }
  skip("* \t");
  if (i == line.size()) return i;
  if (line[i] != ':') return std::nullopt;
  ++i;
  skip("* \t");
  return i;
}

}  // namespace detail

/// The rule-bearing part of a raw extraction response: everything after the
/// last "Output" header (or the whole response when there is none), plus,
/// for explicit mapping, the rule after each sentence linker. Code fences are
/// dropped for the pseudo-code variant.
inline std::string output_section(std::string_view response, PromptVariant variant) {
  std::string body = text::halfwidth(response);
  if (variant == PromptVariant::PseudoCode) body = detail::strip_code_fences(body);
  const std::vector<std::string> lines = detail::split_lines(body);

  std::optional<std::size_t> header_line;
  std::size_t header_end = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (auto end = detail::output_header(lines[i])) {
      header_line = i;
      header_end = *end;
    }
  }
  std::string out;
  if (header_line) {
    out = lines[*header_line].substr(header_end) + "\n";
    for (std::size_t i = *header_line + 1; i < lines.size(); ++i) out += lines[i] + "\n";
  } else {
    out = body;
  }

  if (variant == PromptVariant::ExplicitMapping) {
    const std::size_t limit = header_line.value_or(lines.size());
    for (std::size_t i = 0; i < limit; ++i) {
      const std::string lower = text::ascii_lower(lines[i]);
      for (std::string_view linker : detail::kExplicitLinkers) {
        const auto at = lower.find(linker);
        if (at != std::string::npos) out += "\n" + lines[i].substr(at + linker.size()) + "\n";
      }
    }
  }
  return out;
}

/// Parses the rules out of a raw response. Invalid and repeated rules are
/// dropped with a warning.
inline RuleBlock parse_extraction_response(std::string_view response, PromptVariant variant) {
  RuleBlock block = parse_rule_block(output_section(response, variant));
  RuleBlock out;
  out.fragments = block.fragments;
  out.warnings = std::move(block.warnings);
  std::vector<std::string> seen;
  for (std::size_t i = 0; i < block.rules.size(); ++i) {
    const BusinessRule& r = block.rules[i];
    const std::string notation = format_rule(r);
    const auto violations = validate_rule(r);
    const auto fatal = std::find_if(violations.begin(), violations.end(),
                                    [](const Violation& v) { return v.kind != ViolationKind::NonCanonicalText; });
    if (fatal != violations.end()) {
      out.warnings.push_back({i, notation, "invalid rule dropped: " + fatal->detail});
    } else if (std::find(seen.begin(), seen.end(), notation) != seen.end()) {
      out.warnings.push_back({i, notation, "repeated rule dropped"});
    } else {
      seen.push_back(notation);
      out.rules.push_back(r);
    }
  }
  return out;
}

inline CompletionRequest make_request(PromptBundle prompt, const PipelineOptions& options) {
  return {std::move(prompt), options.model, options.temperature, options.max_tokens};
}

inline ExtractionResult extract_rules(const Document& document, PromptVariant variant, Backend& backend,
                                      const PipelineOptions& options = {}) {
  ExtractionResult out;
  out.document_id = document.id;
  out.variant = variant;
  out.exchange = backend.complete(make_request(render_extraction_prompt(variant, document, options.template_set()), options));
  RuleBlock block = parse_extraction_response(out.exchange.response_text, variant);
  out.rules = std::move(block.rules);
  out.warnings = std::move(block.warnings);
  if (out.rules.empty()) {
    if (options.strict) throw Error(Errc::EmptyOutput, "document '" + document.id + "'");
    out.warnings.push_back({0, "", "EmptyOutput: no rule found in the response"});
  }
  return out;
}

/// All index pairs a < b in lexicographic order.
inline std::vector<std::pair<std::size_t, std::size_t>> enumerate_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (n > 1) out.reserve(n * (n - 1) / 2);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) out.emplace_back(a, b);
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::size_t, std::size_t>> enumerate_pairs(const std::vector<T>& items) {
  return enumerate_pairs(items.size());
}

namespace detail {

struct LabelKeyword {
  std::string_view word;
  std::optional<DependencyKind> kind;
};

inline constexpr LabelKeyword kLabelKeywords[] = {
    {"sequential", DependencyKind::Sequential}, {"顺序", DependencyKind::Sequential},
    {"conditional", DependencyKind::Conditional}, {"条件", DependencyKind::Conditional},
    {"parallel", DependencyKind::Parallel},     {"并行", DependencyKind::Parallel},
    {"no", std::nullopt},                       {"无", std::nullopt},
};

inline bool ascii_word_char(char c) { return text::is_ascii_digit(c) || (c >= 'a' && c <= 'z') || c == '_'; }

// (position, kind) for every keyword occurrence; ASCII keywords must stand
// as whole words.
inline std::vector<std::pair<std::size_t, std::optional<DependencyKind>>> label_hits(std::string_view s) {
  std::vector<std::pair<std::size_t, std::optional<DependencyKind>>> out;
  for (const LabelKeyword& k : kLabelKeywords) {
    const bool ascii = static_cast<unsigned char>(k.word.front()) < 0x80;
    for (std::size_t at = s.find(k.word); at != std::string_view::npos; at = s.find(k.word, at + 1)) {
      if (ascii) {
        const std::size_t end = at + k.word.size();
        if ((at > 0 && ascii_word_char(s[at - 1])) || (end < s.size() && ascii_word_char(s[end]))) continue;
      }
      out.emplace_back(at, k.kind);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  return out;
}

}  // namespace detail

/// Reads a dependency label from a free-text answer. The last non-empty line
/// decides when it names exactly one label; otherwise the first label in the
/// whole text wins.
inline std::optional<DependencyKind> parse_dependency_answer(std::string_view response) {
  const std::string s = text::ascii_lower(text::halfwidth(response));
  const std::vector<std::string> lines = detail::split_lines(s);
  auto last = std::find_if(lines.rbegin(), lines.rend(), [](const std::string& l) { return !text::trim(l).empty(); });
  if (last != lines.rend()) {
    const auto hits = detail::label_hits(*last);
    std::set<int> distinct;
    for (const auto& h : hits) distinct.insert(h.second ? static_cast<int>(*h.second) : -1);
    if (distinct.size() > 1) throw Error(Errc::AmbiguousLabel, std::string(text::trim(*last)));
    if (!hits.empty()) return hits.front().second;
  }
  const auto hits = detail::label_hits(s);
  if (hits.empty()) {
    std::string excerpt(text::trim(response).substr(0, 80));
    throw Error(Errc::UnparseableLabel, "'" + excerpt + "'");
  }
  return hits.front().second;
}

/// Indices of the returned prediction are left at 0; run_pipeline sets them.
inline DependencyPrediction classify_dependency(const BusinessRule& rule_a, const BusinessRule& rule_b,
                                                const Document* context, Backend& backend,
                                                const PipelineOptions& options = {}) {
  DependencyPrediction out;
  out.exchange = backend.complete(
      make_request(render_dependency_prompt(rule_a, rule_b, context, options.template_set()), options));
  out.predicted = parse_dependency_answer(out.exchange.response_text);
  return out;
}

/// Predicted edges point from the earlier rule to the later one.
inline std::vector<PairLabel> prediction_labels(const std::vector<DependencyPrediction>& predictions) {
  std::vector<PairLabel> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back({p.a, p.b, p.error ? std::nullopt : p.predicted, std::nullopt});
  return out;
}

/// Pair classifications run on up to `options.concurrency` threads; the
/// result lists them in pair order. Without keep-going the error of the
/// lowest failing pair is rethrown.
inline PipelineResult run_pipeline(const Document& document, PromptVariant variant, Backend& backend,
                                   const PipelineOptions& options = {}) {
  PipelineResult out;
  out.extraction = extract_rules(document, variant, backend, options);
  const auto& rules = out.extraction.rules;
  const auto pairs = enumerate_pairs(rules);
  out.predictions.resize(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  const Document* context = options.include_context ? &document : nullptr;

  auto work = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      if (failed && !options.keep_going) return;
      const auto [a, b] = pairs[i];
      try {
        out.predictions[i] = classify_dependency(rules[a], rules[b], context, backend, options);
      } catch (const Error& e) {
        if (!options.keep_going) {
          errors[i] = std::current_exception();
          failed = true;
        }
        out.predictions[i].error = e.what();
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
      out.predictions[i].a = a;
      out.predictions[i].b = b;
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.concurrency, 1, std::max<std::size_t>(1, pairs.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out.graph = build_graph(rules, prediction_labels(out.predictions)).graph;
  return out;
}

// ------------------------------------------------------------ serialization

inline std::string prediction_label(const DependencyPrediction& p) {
  if (p.error) return "error";
  return p.predicted ? std::string(dependency_name(*p.predicted)) : "no";
}

inline nlohmann::json warnings_to_json(const std::vector<ParseWarning>& warnings) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& w : warnings) out.push_back({{"fragment", w.fragment}, {"text", w.text}, {"message", w.message}});
  return out;
}

inline nlohmann::json extraction_to_json(const ExtractionResult& r) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& rule : r.rules) rules.push_back(format_rule(rule));
  return {{"document_id", r.document_id},
          {"variant", variant_name(r.variant)},
          {"model", r.exchange.model},
          {"rules", rules},
          {"warnings", warnings_to_json(r.warnings)}};
}

inline nlohmann::json pipeline_to_json(const PipelineResult& r) {
  nlohmann::json out = extraction_to_json(r.extraction);
  nlohmann::json predictions = nlohmann::json::array();
  for (const auto& p : r.predictions) {
    nlohmann::json j = {{"a", p.a}, {"b", p.b}, {"label", prediction_label(p)}};
    if (p.error) j["error"] = *p.error;
    predictions.push_back(std::move(j));
  }
  out["predictions"] = std::move(predictions);
  out["graph"] = graph_to_json(r.graph);
  return out;
}

/// A stored extraction or pipeline result. Exchanges are not serialized, so
/// they come back empty.
struct StoredResult {
  ExtractionResult extraction;
  std::optional<std::vector<DependencyPrediction>> predictions;
  std::optional<RuleFlowGraph> graph;
};

inline StoredResult stored_result_from_json(const nlohmann::json& j, const std::string& path) {
  StoredResult out;
  if (!j.is_object()) detail::schema_error(path, "expected an object");
  out.extraction.document_id = detail::require_string(j, path, "document_id");
  const std::string variant = detail::require_string(j, path, "variant");
  const auto v = parse_variant(variant);
  if (!v) detail::schema_error(path + "/variant", "unknown variant '" + variant + "'");
  out.extraction.variant = *v;
  out.extraction.exchange.model = detail::optional_string(j, path, "model").value_or("");

  const auto& rules = detail::require(j, path, "rules");
  if (!rules.is_array()) detail::schema_error(path + "/rules", "expected an array");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (!rules[i].is_string()) detail::schema_error(path + "/rules/" + std::to_string(i), "expected a string");
    try {
      out.extraction.rules.push_back(parse_rule(rules[i].get<std::string>()));
    } catch (const Error& e) {
      detail::schema_error(path + "/rules/" + std::to_string(i), e.what());
    }
  }
  if (auto it = j.find("warnings"); it != j.end() && it->is_array()) {
    for (const auto& w : *it) {
      out.extraction.warnings.push_back(
          {w.value("fragment", std::size_t{0}), w.value("text", std::string()), w.value("message", std::string())});
    }
  }

  if (auto it = j.find("predictions"); it != j.end()) {
    if (!it->is_array()) detail::schema_error(path + "/predictions", "expected an array");
    std::vector<DependencyPrediction> predictions;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string ppath = path + "/predictions/" + std::to_string(i);
      DependencyPrediction p;
      p.a = detail::require_index((*it)[i], ppath, "a");
      p.b = detail::require_index((*it)[i], ppath, "b");
      const std::string label = detail::require_string((*it)[i], ppath, "label");
      if (label == "error") {
        p.error = detail::optional_string((*it)[i], ppath, "error").value_or("unknown error");
      } else if (label != "no") {
        p.predicted = parse_dependency_kind(label);
        if (!p.predicted) detail::schema_error(ppath + "/label", "unknown label '" + label + "'");
      }
      predictions.push_back(std::move(p));
    }
    out.predictions = std::move(predictions);
  }
  if (auto it = j.find("graph"); it != j.end()) out.graph = graph_from_json(*it, path + "/graph");
  return out;
}

}  // namespace exide
