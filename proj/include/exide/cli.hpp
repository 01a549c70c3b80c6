#pragma once

// Command-line front end. run_cli() is the whole program minus main(), so
// it can be driven in-process.
//
// Exit codes: 0 success, 1 configuration or usage, 2 pipeline or
// evaluation failure, 3 I/O.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "exide/corpus.hpp"
#include "exide/error.hpp"
#include "exide/flowgraph.hpp"
#include "exide/http_backend.hpp"
#include "exide/llm.hpp"
#include "exide/metrics.hpp"
#include "exide/pipeline.hpp"
#include "exide/prompt.hpp"

namespace exide::cli {

enum ExitCode : int { kOk = 0, kConfig = 1, kFailure = 2, kIo = 3 };

inline int exit_code(Errc e) {
  switch (e) {
    case Errc::Config: return kConfig;
    case Errc::Io: return kIo;
    default: return kFailure;
  }
}

struct Config {
  std::filesystem::path corpus;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> templates;
  std::string language = "en";
  std::optional<std::string> backend;
  std::optional<std::filesystem::path> transcript;
  std::optional<std::filesystem::path> script;
  std::string endpoint;
  std::string model = "default";
  double temperature = 0.0;
  std::optional<int> max_tokens;
  std::optional<std::filesystem::path> api_key_file;
  std::string variant = "p1";
  std::size_t concurrency = 1;
  bool strict = false;
  bool keep_going = false;
  bool rules_only = false;
  bool three_class = false;
  bool present_only = true;
};

/// Loaded resources shared by the subcommands.
struct Session {
  Config config;
  TemplateSet templates;
  PipelineOptions options;

  explicit Session(Config c) : config(std::move(c)) {
    const auto lang = parse_language(config.language);
    if (!lang) throw Error(Errc::Config, "unknown language '" + config.language + "'");
    templates = config.templates ? TemplateSet::load(*config.templates, *lang) : TemplateSet::builtin(*lang);
    if (config.concurrency < 1) throw Error(Errc::Config, "concurrency must be at least 1");
    options.model = config.model;
    options.temperature = config.temperature;
    options.max_tokens = config.max_tokens;
    options.templates = &templates;
    options.concurrency = config.concurrency;
    options.strict = config.strict;
    options.keep_going = config.keep_going;
    options.include_context = !config.rules_only;
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  PromptVariant variant() const {
    const auto v = parse_variant(config.variant);
    if (!v) throw Error(Errc::Config, "unknown variant '" + config.variant + "'");
    return *v;
  }

  std::vector<Document> corpus() const {
    if (config.corpus.empty()) throw Error(Errc::Config, "--corpus is required");
    return load_corpus(config.corpus);
  }

  std::filesystem::path output_dir() const {
    std::error_code ec;
    std::filesystem::create_directories(config.out, ec);
    if (ec) throw Error(Errc::Io, "cannot create " + config.out.string() + ": " + ec.message());
    return config.out;
  }
};

namespace detail {

/// A scripted-backend file is either {digest: response} or an array of
/// {"contains": substring, "response": text}; the first entry whose
/// substring occurs in the prompt answers.
inline std::unique_ptr<Backend> scripted_backend(const std::filesystem::path& path) {
  const nlohmann::json j = parse_json(read_file(path), path.string());
  if (j.is_object()) {
    std::map<std::string, std::string> responses;
    for (const auto& [digest, response] : j.items()) {
      if (!response.is_string()) exide::detail::schema_error(path.string() + "/" + digest, "expected a string");
      responses.emplace(digest, response.get<std::string>());
    }
    return std::make_unique<ScriptedBackend>(std::move(responses));
  }
  if (!j.is_array()) exide::detail::schema_error(path.string(), "expected an object or an array");
  std::vector<std::pair<std::string, std::string>> rules;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = path.string() + "/" + std::to_string(i);
    rules.emplace_back(exide::detail::optional_string(j[i], where, "contains").value_or(""),
                       exide::detail::require_string(j[i], where, "response"));
  }
  return std::make_unique<ScriptedBackend>(
      [rules = std::move(rules)](const CompletionRequest& request) -> std::optional<std::string> {
        const std::string prompt = prompt_text(request);
        for (const auto& [needle, response] : rules) {
          if (prompt.find(needle) != std::string::npos) return response;
        }
        return std::nullopt;
      });
}

}  // namespace detail

inline std::unique_ptr<Backend> make_backend(const Config& c) {
  if (!c.backend) throw Error(Errc::Config, "--backend is required (http, replay or scripted)");
  if (*c.backend == "replay") {
    if (!c.transcript) throw Error(Errc::Config, "--backend replay needs --transcript");
    return std::make_unique<ReplayBackend>(*c.transcript);
  }
  if (*c.backend == "scripted") {
    if (!c.script) throw Error(Errc::Config, "--backend scripted needs --script");
    return detail::scripted_backend(*c.script);
  }
  if (*c.backend == "http") {
    if (c.endpoint.empty()) throw Error(Errc::Config, "--backend http needs --endpoint");
    HttpOptions options;
    options.endpoint = c.endpoint;
    options.api_key = resolve_api_key(c.api_key_file);
    options.max_in_flight = static_cast<std::ptrdiff_t>(std::max<std::size_t>(c.concurrency, 1));
    return std::make_unique<HttpBackend>(std::move(options));
  }
  throw Error(Errc::Config, "unknown backend '" + *c.backend + "'");
}

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline std::string result_stem(const std::string& document_id, PromptVariant v) {
  return document_id + "." + std::string(variant_alias(v));
}

// ------------------------------------------------------------------ extract

inline int cmd_extract(Session& s, std::ostream& out, std::ostream& err) {
  const auto variant = s.variant();
  const auto docs = s.corpus();
  auto backend = make_backend(s.config);
  const auto dir = s.output_dir();
  for (const Document& d : docs) {
    try {
      const ExtractionResult r = extract_rules(d, variant, *backend, s.options);
      const auto path = dir / (result_stem(d.id, variant) + ".extraction.json");
      write_file(path, dump(extraction_to_json(r)));
      out << d.id << ": " << r.rules.size() << " rules, " << r.warnings.size() << " warnings -> " << path.string()
          << "\n";
    } catch (const Error& e) {
      err << d.id << ": " << e.what() << "\n";
      if (e.code() == Errc::Io) return kIo;
      if (!s.config.keep_going) return kFailure;
    }
  }
  return kOk;
}

// ----------------------------------------------------------------- pipeline

inline int run_pipelines(Session& s, Backend& backend, std::ostream& out, std::ostream& err, bool write_outputs) {
  const auto variant = s.variant();
  const auto docs = s.corpus();
  const auto dir = write_outputs ? s.output_dir() : std::filesystem::path();
  for (const Document& d : docs) {
    try {
      const PipelineResult r = run_pipeline(d, variant, backend, s.options);
      std::size_t errors = 0;
      for (const auto& p : r.predictions) errors += p.error ? 1 : 0;
      out << d.id << ": " << r.extraction.rules.size() << " rules, " << r.predictions.size() << " pairs, "
          << r.graph.edges.size() << " edges";
      if (errors > 0) out << ", " << errors << " failed pairs";
      if (write_outputs) {
        const auto stem = dir / result_stem(d.id, variant);
        write_file(stem.string() + ".pipeline.json", dump(pipeline_to_json(r)));
        write_file(stem.string() + ".dot", to_dot(r.graph));
        out << " -> " << stem.string() << ".pipeline.json";
      }
      out << "\n";
    } catch (const Error& e) {
      err << d.id << ": " << e.what() << "\n";
      if (e.code() == Errc::Io) return kIo;
      if (!s.config.keep_going) return exit_code(e.code()) == kConfig ? kConfig : kFailure;
    }
  }
  return kOk;
}

inline int cmd_pipeline(Session& s, std::ostream& out, std::ostream& err) {
  auto backend = make_backend(s.config);
  return run_pipelines(s, *backend, out, err, true);
}

/// Runs the pipeline against a backend and appends every exchange to the
/// transcript given by --record-to.
inline int cmd_record(Session& s, const std::filesystem::path& record_to, std::ostream& out, std::ostream& err) {
  auto backend = make_backend(s.config);
  RecordingBackend recorder(*backend, record_to);
  return run_pipelines(s, recorder, out, err, false);
}

// --------------------------------------------------------------------- eval

namespace detail {

inline std::vector<std::filesystem::path> result_files(const std::vector<std::string>& inputs) {
  std::vector<std::filesystem::path> out;
  for (const auto& in : inputs) {
    const std::filesystem::path p(in);
    std::error_code ec;
    if (std::filesystem::is_directory(p, ec)) {
      std::vector<std::filesystem::path> found;
      for (const auto& entry : std::filesystem::directory_iterator(p)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && (name.ends_with(".pipeline.json") || name.ends_with(".extraction.json"))) {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (std::filesystem::is_regular_file(p, ec)) {
      out.push_back(p);
    } else {
      throw Error(Errc::Io, "no such file or directory: " + in);
    }
  }
  return out;
}

struct EvalGroup {
  std::size_t documents = 0;
  EntityCounts entity;
  ConfusionMatrix judgement;
  std::optional<ConfusionMatrix> dependency;
};

}  // namespace detail

/// Scores stored results against the gold corpus. Counts are pooled over
/// documents within each (model, variant) group and over all inputs.
inline int cmd_eval(Session& s, const std::vector<std::string>& inputs, std::ostream& out, std::ostream& err) {
  const auto docs = s.corpus();
  std::map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id[d.id] = &d;

  std::map<std::pair<std::string, std::string>, detail::EvalGroup> groups;
  detail::EvalGroup all;
  for (const auto& path : detail::result_files(inputs)) {
    const StoredResult r = stored_result_from_json(parse_json(read_file(path), path.string()), path.string());
    auto it = by_id.find(r.extraction.document_id);
    if (it == by_id.end()) {
      err << path.string() << ": document '" << r.extraction.document_id << "' is not in the corpus\n";
      return kFailure;
    }
    const Document& gold = *it->second;
    auto& g = groups[{r.extraction.exchange.model, std::string(variant_alias(r.extraction.variant))}];
    const EntityCounts entity = extraction_counts(gold, gold.gold_rules, r.extraction.rules);
    const ConfusionMatrix judgement = judgement_confusion(gold.gold_rules, r.extraction.rules);
    for (auto* target : {&g, &all}) {
      ++target->documents;
      target->entity += entity;
      target->judgement += judgement;
    }
    if (r.predictions) {
      for (const auto& p : *r.predictions) {
        if (p.error) err << path.string() << ": pair (" << p.a << ", " << p.b << ") failed; scored as no\n";
      }
      const ConfusionMatrix m = dependency_confusion(
          gold.gold_dependencies,
          align_predictions(align_rules(gold.gold_rules, r.extraction.rules), prediction_labels(*r.predictions)),
          gold.gold_rules.size(), s.config.three_class);
      for (auto* target : {&g, &all}) {
        if (!target->dependency) target->dependency.emplace();
        *target->dependency += m;
      }
    }
  }

  const bool present_only = s.config.present_only;
  auto report = [&](const detail::EvalGroup& g) {
    nlohmann::json j = {
        {"documents", g.documents},
        {"entity", entity_score_to_json(entity_score(g.entity))},
        {"judgement", classification_to_json(score_confusion(g.judgement, judgement_classes(), present_only))},
        {"dependency", nullptr}};
    if (g.dependency) {
      j["dependency"] = classification_to_json(
          score_confusion(*g.dependency, dependency_classes(s.config.three_class), present_only));
    }
    return j;
  };

  nlohmann::json j = report(all);
  j["groups"] = nlohmann::json::array();
  out << std::left << std::setw(16) << "model" << std::setw(8) << "variant" << std::setw(6) << "docs"
      << std::setw(12) << "entity-F1" << std::setw(12) << "entity-mF1" << std::setw(14) << "judgement-mF1"
      << std::setw(10) << "dep-mF1" << "dep-acc\n";
  for (const auto& [key, g] : groups) {
    nlohmann::json row = report(g);
    row["model"] = key.first;
    row["variant"] = key.second;
    out << std::left << std::setw(16) << key.first << std::setw(8) << key.second << std::setw(6) << g.documents
        << std::setw(12) << fixed(row["entity"]["micro_f1"].get<double>()) << std::setw(12)
        << fixed(row["entity"]["macro_f1"].get<double>()) << std::setw(14)
        << fixed(row["judgement"]["macro_f1"].get<double>());
    if (g.dependency) {
      out << std::setw(10) << fixed(row["dependency"]["macro_f1"].get<double>())
          << fixed(row["dependency"]["accuracy"].get<double>()) << "\n";
    } else {
      out << std::setw(10) << "-" << "-\n";
    }
    j["groups"].push_back(std::move(row));
  }

  const auto dir = s.output_dir();
  write_file(dir / "report.json", dump(j));
  write_file(dir / "judgement_confusion.csv",
             confusion_to_csv(score_confusion(all.judgement, judgement_classes(), present_only)));
  if (all.dependency) {
    write_file(dir / "dependency_confusion.csv",
               confusion_to_csv(score_confusion(*all.dependency, dependency_classes(s.config.three_class),
                                                present_only)));
  }
  return kOk;
}

// ---------------------------------------------------------------- agreement

/// Rows are items or subjects, columns raters. Blank lines and lines
/// starting with '#' are skipped; cells are trimmed.
inline std::vector<std::vector<std::string>> read_csv_grid(std::string_view content, bool header) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  bool skipped_header = !header;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = text::trim(content.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.emplace_back(text::trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                        : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline std::optional<RatingsMatrix> as_ratings(const std::vector<std::vector<std::string>>& grid) {
  RatingsMatrix out;
  for (const auto& row : grid) {
    std::vector<double> values;
    for (const auto& cell : row) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
      values.push_back(v);
    }
    out.push_back(std::move(values));
  }
  return out;
}

inline int cmd_agreement(const std::vector<std::string>& files, const std::string& kind, bool header,
                         std::ostream& out, std::ostream& err) {
  if (files.empty()) throw Error(Errc::Config, "agreement needs at least one CSV file");
  if (kind != "auto" && kind != "categorical" && kind != "ratings") {
    throw Error(Errc::Config, "--kind must be auto, categorical or ratings");
  }
  int status = kOk;
  for (const auto& file : files) {
    const auto grid = read_csv_grid(read_file(file), header);
    const auto ratings = kind == "categorical" ? std::nullopt : as_ratings(grid);
    if (kind == "ratings" && !ratings) {
      err << file << ": non-numeric rating\n";
      status = kFailure;
      continue;
    }
    out << file << "\n";
    auto report = [&](const std::string& name, auto&& compute) {
      try {
        out << "  " << name << " = " << fixed(compute(), 6) << "\n";
      } catch (const Error& e) {
        out << "  " << name << " = undefined\n";
        err << file << ": " << e.what() << "\n";
        status = kFailure;
      }
    };
    if (kind != "ratings") report("fleiss_kappa", [&] { return fleiss_kappa(grid); });
    if (ratings) {
      report(std::string(icc_form_name(IccForm::TwoWayRandomSingle)),
             [&] { return icc(*ratings, IccForm::TwoWayRandomSingle); });
      report(std::string(icc_form_name(IccForm::TwoWayRandomAverage)),
             [&] { return icc(*ratings, IccForm::TwoWayRandomAverage); });
    }
  }
  return status;
}

// -------------------------------------------------------------------- stats

inline void print_stats(std::ostream& out, const CorpusStats& s) {
  static constexpr const char* kColumns[] = {
      "texts",        "sentences",  "rules",      "tokens",      "contains",    "equal_to",  "less_than",
      "greater_than", "leq",        "geq",        "sequential",  "conditional", "parallel"};
  std::vector<std::size_t> values{s.texts, s.sentences, s.rules, s.tokens};
  for (LogicalJudgement j : kAllJudgements) values.push_back(s.judgements.at(j));
  for (DependencyKind k : kAllDependencyKinds) values.push_back(s.dependencies.at(k));
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "\t" : "") << kColumns[i];
  out << "\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "\t" : "") << values[i];
  out << "\n";
}

inline int cmd_stats(Session& s, std::ostream& out) {
  print_stats(out, corpus_stats(s.corpus()));
  return kOk;
}

// -------------------------------------------------------------------- graph

inline int cmd_graph(Session& s, const std::vector<std::string>& files, std::ostream& out, std::ostream& err) {
  if (files.empty()) throw Error(Errc::Config, "graph needs at least one stored pipeline result");
  const bool to_stdout = s.config.out == "-";
  int status = kOk;
  for (const auto& file : files) {
    const StoredResult r = stored_result_from_json(parse_json(read_file(file), file), file);
    if (!r.graph) {
      err << file << ": no graph in this result\n";
      status = kFailure;
      continue;
    }
    for (const auto& d : validate_graph(*r.graph)) {
      err << file << ": " << diagnostic_name(d.kind) << ": " << d.detail << "\n";
    }
    if (to_stdout) {
      out << to_dot(*r.graph);
    } else {
      std::string stem = std::filesystem::path(file).filename().string();
      if (stem.ends_with(".pipeline.json")) stem.resize(stem.size() - std::string_view(".pipeline.json").size());
      const auto path = s.output_dir() / (stem + ".dot");
      write_file(path, to_dot(*r.graph));
      out << path.string() << "\n";
    }
  }
  return status;
}

// --------------------------------------------------------------- gen-prompt

inline int cmd_genprompt(Session& s, const std::string& domain, const std::map<std::string, std::string>& constraints,
                         bool complete, std::ostream& out) {
  const PromptBundle prompt = render_generation_prompt(domain, constraints, s.templates);
  if (!complete) {
    out << prompt.user;
    return kOk;
  }
  auto backend = make_backend(s.config);
  const Exchange e = backend->complete(make_request(prompt, s.options));
  std::string slug;
  for (char c : std::string(text::trim(domain))) slug.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  const auto path = s.output_dir() / ("generated_" + slug + ".txt");
  write_file(path, e.response_text);
  out << path.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------- cli

/// Parses `args` (without the program name) and runs one subcommand.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Business-rule extraction and dependency identification", "exide"};
  app.require_subcommand(1);
  app.fallthrough();

  Config c;
  std::string corpus, out_dir = ".", templates, transcript, script, api_key_file, backend;
  int max_tokens = 0;
  app.add_option("--corpus", corpus, "Corpus JSON file");
  app.add_option("--out", out_dir, "Output directory ('-' prints DOT to stdout for graph)");
  app.add_option("--templates", templates, "Directory of template overrides");
  app.add_option("--language", c.language, "Built-in template language (en, zh)");
  app.add_option("--backend", backend, "LLM backend: http, replay or scripted");
  app.add_option("--transcript", transcript, "JSONL transcript for the replay backend");
  app.add_option("--script", script, "JSON responses for the scripted backend");
  app.add_option("--endpoint", c.endpoint, "Base URL of an OpenAI-compatible API");
  app.add_option("--model", c.model, "Model name sent with every request");
  app.add_option("--temperature", c.temperature, "Sampling temperature");
  app.add_option("--max-tokens", max_tokens, "Completion token limit (0 = unset)");
  app.add_option("--api-key-file", api_key_file, "File holding the API key (default: $LLM_API_KEY)");
  app.add_option("--variant", c.variant, "Extraction prompt variant (name or p1..p5)");
  app.add_option("--concurrency", c.concurrency, "Concurrent pair classifications");
  app.add_flag("--strict", c.strict, "Treat an empty extraction as a failure");
  app.add_flag("--keep-going", c.keep_going, "Continue past failed documents and pairs");
  app.add_flag("--rules-only", c.rules_only, "Omit the document text from dependency prompts");
  app.add_flag("--three-class", c.three_class, "Score only annotated dependency pairs");
  bool all_classes = false;
  app.add_flag("--present-only", c.present_only, "Average macro-F1 over occurring classes only (default)");
  app.add_flag("--all-classes", all_classes, "Average macro-F1 over the full class set; absent classes score 0");

  auto* extract = app.add_subcommand("extract", "Extract rules from every corpus document");
  auto* pipeline = app.add_subcommand("pipeline", "Extract rules and classify all rule pairs");
  auto* eval = app.add_subcommand("eval", "Score stored results against the gold corpus");
  std::vector<std::string> eval_inputs;
  eval->add_option("results", eval_inputs, "Result files or directories")->required();
  auto* agreement = app.add_subcommand("agreement", "Fleiss' kappa and ICC for CSV grids");
  std::vector<std::string> grids;
  std::string grid_kind = "auto";
  bool grid_header = false;
  agreement->add_option("grids", grids, "CSV files (rows = items, columns = raters)")->required();
  agreement->add_option("--kind", grid_kind, "auto, categorical or ratings");
  agreement->add_flag("--header", grid_header, "Skip the first row");
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  auto* graph = app.add_subcommand("graph", "DOT files from stored pipeline results");
  std::vector<std::string> graph_inputs;
  graph->add_option("results", graph_inputs, "Stored pipeline results")->required();
  auto* genprompt = app.add_subcommand("gen-prompt", "Render the synthetic-text generation prompt");
  std::string domain;
  std::vector<std::string> constraint_args;
  int rule_count = 0;
  bool complete = false;
  genprompt->add_option("--domain", domain, "Business domain of the text")->required();
  genprompt->add_option("--rules", rule_count, "Number of rules the text must contain");
  genprompt->add_option("--constraint", constraint_args, "Extra key=value constraint");
  genprompt->add_flag("--complete", complete, "Send the prompt to the backend and store the text");
  auto* record = app.add_subcommand("record", "Run the pipeline and append exchanges to a transcript");
  std::string record_to;
  record->add_option("--record-to", record_to, "Transcript to append to")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kConfig;
  }

  c.corpus = corpus;
  if (all_classes) c.present_only = false;
  c.out = out_dir;
  if (!templates.empty()) c.templates = templates;
  if (!backend.empty()) c.backend = backend;
  if (!transcript.empty()) c.transcript = transcript;
  if (!script.empty()) c.script = script;
  if (!api_key_file.empty()) c.api_key_file = api_key_file;
  if (max_tokens > 0) c.max_tokens = max_tokens;

  try {
    if (*agreement) return cmd_agreement(grids, grid_kind, grid_header, out, err);

    Session session(std::move(c));
    if (*extract || *pipeline || *record) session.variant();
    if (*extract) return cmd_extract(session, out, err);
    if (*pipeline) return cmd_pipeline(session, out, err);
    if (*record) return cmd_record(session, record_to, out, err);
    if (*eval) return cmd_eval(session, eval_inputs, out, err);
    if (*stats) return cmd_stats(session, out);
    if (*graph) return cmd_graph(session, graph_inputs, out, err);
    if (*genprompt) {
      std::map<std::string, std::string> constraints;
      if (rule_count > 0) constraints["rules"] = std::to_string(rule_count);
      for (const auto& kv : constraint_args) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(Errc::Config, "--constraint expects key=value, got '" + kv + "'");
        constraints[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      return cmd_genprompt(session, domain, constraints, complete, out);
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    if (e.code() == Errc::Config) err << app.help();
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

}  // namespace exide::cli
