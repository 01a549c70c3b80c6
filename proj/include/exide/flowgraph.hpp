#pragma once

// Rule-flow graphs: rules as nodes, typed dependencies as edges.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "exide/corpus.hpp"
#include "exide/error.hpp"
#include "exide/rule.hpp"
#include "exide/text.hpp"

namespace exide {

struct GraphEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  DependencyKind kind = DependencyKind::Sequential;
  std::optional<std::string> trigger;

  bool operator==(const GraphEdge&) const = default;
};

/// Parallel edges are stored once with from < to.
struct RuleFlowGraph {
  std::vector<BusinessRule> nodes;
  std::vector<GraphEdge> edges;

  bool operator==(const RuleFlowGraph&) const = default;

  std::size_t count(DependencyKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(edges.begin(), edges.end(), [&](const GraphEdge& e) { return e.kind == kind; }));
  }
};

/// A label over a rule pair; an empty kind means "no dependency".
struct PairLabel {
  std::size_t from = 0;
  std::size_t to = 0;
  std::optional<DependencyKind> kind;
  std::optional<std::string> trigger;
};

struct GraphWarning {
  std::size_t from = 0;
  std::size_t to = 0;
  std::string detail;
};

struct GraphBuild {
  RuleFlowGraph graph;
  std::vector<GraphWarning> warnings;
};

/// Drops "no" labels and duplicates. When one pair carries two different
/// kinds the first label wins and the other is reported.
inline GraphBuild build_graph(const std::vector<BusinessRule>& rules, const std::vector<PairLabel>& labels) {
  GraphBuild out;
  out.graph.nodes = rules;
  const std::size_t n = rules.size();
  std::map<std::pair<std::size_t, std::size_t>, DependencyKind> pair_kind;
  std::set<std::tuple<std::size_t, std::size_t, DependencyKind>> seen;

  for (const PairLabel& l : labels) {
    if (l.from >= n || l.to >= n) {
      throw Error(Errc::IndexOutOfRange,
                  "(" + std::to_string(l.from) + ", " + std::to_string(l.to) + ") with " + std::to_string(n) + " rules");
    }
    if (l.from == l.to) throw Error(Errc::Invariant, "self-edge on rule " + std::to_string(l.from));
    if (!l.kind) continue;

    GraphEdge e{l.from, l.to, *l.kind, l.kind == DependencyKind::Conditional ? l.trigger : std::nullopt};
    if (e.kind == DependencyKind::Parallel && e.from > e.to) std::swap(e.from, e.to);
    const auto key = std::minmax(e.from, e.to);
    if (auto it = pair_kind.find(key); it != pair_kind.end() && it->second != e.kind) {
      out.warnings.push_back({l.from, l.to,
                              "conflict: kept " + std::string(dependency_name(it->second)) + ", dropped " +
                                  std::string(dependency_name(e.kind))});
      continue;
    }
    pair_kind.emplace(key, e.kind);
    if (!seen.emplace(e.from, e.to, e.kind).second) continue;
    out.graph.edges.push_back(std::move(e));
  }
  std::sort(out.graph.edges.begin(), out.graph.edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
    return std::tie(a.from, a.to, a.kind) < std::tie(b.from, b.to, b.kind);
  });
  return out;
}

inline GraphBuild build_graph(const std::vector<BusinessRule>& rules, const std::vector<DependencyLabel>& labels) {
  std::vector<PairLabel> pairs;
  pairs.reserve(labels.size());
  for (const auto& l : labels) pairs.push_back({l.from, l.to, l.kind, l.trigger});
  return build_graph(rules, pairs);
}

enum class DiagnosticKind { CycleDetected, DuplicateTrigger, Unreachable };

constexpr std::string_view diagnostic_name(DiagnosticKind k) noexcept {
  switch (k) {
    case DiagnosticKind::CycleDetected: return "CycleDetected";
    case DiagnosticKind::DuplicateTrigger: return "DuplicateTrigger";
    case DiagnosticKind::Unreachable: return "Unreachable";
  }
  return "";
}

struct GraphDiagnostic {
  DiagnosticKind kind;
  std::vector<std::size_t> nodes;
  std::string detail;
  bool informational = false;
};

inline std::vector<GraphDiagnostic> validate_graph(const RuleFlowGraph& graph) {
  std::vector<GraphDiagnostic> out;
  const std::size_t n = graph.nodes.size();

  // Sequential cycles: strongly connected components with more than one
  // node, found with Tarjan's algorithm.
  {
    std::vector<std::vector<std::size_t>> succ(n);
    for (const auto& e : graph.edges) {
      if (e.kind == DependencyKind::Sequential && e.from < n && e.to < n) succ[e.from].push_back(e.to);
    }
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> components;
    int counter = 0;
    std::function<void(std::size_t)> visit = [&](std::size_t v) {
      index[v] = low[v] = counter++;
      stack.push_back(v);
      on_stack[v] = true;
      for (std::size_t w : succ[v]) {
        if (index[w] < 0) {
          visit(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      }
      if (low[v] == index[v]) {
        std::vector<std::size_t> component;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          component.push_back(w);
        } while (w != v);
        if (component.size() > 1) {
          std::sort(component.begin(), component.end());
          components.push_back(std::move(component));
        }
      }
    };
    for (std::size_t v = 0; v < n; ++v) {
      if (index[v] < 0) visit(v);
    }
    std::sort(components.begin(), components.end());
    for (auto& c : components) {
      std::string detail = "sequential cycle through";
      for (std::size_t v : c) detail += " R" + std::to_string(v);
      out.push_back({DiagnosticKind::CycleDetected, std::move(c), std::move(detail), false});
    }
  }

  {
    std::map<std::pair<std::size_t, std::string>, std::vector<std::size_t>> by_trigger;
    for (const auto& e : graph.edges) {
      if (e.kind == DependencyKind::Conditional && e.trigger) {
        by_trigger[{e.from, text::normalize(*e.trigger)}].push_back(e.to);
      }
    }
    for (auto& [key, targets] : by_trigger) {
      if (targets.size() < 2) continue;
      std::vector<std::size_t> nodes{key.first};
      nodes.insert(nodes.end(), targets.begin(), targets.end());
      out.push_back({DiagnosticKind::DuplicateTrigger, std::move(nodes),
                     "R" + std::to_string(key.first) + " branches twice on '" + key.second + "'", false});
    }
  }

  {
    std::vector<std::vector<std::size_t>> succ(n);
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& e : graph.edges) {
      if (e.kind == DependencyKind::Parallel || e.from >= n || e.to >= n) continue;
      succ[e.from].push_back(e.to);
      ++indegree[e.to];
    }
    std::vector<bool> reached(n, false);
    std::vector<std::size_t> frontier;
    for (std::size_t v = 0; v < n; ++v) {
      if (indegree[v] == 0) {
        reached[v] = true;
        frontier.push_back(v);
      }
    }
    while (!frontier.empty()) {
      const std::size_t v = frontier.back();
      frontier.pop_back();
      for (std::size_t w : succ[v]) {
        if (!reached[w]) {
          reached[w] = true;
          frontier.push_back(w);
        }
      }
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (!reached[v]) {
        out.push_back({DiagnosticKind::Unreachable, {v}, "R" + std::to_string(v) + " has no path from a source rule",
                       true});
      }
    }
  }
  return out;
}

namespace detail {

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

inline std::string to_dot(const RuleFlowGraph& graph) {
  std::ostringstream out;
  out << "digraph rule_flow {\n";
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    out << "  R" << i << " [label="
        << detail::dot_quote("R" + std::to_string(i) + ": " + graph.nodes[i].condition.slot_type) << "];\n";
  }
  for (const auto& e : graph.edges) {
    out << "  R" << e.from << " -> R" << e.to << " [kind=" << dependency_name(e.kind);
    if (e.kind == DependencyKind::Conditional && e.trigger) out << ", label=" << detail::dot_quote(*e.trigger);
    if (e.kind == DependencyKind::Parallel) out << ", dir=none";
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

inline nlohmann::json graph_to_json(const RuleFlowGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& r : graph.nodes) nodes.push_back(rule_to_json(r));
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges) {
    edges.push_back({{"from", e.from},
                     {"to", e.to},
                     {"kind", dependency_name(e.kind)},
                     {"trigger", e.trigger ? nlohmann::json(*e.trigger) : nlohmann::json(nullptr)}});
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

inline RuleFlowGraph graph_from_json(const nlohmann::json& j, const std::string& path) {
  RuleFlowGraph g;
  const auto& nodes = detail::require(j, path, "nodes");
  if (!nodes.is_array()) detail::schema_error(path + "/nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) g.nodes.push_back(rule_from_json(nodes[i], path + "/nodes/" + std::to_string(i)));
  const auto& edges = detail::require(j, path, "edges");
  if (!edges.is_array()) detail::schema_error(path + "/edges", "expected an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string epath = path + "/edges/" + std::to_string(i);
    GraphEdge e;
    e.from = detail::require_index(edges[i], epath, "from");
    e.to = detail::require_index(edges[i], epath, "to");
    const auto kind = parse_dependency_kind(detail::require_string(edges[i], epath, "kind"));
    if (!kind) detail::schema_error(epath + "/kind", "expected sequential, conditional or parallel");
    e.kind = *kind;
    e.trigger = detail::optional_string(edges[i], epath, "trigger");
    if (e.from >= g.nodes.size() || e.to >= g.nodes.size()) detail::schema_error(epath, "edge references a missing node");
    g.edges.push_back(std::move(e));
  }
  return g;
}

}  // namespace exide
