#pragma once

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clauseforge/annotation.hpp"

namespace clauseforge {

enum class NodeKind { CONDITION, ACTION };
enum class EdgeLabel { TRUE_BRANCH, FALSE_BRANCH, NEXT };

inline std::string_view edge_label_name(EdgeLabel e) {
  switch (e) {
    case EdgeLabel::TRUE_BRANCH: return "TRUE";
    case EdgeLabel::FALSE_BRANCH: return "FALSE";
    case EdgeLabel::NEXT: return "NEXT";
  }
  return "?";
}

struct GraphNode {
  std::string id;
  NodeKind kind = NodeKind::ACTION;
  std::string text;  // surface text of the source span
  TagType source_tag = TagType::NN;

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::string from;
  std::string to;
  EdgeLabel label = EdgeLabel::NEXT;

  bool operator==(const GraphEdge&) const = default;
};

struct DecompositionGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  bool empty() const { return nodes.empty(); }
  bool operator==(const DecompositionGraph&) const = default;
};

// A template matches when the annotation's tag set equals required_tags
// exactly; build() then lays out the nodes and edges.
struct GraphTemplate {
  std::string id;
  std::set<TagType> required_tags;
};

inline const std::vector<GraphTemplate>& graph_template_registry() {
  static const std::vector<GraphTemplate> registry = {
      {"conditional", {TagType::CND, TagType::CSQ}},
      {"conditional_with_alternative", {TagType::CND, TagType::CSQ, TagType::ALT}},
      {"sequence2", {TagType::FA, TagType::SA}},
      {"sequence3", {TagType::FA, TagType::SA, TagType::TA}},
  };
  return registry;
}

namespace detail {

inline std::string span_text(const AnnotationSet& a, const SpanAnnotation& s) {
  const auto& toks = a.utterance.tokens;
  std::size_t b = toks[s.token_start].start;
  std::size_t e = toks[s.token_end - 1].end;
  return a.utterance.text.substr(b, e - b);
}

inline const SpanAnnotation* find_span(const AnnotationSet& a, TagType t) {
  for (const auto& s : a.spans)
    if (s.tag == t) return &s;
  return nullptr;
}

}  // namespace detail

// Algorithm: walk the registry in order; the first template whose required
// tags equal the annotation's tag set produces the graph. No template means
// an empty graph, never a partial one.
inline DecompositionGraph create_graph(const AnnotationSet& annotations) {
  DecompositionGraph g;
  std::set<TagType> present;
  for (const auto& s : annotations.spans) present.insert(s.tag);
  if (present.empty()) return g;

  const GraphTemplate* tpl = nullptr;
  for (const auto& t : graph_template_registry()) {
    if (t.required_tags == present) { tpl = &t; break; }
  }
  if (!tpl) return g;

  auto add_node = [&](TagType t, NodeKind kind, const char* id) {
    const SpanAnnotation* s = detail::find_span(annotations, t);
    g.nodes.push_back({id, kind, detail::span_text(annotations, *s), t});
  };
  if (present.count(TagType::CND)) {
    add_node(TagType::CND, NodeKind::CONDITION, "cond");
    add_node(TagType::CSQ, NodeKind::ACTION, "then");
    g.edges.push_back({"cond", "then", EdgeLabel::TRUE_BRANCH});
    if (present.count(TagType::ALT)) {
      add_node(TagType::ALT, NodeKind::ACTION, "else");
      g.edges.push_back({"cond", "else", EdgeLabel::FALSE_BRANCH});
    }
  } else {
    add_node(TagType::FA, NodeKind::ACTION, "a1");
    add_node(TagType::SA, NodeKind::ACTION, "a2");
    g.edges.push_back({"a1", "a2", EdgeLabel::NEXT});
    if (present.count(TagType::TA)) {
      add_node(TagType::TA, NodeKind::ACTION, "a3");
      g.edges.push_back({"a2", "a3", EdgeLabel::NEXT});
    }
  }
  return g;
}

inline nlohmann::json graph_to_json(const DecompositionGraph& g) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  j["edges"] = nlohmann::json::array();
  for (const auto& n : g.nodes)
    j["nodes"].push_back({{"id", n.id},
                          {"kind", n.kind == NodeKind::CONDITION ? "CONDITION" : "ACTION"},
                          {"text", n.text},
                          {"tag", std::string(tag_name(n.source_tag))}});
  for (const auto& e : g.edges)
    j["edges"].push_back({{"from", e.from},
                          {"to", e.to},
                          {"label", std::string(edge_label_name(e.label))}});
  return j;
}

inline DecompositionGraph graph_from_json(const nlohmann::json& j) {
  DecompositionGraph g;
  for (const auto& n : j.at("nodes")) {
    GraphNode node;
    node.id = n.at("id").get<std::string>();
    node.kind = n.at("kind").get<std::string>() == "CONDITION"
                    ? NodeKind::CONDITION
                    : NodeKind::ACTION;
    node.text = n.at("text").get<std::string>();
    auto t = parse_tag(n.at("tag").get<std::string>());
    if (!t) throw std::invalid_argument("graph_from_json: bad tag");
    node.source_tag = *t;
    g.nodes.push_back(std::move(node));
  }
  for (const auto& e : j.at("edges")) {
    GraphEdge edge;
    edge.from = e.at("from").get<std::string>();
    edge.to = e.at("to").get<std::string>();
    std::string l = e.at("label").get<std::string>();
    edge.label = l == "TRUE" ? EdgeLabel::TRUE_BRANCH
                 : l == "FALSE" ? EdgeLabel::FALSE_BRANCH
                                : EdgeLabel::NEXT;
    g.edges.push_back(std::move(edge));
  }
  return g;
}

inline std::string graph_to_dot(const DecompositionGraph& g) {
  std::ostringstream out;
  out << "digraph decomposition {\n";
  for (const auto& n : g.nodes) {
    out << "  " << n.id << " [label=\"" << n.text << "\" shape="
        << (n.kind == NodeKind::CONDITION ? "diamond" : "box") << "];\n";
  }
  for (const auto& e : g.edges)
    out << "  " << e.from << " -> " << e.to << " [label=\""
        << edge_label_name(e.label) << "\"];\n";
  out << "}\n";
  return out.str();
}

}  // namespace clauseforge
