#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dgsm/error.hpp"
#include "dgsm/spn/graph.hpp"

namespace dgsm::spn {

// Text format:
//   spn v1 <num_vars> <num_nodes>
//   <cardinality of var 0> <cardinality of var 1> ...
//   I <var> <val> | P <child...> | S <child:weight...>     (one per node)
//   root <id>
// Weights are written with 17 significant digits, which round-trips doubles.

/// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline void write_spn(std::ostream& out, const SpnGraph& g) {
  out << "spn v1 " << g.num_vars() << ' ' << g.num_nodes() << '\n';
  for (std::size_t v = 0; v < g.num_vars(); ++v) {
    if (v) out << ' ';
    out << g.cardinality(static_cast<VariableId>(v));
  }
  out << '\n';
  std::string line;
  for (NodeId n = 0; n < g.num_nodes(); ++n) {
    switch (g.kind(n)) {
      case NodeKind::Indicator:
        out << "I " << g.indicator_variable(n) << ' ' << g.indicator_value(n) << '\n';
        break;
      case NodeKind::Product:
        out << 'P';
        for (NodeId c : g.children(n)) out << ' ' << c;
        out << '\n';
        break;
      case NodeKind::Sum:
        line = "S";
        for (auto e = g.first_edge(n); e < g.end_edge(n); ++e) {
          line += ' ';
          line += std::to_string(g.edge_child(e));
          line += ':';
          line += format_double(g.edge_weight(e));
        }
        out << line << '\n';
        break;
    }
  }
  out << "root " << g.root() << '\n';
}

inline std::string to_text(const SpnGraph& g) {
  std::ostringstream os;
  write_spn(os, g);
  return os.str();
}

namespace detail {

[[noreturn]] inline void parse_fail(std::size_t line_no, const std::string& what) {
  throw Error(ErrorKind::ParseError, "spn line " + std::to_string(line_no) + ": " + what);
}

inline unsigned long parse_uint(const std::string& tok, std::size_t line_no) {
  if (tok.empty() || tok[0] == '-') parse_fail(line_no, "expected unsigned integer, got '" + tok + "'");
  char* end = nullptr;
  const unsigned long v = std::strtoul(tok.c_str(), &end, 10);
  if (*end != '\0') parse_fail(line_no, "expected unsigned integer, got '" + tok + "'");
  return v;
}

}  // namespace detail

inline SpnGraph read_spn(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) detail::parse_fail(line_no + 1, "unexpected end of input");
    ++line_no;
    return std::istringstream(line);
  };

  auto header = next_line();
  std::string magic, version;
  std::size_t num_vars = 0, num_nodes = 0;
  if (!(header >> magic >> version >> num_vars >> num_nodes) || magic != "spn" || version != "v1") {
    detail::parse_fail(line_no, "bad header '" + line + "'");
  }

  std::vector<std::uint32_t> cards;
  cards.reserve(num_vars);
  if (num_vars > 0) {
    auto cl = next_line();
    std::string tok;
    while (cl >> tok) cards.push_back(static_cast<std::uint32_t>(detail::parse_uint(tok, line_no)));
    if (cards.size() != num_vars) detail::parse_fail(line_no, "cardinality count mismatch");
  }

  std::vector<NodeSpec> nodes;
  nodes.reserve(num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    auto nl = next_line();
    std::string tag, tok;
    nl >> tag;
    NodeSpec spec;
    if (tag == "I") {
      std::string a, b;
      if (!(nl >> a >> b)) detail::parse_fail(line_no, "indicator needs variable and value");
      spec = NodeSpec::indicator(static_cast<VariableId>(detail::parse_uint(a, line_no)),
                                 static_cast<std::uint32_t>(detail::parse_uint(b, line_no)));
    } else if (tag == "P") {
      spec.kind = NodeKind::Product;
      while (nl >> tok) spec.children.push_back(static_cast<NodeId>(detail::parse_uint(tok, line_no)));
    } else if (tag == "S") {
      spec.kind = NodeKind::Sum;
      while (nl >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos) detail::parse_fail(line_no, "sum edge needs child:weight");
        spec.children.push_back(
            static_cast<NodeId>(detail::parse_uint(tok.substr(0, colon), line_no)));
        const std::string w = tok.substr(colon + 1);
        char* end = nullptr;
        const double weight = std::strtod(w.c_str(), &end);
        if (w.empty() || *end != '\0') detail::parse_fail(line_no, "bad weight '" + w + "'");
        spec.weights.push_back(weight);
      }
    } else {
      detail::parse_fail(line_no, "unknown node tag '" + tag + "'");
    }
    nodes.push_back(std::move(spec));
  }

  auto rl = next_line();
  std::string kw, root_tok;
  if (!(rl >> kw >> root_tok) || kw != "root") detail::parse_fail(line_no, "expected 'root <id>'");
  return SpnGraph(std::move(cards), nodes, static_cast<NodeId>(detail::parse_uint(root_tok, line_no)));
}

inline SpnGraph from_text(const std::string& text) {
  std::istringstream is(text);
  return read_spn(is);
}

inline void save_spn(const std::string& path, const SpnGraph& g) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  write_spn(out, g);
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

inline SpnGraph load_spn(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
  return read_spn(in);
}

}  // namespace dgsm::spn
