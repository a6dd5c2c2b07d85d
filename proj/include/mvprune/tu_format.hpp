#pragma once

// Reader and writer for the TU graph-kernel flat-file layout:
//   {name}_A.txt                 "u, v" per line, 1-based global node ids
//   {name}_graph_indicator.txt   graph id (1-based) of each node, one per line
//   {name}_graph_labels.txt      class label of each graph, one per line
//   {name}_node_labels.txt       optional categorical node label per line
//   {name}_node_attributes.txt   optional comma-separated real attributes per line

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mvprune/error.hpp"
#include "mvprune/graph.hpp"

namespace mvprune::tu {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Non-empty lines of a file with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw LoadError("cannot open " + p.string());
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    std::string t = trim(line);
    if (!t.empty()) out.emplace_back(no, std::move(t));
  }
  return out;
}

inline std::vector<std::string> split_fields(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  return out;
}

inline long long parse_int(const std::string& s, const std::filesystem::path& file, std::size_t line) {
  long long v = 0;
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) {
    throw FormatError(file.filename().string() + ":" + std::to_string(line) + ": expected integer, got '" + s + "'");
  }
  return v;
}

inline double parse_real(const std::string& s, const std::filesystem::path& file, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(file.filename().string() + ":" + std::to_string(line) + ": expected number, got '" + s + "'");
  }
}

inline std::filesystem::path require(const std::filesystem::path& dir, const std::string& name, const char* suffix) {
  auto p = dir / (name + suffix);
  if (!std::filesystem::exists(p)) throw LoadError("missing required file " + p.string());
  return p;
}

}  // namespace detail

/// Loads `{directory}/{name}_*.txt`. Edges are symmetrized and deduplicated,
/// self-loops dropped, node labels one-hot encoded ahead of the attributes, and
/// graph labels remapped to a contiguous 0-based range in sorted order.
inline Dataset load(const std::filesystem::path& directory, const std::string& name) {
  using detail::parse_int;
  const auto a_path = detail::require(directory, name, "_A.txt");
  const auto gi_path = detail::require(directory, name, "_graph_indicator.txt");
  const auto gl_path = detail::require(directory, name, "_graph_labels.txt");
  const auto nl_path = directory / (name + "_node_labels.txt");
  const auto na_path = directory / (name + "_node_attributes.txt");
  const bool has_nl = std::filesystem::exists(nl_path);
  const bool has_na = std::filesystem::exists(na_path);
  if (!has_nl && !has_na) {
    throw LoadError("missing required file: need " + nl_path.string() + " or " + na_path.string());
  }

  // Graph membership.
  const auto gi_lines = detail::read_lines(gi_path);
  const std::size_t total_nodes = gi_lines.size();
  const auto gl_lines = detail::read_lines(gl_path);
  const std::size_t graph_count = gl_lines.size();
  std::vector<std::size_t> graph_of(total_nodes), local_of(total_nodes);
  std::vector<std::size_t> sizes(graph_count, 0);
  for (std::size_t v = 0; v < total_nodes; ++v) {
    const auto& [line, text] = gi_lines[v];
    const long long g = parse_int(text, gi_path, line);
    if (g < 1 || static_cast<std::size_t>(g) > graph_count) {
      throw FormatError(gi_path.filename().string() + ":" + std::to_string(line) + ": graph id " + text +
                        " outside 1.." + std::to_string(graph_count));
    }
    graph_of[v] = static_cast<std::size_t>(g - 1);
    local_of[v] = sizes[graph_of[v]]++;
  }
  for (std::size_t g = 0; g < graph_count; ++g)
    if (sizes[g] == 0) throw FormatError(gi_path.filename().string() + ": graph " + std::to_string(g + 1) + " has no nodes");

  // Graph labels → contiguous.
  std::vector<long long> raw_labels(graph_count);
  for (std::size_t g = 0; g < graph_count; ++g) raw_labels[g] = parse_int(gl_lines[g].second, gl_path, gl_lines[g].first);
  std::vector<long long> distinct = raw_labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  // Node labels → one-hot columns.
  std::vector<long long> node_labels;
  std::vector<long long> label_values;
  if (has_nl) {
    const auto lines = detail::read_lines(nl_path);
    if (lines.size() != total_nodes) {
      throw FormatError(nl_path.filename().string() + ": " + std::to_string(lines.size()) + " labels for " +
                        std::to_string(total_nodes) + " nodes");
    }
    node_labels.resize(total_nodes);
    for (std::size_t v = 0; v < total_nodes; ++v) {
      // Some TU corpora carry several label columns; the first one is used.
      const auto fields = detail::split_fields(lines[v].second);
      node_labels[v] = parse_int(fields.front(), nl_path, lines[v].first);
    }
    label_values = node_labels;
    std::sort(label_values.begin(), label_values.end());
    label_values.erase(std::unique(label_values.begin(), label_values.end()), label_values.end());
  }

  std::vector<std::vector<double>> attrs;
  std::size_t attr_dim = 0;
  if (has_na) {
    const auto lines = detail::read_lines(na_path);
    if (lines.size() != total_nodes) {
      throw FormatError(na_path.filename().string() + ": " + std::to_string(lines.size()) + " attribute rows for " +
                        std::to_string(total_nodes) + " nodes");
    }
    attrs.resize(total_nodes);
    for (std::size_t v = 0; v < total_nodes; ++v) {
      for (const auto& f : detail::split_fields(lines[v].second)) attrs[v].push_back(detail::parse_real(f, na_path, lines[v].first));
      if (v == 0) attr_dim = attrs[v].size();
      if (attrs[v].size() != attr_dim) {
        throw FormatError(na_path.filename().string() + ":" + std::to_string(lines[v].first) + ": expected " +
                          std::to_string(attr_dim) + " attributes");
      }
    }
  }

  Dataset ds;
  ds.name = name;
  ds.class_count = distinct.size();
  ds.node_label_count = label_values.size();
  ds.attribute_count = attr_dim;
  ds.feature_dim = ds.node_label_count + attr_dim;
  ds.graphs.resize(graph_count);
  for (std::size_t g = 0; g < graph_count; ++g) {
    Graph& gr = ds.graphs[g];
    gr.adjacency = Tensor(sizes[g], sizes[g]);
    gr.features = Tensor(sizes[g], ds.feature_dim);
    gr.label = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), raw_labels[g]) - distinct.begin());
  }
  for (std::size_t v = 0; v < total_nodes; ++v) {
    Graph& gr = ds.graphs[graph_of[v]];
    const std::size_t i = local_of[v];
    if (has_nl) {
      const auto col = std::lower_bound(label_values.begin(), label_values.end(), node_labels[v]) - label_values.begin();
      gr.features(i, static_cast<std::size_t>(col)) = 1.0;
    }
    for (std::size_t j = 0; j < attr_dim; ++j) gr.features(i, ds.node_label_count + j) = attrs[v][j];
  }

  for (const auto& [line, text] : detail::read_lines(a_path)) {
    const auto fields = detail::split_fields(text);
    if (fields.size() != 2) {
      throw FormatError(a_path.filename().string() + ":" + std::to_string(line) + ": expected 'u, v'");
    }
    const long long u = parse_int(fields[0], a_path, line);
    const long long v = parse_int(fields[1], a_path, line);
    auto in_range = [&](long long x) { return x >= 1 && static_cast<std::size_t>(x) <= total_nodes; };
    if (!in_range(u) || !in_range(v)) {
      throw FormatError(a_path.filename().string() + ":" + std::to_string(line) + ": node id outside 1.." +
                        std::to_string(total_nodes));
    }
    const std::size_t uu = static_cast<std::size_t>(u - 1), vv = static_cast<std::size_t>(v - 1);
    if (graph_of[uu] != graph_of[vv]) {
      throw FormatError(a_path.filename().string() + ":" + std::to_string(line) + ": edge (" + fields[0] + ", " + fields[1] +
                        ") joins nodes of graphs " + std::to_string(graph_of[uu] + 1) + " and " + std::to_string(graph_of[vv] + 1));
    }
    if (uu == vv) continue;
    Graph& gr = ds.graphs[graph_of[uu]];
    gr.adjacency(local_of[uu], local_of[vv]) = 1.0;
    gr.adjacency(local_of[vv], local_of[uu]) = 1.0;
  }
  return ds;
}

/// Writes `ds` in TU layout. Node labels are emitted as the 0-based index of the
/// hot column, so load(write(ds)) reproduces ds exactly.
inline void write(const Dataset& ds, const std::filesystem::path& directory, const std::string& name) {
  std::filesystem::create_directories(directory);
  auto open = [&](const char* suffix) {
    std::ofstream f(directory / (name + suffix));
    if (!f) throw LoadError("cannot write " + (directory / (name + suffix)).string());
    return f;
  };
  auto fa = open("_A.txt");
  auto fgi = open("_graph_indicator.txt");
  auto fgl = open("_graph_labels.txt");
  std::optional<std::ofstream> fnl, fna;
  if (ds.node_label_count > 0) fnl = open("_node_labels.txt");
  if (ds.attribute_count > 0 || ds.node_label_count == 0) fna = open("_node_attributes.txt");

  std::size_t offset = 0;
  char buf[64];
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const Graph& gr = ds.graphs[g];
    const std::size_t n = gr.node_count();
    fgl << gr.label << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      fgi << (g + 1) << '\n';
      if (fnl) {
        std::size_t hot = 0;
        for (std::size_t c = 0; c < ds.node_label_count; ++c)
          if (gr.features(i, c) != 0.0) hot = c;
        *fnl << hot << '\n';
      }
      if (fna) {
        for (std::size_t j = 0; j < ds.attribute_count; ++j) {
          std::snprintf(buf, sizeof buf, "%.17g", gr.features(i, ds.node_label_count + j));
          *fna << (j ? ", " : "") << buf;
        }
        *fna << '\n';
      }
      for (std::size_t j = 0; j < n; ++j)
        if (gr.adjacency(i, j) != 0.0) fa << (offset + i + 1) << ", " << (offset + j + 1) << '\n';
    }
    offset += n;
  }
}

}  // namespace mvprune::tu
