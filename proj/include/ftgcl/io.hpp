#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ftgcl/graph.hpp"

namespace ftgcl {

namespace fs = std::filesystem;

namespace detail {

inline std::ifstream open_input(const fs::path& p) {
  if (!fs::exists(p)) throw NotFound("missing file: " + p.string());
  std::ifstream in(p);
  if (!in) throw NotFound("cannot open: " + p.string());
  return in;
}

inline std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write: " + p.string());
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view tok, const std::string& where) {
  tok = trim(tok);
  T value{};
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || tok.empty()) {
    throw SchemaError(where + ": cannot parse '" + std::string(tok) + "'");
  }
  return value;
}

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline Matrix read_matrix_csv(const fs::path& path) {
  auto in = detail::open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    while (true) {
      auto comma = t.find(',', start);
      auto tok = t.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      row.push_back(detail::parse_number<double>(tok, where));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw SchemaError(where + ": expected " + std::to_string(rows.front().size()) + " columns, got " +
                        std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = rows.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline void write_matrix_csv(const fs::path& path, const Matrix& m) {
  auto out = detail::open_output(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
}

struct EdgeFile {
  bool directed = false;
  std::optional<std::size_t> num_nodes;  // from an optional count after the header keyword
  std::vector<Edge> edges;
};

// edges.tsv: header line "directed"/"undirected" (optionally followed by the
// node count), then "src<TAB>dst" lines.
inline EdgeFile read_edge_list(const fs::path& path) {
  auto in = detail::open_input(path);
  std::string line;
  std::size_t lineno = 0;
  std::optional<bool> directed;
  EdgeFile file;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.empty()) continue;
    if (!directed) {
      const auto sep = t.find_first_of(" \t");
      const auto keyword = t.substr(0, sep);
      if (keyword == "directed") directed = true;
      else if (keyword == "undirected") directed = false;
      else throw SchemaError("edges.tsv: first line must be 'directed' or 'undirected'");
      if (sep != std::string_view::npos) {
        file.num_nodes = detail::parse_number<std::size_t>(t.substr(sep + 1), "edges.tsv:1");
      }
      continue;
    }
    const auto sep = t.find_first_of(" \t");
    if (sep == std::string_view::npos) {
      throw SchemaError("edges.tsv:" + std::to_string(lineno) + ": expected two node ids");
    }
    const std::string where = "edges.tsv:" + std::to_string(lineno);
    auto u = detail::parse_number<std::size_t>(t.substr(0, sep), where);
    auto v = detail::parse_number<std::size_t>(t.substr(sep + 1), where);
    file.edges.emplace_back(u, v);
  }
  if (!directed) throw SchemaError("edges.tsv: empty file");
  file.directed = *directed;
  return file;
}

inline void write_edge_list(const fs::path& path, const Graph& g) {
  auto out = detail::open_output(path);
  out << (g.directed() ? "directed" : "undirected") << '\n';
  for (const auto& [u, v] : g.edges()) out << u << '\t' << v << '\n';
}

inline std::vector<int> read_labels(const fs::path& path) {
  auto in = detail::open_input(path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.empty()) continue;
    labels.push_back(detail::parse_number<int>(t, "labels.txt:" + std::to_string(lineno)));
  }
  return labels;
}

inline std::map<std::string, std::vector<NodeId>> read_splits(const fs::path& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("splits.json: " + std::string(e.what()));
  }
  if (!j.is_object()) throw SchemaError("splits.json: top level must be an object");
  std::map<std::string, std::vector<NodeId>> splits;
  for (const auto& [name, arr] : j.items()) {
    if (!arr.is_array()) throw SchemaError("splits.json: '" + name + "' must be an array");
    auto& dst = splits[name];
    for (const auto& v : arr) {
      if (!v.is_number_unsigned()) throw SchemaError("splits.json: '" + name + "' holds a non-index entry");
      dst.push_back(v.get<NodeId>());
    }
  }
  return splits;
}

inline void write_splits(const fs::path& path, const std::map<std::string, std::vector<NodeId>>& splits) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, idx] : splits) j[name] = idx;
  detail::open_output(path) << j.dump() << '\n';
}

// Reads a dataset directory. Duplicate edges are collapsed and self-loops
// dropped; both are reported on `warn`.
inline Dataset load_dataset(const fs::path& dir, std::ostream& warn = std::cerr) {
  if (!fs::is_directory(dir)) throw NotFound("dataset directory not found: " + dir.string());
  auto file = read_edge_list(dir / "edges.tsv");

  Dataset d;
  d.features = read_matrix_csv(dir / "features.csv");
  const auto n = static_cast<std::size_t>(d.features.rows());
  if (file.num_nodes && *file.num_nodes != n) {
    throw SchemaError("features.csv has " + std::to_string(n) + " rows but edges.tsv declares " +
                      std::to_string(*file.num_nodes) + " nodes");
  }
  if (!d.features.allFinite()) throw SchemaError("features.csv: non-finite entry");
  for (const auto& [u, v] : file.edges) {
    if (u >= n || v >= n) {
      throw SchemaError("edges.tsv: edge (" + std::to_string(u) + "," + std::to_string(v) +
                        ") references a node outside [0," + std::to_string(n) + ")");
    }
  }
  BuildReport rep;
  d.graph = Graph::from_edges(n, file.edges, file.directed, &rep);
  if (rep.duplicate_edges) warn << "warning: collapsed " << rep.duplicate_edges << " duplicate edge(s)\n";
  if (rep.self_loops) warn << "warning: dropped " << rep.self_loops << " self-loop(s)\n";

  if (fs::exists(dir / "labels.txt")) {
    d.labels = read_labels(dir / "labels.txt");
    if (d.labels->size() != n) {
      throw SchemaError("labels.txt has " + std::to_string(d.labels->size()) + " lines but features.csv has " +
                        std::to_string(n) + " rows");
    }
  }
  if (fs::exists(dir / "splits.json")) d.splits = read_splits(dir / "splits.json");
  d.validate();
  return d;
}

inline void save_dataset(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  write_edge_list(dir / "edges.tsv", d.graph);
  write_matrix_csv(dir / "features.csv", d.features);
  if (d.labels) {
    auto out = detail::open_output(dir / "labels.txt");
    for (int y : *d.labels) out << y << '\n';
  }
  if (!d.splits.empty()) write_splits(dir / "splits.json", d.splits);
}

}  // namespace ftgcl
