#include "leadsel/io.hpp"

#include "leadsel/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace leadsel {

namespace {

const Json& field(const Json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(std::string(where) + ": missing field '" + key + "'");
  }
  return j.at(key);
}

double number(const Json& j, const char* key, const char* where) {
  const Json& v = field(j, key, where);
  if (!v.is_number()) throw SchemaError(std::string(where) + ": '" + key + "' must be a number");
  return v.get<double>();
}

std::size_t index(const Json& j, const char* key, const char* where) {
  const Json& v = field(j, key, where);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw SchemaError(std::string(where) + ": '" + key + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

Json topology_to_json(const Topology& topo) {
  Json edges = Json::array();
  for (const auto& e : topo.edges()) {
    edges.push_back({{"from", e.from + 1}, {"to", e.to + 1}, {"weight", e.weight}});
  }
  return {{"n", topo.size()}, {"strongly_connected", topo.strongly_connected()}, {"edges", edges}};
}

Topology topology_from_json(const Json& j) {
  const std::size_t n = index(j, "n", "topology");
  const Json& list = field(j, "edges", "topology");
  if (!list.is_array()) throw SchemaError("topology: 'edges' must be an array");
  std::vector<Edge> edges;
  edges.reserve(list.size());
  for (const auto& e : list) {
    const std::size_t from = index(e, "from", "edge");
    const std::size_t to = index(e, "to", "edge");
    if (from == 0 || to == 0) throw SchemaError("edge: node indices start at 1");
    edges.push_back({from - 1, to - 1, number(e, "weight", "edge")});
  }
  Topology topo(n, std::move(edges));
  if (j.contains("strongly_connected")) {
    if (!j["strongly_connected"].is_boolean()) {
      throw SchemaError("topology: 'strongly_connected' must be a boolean");
    }
    if (j["strongly_connected"].get<bool>() != topo.strongly_connected()) {
      throw SchemaError("topology: 'strongly_connected' flag contradicts the edge set");
    }
  }
  return topo;
}

Json sequence_to_json(const EpochSequence& seq) {
  Json epochs = Json::array();
  for (const auto& e : seq.epochs()) {
    epochs.push_back({{"dwell", e.dwell}, {"topology", topology_to_json(e.topology)}});
  }
  return {{"start_time", seq.start_time()}, {"gamma", seq.gamma()}, {"epochs", epochs}};
}

EpochSequence sequence_from_json(const Json& j) {
  const Json& list = field(j, "epochs", "sequence");
  if (!list.is_array()) throw SchemaError("sequence: 'epochs' must be an array");
  std::vector<Epoch> epochs;
  double min_dwell = std::numeric_limits<double>::infinity();
  for (const auto& e : list) {
    epochs.push_back({topology_from_json(field(e, "topology", "epoch")), number(e, "dwell", "epoch")});
    min_dwell = std::min(min_dwell, epochs.back().dwell);
  }
  const double gamma = j.contains("gamma") ? number(j, "gamma", "sequence") : min_dwell;
  const double start = j.contains("start_time") ? number(j, "start_time", "sequence") : 0.0;
  return EpochSequence(std::move(epochs), gamma, start);
}

Json selection_to_json(const SelectionResult& r) {
  Json leaders = Json::array();
  for (NodeId v : r.leaders) leaders.push_back(v + 1);
  return {{"leaders", leaders},
          {"bound_trace", r.bound_trace},
          {"objective", r.objective},
          {"evaluations", r.evaluations}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_leaders(std::span<const NodeId> leaders) {
  std::string out;
  for (std::size_t i = 0; i < leaders.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(leaders[i] + 1);
  }
  return out;
}

std::vector<NodeId> parse_leaders(const std::string& text) {
  std::vector<NodeId> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    std::size_t v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc{} || res.ptr != item.data() + item.size() || v == 0) {
      throw SchemaError("bad leader index '" + item + "'");
    }
    out.push_back(v - 1);
  }
  return out;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw SchemaError("missing column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  };
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file");
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != table.header.size()) {
      throw SchemaError(path.string() + ": row has " + std::to_string(row.size()) +
                        " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv_line(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) os << ',';
    os << fields[i];
  }
  os << '\n';
}

}  // namespace leadsel
