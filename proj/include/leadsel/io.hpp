#pragma once

// JSON and CSV formats used by the CLI. Node indices are 1-based in every file.

#include "leadsel/graph.hpp"
#include "leadsel/static_selection.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace leadsel {

using Json = nlohmann::ordered_json;

/// {"n": 3, "strongly_connected": true, "edges": [{"from": 1, "to": 2, "weight": 0.5}, ...]}
Json topology_to_json(const Topology& topo);
/// Throws SchemaError on missing or mistyped fields, or when a stated
/// strongly_connected flag disagrees with the graph.
Topology topology_from_json(const Json& j);

/// {"start_time": 0, "gamma": 1, "epochs": [{"dwell": 1, "topology": {...}}, ...]}
Json sequence_to_json(const EpochSequence& seq);
EpochSequence sequence_from_json(const Json& j);

/// {"leaders": [...], "bound_trace": [...], "objective": x, "evaluations": m}
Json selection_to_json(const SelectionResult& r);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

// ---------------------------------------------------------------------------

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);
/// "3;7;12" (1-based, in the given order); empty set is "".
std::string format_leaders(std::span<const NodeId> leaders);
std::vector<NodeId> parse_leaders(const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position; throws SchemaError when absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

/// Plain comma-separated text without quoting; fields never contain commas.
CsvTable read_csv(const std::filesystem::path& path);
void write_csv_line(std::ostream& os, const std::vector<std::string>& fields);

}  // namespace leadsel
