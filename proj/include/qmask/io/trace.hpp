#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmask/protocols/protocols.hpp"

namespace qmask::io {

using qsim::Amplitude;
using qsim::Value;

/// Register list plus decoded amplitude entries; the on-disk form of a state.
struct StateSnapshot {
  std::vector<std::pair<std::uint64_t, std::string>> registers;  // (modulus, label)
  std::vector<std::pair<std::vector<Value>, Amplitude>> amplitudes;

  bool operator==(const StateSnapshot&) const = default;
};

/// Everything one protocol run produced. Serialized as qmask-trace-v1; field
/// meanings are documented in the README. Two runs with identical config
/// produce byte-identical files.
struct Trace {
  std::string protocol;
  std::map<std::string, std::string> parameters;
  std::uint64_t seed = 0;
  std::uint64_t modulus = 0;  // input domain
  std::vector<std::pair<Value, Amplitude>> input;
  std::vector<std::string> steps;
  std::vector<qsim::MeasurementRecord> measurements;
  std::map<std::string, std::uint64_t> byproducts;
  std::map<std::string, double> metrics;
  bool success = false;
  double fidelity = 0.0;
  std::string tag;
  double damage_probability = 0.0;
  StateSnapshot final_state;

  bool operator==(const Trace&) const = default;
};

StateSnapshot snapshot_of(const qsim::SparseState& st);
qsim::SparseState state_from_snapshot(const StateSnapshot& snap);

Trace make_trace(const std::string& protocol,
                 const std::map<std::string, std::string>& parameters, std::uint64_t seed,
                 const protocols::InputSpec& input, const protocols::ProtocolResult& result);

nlohmann::json to_json(const Trace& trace);
Trace parse_trace(const nlohmann::json& j);

/// Numeric comparison table (cost sweeps): named columns, one row per
/// parameter point. Serialized as qmask-table-v1.
struct Table {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  bool operator==(const Table&) const = default;
};

nlohmann::json to_json(const Table& table);
Table parse_table(const nlohmann::json& j);
std::string render_table_human(const Table& table);

void write_file(const std::string& path, const std::string& contents);

}  // namespace qmask::io
