#include "qmask/io/trace.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace qmask::io {

using nlohmann::json;

StateSnapshot snapshot_of(const qsim::SparseState& st) {
  StateSnapshot snap;
  for (const auto& reg : st.registers()) snap.registers.push_back({reg.modulus, reg.label});
  snap.amplitudes = st.snapshot();
  return snap;
}

qsim::SparseState state_from_snapshot(const StateSnapshot& snap) {
  return qsim::SparseState::with_amplitudes(snap.registers, snap.amplitudes);
}

Trace make_trace(const std::string& protocol,
                 const std::map<std::string, std::string>& parameters, std::uint64_t seed,
                 const protocols::InputSpec& input, const protocols::ProtocolResult& result) {
  Trace t;
  t.protocol = protocol;
  t.parameters = parameters;
  t.seed = seed;
  t.modulus = input.modulus;
  t.input = input.amplitudes;
  t.steps = result.steps;
  t.measurements = result.transcript;
  t.byproducts = result.byproducts;
  t.metrics = result.metrics;
  t.success = result.success;
  t.fidelity = result.fidelity;
  t.tag = result.tag;
  t.damage_probability = result.damage_probability;
  t.final_state = snapshot_of(result.final_state);
  return t;
}

namespace {

json amplitudes_json(const std::vector<std::pair<Value, qsim::Amplitude>>& amps) {
  json out = json::array();
  for (const auto& [v, a] : amps) out.push_back({v, a.real(), a.imag()});
  return out;
}

std::vector<std::pair<Value, qsim::Amplitude>> amplitudes_from_json(const json& j) {
  std::vector<std::pair<Value, qsim::Amplitude>> out;
  for (const auto& e : j) {
    out.push_back({e.at(0).get<Value>(),
                   {e.at(1).get<double>(), e.at(2).get<double>()}});
  }
  return out;
}

json snapshot_json(const StateSnapshot& snap) {
  json regs = json::array();
  for (const auto& [modulus, label] : snap.registers) {
    regs.push_back({{"modulus", modulus}, {"label", label}});
  }
  json amps = json::array();
  for (const auto& [tuple, a] : snap.amplitudes) {
    amps.push_back({json(tuple), a.real(), a.imag()});
  }
  return json{{"registers", regs}, {"amplitudes", amps}};
}

StateSnapshot snapshot_from_json(const json& j) {
  StateSnapshot snap;
  for (const auto& r : j.at("registers")) {
    snap.registers.push_back({r.at("modulus").get<std::uint64_t>(),
                              r.at("label").get<std::string>()});
  }
  for (const auto& e : j.at("amplitudes")) {
    snap.amplitudes.push_back({e.at(0).get<std::vector<Value>>(),
                               {e.at(1).get<double>(), e.at(2).get<double>()}});
  }
  return snap;
}

json measurement_json(const qsim::MeasurementRecord& rec) {
  json marg = json::array();
  for (const auto& [v, p] : rec.marginal) marg.push_back({v, p});
  return json{{"register_id", rec.register_id},
              {"register", rec.register_label},
              {"outcome", rec.outcome},
              {"rng_seed", rec.rng_seed},
              {"marginal", marg}};
}

qsim::MeasurementRecord measurement_from_json(const json& j) {
  qsim::MeasurementRecord rec;
  rec.register_id = j.at("register_id").get<std::uint32_t>();
  rec.register_label = j.at("register").get<std::string>();
  rec.outcome = j.at("outcome").get<Value>();
  rec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const auto& e : j.at("marginal")) {
    rec.marginal.push_back({e.at(0).get<Value>(), e.at(1).get<double>()});
  }
  return rec;
}

}  // namespace

json to_json(const Trace& t) {
  json j;
  j["format"] = "qmask-trace-v1";
  j["protocol"] = t.protocol;
  j["parameters"] = t.parameters;
  j["seed"] = t.seed;
  j["input"] = {{"modulus", t.modulus}, {"amplitudes", amplitudes_json(t.input)}};
  j["steps"] = t.steps;
  json meas = json::array();
  for (const auto& rec : t.measurements) meas.push_back(measurement_json(rec));
  j["measurements"] = meas;
  j["byproducts"] = t.byproducts;
  j["metrics"] = t.metrics;
  j["success"] = t.success;
  j["fidelity"] = t.fidelity;
  j["tag"] = t.tag;
  j["damage_probability"] = t.damage_probability;
  j["final_state"] = snapshot_json(t.final_state);
  return j;
}

Trace parse_trace(const json& j) {
  if (j.at("format").get<std::string>() != "qmask-trace-v1") {
    fail(ErrorCode::invalid_input, "not a qmask-trace-v1 document");
  }
  Trace t;
  t.protocol = j.at("protocol").get<std::string>();
  t.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.modulus = j.at("input").at("modulus").get<std::uint64_t>();
  t.input = amplitudes_from_json(j.at("input").at("amplitudes"));
  t.steps = j.at("steps").get<std::vector<std::string>>();
  for (const auto& m : j.at("measurements")) t.measurements.push_back(measurement_from_json(m));
  t.byproducts = j.at("byproducts").get<std::map<std::string, std::uint64_t>>();
  t.metrics = j.at("metrics").get<std::map<std::string, double>>();
  t.success = j.at("success").get<bool>();
  t.fidelity = j.at("fidelity").get<double>();
  t.tag = j.at("tag").get<std::string>();
  t.damage_probability = j.at("damage_probability").get<double>();
  t.final_state = snapshot_from_json(j.at("final_state"));
  return t;
}

json to_json(const Table& table) {
  json j;
  j["format"] = "qmask-table-v1";
  j["kind"] = table.kind;
  j["columns"] = table.columns;
  j["rows"] = table.rows;
  return j;
}

Table parse_table(const json& j) {
  if (j.at("format").get<std::string>() != "qmask-table-v1") {
    fail(ErrorCode::invalid_input, "not a qmask-table-v1 document");
  }
  Table t;
  t.kind = j.at("kind").get<std::string>();
  t.columns = j.at("columns").get<std::vector<std::string>>();
  t.rows = j.at("rows").get<std::vector<std::vector<double>>>();
  return t;
}

std::string render_table_human(const Table& table) {
  std::ostringstream out;
  out << table.kind << "\n";
  const std::size_t width = 16;
  for (const auto& c : table.columns) out << std::setw(static_cast<int>(width)) << c;
  out << "\n";
  out << std::string(width * table.columns.size(), '-') << "\n";
  for (const auto& row : table.rows) {
    for (double v : row) {
      std::ostringstream cell;
      cell << std::setprecision(6) << v;
      out << std::setw(static_cast<int>(width)) << cell.str();
    }
    out << "\n";
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::invalid_input, "cannot open " + path + " for writing");
  out << contents;
}

}  // namespace qmask::io
