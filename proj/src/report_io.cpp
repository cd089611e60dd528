#include "retrosim/report_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "retrosim/errors.hpp"

namespace retrosim {

using nlohmann::json;

namespace {

const std::map<std::string, std::set<std::string>>& params_by_protocol() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"detection", {}},
      {"avoidance", {}},
      {"priming", {"mode", "base_ms", "congruency_delta_ms", "noise_spread_ms", "congruency_valence"}},
      {"habituation", {"v0", "attenuation"}},
      {"recall", {"n_words", "n_recall", "n_targets"}},
      {"reversed_polarity", {"first_observer"}},
  };
  return table;
}

const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {"protocol", "params", "falsification", "policy",
                                             "beta",     "trials", "seed",          "confidence",
                                             "format",   "enumeration_cap", "threads"};
  return keys;
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

double read_number(const json& j, const std::string& key) {
  if (!j.is_number()) config_error("field '" + key + "' must be a number");
  return j.get<double>();
}

std::uint64_t read_unsigned(const json& j, const std::string& key) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
    config_error("field '" + key + "' must be a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

std::string read_string(const json& j, const std::string& key) {
  if (!j.is_string()) config_error("field '" + key + "' must be a string");
  return j.get<std::string>();
}

std::string position_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

std::string csv_quote(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

json report_to_json(const TrialReport& r) {
  json j;
  j["protocol"] = r.protocol;
  j["policy"] = r.policy;
  j["beta"] = r.beta;
  j["trials"] = r.trials;
  j["hits"] = r.hits;
  j["conditioned"] = r.conditioned;
  j["rate"] = r.rate;
  j["ci_low"] = r.ci_low;
  j["ci_high"] = r.ci_high;
  j["exact_rate"] = r.exact_rate ? json(*r.exact_rate) : json(nullptr);
  j["no_signaling_gap"] = r.no_signaling_gap ? json(*r.no_signaling_gap) : json(nullptr);
  j["seed"] = r.seed;
  return j;
}

TrialReport report_from_json(const json& j) {
  static const std::set<std::string> keys = {"protocol", "policy", "beta",    "trials",          "hits",
                                             "conditioned", "rate", "ci_low", "ci_high", "exact_rate",
                                             "no_signaling_gap", "seed"};
  if (!j.is_object()) config_error("report entries must be objects");
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) config_error("unknown report field '" + key + "'");
  }
  auto need = [&](const char* key) -> const json& {
    if (!j.contains(key)) config_error(std::string("report is missing '") + key + "'");
    return j.at(key);
  };
  TrialReport r;
  r.protocol = read_string(need("protocol"), "protocol");
  r.policy = read_string(need("policy"), "policy");
  r.beta = read_number(need("beta"), "beta");
  r.trials = read_unsigned(need("trials"), "trials");
  r.hits = read_unsigned(need("hits"), "hits");
  if (j.contains("conditioned")) r.conditioned = read_unsigned(j.at("conditioned"), "conditioned");
  r.rate = read_number(need("rate"), "rate");
  r.ci_low = read_number(need("ci_low"), "ci_low");
  r.ci_high = read_number(need("ci_high"), "ci_high");
  if (j.contains("exact_rate") && !j.at("exact_rate").is_null()) r.exact_rate = read_number(j.at("exact_rate"), "exact_rate");
  if (j.contains("no_signaling_gap") && !j.at("no_signaling_gap").is_null()) {
    r.no_signaling_gap = read_number(j.at("no_signaling_gap"), "no_signaling_gap");
  }
  r.seed = read_unsigned(need("seed"), "seed");
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string reason = e.what();
    if (const auto at = reason.find(": ", reason.find("column")); at != std::string::npos) reason = reason.substr(at + 2);
    config_error("malformed JSON at " + position_of(text, e.byte) + ": " + reason);
  }
  if (!root.is_object()) config_error("config must be a JSON object");
  for (const auto& [key, value] : root.items()) {
    if (!config_keys().count(key)) config_error("unknown config key '" + key + "'");
  }

  RunConfig config;
  if (root.contains("protocol")) config.protocol = read_string(root["protocol"], "protocol");
  const auto table = params_by_protocol().find(config.protocol);
  if (table == params_by_protocol().end()) config_error("unknown protocol '" + config.protocol + "'");

  if (root.contains("params")) {
    const json& params = root["params"];
    if (!params.is_object()) config_error("field 'params' must be an object");
    auto& p = config.params;
    for (const auto& [key, value] : params.items()) {
      if (!table->second.count(key)) {
        config_error("unknown parameter 'params." + key + "' for protocol '" + config.protocol + "'");
      }
      const std::string name = "params." + key;
      if (key == "mode") p.mode = read_string(value, name);
      else if (key == "base_ms") p.base_ms = read_number(value, name);
      else if (key == "congruency_delta_ms") p.congruency_delta_ms = read_number(value, name);
      else if (key == "noise_spread_ms") p.noise_spread_ms = read_number(value, name);
      else if (key == "congruency_valence") p.congruency_valence = read_number(value, name);
      else if (key == "v0") p.v0 = read_number(value, name);
      else if (key == "attenuation") p.attenuation = read_number(value, name);
      else if (key == "n_words") p.n_words = read_unsigned(value, name);
      else if (key == "n_recall") p.n_recall = read_unsigned(value, name);
      else if (key == "n_targets") p.n_targets = read_unsigned(value, name);
      else if (key == "first_observer") p.first_observer = read_string(value, name);
    }
  }
  if (root.contains("falsification")) {
    if (!root["falsification"].is_boolean()) config_error("field 'falsification' must be a boolean");
    config.falsification = root["falsification"].get<bool>();
  }
  if (root.contains("policy")) config.policy = parse_policy_kind(read_string(root["policy"], "policy"));
  if (root.contains("beta")) config.beta = read_number(root["beta"], "beta");
  if (root.contains("trials")) config.trials = read_unsigned(root["trials"], "trials");
  if (root.contains("seed")) config.seed = read_unsigned(root["seed"], "seed");
  if (root.contains("confidence")) config.confidence = read_number(root["confidence"], "confidence");
  if (root.contains("format")) config.format = parse_report_format(read_string(root["format"], "format"));
  if (root.contains("enumeration_cap")) config.enumeration_cap = read_unsigned(root["enumeration_cap"], "enumeration_cap");
  if (root.contains("threads")) config.threads = read_unsigned(root["threads"], "threads");
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_file(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, path.string() + ": " + e.message());
  }
}

std::string config_to_json(const RunConfig& config) {
  json j;
  j["protocol"] = config.protocol;
  json params = json::object();
  const auto& p = config.params;
  const auto table = params_by_protocol().find(config.protocol);
  if (table != params_by_protocol().end()) {
    for (const auto& key : table->second) {
      if (key == "mode") params[key] = p.mode;
      else if (key == "base_ms") params[key] = p.base_ms;
      else if (key == "congruency_delta_ms") params[key] = p.congruency_delta_ms;
      else if (key == "noise_spread_ms") params[key] = p.noise_spread_ms;
      else if (key == "congruency_valence") params[key] = p.congruency_valence;
      else if (key == "v0") params[key] = p.v0;
      else if (key == "attenuation") params[key] = p.attenuation;
      else if (key == "n_words") params[key] = p.n_words;
      else if (key == "n_recall") params[key] = p.n_recall;
      else if (key == "n_targets") params[key] = p.n_targets;
      else if (key == "first_observer") params[key] = p.first_observer;
    }
  }
  j["params"] = params;
  j["falsification"] = config.falsification;
  j["policy"] = to_string(config.policy);
  j["beta"] = config.beta;
  j["trials"] = config.trials;
  j["seed"] = config.seed;
  j["confidence"] = config.confidence;
  j["format"] = to_string(config.format);
  j["enumeration_cap"] = config.enumeration_cap;
  j["threads"] = config.threads;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Reports

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void emit_reports(std::span<const TrialReport> reports, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::Json) {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    out << arr.dump(2) << '\n';
    return;
  }
  out << kReportCsvHeader << '\n';
  for (const auto& r : reports) {
    out << r.protocol << ',' << r.policy << ',' << format_real(r.beta) << ',' << r.trials << ',' << r.hits << ','
        << format_real(r.rate) << ',' << format_real(r.ci_low) << ',' << format_real(r.ci_high) << ','
        << optional_real(r.exact_rate) << ',' << optional_real(r.no_signaling_gap) << ',' << r.seed << '\n';
  }
}

void emit_reports(std::span<const TrialReport> reports, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) config_error("cannot write '" + path.string() + "'");
  emit_reports(reports, format, out);
}

std::string reports_to_string(std::span<const TrialReport> reports, ReportFormat format) {
  std::ostringstream out;
  emit_reports(reports, format, out);
  return out.str();
}

std::vector<TrialReport> parse_reports(const std::string& text, ReportFormat format) {
  std::vector<TrialReport> reports;
  if (format == ReportFormat::Json) {
    json root;
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      config_error("malformed JSON report at " + position_of(text, e.byte));
    }
    if (!root.is_array()) config_error("JSON report must be an array");
    for (const auto& entry : root) reports.push_back(report_from_json(entry));
    return reports;
  }

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != kReportCsvHeader) config_error("CSV report header mismatch at line 1");
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = "CSV report line " + std::to_string(line_no);
    if (cells.size() != 11) config_error(where + ": expected 11 columns, got " + std::to_string(cells.size()));
    auto real = [&](const std::string& cell, const char* column) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
      } catch (const std::exception&) {
        config_error(where + ": column '" + column + "' is not a number");
      }
    };
    auto whole = [&](const std::string& cell, const char* column) {
      std::uint64_t v = 0;
      if (cell.empty() || std::sscanf(cell.c_str(), "%" SCNu64, &v) != 1 || cell.find_first_not_of("0123456789") != std::string::npos) {
        config_error(where + ": column '" + column + "' is not an unsigned integer");
      }
      return v;
    };
    TrialReport r;
    r.protocol = cells[0];
    r.policy = cells[1];
    r.beta = real(cells[2], "beta");
    r.trials = whole(cells[3], "trials");
    r.hits = whole(cells[4], "hits");
    r.rate = real(cells[5], "rate");
    r.ci_low = real(cells[6], "ci_low");
    r.ci_high = real(cells[7], "ci_high");
    if (!cells[8].empty()) r.exact_rate = real(cells[8], "exact_rate");
    if (!cells[9].empty()) r.no_signaling_gap = real(cells[9], "no_signaling_gap");
    r.seed = whole(cells[10], "seed");
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<TrialReport> load_reports(const std::filesystem::path& path, ReportFormat format) {
  return parse_reports(read_file(path), format);
}

// ---------------------------------------------------------------------------
// Ensemble and verification tables

void emit_ensemble(const HistoryEnsemble& ensemble, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::Json) {
    json j;
    j["protocol"] = ensemble.protocol;
    j["beta"] = ensemble.beta;
    j["normalization"] = ensemble.normalization;
    json rows = json::array();
    for (const auto& h : ensemble.histories) {
      json steps = json::object();
      for (const auto& s : h.steps) steps[s.variable] = s.outcome;
      rows.push_back({{"history", path_key(h.steps)},
                      {"steps", steps},
                      {"born_weight", h.born_weight},
                      {"valence", h.valence},
                      {"weight", h.weight}});
    }
    j["histories"] = rows;
    out << j.dump(2) << '\n';
    return;
  }
  out << "history,born_weight,valence,weight\n";
  for (const auto& h : ensemble.histories) {
    out << path_key(h.steps) << ',' << format_real(h.born_weight) << ',' << format_real(h.valence) << ','
        << format_real(h.weight) << '\n';
  }
}

void emit_verification(const VerificationReport& report, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::Json) {
    json j;
    j["protocol"] = report.protocol;
    j["passed"] = report.passed();
    json rows = json::array();
    for (const auto& c : report.checks) {
      rows.push_back({{"check", c.name}, {"status", to_string(c.status)}, {"value", c.value}, {"detail", c.detail}});
    }
    j["checks"] = rows;
    out << j.dump(2) << '\n';
    return;
  }
  out << "check,status,value,detail\n";
  for (const auto& c : report.checks) {
    out << c.name << ',' << to_string(c.status) << ',' << format_real(c.value) << ',' << csv_quote(c.detail) << '\n';
  }
}

}  // namespace retrosim
