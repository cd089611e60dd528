#pragma once

// Run-config ingestion and report emission (CSV and JSON).
//
// Report CSV columns, in order:
//   protocol,policy,beta,trials,hits,rate,ci_low,ci_high,exact_rate,no_signaling_gap,seed
// Floating-point values carry 12 significant digits; absent optional values
// are empty cells. Lines end in LF.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "retrosim/harness.hpp"
#include "retrosim/histories.hpp"

namespace retrosim {

inline constexpr const char* kReportCsvHeader =
    "protocol,policy,beta,trials,hits,rate,ci_low,ci_high,exact_rate,no_signaling_gap,seed";

/// Parses a JSON run config. Unknown keys and malformed text raise
/// ConfigError (with line and column for syntax errors).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

/// "%.12g" formatting used for every floating-point report cell.
std::string format_real(double value);

void emit_reports(std::span<const TrialReport> reports, ReportFormat format, std::ostream& out);
void emit_reports(std::span<const TrialReport> reports, ReportFormat format, const std::filesystem::path& path);
std::string reports_to_string(std::span<const TrialReport> reports, ReportFormat format);

/// Reads reports back. CSV carries the summary columns only, so
/// `conditioned` is not restored from CSV.
std::vector<TrialReport> parse_reports(const std::string& text, ReportFormat format);
std::vector<TrialReport> load_reports(const std::filesystem::path& path, ReportFormat format);

/// Exact ensemble table: history, born_weight, valence, weight.
void emit_ensemble(const HistoryEnsemble& ensemble, ReportFormat format, std::ostream& out);

/// One row per check: check, status, value, detail.
void emit_verification(const VerificationReport& report, ReportFormat format, std::ostream& out);

}  // namespace retrosim
