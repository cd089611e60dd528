#pragma once

// Seeded Monte Carlo execution, Wilson intervals, beta sweeps and the
// invariant verification suite behind the command-line tool.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "retrosim/bias_policy.hpp"
#include "retrosim/histories.hpp"
#include "retrosim/protocol_spec.hpp"

namespace retrosim {

enum class ReportFormat { Csv, Json };

std::string to_string(ReportFormat format);
ReportFormat parse_report_format(const std::string& text);

/// Protocol parameters; only the ones relevant to `RunConfig::protocol` are
/// read or written.
struct ProtocolParams {
  std::string mode = "retro";  // priming: retro | normal
  double base_ms = 600.0;
  double congruency_delta_ms = 40.0;
  double noise_spread_ms = 0.0;
  double congruency_valence = 0.5;
  double v0 = -0.8;  // habituation
  double attenuation = 0.5;
  std::size_t n_words = 4;  // recall
  std::size_t n_recall = 2;
  std::size_t n_targets = 2;
  std::string first_observer = "a";  // reversed_polarity
};

struct RunConfig {
  std::string protocol = "detection";
  ProtocolParams params;
  /// Hand the terminal experience to an independent observer.
  bool falsification = false;
  PolicyKind policy = PolicyKind::Biased;
  double beta = 0.2;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  double confidence = 0.99;
  ReportFormat format = ReportFormat::Csv;
  std::size_t enumeration_cap = kDefaultEnumerationCap;
  std::size_t threads = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Names accepted by RunConfig::protocol.
const std::vector<std::string>& protocol_names();
ProtocolSpec build_protocol(const RunConfig& config);
ChoicePolicy build_policy(const RunConfig& config);

struct TrialReport {
  std::string protocol;
  std::string policy;
  double beta = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t hits = 0;
  /// Trials satisfying the statistic's condition; the rate's denominator.
  std::uint64_t conditioned = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::optional<double> exact_rate;
  std::optional<double> no_signaling_gap;
  std::uint64_t seed = 0;
};

/// Wilson score interval for hits/trials at the two-sided confidence level.
std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t trials, double confidence);

/// Draws `config.trials` histories from the exact ensemble by inverse CDF,
/// one counter-based substream per trial, and counts the protocol's hit
/// statistic. Beyond the enumeration cap only beta = 0 runs are possible,
/// by sequential per-event sampling.
TrialReport run_simulation(const RunConfig& config);

/// One report per beta, each carrying the exact rate next to the sampled one.
std::vector<TrialReport> sweep_beta(const RunConfig& config, std::span<const double> betas);

enum class CheckStatus { Pass, Fail, ExpectedViolation };

std::string to_string(CheckStatus status);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double value = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::string protocol;
  std::vector<CheckResult> checks;

  bool passed() const;
};

/// Runs the module invariant suites against the configured protocol and
/// policy. Failures are report content, never exceptions.
VerificationReport verify(const RunConfig& config);

}  // namespace retrosim
