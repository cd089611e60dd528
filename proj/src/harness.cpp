#include "retrosim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "retrosim/counter_rng.hpp"
#include "retrosim/errors.hpp"
#include "retrosim/measurement.hpp"
#include "retrosim/protocols.hpp"
#include "retrosim/quantum_core.hpp"

namespace retrosim {

std::string to_string(ReportFormat format) { return format == ReportFormat::Csv ? "csv" : "json"; }

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "json") return ReportFormat::Json;
  throw Error(ErrorKind::ConfigError, "unknown format '" + text + "' (expected csv|json)");
}

const std::vector<std::string>& protocol_names() {
  static const std::vector<std::string> names = {"detection",   "avoidance", "priming",
                                                 "habituation", "recall",    "reversed_polarity"};
  return names;
}

ProtocolSpec build_protocol(const RunConfig& config) {
  const auto& p = config.params;
  ProtocolSpec spec;
  if (config.protocol == "detection") {
    spec = detection_protocol();
  } else if (config.protocol == "avoidance") {
    spec = avoidance_protocol();
  } else if (config.protocol == "priming") {
    if (p.mode != "retro" && p.mode != "normal") {
      throw Error(ErrorKind::ConfigError, "params.mode must be 'retro' or 'normal', got '" + p.mode + "'");
    }
    const ReactionTimeModel rt{p.base_ms, p.congruency_delta_ms, p.noise_spread_ms};
    spec = priming_protocol(p.mode == "retro" ? PrimingMode::Retro : PrimingMode::Normal, rt,
                            p.congruency_valence);
  } else if (config.protocol == "habituation") {
    spec = habituation_protocol(p.v0, p.attenuation);
  } else if (config.protocol == "recall") {
    spec = recall_protocol(p.n_words, p.n_recall, p.n_targets);
  } else if (config.protocol == "reversed_polarity") {
    spec = reversed_polarity_protocol(p.first_observer);
  } else {
    throw Error(ErrorKind::ConfigError, "unknown protocol '" + config.protocol + "'");
  }
  return config.falsification ? falsification_variant(spec) : spec;
}

ChoicePolicy build_policy(const RunConfig& config) {
  if (config.policy == PolicyKind::Orthodox) return ChoicePolicy::orthodox();
  return ChoicePolicy::biased(config.beta);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); };
  if (!(beta >= 0.0 && beta <= 1.0)) {
    std::ostringstream msg;
    msg << "beta = " << beta << " is outside the allowed range [0, 1]";
    fail(msg.str());
  }
  if (trials < 1) fail("trials must be at least 1");
  if (!(confidence > 0.0 && confidence < 1.0)) fail("confidence must lie strictly between 0 and 1");
  if (enumeration_cap < 1) fail("enumeration_cap must be at least 1");
  if (threads < 1 || threads > 1024) fail("threads must lie in [1, 1024]");
  try {
    build_protocol(*this);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    fail(std::string("invalid protocol parameters: ") + e.message());
  }
}

// ---------------------------------------------------------------------------
// Statistics

std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t trials, double confidence) {
  if (trials < 1 || hits > trials) {
    throw Error(ErrorKind::ConfigError, "Wilson interval needs 0 <= hits <= trials and trials >= 1");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorKind::ConfigError, "confidence must lie strictly between 0 and 1");
  }
  const boost::math::normal_distribution<double> standard;
  const double z = boost::math::quantile(standard, 1.0 - (1.0 - confidence) / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  double low = std::clamp(center - half, 0.0, 1.0);
  double high = std::clamp(center + half, 0.0, 1.0);
  if (hits == 0) low = 0.0;
  if (hits == trials) high = 1.0;
  return {std::min(low, p), std::max(high, p)};
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct Tally {
  std::uint64_t hits = 0;
  std::uint64_t conditioned = 0;
};

template <typename TrialFn>
Tally run_trials(std::uint64_t trials, std::size_t threads, const TrialFn& trial) {
  threads = std::max<std::size_t>(1, std::min<std::uint64_t>(threads, trials));
  std::vector<Tally> partial(threads);
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](std::size_t w) {
    try {
      const std::uint64_t begin = trials * w / threads;
      const std::uint64_t end = trials * (w + 1) / threads;
      for (std::uint64_t t = begin; t < end; ++t) {
        const auto [cond, hit] = trial(t);
        partial[w].conditioned += cond;
        partial[w].hits += cond && hit;
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  Tally total;
  for (std::size_t w = 0; w < threads; ++w) {
    if (errors[w]) std::rethrow_exception(errors[w]);
    total.hits += partial[w].hits;
    total.conditioned += partial[w].conditioned;
  }
  return total;
}

double exact_gap(const ProtocolSpec& protocol, const ChoicePolicy& policy, std::size_t cap) {
  try {
    return no_signaling_gap(protocol, protocol.hit, policy, cap);
  } catch (const Error& e) {
    // The hit statistic reads the final experience; fall back to the early
    // variable's marginal.
    if (e.kind() != ErrorKind::ProtocolMalformed) throw;
    return no_signaling_gap(protocol, protocol.early_variable, policy, cap);
  }
}

}  // namespace

TrialReport run_simulation(const RunConfig& config) {
  config.validate();
  const ProtocolSpec protocol = build_protocol(config);
  const ChoicePolicy policy = build_policy(config);

  TrialReport report;
  report.protocol = protocol.name;
  report.policy = to_string(config.policy);
  report.beta = policy.effective_beta();
  report.trials = config.trials;
  report.seed = config.seed;

  const bool over_cap = protocol.leaf_count > static_cast<double>(config.enumeration_cap);
  Tally tally;
  if (!over_cap) {
    const auto ensemble = enumerate_ensemble(protocol, policy, config.enumeration_cap);
    const std::size_t n = ensemble.histories.size();
    std::vector<double> cumulative(n);
    std::vector<char> cond(n), hit(n);
    double running = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& h = ensemble.histories[i];
      running += h.weight;
      cumulative[i] = running;
      if (h.weight > 0.0) last_positive = i;
      cond[i] = holds(protocol.hit.condition, h.steps);
      hit[i] = holds(protocol.hit.event, h.steps);
    }
    tally = run_trials(config.trials, config.threads, [&](std::uint64_t t) {
      const double u = uniform_draw(config.seed, t, 0);
      auto idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                          cumulative.begin());
      if (idx >= n) idx = last_positive;
      return std::pair<bool, bool>{cond[idx] != 0, hit[idx] != 0};
    });
    report.exact_rate = hit_rate(ensemble, protocol.hit);
    report.no_signaling_gap = exact_gap(protocol, policy, config.enumeration_cap);
  } else if (policy.effective_beta() == 0.0) {
    tally = run_trials(config.trials, config.threads, [&](std::uint64_t t) {
      Path path;
      std::uint64_t counter = 0;
      while (auto node = protocol.next_event(path)) {
        if (path.size() > kMaxProtocolDepth) {
          throw Error(ErrorKind::ProtocolMalformed, "protocol '" + protocol.name + "' does not terminate");
        }
        const std::size_t pick = sample_outcome(node->probabilities, uniform_draw(config.seed, t, counter++));
        path.push_back({node->variable, node->outcomes[pick]});
      }
      const bool c = holds(protocol.hit.condition, path);
      return std::pair<bool, bool>{c, c && holds(protocol.hit.event, path)};
    });
  } else {
    std::ostringstream msg;
    msg << "protocol '" << protocol.name << "' has " << protocol.leaf_count
        << " histories, above the enumeration cap of " << config.enumeration_cap
        << "; biased runs need exact enumeration, so reduce n_words or use beta = 0";
    throw Error(ErrorKind::ProtocolMalformed, msg.str());
  }

  report.hits = tally.hits;
  report.conditioned = tally.conditioned;
  if (tally.conditioned > 0) {
    report.rate = static_cast<double>(tally.hits) / static_cast<double>(tally.conditioned);
    std::tie(report.ci_low, report.ci_high) = wilson_interval(tally.hits, tally.conditioned, config.confidence);
  } else {
    report.rate = 0.0;
    report.ci_low = 0.0;
    report.ci_high = 1.0;
  }
  return report;
}

std::vector<TrialReport> sweep_beta(const RunConfig& config, std::span<const double> betas) {
  std::vector<TrialReport> reports;
  reports.reserve(betas.size());
  for (double beta : betas) {
    RunConfig point = config;
    point.policy = PolicyKind::Biased;
    point.beta = beta;
    reports.push_back(run_simulation(point));
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Verification

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::ExpectedViolation: return "expected_violation";
  }
  return "unknown";
}

bool VerificationReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
}

namespace {

constexpr int kPropertyCases = 100;

CheckResult threshold_check(std::string name, double value, double bound, std::string what) {
  CheckResult r;
  r.name = std::move(name);
  r.value = value;
  r.status = value < bound ? CheckStatus::Pass : CheckStatus::Fail;
  std::ostringstream detail;
  detail << what << " (bound " << bound << ")";
  r.detail = detail.str();
  return r;
}

template <typename Fn>
CheckResult guarded(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return CheckResult{name, CheckStatus::Fail, 0.0, e.what()};
  }
}

std::size_t random_dim(std::mt19937_64& rng) { return std::uniform_int_distribution<std::size_t>(2, 8)(rng); }

CheckResult check_density_invariants(std::mt19937_64& rng) {
  double trace_dev = 0.0, herm_dev = 0.0, min_eig = 0.0;
  for (int i = 0; i < kPropertyCases; ++i) {
    const auto rho = random_density_matrix(random_dim(rng), rng);
    trace_dev = std::max(trace_dev, std::abs(matrix_trace(rho) - Complex(1.0, 0.0)));
    herm_dev = std::max(herm_dev, max_abs(rho.matrix() - rho.matrix().adjoint()));
    min_eig = std::min(min_eig, rho.eigenvalues().front());
  }
  const bool ok = trace_dev < 1e-12 && herm_dev < 1e-9 && min_eig > -1e-9;
  std::ostringstream detail;
  detail << "trace dev " << trace_dev << ", hermitian dev " << herm_dev << ", min eigenvalue " << min_eig;
  return {"density_matrix_invariants", ok ? CheckStatus::Pass : CheckStatus::Fail, trace_dev, detail.str()};
}

CheckResult check_projectors(std::mt19937_64& rng) {
  double idem = 0.0;
  bool exact = true;
  for (int i = 0; i < kPropertyCases; ++i) {
    const std::size_t d = random_dim(rng);
    const auto p = random_projector(d, std::uniform_int_distribution<std::size_t>(0, d)(rng), rng);
    idem = std::max(idem, max_abs(p.matrix() * p.matrix() - p.matrix()));
    const CMatrix sum = p.matrix() + complement(p).matrix();
    exact = exact && sum == CMatrix::Identity(sum.rows(), sum.cols());
  }
  CheckResult r = threshold_check("projector_complement", idem, 1e-9, "max |P^2 - P|");
  if (!exact) {
    r.status = CheckStatus::Fail;
    r.detail += "; P + complement(P) != I";
  }
  return r;
}

CheckResult check_partial_trace(std::mt19937_64& rng) {
  double dev = 0.0;
  for (int i = 0; i < kPropertyCases; ++i) {
    const std::size_t da = random_dim(rng), db = random_dim(rng);
    const auto a = random_density_matrix(da, rng);
    const auto b = random_density_matrix(db, rng);
    const SubsystemLayout layout({{"a", da}, {"b", db}});
    const auto reduced = partial_trace(tensor_product(a, b), layout, {"a"});
    dev = std::max(dev, max_abs(reduced.matrix() - a.matrix()));
  }
  return threshold_check("partial_trace_round_trip", dev, 1e-12, "max |Tr_b(a x b) - a|");
}

CheckResult check_unitary(std::mt19937_64& rng) {
  double dev = 0.0;
  for (int i = 0; i < kPropertyCases; ++i) {
    const std::size_t d = random_dim(rng);
    const auto rho = random_density_matrix(d, rng);
    const auto u = random_unitary(d, rng);
    const auto moved = apply_unitary(rho, u, Direction::Forward);
    const auto back = apply_unitary(moved, u, Direction::Backward);
    dev = std::max(dev, std::abs(matrix_trace(moved) - Complex(1.0, 0.0)));
    dev = std::max(dev, max_abs(back.matrix() - rho.matrix()));
    const auto e0 = rho.eigenvalues(), e1 = moved.eigenvalues();
    for (std::size_t k = 0; k < e0.size(); ++k) dev = std::max(dev, std::abs(e0[k] - e1[k]));
  }
  return threshold_check("unitary_preservation", dev, 1e-9, "trace, spectrum and round-trip deviation");
}

CheckResult check_born(std::mt19937_64& rng) {
  double dev = 0.0, fam_dev = 0.0;
  for (int i = 0; i < kPropertyCases; ++i) {
    const std::size_t d = random_dim(rng);
    const auto rho = random_density_matrix(d, rng);
    const auto p = random_projector(d, std::uniform_int_distribution<std::size_t>(1, d - 1)(rng), rng);
    const double tr_p_rho = born_probability(rho, p);
    const double tr_prp = matrix_trace(CMatrix(p.matrix() * rho.matrix() * p.matrix())).real();
    dev = std::max(dev, std::abs(tr_p_rho - tr_prp));
    const auto collapsed = collapse(rho, p);
    dev = std::max(dev, std::abs(matrix_trace(collapsed.state) - Complex(1.0, 0.0)));
    const auto probs = family_probabilities(rho, OutcomeFamily::binary(p));
    fam_dev = std::max(fam_dev, std::abs(probs[0] + probs[1] - 1.0));
  }
  CheckResult r = threshold_check("born_rule_consistency", dev, 1e-12,
                                  "max |Tr(P rho P) - Tr(P rho)| and collapse trace deviation");
  if (fam_dev >= 1e-9) r.status = CheckStatus::Fail;
  return r;
}

CheckResult check_independence(std::mt19937_64& rng) {
  double dev = 0.0;
  for (int i = 0; i < kPropertyCases; ++i) {
    const std::size_t dp = random_dim(rng), dq = random_dim(rng);
    const SubsystemLayout layout({{"participant", dp}, {"rng", dq}});
    const auto rho_p = random_density_matrix(dp, rng);
    const auto rho = tensor_product(rho_p, random_density_matrix(dq, rng));
    const auto p_local = random_projector(dp, std::uniform_int_distribution<std::size_t>(1, dp - 1)(rng), rng);
    const auto q_local = random_projector(dq, std::uniform_int_distribution<std::size_t>(1, dq - 1)(rng), rng);
    const auto p = embed(p_local, layout, "participant");
    const auto q = embed(q_local, layout, "rng");
    dev = std::max(dev, std::abs(conditional_probability(rho, p, q) - born_probability(rho_p, p_local)));
  }
  return threshold_check("independence_identity", dev, 1e-9, "max |P(P | Q) - P(P)|");
}

CheckResult check_later_interaction(std::mt19937_64& rng) {
  double dev = 0.0;
  for (int i = 0; i < kPropertyCases; ++i) {
    const std::size_t dp = random_dim(rng) / 2 + 1, dq = random_dim(rng) / 2 + 1;
    const SubsystemLayout layout({{"participant", dp}, {"rng", dq}});
    const auto rho = tensor_product(random_density_matrix(dp, rng), random_density_matrix(dq, rng));
    const auto p = embed(random_projector(dp, 1, rng), layout, "participant");
    const auto u = random_unitary(dp * dq, rng);
    const auto r = random_projector(dp * dq, std::uniform_int_distribution<std::size_t>(1, dp * dq - 1)(rng), rng);
    const double p_yes = born_probability(rho, p);
    if (p_yes <= kZeroProbability) continue;
    const auto evolved = apply_unitary(collapse(rho, p).state, u, Direction::Forward);
    const double summed = p_yes * born_probability(evolved, r) + p_yes * born_probability(evolved, complement(r));
    dev = std::max(dev, std::abs(summed - p_yes));
  }
  return threshold_check("later_interaction_immunity", dev, 1e-9, "max |sum_R w(P, R) - P(P)|");
}

}  // namespace

VerificationReport verify(const RunConfig& config) {
  VerificationReport report;
  std::mt19937_64 rng(config.seed);

  report.checks.push_back(guarded("density_matrix_invariants", [&] { return check_density_invariants(rng); }));
  report.checks.push_back(guarded("projector_complement", [&] { return check_projectors(rng); }));
  report.checks.push_back(guarded("partial_trace_round_trip", [&] { return check_partial_trace(rng); }));
  report.checks.push_back(guarded("unitary_preservation", [&] { return check_unitary(rng); }));
  report.checks.push_back(guarded("born_rule_consistency", [&] { return check_born(rng); }));
  report.checks.push_back(guarded("independence_identity", [&] { return check_independence(rng); }));
  report.checks.push_back(guarded("later_interaction_immunity", [&] { return check_later_interaction(rng); }));

  ProtocolSpec protocol;
  try {
    config.validate();
    protocol = build_protocol(config);
    report.protocol = protocol.name;
  } catch (const std::exception& e) {
    report.checks.push_back({"config", CheckStatus::Fail, 0.0, e.what()});
    return report;
  }
  const ChoicePolicy policy = build_policy(config);
  const std::size_t cap = config.enumeration_cap;

  report.checks.push_back(guarded("protocol_structure", [&] {
    validate_protocol(protocol, cap);
    return CheckResult{"protocol_structure", CheckStatus::Pass, 0.0, "probability sums and terminal experiences"};
  }));
  report.checks.push_back(guarded("ensemble_normalization", [&] {
    const auto ensemble = enumerate_ensemble(protocol, policy, cap);
    return threshold_check("ensemble_normalization", std::abs(ensemble.total_weight() - 1.0), 1e-12,
                           "|sum of history weights - 1|");
  }));
  report.checks.push_back(guarded("sequential_equivalence", [&] {
    return threshold_check("sequential_equivalence", sequential_equivalence_distance(protocol, cap), 1e-9,
                           "total variation between path enumeration and step-by-step collapse");
  }));
  report.checks.push_back(guarded("orthodox_no_signaling", [&] {
    const auto orthodox = ChoicePolicy::orthodox();
    const double gap = std::max(no_signaling_gap(protocol, protocol.early_variable, orthodox, cap),
                                exact_gap(protocol, orthodox, cap));
    return threshold_check("orthodox_no_signaling", gap, 1e-12, "orthodox gap, R + R' = I cancellation");
  }));
  report.checks.push_back(guarded("beta_zero_equivalence", [&] {
    const auto a = enumerate_ensemble(protocol, ChoicePolicy::orthodox(), cap);
    const auto b = enumerate_ensemble(protocol, ChoicePolicy::biased(0.0), cap);
    double dev = a.histories.size() == b.histories.size() ? 0.0 : 1.0;
    for (std::size_t i = 0; i < std::min(a.histories.size(), b.histories.size()); ++i) {
      if (a.histories[i].steps != b.histories[i].steps) dev = 1.0;
      dev = std::max(dev, std::abs(a.histories[i].weight - b.histories[i].weight));
    }
    return threshold_check("beta_zero_equivalence", dev, 1e-12, "biased(beta = 0) vs orthodox weights");
  }));
  report.checks.push_back(guarded("falsification_restores_orthodoxy", [&] {
    const auto falsified = falsification_variant(protocol);
    const double biased = hit_rate(enumerate_ensemble(falsified, policy, cap), protocol.hit);
    const double orthodox = hit_rate(enumerate_ensemble(protocol, ChoicePolicy::orthodox(), cap), protocol.hit);
    return threshold_check("falsification_restores_orthodoxy", std::abs(biased - orthodox), 1e-12,
                           "independent-observer hit rate vs orthodox");
  }));
  report.checks.push_back(guarded("policy_no_signaling", [&] {
    const double gap = exact_gap(protocol, policy, cap);
    CheckResult r{"policy_no_signaling", CheckStatus::Pass, gap, ""};
    if (gap < 1e-12) {
      r.detail = "no signaling under the configured policy";
    } else if (policy.effective_beta() > 0.0) {
      r.status = CheckStatus::ExpectedViolation;
      r.detail = "biased choice breaks the R + R' cancellation on the hit statistic by design";
    } else {
      r.status = CheckStatus::Fail;
      r.detail = "orthodox policy shows a nonzero gap";
    }
    return r;
  }));
  return report;
}

}  // namespace retrosim
