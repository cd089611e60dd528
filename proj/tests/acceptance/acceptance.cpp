// Acceptance suite: one PASS/FAIL line per criterion, with the runtime
// budget enforced alongside the numeric tolerance.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "retrosim/harness.hpp"
#include "retrosim/histories.hpp"
#include "retrosim/measurement.hpp"
#include "retrosim/protocols.hpp"
#include "retrosim/report_io.hpp"

using namespace retrosim;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

ChoicePolicy biased(double beta) { return ChoicePolicy::biased(beta); }

Outcome measurement_axioms() {
  std::mt19937_64 rng(20240601);
  double trace_dev = 0.0, cyclic_dev = 0.0, family_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t dim = 2 + i % 7;
    const auto rho = random_density_matrix(dim, rng);
    const auto p = random_projector(dim, 1 + i % (dim - 1), rng);
    const double pr = born_probability(rho, p);
    const double prp = matrix_trace(CMatrix(p.matrix() * rho.matrix() * p.matrix())).real();
    cyclic_dev = std::max(cyclic_dev, std::abs(pr - prp));
    if (pr > kZeroProbability) {
      trace_dev = std::max(trace_dev, std::abs(matrix_trace(collapse(rho, p).state).real() - 1.0));
    }
    const auto probs = family_probabilities(rho, OutcomeFamily::binary(p));
    family_dev = std::max(family_dev, std::abs(probs[0] + probs[1] - 1.0));
  }
  return {trace_dev < 1e-12 && cyclic_dev < 1e-12 && family_dev < 1e-9,
          "collapse trace dev " + fmt(trace_dev) + ", |Tr(PrhoP)-Tr(Prho)| " + fmt(cyclic_dev) +
              ", family sum dev " + fmt(family_dev)};
}

Outcome independence_identity() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t da = 2 + i % 3, db = 2 + (i / 3) % 3;
    const SubsystemLayout layout({{"P", da}, {"Q", db}});
    const auto ra = random_density_matrix(da, rng);
    const auto rho = tensor_product(ra, random_density_matrix(db, rng));
    const auto p = random_projector(da, 1, rng);
    const auto q = random_projector(db, 1 + i % (db - 1), rng);
    const double cond = conditional_probability(rho, embed(p, layout, "P"), embed(q, layout, "Q"));
    worst = std::max(worst, std::abs(cond - born_probability(ra, p)));
  }
  return {worst < 1e-9, "max |conditional - unconditional| " + fmt(worst)};
}

Outcome orthodox_no_signaling() {
  double worst = 0.0;
  for (const auto& spec : bem_protocols()) {
    worst = std::max(worst, no_signaling_gap(spec, spec.early_variable, ChoicePolicy::orthodox()));
  }
  return {worst < 1e-12, "max gap over 9 builders " + fmt(worst)};
}

Outcome biased_detection() {
  const auto spec = detection_protocol();
  double exact_dev = 0.0;
  std::ostringstream coverage;
  bool mc_ok = true;
  for (double beta : {0.05, 0.1, 0.2, 0.5}) {
    const auto ens = enumerate_ensemble(spec, biased(beta));
    const double on_e = conditional_rate(ens, {Predicate::in("S", {"E"})}, {Predicate::equal("P", "T")});
    const double on_n = conditional_rate(ens, {Predicate::in("S", {"N"})}, {Predicate::equal("P", "T")});
    exact_dev = std::max({exact_dev, std::abs(on_e - (1 + beta) / (2 + beta)), std::abs(on_n - 0.5)});

    RunConfig config;
    config.protocol = "detection";
    config.beta = beta;
    config.trials = 200000;
    config.confidence = 0.99;
    int covered = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      config.seed = seed;
      const auto r = run_simulation(config);
      covered += r.ci_low <= *r.exact_rate && *r.exact_rate <= r.ci_high;
    }
    mc_ok = mc_ok && covered >= 95;
    coverage << " b=" << beta << ":" << covered << "/100";
  }
  return {exact_dev < 1e-12 && mc_ok, "closed-form dev " + fmt(exact_dev) + ", coverage" + coverage.str()};
}

Outcome avoidance_ordering() {
  const auto spec = avoidance_protocol();
  double dev = 0.0, previous = -1.0;
  bool increasing = true;
  for (double beta : {0.0, 0.1, 0.3}) {
    const double rate = hit_rate(enumerate_ensemble(spec, biased(beta)), spec.hit);
    dev = std::max(dev, std::abs(rate - (1 + beta) / 2));
    increasing = increasing && rate > previous;
    previous = rate;
  }
  return {dev < 1e-12 && increasing, "max |rate - (1+b)/2| " + fmt(dev) + (increasing ? ", increasing" : ", NOT increasing")};
}

Outcome habituation_reversal() {
  auto rate = [](double v0) {
    const auto spec = habituation_protocol(v0, 0.5);
    return hit_rate(enumerate_ensemble(spec, biased(0.25)), spec.hit);
  };
  const double neg = rate(-0.8), pos = rate(0.8), neu = rate(0.0);
  const bool ok = std::abs(neg - 0.9 / 1.7) < 1e-9 && std::abs(pos - 1.1 / 2.3) < 1e-9 && neu == 0.5;
  return {ok, "v0=-0.8: " + fmt(neg) + ", v0=+0.8: " + fmt(pos) + ", v0=0: " + fmt(neu)};
}

Outcome recall_overrepresentation() {
  const auto spec = recall_protocol(4, 2, 2);
  const double biased_e = expectation(enumerate_ensemble(spec, biased(0.3)), spec.observable->value);
  const double null_e = expectation(enumerate_ensemble(spec, biased(0.0)), spec.observable->value);
  const bool ok = std::abs(biased_e - 1.1) < 1e-12 && std::abs(null_e - recall_null_overlap(4, 2, 2)) < 1e-12 &&
                  std::abs(null_e - 1.0) < 1e-12;
  return {ok, "E[overlap] beta=0.3: " + fmt(biased_e) + ", beta=0: " + fmt(null_e)};
}

Outcome priming_sign() {
  const ReactionTimeModel rt{600.0, 40.0, 0.0};
  const double vc = 0.5;
  const auto retro = priming_protocol(PrimingMode::Retro, rt, vc);
  const auto normal = priming_protocol(PrimingMode::Normal, rt, vc);
  const double orthodox = expectation(enumerate_ensemble(retro, ChoicePolicy::orthodox()), retro.observable->value);
  double drop_dev = 0.0, mode_dev = 0.0;
  bool below = true;
  for (double beta : {0.1, 0.2, 0.5}) {
    const auto ens = enumerate_ensemble(retro, biased(beta));
    const double mean = expectation(ens, retro.observable->value);
    below = below && mean < orthodox;
    drop_dev = std::max(drop_dev, std::abs((orthodox - mean) - beta * vc * rt.congruency_delta_ms / 2));
    mode_dev = std::max(mode_dev, std::abs(hit_rate(ens, retro.hit) -
                                           hit_rate(enumerate_ensemble(normal, biased(beta)), normal.hit)));
  }
  const double at_zero = expectation(enumerate_ensemble(retro, biased(0.0)), retro.observable->value);
  const bool ok = below && drop_dev < 1e-9 && at_zero == orthodox && mode_dev < 1e-12;
  return {ok, "RT drop dev " + fmt(drop_dev) + ", beta=0 diff " + fmt(at_zero - orthodox) + ", retro/normal dev " +
                  fmt(mode_dev)};
}

Outcome falsification() {
  std::vector<ProtocolSpec> bases = bem_protocols();
  bases.push_back(reversed_polarity_protocol("a"));
  bases.push_back(reversed_polarity_protocol("b"));
  double worst = 0.0;
  for (const auto& base : bases) {
    const auto orthodox = enumerate_ensemble(base, ChoicePolicy::orthodox());
    const auto fals = falsification_variant(base);
    for (double beta : {0.0, 0.05, 0.1, 0.2, 0.5, 1.0}) {
      const auto ens = enumerate_ensemble(fals, biased(beta));
      worst = std::max(worst, std::abs(hit_rate(ens, fals.hit) - hit_rate(orthodox, base.hit)));
      for (std::size_t i = 0; i < ens.histories.size(); ++i) {
        worst = std::max(worst, std::abs(ens.histories[i].weight - orthodox.histories[i].weight));
      }
    }
  }
  return {worst < 1e-12, "max deviation from orthodox over " + std::to_string(bases.size()) + " variants " + fmt(worst)};
}

Outcome equivalence_oracle() {
  const double d1 = sequential_equivalence_distance(detection_protocol());
  const double d2 = sequential_equivalence_distance(avoidance_protocol());
  return {d1 < 1e-9 && d2 < 1e-9, "TV detection " + fmt(d1) + ", avoidance " + fmt(d2)};
}

Outcome harness_determinism() {
  std::size_t identical = 0, total = 0;
  for (const std::string protocol : {"detection", "avoidance", "priming", "habituation", "recall", "reversed_polarity"}) {
    RunConfig config;
    config.protocol = protocol;
    config.trials = 100003;
    config.seed = 31337;
    config.threads = 1;
    const auto serial = reports_to_string(std::vector{run_simulation(config)}, ReportFormat::Csv);
    config.threads = 4;
    const auto parallel = reports_to_string(std::vector{run_simulation(config)}, ReportFormat::Csv);
    identical += serial == parallel;
    ++total;
  }
  return {identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                  " protocols byte-identical across 1 and 4 threads"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "measurement axioms", 1.0, measurement_axioms},
      {2, "independence identity", 1.0, independence_identity},
      {3, "orthodox no-signaling", 5.0, orthodox_no_signaling},
      {4, "biased detection closed form", 30.0, biased_detection},
      {5, "avoidance ordering", 1.0, avoidance_ordering},
      {6, "habituation sign reversal", 1.0, habituation_reversal},
      {7, "recall over-representation", 1.0, recall_overrepresentation},
      {8, "priming sign check", 0.0, priming_sign},
      {9, "falsification restores orthodoxy", 0.0, falsification},
      {10, "sequential equivalence oracle", 0.0, equivalence_oracle},
      {11, "harness determinism", 0.0, harness_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s == 0.0 || elapsed < c.budget_s;
    const bool pass = out.pass && in_time;
    failures += !pass;
    std::printf("%s [%2d] %s: %s (%.3f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), out.detail.c_str(),
                elapsed, in_time ? "" : ", over budget");
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
