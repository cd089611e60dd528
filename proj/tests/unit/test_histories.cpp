#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "retrosim/errors.hpp"
#include "retrosim/histories.hpp"
#include "retrosim/protocols.hpp"

using namespace retrosim;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidState;
}

ChoicePolicy biased(double beta) { return ChoicePolicy::biased(beta); }

// Independent detection oracle: loop over the 8 (P, T, S) triples.
struct DetectionOracle {
  double favored = 0.0, other = 0.0, hit_given_e = 0.0, hit_given_n = 0.0, s_e = 0.0;

  explicit DetectionOracle(double beta) {
    double z = 0.0, e_hit = 0.0, e_all = 0.0, n_hit = 0.0, n_all = 0.0;
    for (int p = 0; p < 2; ++p)
      for (int t = 0; t < 2; ++t)
        for (int s = 0; s < 2; ++s) {
          const double w = 0.125 * (1.0 + beta * ((p == t && s == 0) ? 1.0 : 0.0));
          z += w;
          if (s == 0) {
            e_all += w;
            if (p == t) e_hit += w;
          } else {
            n_all += w;
            if (p == t) n_hit += w;
          }
        }
    favored = 0.125 * (1.0 + beta) / z;
    other = 0.125 / z;
    hit_given_e = e_hit / e_all;
    hit_given_n = n_hit / n_all;
    s_e = e_all / z;
  }
};

std::vector<ProtocolSpec> test_matrix() {
  auto all = bem_protocols();
  all.push_back(reversed_polarity_protocol("a"));
  all.push_back(reversed_polarity_protocol("b"));
  return all;
}

}  // namespace

TEST_CASE("detection ensemble weights") {
  const auto spec = detection_protocol();
  const auto orthodox = enumerate_ensemble(spec, ChoicePolicy::orthodox());
  REQUIRE(orthodox.histories.size() == 8);
  for (const auto& h : orthodox.histories) CHECK(h.weight == 0.125);

  const DetectionOracle oracle(0.2);
  CHECK(oracle.favored == doctest::Approx(0.142857142857142857));
  CHECK(oracle.other == doctest::Approx(0.119047619047619047));
  const auto ens = enumerate_ensemble(spec, biased(0.2));
  CHECK(ens.normalization == doctest::Approx(1.05));
  for (const auto& h : ens.histories) {
    const bool favored = *h.outcome("F") == "erotic";
    CHECK(std::abs(h.weight - (favored ? oracle.favored : oracle.other)) < 1e-15);
  }
}

TEST_CASE("neutral bias leaves the ensemble orthodox") {
  const auto spec = falsification_variant(avoidance_protocol());
  const auto a = enumerate_ensemble(spec, biased(0.9));
  const auto b = enumerate_ensemble(spec, ChoicePolicy::orthodox());
  for (std::size_t i = 0; i < a.histories.size(); ++i) CHECK(a.histories[i].weight == b.histories[i].weight);
}

TEST_CASE("conditional rates on detection") {
  const auto spec = detection_protocol();
  const Condition p_eq_t{Predicate::equal("P", "T")};
  const auto orthodox = enumerate_ensemble(spec, ChoicePolicy::orthodox());
  CHECK(conditional_rate(orthodox, {Predicate::in("S", {"E"})}, p_eq_t) == doctest::Approx(0.5));

  for (double beta : {0.05, 0.1, 0.2, 0.5, 1.0}) {
    const DetectionOracle oracle(beta);
    const auto ens = enumerate_ensemble(spec, biased(beta));
    const double on_e = conditional_rate(ens, {Predicate::in("S", {"E"})}, p_eq_t);
    const double on_n = conditional_rate(ens, {Predicate::in("S", {"N"})}, p_eq_t);
    CHECK(std::abs(on_e - (1.0 + beta) / (2.0 + beta)) < 1e-12);
    CHECK(std::abs(on_e - oracle.hit_given_e) < 1e-12);
    CHECK(std::abs(on_n - 0.5) < 1e-12);
    CHECK(hit_rate(ens, spec.hit) == doctest::Approx(on_e).epsilon(1e-15));
  }
  CHECK(conditional_rate(enumerate_ensemble(spec, biased(0.2)), {Predicate::in("S", {"E"})}, p_eq_t) ==
        doctest::Approx(0.545454545454));

  CHECK(kind_of([&] { conditional_rate(orthodox, {Predicate::in("S", {"X"})}, p_eq_t); }) ==
        ErrorKind::ZeroProbabilityOutcome);
}

TEST_CASE("marginals") {
  const auto spec = detection_protocol();
  const auto orthodox = enumerate_ensemble(spec, ChoicePolicy::orthodox());
  CHECK(marginal(orthodox, "S").at("E") == 0.5);
  CHECK(marginal(orthodox, "P").at("L") == 0.5);
  CHECK(marginal(orthodox, "P").at("R") == 0.5);

  const double beta = 0.2;
  const auto ens = enumerate_ensemble(spec, biased(beta));
  const auto s = marginal(ens, "S");
  CHECK(std::abs(s.at("E") - (4 + 2 * beta) / (8 + 2 * beta)) < 1e-12);
  CHECK(std::abs(s.at("E") - DetectionOracle(beta).s_e) < 1e-12);
  CHECK(s.at("E") == doctest::Approx(0.523809523809));
  CHECK(s.at("N") == doctest::Approx(0.476190476190));
  CHECK(kind_of([&] { marginal(ens, "Q"); }) == ErrorKind::ProtocolMalformed);
}

TEST_CASE("no-signaling gap") {
  const auto spec = detection_protocol();
  CHECK(no_signaling_gap(spec, spec.early_variable, ChoicePolicy::orthodox()) < 1e-12);
  CHECK(no_signaling_gap(spec, spec.hit, ChoicePolicy::orthodox()) < 1e-12);

  const double beta = 0.2;
  const double gap = no_signaling_gap(spec, spec.hit, biased(beta));
  CHECK(std::abs(gap - beta / (2.0 * (2.0 + beta))) < 1e-12);
  CHECK(gap == doctest::Approx(0.0454545454545));

  const auto neutral = falsification_variant(spec);
  CHECK(no_signaling_gap(neutral, neutral.hit, biased(0.7)) < 1e-12);

  const auto truncated = truncate_before_final(spec);
  const auto short_ens = enumerate_truncated(spec);
  REQUIRE(short_ens.histories.size() == 8);
  CHECK(short_ens.histories.front().steps.size() == 3);
  CHECK(!truncated.name.empty());

  // Statistics needing the experience itself cannot be compared on the truncated protocol.
  const auto recall = recall_protocol(4, 2, 2);
  CHECK(kind_of([&] { no_signaling_gap(recall, recall.hit, biased(0.3)); }) == ErrorKind::ProtocolMalformed);
}

TEST_CASE("avoidance and habituation closed forms") {
  const auto avoid = avoidance_protocol();
  for (double beta : {0.0, 0.1, 0.3}) {
    CHECK(std::abs(hit_rate(enumerate_ensemble(avoid, biased(beta)), avoid.hit) - (1 + beta) / 2) < 1e-12);
  }
  CHECK(hit_rate(enumerate_ensemble(avoid, biased(0.1)), avoid.hit) == doctest::Approx(0.55));

  const double beta = 0.25;
  // Weights 1 + beta*v for T = P (v = v0/2) and T != P (v = v0).
  auto oracle = [&](double v0) { return (1 + beta * v0 / 2) / ((1 + beta * v0 / 2) + (1 + beta * v0)); };
  const auto neg = habituation_protocol(-0.8, 0.5);
  const auto pos = habituation_protocol(0.8, 0.5);
  const auto neu = habituation_protocol(0.0, 0.5);
  CHECK(std::abs(hit_rate(enumerate_ensemble(neg, biased(beta)), neg.hit) - 0.9 / 1.7) < 1e-12);
  CHECK(std::abs(hit_rate(enumerate_ensemble(neg, biased(beta)), neg.hit) - oracle(-0.8)) < 1e-12);
  CHECK(std::abs(hit_rate(enumerate_ensemble(pos, biased(beta)), pos.hit) - 1.1 / 2.3) < 1e-12);
  CHECK(std::abs(hit_rate(enumerate_ensemble(pos, biased(beta)), pos.hit) - oracle(0.8)) < 1e-12);
  CHECK(hit_rate(enumerate_ensemble(neu, biased(0.9)), neu.hit) == 0.5);
}

TEST_CASE("recall expected overlap against a subset oracle") {
  const auto spec = recall_protocol(4, 2, 2);
  for (double beta : {0.0, 0.3, 0.7}) {
    // Every 2-subset pair of 4 words; valence clamp(k - 1, -1, 1).
    double z = 0.0, num = 0.0;
    for (unsigned r = 0; r < 16; ++r) {
      if (std::popcount(r) != 2) continue;
      for (unsigned t = 0; t < 16; ++t) {
        if (std::popcount(t) != 2) continue;
        const int k = std::popcount(r & t);
        const double w = 1.0 + beta * std::clamp(k - 1.0, -1.0, 1.0);
        z += w;
        num += k * w;
      }
    }
    const auto ens = enumerate_ensemble(spec, biased(beta));
    CHECK(ens.histories.size() == 36);
    const double e = expectation(ens, spec.observable->value);
    CHECK(std::abs(e - num / z) < 1e-12);
    if (beta == 0.0) CHECK(std::abs(e - recall_null_overlap(4, 2, 2)) < 1e-12);
    if (beta == 0.3) CHECK(std::abs(e - 1.1) < 1e-12);
  }
}

TEST_CASE("priming expected reaction time") {
  const ReactionTimeModel rt{600.0, 40.0, 0.0};
  const auto retro = priming_protocol(PrimingMode::Retro, rt, 0.5);
  const auto normal = priming_protocol(PrimingMode::Normal, rt, 0.5);
  const double orthodox = expectation(enumerate_ensemble(retro, ChoicePolicy::orthodox()), retro.observable->value);
  CHECK(orthodox == doctest::Approx(620.0));
  for (double beta : {0.0, 0.2, 0.6}) {
    const auto ens = enumerate_ensemble(retro, biased(beta));
    const double mean = expectation(ens, retro.observable->value);
    CHECK(std::abs((orthodox - mean) - beta * 0.5 * 40.0 / 2.0) < 1e-9);
    CHECK(hit_rate(ens, retro.hit) == doctest::Approx((1 + beta * 0.5) / 2));
    CHECK(std::abs(hit_rate(ens, retro.hit) - hit_rate(enumerate_ensemble(normal, biased(beta)), normal.hit)) <
          1e-12);
  }
}

TEST_CASE("reversed polarity follows the first observer") {
  const auto a = reversed_polarity_protocol("a");
  const auto b = reversed_polarity_protocol("b");
  CHECK(hit_rate(enumerate_ensemble(a, biased(0.4)), a.hit) == doctest::Approx(0.7));
  CHECK(hit_rate(enumerate_ensemble(b, biased(0.4)), b.hit) == doctest::Approx(0.3));
}

TEST_CASE("sequential realization matches path enumeration") {
  CHECK(sequential_equivalence_distance(detection_protocol()) < 1e-9);
  CHECK(sequential_equivalence_distance(avoidance_protocol()) < 1e-9);

  ProtocolSpec single = detection_protocol();
  single.name = "single";
  single.next_event = [](const Path& path) -> std::optional<EventNode> {
    if (path.empty()) return EventNode{"F", EventKind::Experience, {"seen"}, {1.0}};
    return std::nullopt;
  };
  single.valence = [](const Path&) { return 0.0; };
  CHECK(sequential_equivalence_distance(single) == 0.0);

  const auto law = sequential_law(detection_protocol());
  REQUIRE(law.size() == 8);
  for (const auto& h : law) {
    CHECK(h.records.size() == 4);
    CHECK(h.records.back().question_label == "F");
    for (std::size_t i = 0; i < h.records.size(); ++i) {
      CHECK(h.records[i].process_time == i);
      CHECK(h.records[i].applied_weight == h.records[i].born_probability);
    }
  }
  // Deep protocols go through the register trace-out path.
  CHECK(sequential_equivalence_distance(recall_protocol(6, 3, 3)) < 1e-9);
}

TEST_CASE("property: ensemble invariants across the test matrix") {
  for (const auto& spec : test_matrix()) {
    CAPTURE(spec.name);
    const auto orthodox = enumerate_ensemble(spec, ChoicePolicy::orthodox());
    for (double beta : {0.0, 0.1, 0.5, 1.0}) {
      const auto ens = enumerate_ensemble(spec, biased(beta));
      CHECK(std::abs(ens.total_weight() - 1.0) < 1e-12);
      std::set<std::string> keys;
      for (const auto& h : ens.histories) {
        CHECK(h.weight >= 0.0);
        CHECK(h.born_weight > kZeroProbability);
        keys.insert(path_key(h.steps));
      }
      CHECK(keys.size() == ens.histories.size());
      if (beta == 0.0) {
        for (std::size_t i = 0; i < ens.histories.size(); ++i) {
          CHECK(std::abs(ens.histories[i].weight - orthodox.histories[i].weight) < 1e-12);
        }
      }
    }
    CHECK(no_signaling_gap(spec, spec.early_variable, ChoicePolicy::orthodox()) < 1e-12);
  }
}

TEST_CASE("property: hit statistic is monotone in beta") {
  struct Case {
    ProtocolSpec spec;
    int direction;
  };
  const std::vector<Case> cases{{detection_protocol(), 1},
                                {avoidance_protocol(), 1},
                                {habituation_protocol(-0.8, 0.5), 1},
                                {habituation_protocol(0.8, 0.5), -1},
                                {recall_protocol(4, 2, 2), 1},
                                {recall_protocol(6, 3, 3), 1}};
  for (const auto& c : cases) {
    CAPTURE(c.spec.name);
    double previous = hit_rate(enumerate_ensemble(c.spec, biased(0.0)), c.spec.hit);
    for (int i = 1; i < 20; ++i) {
      const double now = hit_rate(enumerate_ensemble(c.spec, biased(i / 20.0)), c.spec.hit);
      CHECK(c.direction * (now - previous) > 0.0);
      previous = now;
    }
  }
}

TEST_CASE("property: falsification restores orthodox statistics") {
  for (const auto& base : test_matrix()) {
    const auto fals = falsification_variant(base);
    CAPTURE(fals.name);
    const auto orthodox = enumerate_ensemble(base, ChoicePolicy::orthodox());
    const double expected = hit_rate(orthodox, base.hit);
    for (double beta : {0.0, 0.05, 0.2, 0.5, 1.0}) {
      const auto ens = enumerate_ensemble(fals, biased(beta));
      CHECK(std::abs(hit_rate(ens, fals.hit) - expected) < 1e-12);
      for (std::size_t i = 0; i < ens.histories.size(); ++i) {
        CHECK(std::abs(ens.histories[i].weight - orthodox.histories[i].weight) < 1e-12);
      }
    }
  }
}
