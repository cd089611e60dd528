#include "retrosim/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "retrosim/errors.hpp"

namespace retrosim {

namespace {

EventNode fair(std::string variable, EventKind kind, std::string a, std::string b) {
  return EventNode{std::move(variable), kind, {std::move(a), std::move(b)}, {0.5, 0.5}};
}

EventNode certain(std::string variable, EventKind kind, std::string outcome) {
  return EventNode{std::move(variable), kind, {std::move(outcome)}, {1.0}};
}

std::string_view at(const Path& path, std::string_view variable) {
  const auto o = outcome_of(path, variable);
  if (!o) throw Error(ErrorKind::ProtocolMalformed, "path lacks variable '" + std::string(variable) + "'");
  return *o;
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

// P and T over {a, b}, then a terminal F labeled by whether T = P.
ProtocolSpec preference_then_target(std::string name, std::string match_label,
                                    std::string miss_label, double match_valence,
                                    double miss_valence) {
  ProtocolSpec spec;
  spec.name = std::move(name);
  spec.next_event = [match_label, miss_label](const Path& path) -> std::optional<EventNode> {
    switch (path.size()) {
      case 0: return fair("P", EventKind::AgentChoice, "a", "b");
      case 1: return fair("T", EventKind::NatureRng, "a", "b");
      case 2:
        return certain("F", EventKind::Experience, path[0].outcome == path[1].outcome ? match_label : miss_label);
      default: return std::nullopt;
    }
  };
  spec.valence = [match_label, match_valence, miss_valence](const Path& path) {
    return at(path, "F") == match_label ? match_valence : miss_valence;
  };
  spec.observers = {{"F", "participant"}};
  spec.early_variable = "P";
  spec.hit = {{Predicate::equal("T", "P")}, {}};
  spec.leaf_count = 4;
  return spec;
}

}  // namespace

ProtocolSpec detection_protocol() {
  ProtocolSpec spec;
  spec.name = "detection";
  spec.next_event = [](const Path& path) -> std::optional<EventNode> {
    switch (path.size()) {
      case 0: return fair("P", EventKind::AgentChoice, "L", "R");
      case 1: return fair("T", EventKind::NatureRng, "L", "R");
      case 2: return fair("S", EventKind::NatureRng, "E", "N");
      case 3: {
        const bool behind_preferred = path[0].outcome == path[1].outcome;
        const char* seen = !behind_preferred ? "blank" : (path[2].outcome == "E" ? "erotic" : "neutral");
        return certain("F", EventKind::Experience, seen);
      }
      default: return std::nullopt;
    }
  };
  spec.valence = [](const Path& path) { return at(path, "F") == "erotic" ? 1.0 : 0.0; };
  spec.observers = {{"F", "participant"}};
  spec.early_variable = "P";
  spec.hit = {{Predicate::equal("P", "T")}, {Predicate::in("S", {"E"})}};
  spec.leaf_count = 8;
  return spec;
}

ProtocolSpec avoidance_protocol() {
  ProtocolSpec spec;
  spec.name = "avoidance";
  spec.next_event = [](const Path& path) -> std::optional<EventNode> {
    switch (path.size()) {
      case 0: return fair("P", EventKind::AgentChoice, "a", "b");
      case 1: return fair("T", EventKind::NatureRng, "a", "b");
      case 2: return certain("S", EventKind::Stimulus, path[0].outcome == path[1].outcome ? "+" : "-");
      case 3: return certain("F", EventKind::Experience, path[2].outcome == "+" ? "positive" : "negative");
      default: return std::nullopt;
    }
  };
  spec.valence = [](const Path& path) { return at(path, "F") == "positive" ? 1.0 : -1.0; };
  spec.observers = {{"F", "participant"}};
  spec.early_variable = "P";
  spec.hit = {{Predicate::equal("T", "P")}, {}};
  spec.leaf_count = 4;
  return spec;
}

// ---------------------------------------------------------------------------
// Priming

void ReactionTimeModel::validate() const {
  if (!(base_ms > 0.0) || !(base_ms + congruency_delta_ms > 0.0) || !(noise_spread_ms >= 0.0) ||
      !std::isfinite(base_ms + congruency_delta_ms + noise_spread_ms)) {
    throw Error(ErrorKind::DegenerateInput,
                "reaction-time model needs base_ms > 0, base_ms + congruency_delta_ms > 0, "
                "noise_spread_ms >= 0");
  }
}

double ReactionTimeModel::reaction_time(bool congruent, double draw) const {
  const double mean = base_ms + (congruent ? 0.0 : congruency_delta_ms);
  return mean + noise_spread_ms * (2.0 * draw - 1.0);
}

ProtocolSpec priming_protocol(PrimingMode mode, const ReactionTimeModel& rt, double congruency_valence) {
  rt.validate();
  if (!(congruency_valence >= 0.0 && congruency_valence <= 1.0)) {
    throw Error(ErrorKind::DegenerateInput, "congruency valence must lie in [0, 1]");
  }
  const bool retro = mode == PrimingMode::Retro;

  ProtocolSpec spec;
  spec.name = retro ? "priming_retro" : "priming_normal";
  spec.next_event = [retro](const Path& path) -> std::optional<EventNode> {
    auto response = [&] {
      return certain("response", EventKind::AgentChoice,
                     path[0].outcome == "pos" ? "pleasing" : "displeasing");
    };
    auto word = [] { return fair("word", EventKind::NatureRng, "pos", "neg"); };
    switch (path.size()) {
      case 0: return fair("picture", EventKind::NatureRng, "pos", "neg");
      case 1: return retro ? response() : word();
      case 2: return retro ? word() : response();
      case 3: {
        const bool congruent = at(path, "word") == path[0].outcome;
        return certain("F", EventKind::Experience, congruent ? "congruent" : "incongruent");
      }
      default: return std::nullopt;
    }
  };
  spec.valence = [congruency_valence](const Path& path) {
    return at(path, "F") == "congruent" ? congruency_valence : -congruency_valence;
  };
  spec.observers = {{"F", "participant"}};
  spec.early_variable = "picture";
  spec.hit = {{Predicate::equal("word", "picture")}, {}};
  spec.observable = Observable{"reaction_time_ms", [rt](const Path& path) {
                                 return rt.reaction_time(at(path, "F") == "congruent");
                               }};
  spec.leaf_count = 4;
  return spec;
}

// ---------------------------------------------------------------------------
// Habituation

ProtocolSpec habituation_protocol(double v0, double attenuation) {
  if (!(std::abs(v0) <= 1.0)) throw Error(ErrorKind::DegenerateInput, "habituation v0 must lie in [-1, 1]");
  if (!(attenuation > 0.0 && attenuation < 1.0)) {
    throw Error(ErrorKind::DegenerateInput, "habituation attenuation must lie in (0, 1)");
  }
  const char* flavor = v0 < 0.0 ? "negative" : (v0 > 0.0 ? "erotic" : "neutral");
  return preference_then_target(std::string("habituation_") + flavor, "habituated", "unhabituated",
                                v0 * attenuation, v0);
}

// ---------------------------------------------------------------------------
// Recall

double recall_null_overlap(std::size_t n_words, std::size_t n_recall, std::size_t n_targets) {
  return static_cast<double>(n_recall) * static_cast<double>(n_targets) / static_cast<double>(n_words);
}

ProtocolSpec recall_protocol(std::size_t n_words, std::size_t n_recall, std::size_t n_targets) {
  if (n_words == 0 || n_recall == 0 || n_targets == 0 || n_recall > n_words || n_targets > n_words) {
    std::ostringstream msg;
    msg << "recall needs 0 < n_recall, n_targets <= n_words (got n_words=" << n_words
        << ", n_recall=" << n_recall << ", n_targets=" << n_targets << ")";
    throw Error(ErrorKind::DegenerateInput, msg.str());
  }
  const double mu0 = recall_null_overlap(n_words, n_recall, n_targets);
  const double sigma = std::max(mu0, static_cast<double>(n_recall) - mu0);

  // Events 0..n-1 choose the recall set, n..2n-1 the target set; each word is
  // included with probability (still needed) / (words left), which makes
  // every fixed-size subset equally likely.
  auto include_event = [n_words](const Path& path, std::size_t first, std::size_t needed_total,
                                 const char* prefix, EventKind kind) {
    const std::size_t word = path.size() - first;
    std::size_t chosen = 0;
    for (std::size_t i = first; i < path.size(); ++i) chosen += path[i].outcome == "y";
    const double needed = static_cast<double>(needed_total - chosen);
    const double left = static_cast<double>(n_words - word);
    const double p_yes = needed / left;
    return EventNode{prefix + std::to_string(word), kind, {"y", "n"}, {p_yes, 1.0 - p_yes}};
  };
  auto overlap = [n_words](const Path& path) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < n_words; ++i) {
      k += path[i].outcome == "y" && path[n_words + i].outcome == "y";
    }
    return k;
  };

  ProtocolSpec spec;
  std::ostringstream name;
  name << "recall_" << n_words << "_" << n_recall << "_" << n_targets;
  spec.name = name.str();
  spec.next_event = [=](const Path& path) -> std::optional<EventNode> {
    if (path.size() < n_words) return include_event(path, 0, n_recall, "recall_", EventKind::AgentChoice);
    if (path.size() < 2 * n_words) {
      return include_event(path, n_words, n_targets, "target_", EventKind::NatureRng);
    }
    if (path.size() == 2 * n_words) {
      return certain("F", EventKind::Experience, "overlap=" + std::to_string(overlap(path)));
    }
    return std::nullopt;
  };
  spec.valence = [=](const Path& path) {
    const double k = static_cast<double>(overlap(path));
    return std::clamp((k - mu0) / sigma, -1.0, 1.0);
  };
  spec.observers = {{"F", "participant"}};
  spec.early_variable = "recall_0";
  std::set<std::string> above_null;
  for (std::size_t k = 0; k <= std::min(n_recall, n_targets); ++k) {
    if (static_cast<double>(k) > mu0) above_null.insert("overlap=" + std::to_string(k));
  }
  spec.hit = {{Predicate::in("F", above_null)}, {}};
  spec.observable = Observable{"overlap", [=](const Path& path) { return static_cast<double>(overlap(path)); }};
  spec.leaf_count = binomial(n_words, n_recall) * binomial(n_words, n_targets);
  return spec;
}

// ---------------------------------------------------------------------------
// Variants

ProtocolSpec falsification_variant(const ProtocolSpec& base) {
  ProtocolSpec spec = base;
  spec.name = "falsified_" + base.name;
  for (auto& [variable, observer] : spec.observers) observer = "independent_observer";
  spec.valence = [](const Path&) { return 0.0; };
  return spec;
}

ProtocolSpec reversed_polarity_protocol(const std::string& first_observer) {
  if (first_observer != "a" && first_observer != "b") {
    throw Error(ErrorKind::ConfigError, "first observer must be 'a' or 'b', got '" + first_observer + "'");
  }
  ProtocolSpec spec;
  spec.name = "reversed_polarity_first_" + first_observer;
  spec.next_event = [](const Path& path) -> std::optional<EventNode> {
    const auto feel = [&](bool pleasant) { return pleasant ? "pleasant" : "unpleasant"; };
    switch (path.size()) {
      case 0: return fair("P", EventKind::AgentChoice, "a", "b");
      case 1: return fair("T", EventKind::NatureRng, "a", "b");
      case 2: return certain("F_a", EventKind::Experience, feel(path[0].outcome == path[1].outcome));
      case 3: return certain("F_b", EventKind::Experience, feel(path[0].outcome != path[1].outcome));
      default: return std::nullopt;
    }
  };
  const std::string biased_variable = "F_" + first_observer;
  spec.valence = [biased_variable](const Path& path) {
    return at(path, biased_variable) == "pleasant" ? 1.0 : -1.0;
  };
  spec.observers = {{"F_a", "participant_a"}, {"F_b", "participant_b"}};
  spec.biased_observer = "participant_" + first_observer;
  spec.early_variable = "P";
  spec.hit = {{Predicate::equal("T", "P")}, {}};
  spec.leaf_count = 4;
  return spec;
}

std::vector<ProtocolSpec> bem_protocols() {
  return {
      detection_protocol(),
      avoidance_protocol(),
      priming_protocol(PrimingMode::Retro),
      priming_protocol(PrimingMode::Normal),
      habituation_protocol(-0.8, 0.5),
      habituation_protocol(0.8, 0.5),
      habituation_protocol(0.0, 0.5),
      recall_protocol(4, 2, 2),
      recall_protocol(6, 3, 3),
  };
}

}  // namespace retrosim
