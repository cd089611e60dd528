#pragma once

// Builders for the nine Bem-style experiment structures plus the
// independent-observer and reversed-polarity control variants.
//
// Variables shared by the binary-preference protocols:
//   P  participant's recorded preference (agent choice, 50/50)
//   T  RNG target (50/50)
//   F  the participant's final experience (terminal)

#include <cstddef>
#include <string>
#include <vector>

#include "retrosim/protocol_spec.hpp"

namespace retrosim {

/// Experiment 1: P, T in {L, R}; S in {E, N}. Erotic iff P = T and S = E.
ProtocolSpec detection_protocol();

/// Experiment 2: S = + iff T = P, else S = -; the experience inherits S.
ProtocolSpec avoidance_protocol();

enum class PrimingMode { Retro, Normal };

struct ReactionTimeModel {
  double base_ms = 600.0;
  double congruency_delta_ms = 40.0;
  double noise_spread_ms = 0.0;

  void validate() const;
  /// base (+ delta if incongruent) plus uniform noise of half-width
  /// noise_spread_ms placed by `draw` in [0, 1); draw = 0.5 is noise-free.
  double reaction_time(bool congruent, double draw = 0.5) const;
};

inline constexpr double kDefaultCongruencyValence = 0.5;

/// Experiments 3-4. Variables: picture (pos|neg, 50/50), response
/// (deterministic on the picture), word (RNG, pos|neg); the word precedes the
/// response in normal mode. Congruent iff word = picture.
ProtocolSpec priming_protocol(PrimingMode mode, const ReactionTimeModel& rt = {},
                              double congruency_valence = kDefaultCongruencyValence);

/// Experiments 5-7. Terminal valence v0 * attenuation when T = P, else v0.
ProtocolSpec habituation_protocol(double v0, double attenuation);

/// Experiments 8-9. Binary per-word events recall_i then target_i realize
/// uniform fixed-size subsets; F = "overlap=k" with valence
/// clamp((k - mu0) / sigma, -1, 1).
ProtocolSpec recall_protocol(std::size_t n_words, std::size_t n_recall, std::size_t n_targets);

/// Null-expected overlap n_recall * n_targets / n_words.
double recall_null_overlap(std::size_t n_words, std::size_t n_recall, std::size_t n_targets);

/// The terminal experience goes to an independent observer with valence 0.
ProtocolSpec falsification_variant(const ProtocolSpec& base);

/// Two participants share P and T with reversed polarity: T = P pleases
/// participant_a and displeases participant_b. Bias attaches to the observer
/// named by `first_observer` ("a" or "b").
ProtocolSpec reversed_polarity_protocol(const std::string& first_observer);

/// The nine experiment structures with default parameters, in experiment order.
std::vector<ProtocolSpec> bem_protocols();

}  // namespace retrosim
