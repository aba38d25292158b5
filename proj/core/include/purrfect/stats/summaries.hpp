#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "purrfect/datastore.hpp"
#include "purrfect/haptics.hpp"
#include "purrfect/stats/descriptive.hpp"

namespace purrfect::stats {

struct SpatialModuleSummary {
  int module = 0;
  /// Reference line: (module - 1) / 7.
  double ground_truth = 0.0;
  BoxStats box;
};

struct SpatialSummary {
  std::vector<std::string> included;
  /// Participants whose ratings were all equal and could not be scaled.
  std::vector<std::string> excluded_degenerate;
  std::vector<SpatialModuleSummary> modules;
};

void to_json(nlohmann::json& j, const SpatialSummary& s);

/// Normalizes each participant's ratings to [0, 1] and summarizes them per
/// target module. Errc::InsufficientData if no participant survives.
SpatialSummary spatial_summary(std::span<const SpatialRatings> ratings);

/// counts[interval - 1][response - 1] for one group and test phase.
struct GuessMatrix {
  int haptic = 0;
  PhaseKind phase = PhaseKind::PreTest;
  std::array<std::array<int, 8>, 8> counts{};
  int total(int interval) const;
};

struct GuessDistribution {
  /// audio-only pre, audio-only post, haptic pre, haptic post.
  std::array<GuessMatrix, 4> matrices;
  const GuessMatrix& at(int haptic, PhaseKind phase) const;
};

void to_json(nlohmann::json& j, const GuessDistribution& d);

GuessDistribution guess_distribution(const ObservationTable& table);

}  // namespace purrfect::stats
