#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "purrfect/datastore.hpp"
#include "purrfect/stats/descriptive.hpp"
#include "purrfect/stats/glmm.hpp"

namespace purrfect::stats {

/// Conditional: random intercept at 0. Integrated: the inverse link averaged
/// over u ~ N(0, sigma_u^2) (population-averaged). Identical for the Gaussian
/// family.
enum class MarginalMode { Conditional, Integrated };

std::string_view to_string(MarginalMode m) noexcept;
MarginalMode marginal_mode_from_string(std::string_view name);

/// Counterfactual average predictions: each observed row is evaluated with
/// haptic forced to 0 and to 1 and the results averaged. Intervals use the
/// delta method on vcov(beta) with sigma_u treated as known.
struct MarginalSummary {
  Family family = Family::BinomialLogit;
  MarginalMode mode = MarginalMode::Conditional;
  std::array<Estimate, 2> prediction;
  /// prediction[1] - prediction[0].
  Estimate contrast;
  /// Average d(prediction)/d(trial) per group.
  std::array<Estimate, 2> slope;
  /// Same, with every row at its observed haptic value.
  Estimate average_slope;
};

void to_json(nlohmann::json& j, const MarginalSummary& m);

MarginalSummary marginal_predictions(const GlmmFit& fit, const ObservationTable& table,
                                     MarginalMode mode = MarginalMode::Conditional);

struct CurvePoint {
  int trial = 0;
  int haptic = 0;
  Estimate prediction;
};

/// Model prediction at each trial number for one group (fitted line of the
/// per-trial plots).
std::vector<CurvePoint> prediction_curve(const GlmmFit& fit, int haptic, std::span<const int> trials,
                                         MarginalMode mode = MarginalMode::Conditional);

}  // namespace purrfect::stats
