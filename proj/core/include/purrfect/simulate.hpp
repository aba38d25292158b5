#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "purrfect/rng.hpp"
#include "purrfect/session.hpp"

namespace purrfect {

/// Generative model of one simulated participant.
///
/// Accuracy follows a logistic psychometric curve: during training
/// logit P(correct) = logit(p_correct_training) + u + learning_logit_per_trial * n,
/// with u ~ N(0, participant_logit_sd^2) drawn once per participant and n the
/// 1-based training trial count. Wrong answers are uniform over the other
/// seven degrees. Response times are lognormal around a participant-level
/// mean; draws that land before the second tone are redrawn. A small share
/// of trials are contaminated (see below), which the analysis filter removes.
struct BehaviorSpec {
  double p_correct_training = 0.34;
  double p_correct_pre = 0.369;
  double p_correct_post = 0.408;
  double participant_logit_sd = 0.3;
  double learning_logit_per_trial = 0.0;

  double rt_mean_s = 6.918;
  double rt_sdlog = 0.45;
  double participant_rt_sd_s = 0.6;
  double rt_trial_slope_s = 0.0;
  double p_replay = 0.08;

  // Contaminating trials outside the response-time model: accidental presses
  // before early_press_before_s (answered at chance) and long invalid trials
  // (the participant stopped to ask something), uniform in the given range.
  double p_early_press = 0.01;
  double early_press_before_s = 1.2;
  double p_invalid_long = 0.03;
  double invalid_long_min_s = 20.0;
  double invalid_long_max_s = 60.0;

  // Magnitude estimate for pair d: scale * (d - 0.5)^exponent * lognormal noise.
  double spatial_exponent = 1.0;
  double spatial_noise_sdlog = 0.2;

  std::map<std::string, double> q2_means;

  std::int64_t questionnaire_ms = 90'000;
  std::int64_t break_ms = 120'000;

  /// Errc::ConfigError for probabilities outside [0, 1] or inconsistent
  /// response-time and contamination parameters.
  void validate() const;

  /// Defaults shaped after the reported audio-only / audio-haptic groups.
  static BehaviorSpec audio_only_default();
  static BehaviorSpec audio_haptic_default();
};

void to_json(nlohmann::json& j, const BehaviorSpec& b);
void from_json(const nlohmann::json& j, BehaviorSpec& b);

struct SimulatedSession {
  std::vector<TrialRecord> records;
  std::vector<effect::RecordQuestionnaire> questionnaires;
  std::size_t haptic_commands = 0;
  std::size_t feedback_shown = 0;
  std::int64_t end_time_ms = 0;
};

using EffectObserver = std::function<void(std::int64_t time_ms, const Effect&)>;

/// Drives a Session from start to EndSession with scripted participant input.
/// Every effect is also passed to `observer` (when set) in emission order.
SimulatedSession simulate_participant(const SessionPlan& plan, const BehaviorSpec& behavior,
                                      TrialRng& rng, const EffectObserver& observer = {});

}  // namespace purrfect
