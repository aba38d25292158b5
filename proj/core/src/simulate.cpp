#include "purrfect/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "purrfect/error.hpp"
#include "purrfect/questionnaire.hpp"

namespace purrfect {
namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double inv_logit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(Errc::ConfigError, std::string(name) + " must be a probability");
  }
}

class Participant {
 public:
  Participant(const SessionPlan& plan, const BehaviorSpec& behavior, TrialRng& rng)
      : plan_(plan), b_(behavior), rng_(rng) {
    logit_offset_ = rng_.normal() * b_.participant_logit_sd;
    rt_mean_s_ = std::max(1.5, b_.rt_mean_s + rng_.normal() * b_.participant_rt_sd_s);
    spatial_scale_ = 10.0 * std::exp(0.5 * rng_.normal());
  }

  /// Reacts to one effect by queueing the participant's next inputs.
  void react(std::int64_t now, const Effect& fx, std::deque<Event>& queue) {
    if (const auto* start = std::get_if<effect::StartTrial>(&fx)) {
      current_phase_ = start->phase;
    } else if (const auto* audio = std::get_if<effect::PlayAudio>(&fx); audio && !audio->replay) {
      schedule_interval_response(now, audio->descriptor, queue);
    } else if (const auto* prompt = std::get_if<effect::PromptSpatial>(&fx)) {
      (void)prompt;
      if (current_phase_ == PhaseKind::SpatialTest && spatial_target_) {
        schedule_spatial_response(now, queue);
      }
    } else if (const auto* haptics = std::get_if<effect::SendHaptics>(&fx)) {
      if (current_phase_ == PhaseKind::SpatialTest && haptics->commands.size() == 2) {
        spatial_target_ = haptics->commands[1].module;
      }
    } else if (const auto* q = std::get_if<effect::PromptQuestionnaire>(&fx)) {
      queue.push_back({now + b_.questionnaire_ms, event::QuestionnaireAnswer{answers_for(q->id)}});
    } else if (const auto* enter = std::get_if<effect::EnterPhase>(&fx)) {
      if (enter->kind == PhaseKind::Break) queue.push_back({now + b_.break_ms, event::Continue{}});
    }
  }

  void set_truth(int degree) { truth_ = degree; }

 private:
  double draw_rt_ms(double mean_s) {
    const double mu = std::log(mean_s) - 0.5 * b_.rt_sdlog * b_.rt_sdlog;
    const double earliest = plan_.timing.second_onset_ms() + 1.0;
    double rt;
    do {
      rt = 1000.0 * std::exp(mu + b_.rt_sdlog * rng_.normal());
    } while (rt < earliest);
    return std::round(rt);
  }

  void schedule_interval_response(std::int64_t onset, const StimulusDescriptor&,
                                  std::deque<Event>& queue) {
    double p;
    double mean_s = rt_mean_s_;
    if (current_phase_ == PhaseKind::Training) {
      ++training_trials_;
      p = inv_logit(logit(b_.p_correct_training) + logit_offset_ +
                    b_.learning_logit_per_trial * training_trials_);
      mean_s = std::max(1.5, rt_mean_s_ + b_.rt_trial_slope_s * training_trials_);
    } else if (current_phase_ == PhaseKind::PreTest) {
      p = inv_logit(logit(b_.p_correct_pre) + logit_offset_);
    } else {
      p = inv_logit(logit(b_.p_correct_post) + logit_offset_);
    }
    if (b_.p_correct_training >= 1.0 && current_phase_ == PhaseKind::Training) p = 1.0;
    if (b_.p_correct_training <= 0.0 && current_phase_ == PhaseKind::Training) p = 0.0;

    const auto open = onset + plan_.timing.second_onset_ms();
    double rt_ms;
    const double kind = rng_.uniform01();
    if (kind < b_.p_early_press) {
      // Accidental entry right after the second tone starts: a blind guess.
      p = 1.0 / kMaxDegree;
      const double earliest = static_cast<double>(plan_.timing.second_onset_ms() + 1);
      rt_ms = std::round(earliest + rng_.uniform01() * std::max(0.0, b_.early_press_before_s * 1000.0 - earliest));
    } else if (kind < b_.p_early_press + b_.p_invalid_long) {
      rt_ms = std::round(1000.0 * (b_.invalid_long_min_s +
                                   rng_.uniform01() * (b_.invalid_long_max_s - b_.invalid_long_min_s)));
    } else {
      rt_ms = draw_rt_ms(mean_s);
    }
    int answer = truth_;
    if (!rng_.bernoulli(p)) {
      answer = rng_.uniform_int(1, kMaxDegree - 1);
      if (answer >= truth_) ++answer;
    }
    const auto key_at = onset + static_cast<std::int64_t>(rt_ms);
    queue.push_back({open, event::Tick{}});
    if (rng_.bernoulli(b_.p_replay)) {
      queue.push_back({open + (key_at - open) / 2, event::ReplayRequested{}});
    }
    queue.push_back({key_at, event::Key{static_cast<char>('0' + answer)}});
    queue.push_back({key_at + kAutoAdvanceMs, event::Tick{}});
  }

  void schedule_spatial_response(std::int64_t onset, std::deque<Event>& queue) {
    const double rating = spatial_scale_ *
                          std::pow(*spatial_target_ - 0.5, b_.spatial_exponent) *
                          std::exp(b_.spatial_noise_sdlog * rng_.normal());
    const auto open = onset + plan_.timing.second_onset_ms();
    const auto answer_at = onset + static_cast<std::int64_t>(draw_rt_ms(rt_mean_s_));
    queue.push_back({open, event::Tick{}});
    queue.push_back({answer_at, event::SpatialAnswer{std::round(rating * 100.0) / 100.0}});
    queue.push_back({answer_at + kAutoAdvanceMs, event::Tick{}});
    spatial_target_.reset();
  }

  nlohmann::json answers_for(const std::string& id) {
    nlohmann::json answers = nlohmann::json::object();
    if (id == "Q2") {
      for (const auto& item : kQ2Items) {
        const auto it = b_.q2_means.find(std::string(item.key));
        const double mean = it == b_.q2_means.end() ? 4.0 : it->second;
        const double raw = std::round(mean + rng_.normal());
        answers[std::string(item.key)] =
            static_cast<int>(std::clamp(raw, double(kLikertMin), double(kLikertMax)));
      }
    } else {
      answers["age"] = rng_.uniform_int(18, 36);
      answers["normal_hearing"] = true;
      answers["interval_training"] = "none";
      answers["instrument_experience"] = rng_.bernoulli(0.5) ? "none" : "minimal";
    }
    return answers;
  }

  const SessionPlan& plan_;
  const BehaviorSpec& b_;
  TrialRng& rng_;
  double logit_offset_ = 0.0;
  double rt_mean_s_ = 0.0;
  double spatial_scale_ = 1.0;
  int training_trials_ = 0;
  int truth_ = 1;
  PhaseKind current_phase_ = PhaseKind::Questionnaire;
  std::optional<int> spatial_target_;
};

}  // namespace

BehaviorSpec BehaviorSpec::audio_only_default() {
  BehaviorSpec b;
  b.q2_means = {{"mental_load", 5.2},   {"physical_load", 1.8}, {"success", 3.4},
                {"ease", 5.0},          {"frustration", 4.6},   {"effectiveness", 4.4},
                {"engagement", 4.6},    {"fun", 4.5}};
  return b;
}

BehaviorSpec BehaviorSpec::audio_haptic_default() {
  BehaviorSpec b;
  b.p_correct_training = 0.543;
  b.p_correct_pre = 0.401;
  b.p_correct_post = 0.444;
  b.rt_mean_s = 5.244;
  b.q2_means = {{"mental_load", 4.6},   {"physical_load", 2.0}, {"success", 4.1},
                {"ease", 4.6},          {"frustration", 3.1},   {"effectiveness", 5.4},
                {"engagement", 5.7},    {"fun", 5.6}};
  return b;
}

void to_json(nlohmann::json& j, const BehaviorSpec& b) {
  j = {{"p_correct_training", b.p_correct_training},
       {"p_correct_pre", b.p_correct_pre},
       {"p_correct_post", b.p_correct_post},
       {"participant_logit_sd", b.participant_logit_sd},
       {"learning_logit_per_trial", b.learning_logit_per_trial},
       {"rt_mean_s", b.rt_mean_s},
       {"rt_sdlog", b.rt_sdlog},
       {"participant_rt_sd_s", b.participant_rt_sd_s},
       {"rt_trial_slope_s", b.rt_trial_slope_s},
       {"p_replay", b.p_replay},
       {"p_early_press", b.p_early_press},
       {"early_press_before_s", b.early_press_before_s},
       {"p_invalid_long", b.p_invalid_long},
       {"invalid_long_min_s", b.invalid_long_min_s},
       {"invalid_long_max_s", b.invalid_long_max_s},
       {"spatial_exponent", b.spatial_exponent},
       {"spatial_noise_sdlog", b.spatial_noise_sdlog},
       {"q2_means", b.q2_means},
       {"questionnaire_ms", b.questionnaire_ms},
       {"break_ms", b.break_ms}};
}

void from_json(const nlohmann::json& j, BehaviorSpec& b) {
  const BehaviorSpec d = b;
  b.p_correct_training = j.value("p_correct_training", d.p_correct_training);
  b.p_correct_pre = j.value("p_correct_pre", d.p_correct_pre);
  b.p_correct_post = j.value("p_correct_post", d.p_correct_post);
  b.participant_logit_sd = j.value("participant_logit_sd", d.participant_logit_sd);
  b.learning_logit_per_trial = j.value("learning_logit_per_trial", d.learning_logit_per_trial);
  b.rt_mean_s = j.value("rt_mean_s", d.rt_mean_s);
  b.rt_sdlog = j.value("rt_sdlog", d.rt_sdlog);
  b.participant_rt_sd_s = j.value("participant_rt_sd_s", d.participant_rt_sd_s);
  b.rt_trial_slope_s = j.value("rt_trial_slope_s", d.rt_trial_slope_s);
  b.p_replay = j.value("p_replay", d.p_replay);
  b.p_early_press = j.value("p_early_press", d.p_early_press);
  b.early_press_before_s = j.value("early_press_before_s", d.early_press_before_s);
  b.p_invalid_long = j.value("p_invalid_long", d.p_invalid_long);
  b.invalid_long_min_s = j.value("invalid_long_min_s", d.invalid_long_min_s);
  b.invalid_long_max_s = j.value("invalid_long_max_s", d.invalid_long_max_s);
  b.spatial_exponent = j.value("spatial_exponent", d.spatial_exponent);
  b.spatial_noise_sdlog = j.value("spatial_noise_sdlog", d.spatial_noise_sdlog);
  b.q2_means = j.value("q2_means", d.q2_means);
  b.questionnaire_ms = j.value("questionnaire_ms", d.questionnaire_ms);
  b.break_ms = j.value("break_ms", d.break_ms);
}

void BehaviorSpec::validate() const {
  check_probability(p_correct_training, "p_correct_training");
  check_probability(p_correct_pre, "p_correct_pre");
  check_probability(p_correct_post, "p_correct_post");
  check_probability(p_replay, "p_replay");
  check_probability(p_early_press, "p_early_press");
  check_probability(p_invalid_long, "p_invalid_long");
  if (p_early_press + p_invalid_long > 1.0 ||
      !(invalid_long_max_s >= invalid_long_min_s)) {
    throw Error(Errc::ConfigError, "contamination parameters are inconsistent");
  }
  if (!(rt_mean_s > 0.0) || !(rt_sdlog >= 0.0)) {
    throw Error(Errc::ConfigError, "response-time parameters must be positive");
  }
}

SimulatedSession simulate_participant(const SessionPlan& plan, const BehaviorSpec& behavior,
                                      TrialRng& rng, const EffectObserver& observer) {
  behavior.validate();

  Session session(plan);
  Participant participant(plan, behavior, rng);
  SimulatedSession result;
  std::deque<Event> queue;

  auto handle = [&](std::int64_t now, std::vector<Effect> effects) {
    for (const auto& fx : effects) {
      if (observer) observer(now, fx);
      if (const auto* rec = std::get_if<effect::RecordTrial>(&fx)) {
        result.records.push_back(rec->record);
      } else if (const auto* q = std::get_if<effect::RecordQuestionnaire>(&fx)) {
        result.questionnaires.push_back(*q);
      } else if (const auto* h = std::get_if<effect::SendHaptics>(&fx)) {
        result.haptic_commands += h->commands.size();
      } else if (std::holds_alternative<effect::ShowFeedback>(fx)) {
        ++result.feedback_shown;
      }
      if (std::holds_alternative<effect::StartTrial>(fx) && session.state().current_trial) {
        participant.set_truth(session.state().current_trial->interval.degree());
      }
      participant.react(now, fx, queue);
    }
  };

  handle(0, session.start(0));
  while (!session.state().finished) {
    if (queue.empty()) {
      throw Error(Errc::ConfigError, "simulated participant stalled in phase " +
                                         std::to_string(session.state().current_phase));
    }
    const Event next = std::move(queue.front());
    queue.pop_front();
    handle(next.time_ms, session.dispatch(next));
  }
  result.end_time_ms = session.state().clock_ms;
  return result;
}

}  // namespace purrfect
