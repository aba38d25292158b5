#include "purrfect/session.hpp"

#include <cmath>
#include <utility>

#include <spdlog/spdlog.h>

#include "purrfect/error.hpp"

namespace purrfect {
namespace {

bool is_interval_phase(PhaseKind kind) {
  return kind == PhaseKind::PreTest || kind == PhaseKind::Training ||
         kind == PhaseKind::PostTest;
}

class Machine {
 public:
  Machine(const SessionPlan& plan, SessionState& state, std::vector<Effect>& effects)
      : plan_(plan), s_(state), out_(effects) {}

  void enter_phase(std::size_t index) {
    s_.current_phase = index;
    s_.current_trial.reset();
    s_.previous_trial.reset();
    s_.spatial_trials.clear();
    s_.advance_at_ms.reset();
    s_.trials_completed_in_phase = 0;
    s_.timeout_requested = false;
    s_.repeats_this_trial = 0;
    s_.awaiting = Awaiting::Idle;
    s_.phase_started_ms = s_.clock_ms;
    if (index >= plan_.phases.size()) {
      s_.finished = true;
      out_.emplace_back(effect::EndSession{});
      return;
    }
    const PhaseSpec& phase = plan_.phases[index];
    out_.emplace_back(effect::EnterPhase{index, phase.kind, phase.label});
    switch (phase.kind) {
      case PhaseKind::Questionnaire:
        out_.emplace_back(effect::PromptQuestionnaire{phase.label});
        break;
      case PhaseKind::Break:
        break;
      case PhaseKind::SpatialTest:
        s_.spatial_trials = run_spatial_test(plan_, s_.rng);
        start_trial();
        break;
      default:
        start_trial();
        break;
    }
  }

  void run_timers() {
    if (s_.awaiting == Awaiting::StimulusPlaying &&
        s_.clock_ms >= s_.trial_onset_ms + plan_.timing.second_onset_ms()) {
      s_.awaiting = Awaiting::Response;
    }
    if (s_.advance_at_ms && s_.clock_ms >= *s_.advance_at_ms) {
      s_.advance_at_ms.reset();
      s_.current_trial.reset();
      if (phase_complete()) {
        enter_phase(s_.current_phase + 1);
      } else {
        start_trial();
      }
    }
  }

  void on(const event::Tick&) {}

  void on(const event::StimulusDone&) {
    if (s_.awaiting == Awaiting::StimulusPlaying) {
      s_.awaiting = Awaiting::Response;
    } else {
      ignore("StimulusDone");
    }
  }

  void on(const event::Key& key) {
    if (key.key == ' ') {
      replay();
    } else if (key.key >= '1' && key.key <= '8') {
      respond(key.key - '0');
    } else if ((key.key == '\n' || key.key == '\r') && in_phase(PhaseKind::Break)) {
      enter_phase(s_.current_phase + 1);
    } else {
      ignore("Key");
    }
  }

  void on(const event::ReplayRequested&) { replay(); }

  void on(const event::PhaseTimeout&) {
    if (in_phase(PhaseKind::Training)) {
      s_.timeout_requested = true;
    } else if (in_phase(PhaseKind::Break)) {
      enter_phase(s_.current_phase + 1);
    } else {
      ignore("PhaseTimeout");
    }
  }

  void on(const event::Continue&) {
    if (in_phase(PhaseKind::Break)) {
      enter_phase(s_.current_phase + 1);
    } else {
      ignore("Continue");
    }
  }

  void on(const event::SpatialAnswer& answer) {
    if (!in_phase(PhaseKind::SpatialTest) || s_.awaiting != Awaiting::Response) {
      ignore("SpatialAnswer");
      return;
    }
    if (!std::isfinite(answer.value) || answer.value <= 0.0) {
      out_.emplace_back(effect::Rejected{"distance must be a non-zero, positive number"});
      out_.emplace_back(effect::PromptSpatial{s_.current_trial->trial_index});
      return;
    }
    TrialRecord record = base_record();
    record.spatial_response = answer.value;
    finish_trial(std::move(record), std::nullopt);
  }

  void on(const event::QuestionnaireAnswer& answer) {
    if (!in_phase(PhaseKind::Questionnaire) || !answer.answers.is_object()) {
      ignore("QuestionnaireAnswer");
      return;
    }
    out_.emplace_back(effect::RecordQuestionnaire{phase().label, answer.answers});
    enter_phase(s_.current_phase + 1);
  }

 private:
  const PhaseSpec& phase() const { return plan_.phases[s_.current_phase]; }

  bool in_phase(PhaseKind kind) const {
    return !s_.finished && s_.current_phase < plan_.phases.size() && phase().kind == kind;
  }

  bool haptics_on() const {
    return phase().haptics && plan_.condition == Condition::AudioHaptic;
  }

  bool phase_complete() const {
    const PhaseSpec& p = phase();
    if (p.trial_count) return s_.trials_completed_in_phase >= *p.trial_count;
    if (p.duration_ms) {
      return s_.timeout_requested || s_.clock_ms - s_.phase_started_ms >= *p.duration_ms;
    }
    return true;
  }

  void start_trial() {
    const PhaseSpec& p = phase();
    Trial trial;
    if (p.kind == PhaseKind::SpatialTest) {
      trial = s_.spatial_trials.at(static_cast<std::size_t>(s_.trials_completed_in_phase));
    } else {
      trial = next_trial(s_.previous_trial, s_.rng, p.kind);
    }
    s_.current_trial = trial;
    s_.trial_onset_ms = s_.clock_ms;
    s_.repeats_this_trial = 0;
    s_.awaiting = Awaiting::StimulusPlaying;
    const int stimulus_id = s_.next_stimulus_id++;
    out_.emplace_back(effect::StartTrial{p.kind, trial.trial_index, stimulus_id});
    present(stimulus_id, false);
    if (p.kind == PhaseKind::SpatialTest) {
      out_.emplace_back(effect::PromptSpatial{trial.trial_index});
    }
  }

  void present(int stimulus_id, bool replay) {
    const PhaseSpec& p = phase();
    const Trial& trial = *s_.current_trial;
    if (p.audio) {
      out_.emplace_back(
          effect::PlayAudio{stimulus_id, describe_stimulus(trial, plan_.timing), replay});
    }
    if (haptics_on()) {
      out_.emplace_back(effect::SendHaptics{
          schedule_for_trial(trial, plan_.timing, plan_.haptic_intensity)});
    }
  }

  void replay() {
    if (s_.awaiting != Awaiting::Response || !s_.current_trial) {
      ignore("Replay");
      return;
    }
    ++s_.repeats_this_trial;
    present(s_.next_stimulus_id - 1, true);
  }

  void respond(int degree) {
    if (s_.awaiting != Awaiting::Response || !s_.current_trial ||
        !is_interval_phase(phase().kind)) {
      ignore("Response");
      return;
    }
    TrialRecord record = base_record();
    record.response_degree = degree;
    const bool correct = degree == s_.current_trial->interval.degree();
    record.correct = correct;
    finish_trial(std::move(record), correct);
  }

  TrialRecord base_record() const {
    const Trial& trial = *s_.current_trial;
    TrialRecord record;
    record.participant_id = plan_.participant_id;
    record.condition = plan_.condition;
    record.phase = phase().kind;
    record.trial_index = trial.trial_index;
    record.base_midi = trial.base.midi;
    record.interval_degree = trial.interval.degree();
    record.response_time_ms = static_cast<double>(s_.clock_ms - s_.trial_onset_ms);
    record.repeats = s_.repeats_this_trial;
    record.stimulus_onset_ms = plan_.start_epoch_ms + s_.trial_onset_ms;
    return record;
  }

  void finish_trial(TrialRecord record, std::optional<bool> correct) {
    out_.emplace_back(effect::RecordTrial{std::move(record)});
    if (phase().feedback && correct) {
      out_.emplace_back(effect::ShowFeedback{*correct ? FeedbackColor::Green : FeedbackColor::Red,
                                             s_.current_trial->interval.degree()});
      s_.awaiting = Awaiting::FeedbackShown;
    } else {
      s_.awaiting = Awaiting::Idle;
    }
    if (phase().kind != PhaseKind::SpatialTest) s_.previous_trial = s_.current_trial;
    ++s_.trials_completed_in_phase;
    s_.advance_at_ms = s_.clock_ms + kAutoAdvanceMs;
  }

  void ignore(const char* what) {
    ++s_.ignored_events;
    spdlog::debug("session {}: ignored {} while {}", plan_.participant_id, what,
                  to_string(s_.awaiting));
  }

  const SessionPlan& plan_;
  SessionState& s_;
  std::vector<Effect>& out_;
};

}  // namespace

std::string_view to_string(Condition c) noexcept {
  return c == Condition::AudioOnly ? "AudioOnly" : "AudioHaptic";
}

Condition condition_from_string(std::string_view name) {
  if (name == "AudioOnly" || name == "audio-only" || name == "audio") return Condition::AudioOnly;
  if (name == "AudioHaptic" || name == "audio-haptic" || name == "haptic") {
    return Condition::AudioHaptic;
  }
  throw Error(Errc::ConfigError, "unknown condition '" + std::string(name) + "'");
}

std::string_view to_string(Awaiting a) noexcept {
  switch (a) {
    case Awaiting::StimulusPlaying: return "StimulusPlaying";
    case Awaiting::Response: return "Response";
    case Awaiting::FeedbackShown: return "FeedbackShown";
    case Awaiting::Idle: return "Idle";
  }
  return "Unknown";
}

PhaseSpec PhaseSpec::questionnaire(std::string label) {
  return {PhaseKind::Questionnaire, std::nullopt, std::nullopt, false, false, false,
          std::move(label)};
}

PhaseSpec PhaseSpec::spatial_test() {
  return {PhaseKind::SpatialTest, kSpatialPairCount, std::nullopt, false, true, false,
          "Spatial test"};
}

PhaseSpec PhaseSpec::pre_test() {
  return {PhaseKind::PreTest, kTestTrialCount, std::nullopt, false, false, true, "Pre-test"};
}

PhaseSpec PhaseSpec::training(Condition condition, std::string label) {
  return {PhaseKind::Training,         std::nullopt, kTrainingDurationMs, true,
          condition == Condition::AudioHaptic, true,         std::move(label)};
}

PhaseSpec PhaseSpec::rest() {
  return {PhaseKind::Break, std::nullopt, std::nullopt, false, false, false, "Break"};
}

PhaseSpec PhaseSpec::post_test() {
  return {PhaseKind::PostTest, kTestTrialCount, std::nullopt, false, false, true, "Post-test"};
}

void to_json(nlohmann::json& j, const PhaseSpec& p) {
  j = {{"kind", to_string(p.kind)}, {"feedback", p.feedback}, {"haptics", p.haptics},
       {"audio", p.audio},          {"label", p.label}};
  j["trial_count"] = p.trial_count ? nlohmann::json(*p.trial_count) : nlohmann::json(nullptr);
  j["duration_ms"] = p.duration_ms ? nlohmann::json(*p.duration_ms) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, PhaseSpec& p) {
  p.kind = phase_kind_from_string(j.at("kind").get<std::string>());
  p.trial_count.reset();
  p.duration_ms.reset();
  if (j.contains("trial_count") && !j["trial_count"].is_null()) p.trial_count = j["trial_count"];
  if (j.contains("duration_ms") && !j["duration_ms"].is_null()) p.duration_ms = j["duration_ms"];
  p.feedback = j.value("feedback", false);
  p.haptics = j.value("haptics", false);
  p.audio = j.value("audio", false);
  p.label = j.value("label", std::string(to_string(p.kind)));
}

SessionPlan SessionPlan::standard(std::string participant_id, Condition condition,
                                  std::uint64_t seed, StimulusTiming timing) {
  SessionPlan plan;
  plan.participant_id = std::move(participant_id);
  plan.condition = condition;
  plan.seed = seed;
  plan.timing = timing;
  plan.phases.push_back(PhaseSpec::questionnaire("Q1"));
  if (condition == Condition::AudioHaptic) plan.phases.push_back(PhaseSpec::spatial_test());
  plan.phases.push_back(PhaseSpec::pre_test());
  plan.phases.push_back(PhaseSpec::training(condition, "Training 1"));
  plan.phases.push_back(PhaseSpec::rest());
  plan.phases.push_back(PhaseSpec::training(condition, "Training 2"));
  plan.phases.push_back(PhaseSpec::post_test());
  plan.phases.push_back(PhaseSpec::questionnaire("Q2"));
  return plan;
}

void SessionPlan::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::ConfigError, msg); };
  if (participant_id.empty()) fail("participant_id is empty");
  try {
    timing.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (haptic_intensity < 0 || haptic_intensity > 255) fail("haptic_intensity not in 0..255");
  for (const auto& p : phases) {
    const std::string name(to_string(p.kind));
    switch (p.kind) {
      case PhaseKind::PreTest:
      case PhaseKind::PostTest:
        if (p.trial_count != kTestTrialCount || p.feedback || p.haptics || !p.audio) {
          fail(name + " must be 20 audio-only trials without feedback");
        }
        break;
      case PhaseKind::Training:
        if (p.duration_ms != kTrainingDurationMs || !p.feedback || !p.audio ||
            p.haptics != (condition == Condition::AudioHaptic)) {
          fail("Training must run 600000 ms with feedback, haptics iff AudioHaptic");
        }
        break;
      case PhaseKind::SpatialTest:
        if (condition != Condition::AudioHaptic) fail("AudioOnly plans have no SpatialTest");
        if (p.trial_count != kSpatialPairCount || p.audio || !p.haptics || p.feedback) {
          fail("SpatialTest must be 8 haptic-only pairs without feedback");
        }
        break;
      case PhaseKind::Questionnaire:
      case PhaseKind::Break:
        if (p.haptics || p.audio || p.feedback) fail(name + " presents no stimuli");
        break;
    }
  }
}

void to_json(nlohmann::json& j, const SessionPlan& p) {
  j = {{"participant_id", p.participant_id},
       {"condition", to_string(p.condition)},
       {"phases", p.phases},
       {"timing", p.timing},
       {"seed", p.seed},
       {"haptic_intensity", p.haptic_intensity},
       {"start_epoch_ms", p.start_epoch_ms}};
}

void from_json(const nlohmann::json& j, SessionPlan& p) {
  p.participant_id = j.value("participant_id", std::string("P00"));
  p.condition = condition_from_string(j.value("condition", std::string("AudioOnly")));
  p.timing = j.value("timing", StimulusTiming{});
  p.seed = j.value("seed", std::uint64_t{0});
  p.haptic_intensity = j.value("haptic_intensity", kDefaultIntensity);
  p.start_epoch_ms = j.value("start_epoch_ms", std::int64_t{0});
  if (j.contains("phases")) {
    p.phases = j["phases"].get<std::vector<PhaseSpec>>();
  } else {
    p.phases = SessionPlan::standard(p.participant_id, p.condition, p.seed, p.timing).phases;
  }
}

void TrialRecord::validate() const {
  auto fail = [&](const std::string& msg) {
    throw Error(Errc::ValidationError,
                "record " + participant_id + "/" + std::to_string(trial_index) + ": " + msg);
  };
  if (participant_id.empty()) fail("empty participant_id");
  if (trial_index < 0) fail("negative trial_index");
  if (interval_degree < 1 || interval_degree > kMaxDegree) fail("interval_degree not in 1..8");
  if (!(response_time_ms > 0.0) || !std::isfinite(response_time_ms)) {
    fail("response_time_ms must be positive");
  }
  if (repeats < 0) fail("negative repeats");
  if (phase == PhaseKind::SpatialTest) {
    if (!spatial_response || !(*spatial_response > 0.0) || !std::isfinite(*spatial_response)) {
      fail("spatial response must be a positive number");
    }
    if (correct) fail("spatial records carry no correctness");
    if (response_degree) fail("spatial records carry no response_degree");
  } else if (phase == PhaseKind::PreTest || phase == PhaseKind::Training ||
             phase == PhaseKind::PostTest) {
    if (!response_degree || *response_degree < 1 || *response_degree > kMaxDegree) {
      fail("response_degree not in 1..8");
    }
    if (!correct || *correct != (*response_degree == interval_degree)) {
      fail("correct must equal response_degree == interval_degree");
    }
  } else {
    fail("phase " + std::string(to_string(phase)) + " has no trials");
  }
}

void to_json(nlohmann::json& j, const TrialRecord& r) {
  j = {{"participant_id", r.participant_id},
       {"condition", to_string(r.condition)},
       {"phase", to_string(r.phase)},
       {"trial_index", r.trial_index},
       {"base_midi", r.base_midi},
       {"interval_degree", r.interval_degree},
       {"response_time_ms", r.response_time_ms},
       {"repeats", r.repeats},
       {"stimulus_onset_ms", r.stimulus_onset_ms}};
  j["response_degree"] =
      r.response_degree ? nlohmann::json(*r.response_degree) : nlohmann::json(nullptr);
  j["spatial_response"] =
      r.spatial_response ? nlohmann::json(*r.spatial_response) : nlohmann::json(nullptr);
  j["correct"] = r.correct ? nlohmann::json(*r.correct) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TrialRecord& r) {
  r.participant_id = j.at("participant_id").get<std::string>();
  r.condition = condition_from_string(j.at("condition").get<std::string>());
  r.phase = phase_kind_from_string(j.at("phase").get<std::string>());
  r.trial_index = j.at("trial_index");
  r.base_midi = j.at("base_midi");
  r.interval_degree = j.at("interval_degree");
  r.response_time_ms = j.at("response_time_ms");
  r.repeats = j.at("repeats");
  r.stimulus_onset_ms = j.at("stimulus_onset_ms");
  r.response_degree.reset();
  r.spatial_response.reset();
  r.correct.reset();
  if (j.contains("response_degree") && !j["response_degree"].is_null()) {
    r.response_degree = j["response_degree"].get<int>();
  }
  if (j.contains("spatial_response") && !j["spatial_response"].is_null()) {
    r.spatial_response = j["spatial_response"].get<double>();
  }
  if (j.contains("correct") && !j["correct"].is_null()) r.correct = j["correct"].get<bool>();
}

std::vector<Trial> run_spatial_test(const SessionPlan& plan, TrialRng& rng) {
  if (plan.condition != Condition::AudioHaptic) {
    throw Error(Errc::WrongCondition, "spatial test requires the AudioHaptic condition");
  }
  std::vector<int> modules(kSpatialPairCount);
  for (int i = 0; i < kSpatialPairCount; ++i) modules[i] = i + 1;
  for (int i = kSpatialPairCount - 1; i > 0; --i) {
    std::swap(modules[i], modules[rng.uniform_int(0, i)]);
  }
  // Tones are placeholders: the pair is presented without audio.
  const ScaleTone base = tone_at(0);
  std::vector<Trial> trials;
  trials.reserve(modules.size());
  for (int k = 0; k < kSpatialPairCount; ++k) {
    const Interval target(modules[k]);
    trials.push_back(Trial{k, base, target, apply_interval(base, target), PhaseKind::SpatialTest});
  }
  return trials;
}

Step start_session(const SessionPlan& plan, std::int64_t now_ms) {
  plan.validate();
  Step step;
  step.state.rng = TrialRng(plan.seed);
  step.state.clock_ms = now_ms;
  Machine(plan, step.state, step.effects).enter_phase(0);
  return step;
}

Step advance(const SessionPlan& plan, SessionState state, const Event& event) {
  Step step{std::move(state), {}};
  if (step.state.finished) {
    ++step.state.ignored_events;
    return step;
  }
  step.state.clock_ms = std::max(step.state.clock_ms, event.time_ms);
  Machine machine(plan, step.state, step.effects);
  machine.run_timers();
  if (!step.state.finished) {
    std::visit([&](const auto& e) { machine.on(e); }, event.payload);
  }
  return step;
}

Session::Session(SessionPlan plan) : plan_(std::move(plan)) {}

std::vector<Effect> Session::start(std::int64_t now_ms) {
  Step step = start_session(plan_, now_ms);
  state_ = std::move(step.state);
  return std::move(step.effects);
}

std::vector<Effect> Session::dispatch(const Event& event) {
  Step step = advance(plan_, std::move(state_), event);
  state_ = std::move(step.state);
  return std::move(step.effects);
}

const PhaseSpec* Session::current_phase() const noexcept {
  if (state_.finished || state_.current_phase >= plan_.phases.size()) return nullptr;
  return &plan_.phases[state_.current_phase];
}

}  // namespace purrfect
