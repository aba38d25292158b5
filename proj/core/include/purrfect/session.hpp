#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "purrfect/audio.hpp"
#include "purrfect/haptics.hpp"
#include "purrfect/music.hpp"
#include "purrfect/rng.hpp"

namespace purrfect {

enum class Condition { AudioOnly, AudioHaptic };

std::string_view to_string(Condition c) noexcept;
/// Accepts "AudioOnly"/"AudioHaptic" and the CLI spellings "audio-only"/"audio-haptic".
Condition condition_from_string(std::string_view name);

inline constexpr int kTestTrialCount = 20;
inline constexpr int kSpatialPairCount = 8;
inline constexpr std::int64_t kTrainingDurationMs = 10 * 60 * 1000;
inline constexpr std::int64_t kAutoAdvanceMs = 2000;

struct PhaseSpec {
  PhaseKind kind = PhaseKind::Training;
  std::optional<int> trial_count;
  std::optional<std::int64_t> duration_ms;
  bool feedback = false;
  bool haptics = false;
  bool audio = false;
  std::string label;

  static PhaseSpec questionnaire(std::string label);
  static PhaseSpec spatial_test();
  static PhaseSpec pre_test();
  static PhaseSpec training(Condition condition, std::string label);
  static PhaseSpec rest();
  static PhaseSpec post_test();
};

void to_json(nlohmann::json& j, const PhaseSpec& p);
void from_json(const nlohmann::json& j, PhaseSpec& p);

struct SessionPlan {
  std::string participant_id;
  Condition condition = Condition::AudioOnly;
  std::vector<PhaseSpec> phases;
  StimulusTiming timing;
  std::uint64_t seed = 0;
  int haptic_intensity = kDefaultIntensity;
  /// Wall-clock time (ms since epoch) that engine time 0 corresponds to.
  std::int64_t start_epoch_ms = 0;

  /// Q1, [SpatialTest], PreTest(20), Training(10 min), Break, Training(10 min),
  /// PostTest(20), Q2. The spatial test is present only with haptics.
  static SessionPlan standard(std::string participant_id, Condition condition,
                              std::uint64_t seed, StimulusTiming timing = {});

  /// Errc::ConfigError when a phase breaks the protocol invariants.
  void validate() const;
};

void to_json(nlohmann::json& j, const SessionPlan& p);
/// Missing "phases" means the standard protocol for the condition.
void from_json(const nlohmann::json& j, SessionPlan& p);

struct TrialRecord {
  std::string participant_id;
  Condition condition = Condition::AudioOnly;
  PhaseKind phase = PhaseKind::Training;
  int trial_index = 0;
  int base_midi = kLowestMidi;
  int interval_degree = 1;
  std::optional<int> response_degree;
  std::optional<double> spatial_response;
  std::optional<bool> correct;
  /// First-note onset to keypress.
  double response_time_ms = 0.0;
  int repeats = 0;
  /// Wall clock, ms since epoch.
  std::int64_t stimulus_onset_ms = 0;

  /// Errc::ValidationError if any record invariant is broken.
  void validate() const;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

void to_json(nlohmann::json& j, const TrialRecord& r);
void from_json(const nlohmann::json& j, TrialRecord& r);

namespace event {
struct Tick {};
struct StimulusDone {};
/// A keyboard key: '1'..'8' answer, ' ' replays, '\n' is the operator's continue.
struct Key {
  char key = 0;
};
struct ReplayRequested {};
struct PhaseTimeout {};
/// Operator ends an untimed phase (the break).
struct Continue {};
struct SpatialAnswer {
  double value = 0.0;
};
struct QuestionnaireAnswer {
  nlohmann::json answers;
};
}  // namespace event

struct Event {
  std::int64_t time_ms = 0;
  std::variant<event::Tick, event::StimulusDone, event::Key, event::ReplayRequested,
               event::PhaseTimeout, event::Continue, event::SpatialAnswer,
               event::QuestionnaireAnswer>
      payload;
};

enum class FeedbackColor { Green, Red };

namespace effect {
struct EnterPhase {
  std::size_t index = 0;
  PhaseKind kind = PhaseKind::Training;
  std::string label;
};
struct StartTrial {
  PhaseKind phase = PhaseKind::Training;
  int trial_index = 0;
  int stimulus_id = 0;
};
struct PlayAudio {
  int stimulus_id = 0;
  StimulusDescriptor descriptor;
  bool replay = false;
};
struct SendHaptics {
  std::vector<HapticCommand> commands;
};
struct PromptSpatial {
  int pair_index = 0;
};
struct PromptQuestionnaire {
  std::string id;
};
struct ShowFeedback {
  FeedbackColor color = FeedbackColor::Red;
  int correct_degree = 1;
};
struct RecordTrial {
  TrialRecord record;
};
struct RecordQuestionnaire {
  std::string id;
  nlohmann::json answers;
};
struct Rejected {
  std::string reason;
};
struct EndSession {};
}  // namespace effect

using Effect = std::variant<effect::EnterPhase, effect::StartTrial, effect::PlayAudio,
                            effect::SendHaptics, effect::PromptSpatial,
                            effect::PromptQuestionnaire, effect::ShowFeedback,
                            effect::RecordTrial, effect::RecordQuestionnaire, effect::Rejected,
                            effect::EndSession>;

enum class Awaiting { StimulusPlaying, Response, FeedbackShown, Idle };

std::string_view to_string(Awaiting a) noexcept;

struct SessionState {
  std::size_t current_phase = 0;
  std::optional<Trial> current_trial;
  Awaiting awaiting = Awaiting::Idle;
  int repeats_this_trial = 0;
  std::int64_t clock_ms = 0;

  bool finished = false;
  std::int64_t phase_started_ms = 0;
  std::int64_t trial_onset_ms = 0;
  std::optional<std::int64_t> advance_at_ms;
  int trials_completed_in_phase = 0;
  bool timeout_requested = false;
  std::vector<Trial> spatial_trials;
  std::optional<Trial> previous_trial;
  int next_stimulus_id = 0;
  int ignored_events = 0;
  TrialRng rng;
};

struct Step {
  SessionState state;
  std::vector<Effect> effects;
};

/// Validates the plan and enters the first phase at engine time `now_ms`.
Step start_session(const SessionPlan& plan, std::int64_t now_ms = 0);

/// Total transition function. Events that are not legal in the current state
/// are counted in `ignored_events`, logged, and otherwise have no effect.
/// Event time never moves the clock backwards.
Step advance(const SessionPlan& plan, SessionState state, const Event& event);

/// The eight haptic-only pairs (module 1 then module d, d = 1..8) in a seeded
/// random order. Errc::WrongCondition for audio-only plans.
std::vector<Trial> run_spatial_test(const SessionPlan& plan, TrialRng& rng);

/// Owns a plan and its evolving state.
class Session {
 public:
  explicit Session(SessionPlan plan);

  std::vector<Effect> start(std::int64_t now_ms = 0);
  std::vector<Effect> dispatch(const Event& event);

  const SessionPlan& plan() const noexcept { return plan_; }
  const SessionState& state() const noexcept { return state_; }
  const PhaseSpec* current_phase() const noexcept;

 private:
  SessionPlan plan_;
  SessionState state_;
};

}  // namespace purrfect
