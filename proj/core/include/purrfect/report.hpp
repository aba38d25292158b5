#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "purrfect/audio.hpp"
#include "purrfect/simulate.hpp"
#include "purrfect/stats/hypothesis.hpp"
#include "purrfect/stats/marginal.hpp"

namespace purrfect {

inline constexpr std::string_view kStudyConfigFile = "study.json";

/// Simulated study: participants P01.. are audio-only first, then haptic.
struct StudyConfig {
  int n_audio = 10;
  int n_haptic = 8;
  std::uint64_t seed = 1;
  StimulusTiming timing;
  BehaviorSpec audio_behavior = BehaviorSpec::audio_only_default();
  BehaviorSpec haptic_behavior = BehaviorSpec::audio_haptic_default();
  /// Wall-clock origin of the first session; each later session starts a day later.
  std::int64_t start_epoch_ms = 1'700'000'000'000;
};

void to_json(nlohmann::json& j, const StudyConfig& c);
/// Missing keys keep their defaults. Errc::ConfigError for invalid values.
void from_json(const nlohmann::json& j, StudyConfig& c);

struct StudySummary {
  std::vector<std::filesystem::path> files;
  std::size_t trial_records = 0;
  std::size_t haptic_commands = 0;
};

/// Writes one session file per participant plus study.json into `study_dir`
/// (created if needed). Output depends only on the config.
/// Errc::ConfigError for bad group sizes, Errc::StorageFailure if a session
/// file already exists.
StudySummary simulate_study(const StudyConfig& config, const std::filesystem::path& study_dir);

struct AnalyzeOptions {
  stats::MarginalMode marginal_mode = stats::MarginalMode::Conditional;
  stats::TTestKind ttest = stats::TTestKind::Welch;
};

/// Full analysis of a study directory. Sections: provenance, spatial,
/// accuracy, response_time, pre_post, guess_distribution, questionnaire.
/// A section that cannot be computed is {"present": false, "reason": ...}.
nlohmann::json analyze_study(const std::filesystem::path& study_dir,
                             const AnalyzeOptions& options = {});

/// Writes report.json, CSV tables, and (optionally) SVG plots of `report`
/// into `out_dir`. Returns the written files in creation order.
std::vector<std::filesystem::path> write_report_bundle(const nlohmann::json& report,
                                                       const std::filesystem::path& out_dir,
                                                       bool svg);

}  // namespace purrfect
