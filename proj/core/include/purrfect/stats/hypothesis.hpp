#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "purrfect/datastore.hpp"
#include "purrfect/stats/descriptive.hpp"

namespace purrfect::stats {

/// Welch (unequal variances), Pooled (Student), or Paired (index-matched
/// differences; needs equal sample sizes).
enum class TTestKind { Welch, Pooled, Paired };

std::string_view to_string(TTestKind k) noexcept;
TTestKind ttest_kind_from_string(std::string_view name);

struct TTestResult {
  TTestKind kind = TTestKind::Welch;
  std::size_t n1 = 0, n2 = 0;
  /// mean(a) - mean(b)
  double mean_difference = 0.0;
  double std_error = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

void to_json(nlohmann::json& j, const TTestResult& r);

/// Two-sided test of mean(a) = mean(b). Both samples constant and equal gives
/// t = 0, p = 1. Errc::InsufficientData for fewer than two values per sample
/// or unequal sizes with Paired.
TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestKind kind);

/// Proportion of correct answers per participant in one test phase.
struct ParticipantAccuracy {
  std::string participant_id;
  int haptic = 0;
  double pre = 0.0;
  double post = 0.0;
  double delta() const { return post - pre; }
};

struct GroupPrePost {
  std::size_t n = 0;
  /// Mean accuracy with a normal-approximation CI (mean +- 1.96 SE).
  Estimate pre;
  Estimate post;
  double pre_sd = 0.0;
  double post_sd = 0.0;
  double delta_mean = 0.0;
  /// Paired post-vs-pre test within the group.
  TTestResult within;
};

struct PrePostResult {
  std::array<GroupPrePost, 2> groups;
  /// Between-group test on the deltas: haptic minus audio-only.
  TTestResult delta_test;
  std::vector<ParticipantAccuracy> participants;
};

void to_json(nlohmann::json& j, const PrePostResult& r);

/// Uses PreTest and PostTest rows; participants need both phases.
/// Errc::InsufficientData when a group has fewer than two such participants.
PrePostResult pre_post_test(const ObservationTable& table, TTestKind kind = TTestKind::Welch);

/// x -> 8 - x on the seven-point scale.
int invert_likert(int raw);

struct ItemScore {
  std::string key;
  std::string label;
  bool inverted = false;
  /// Scores after inversion, audio-only then haptic.
  std::array<std::vector<double>, 2> scores;
  std::array<BoxStats, 2> box;
  TTestResult test;
};

void to_json(nlohmann::json& j, const ItemScore& s);

/// Scores the Q2 items (inverting the load and frustration items) and tests
/// haptic against audio-only per item. Errc::OutOfScale for answers that are
/// not integers in 1..7, Errc::InsufficientData for missing items or groups.
std::vector<ItemScore> questionnaire_scores(std::span<const QuestionnaireResponse> responses,
                                            TTestKind kind = TTestKind::Welch);

}  // namespace purrfect::stats
