#pragma once

#include <array>
#include <string_view>

namespace purrfect {

/// One seven-point item of the post-study questionnaire (Q2).
struct QuestionnaireItem {
  std::string_view key;
  std::string_view label;
  std::string_view prompt;
  std::string_view low_anchor;
  std::string_view high_anchor;
  /// Reverse-scored (x -> 8 - x) before analysis.
  bool inverted;
};

inline constexpr int kLikertMin = 1;
inline constexpr int kLikertMax = 7;

inline constexpr std::array<QuestionnaireItem, 8> kQ2Items{{
    {"mental_load", "Mental load", "How mentally demanding was the task?", "Very low",
     "Very high", true},
    {"physical_load", "Physical load", "How physically demanding was the task?", "Very low",
     "Very high", true},
    {"success", "Success",
     "How successful were you in accomplishing what you were asked to do?", "Failure", "Perfect",
     false},
    {"ease", "Ease", "How hard did you have to work to accomplish your level of performance?",
     "Very low", "Very high", false},
    {"frustration", "Frustration",
     "How insecure, discouraged, irritated, stressed, and annoyed were you?", "Very low",
     "Very high", true},
    {"effectiveness", "Effectiveness", "This was an effective way to learn.",
     "Strongly disagree", "Strongly agree", false},
    {"engagement", "Engagement", "This was an engaging experience.", "Strongly disagree",
     "Strongly agree", false},
    {"fun", "Fun", "This was a fun experience.", "Strongly disagree", "Strongly agree", false},
}};

}  // namespace purrfect
