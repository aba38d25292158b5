#include "purrfect/stats/summaries.hpp"

#include "purrfect/error.hpp"
#include "purrfect/music.hpp"
#include "purrfect/stats/normalize.hpp"

namespace purrfect::stats {

void to_json(nlohmann::json& j, const SpatialSummary& s) {
  nlohmann::json modules = nlohmann::json::array();
  for (const auto& m : s.modules) {
    nlohmann::json entry = m.box;
    entry["module"] = m.module;
    entry["ground_truth"] = m.ground_truth;
    modules.push_back(std::move(entry));
  }
  j = {{"included", s.included},
       {"excluded_degenerate", s.excluded_degenerate},
       {"modules", modules}};
}

SpatialSummary spatial_summary(std::span<const SpatialRatings> ratings) {
  SpatialSummary summary;
  std::array<std::vector<double>, kModuleCount> per_module;
  for (const auto& participant : ratings) {
    std::vector<int> modules;
    std::vector<double> raw;
    for (const auto& [module, value] : participant.by_module) {
      modules.push_back(module);
      raw.push_back(value);
    }
    std::vector<double> scaled;
    try {
      scaled = normalize_magnitudes(raw);
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateRatings) throw;
      summary.excluded_degenerate.push_back(participant.participant_id);
      continue;
    }
    summary.included.push_back(participant.participant_id);
    for (std::size_t i = 0; i < modules.size(); ++i) {
      if (modules[i] < 1 || modules[i] > kModuleCount) {
        throw Error(Errc::ModuleOutOfRange, participant.participant_id + " rated module " +
                                                std::to_string(modules[i]));
      }
      per_module[modules[i] - 1].push_back(scaled[i]);
    }
  }
  if (summary.included.empty()) {
    throw Error(Errc::InsufficientData, "no participant with usable spatial ratings");
  }
  for (int m = 1; m <= kModuleCount; ++m) {
    const auto& values = per_module[m - 1];
    if (values.empty()) continue;
    summary.modules.push_back(
        {m, static_cast<double>(m - 1) / (kModuleCount - 1), box_stats(values)});
  }
  return summary;
}

int GuessMatrix::total(int interval) const {
  int n = 0;
  for (int c : counts.at(interval - 1)) n += c;
  return n;
}

namespace {
std::size_t slot(int haptic, PhaseKind phase) {
  return static_cast<std::size_t>(haptic * 2 + (phase == PhaseKind::PostTest ? 1 : 0));
}
}  // namespace

const GuessMatrix& GuessDistribution::at(int haptic, PhaseKind phase) const {
  return matrices.at(slot(haptic, phase));
}

void to_json(nlohmann::json& j, const GuessDistribution& d) {
  j = nlohmann::json::array();
  for (const auto& m : d.matrices) {
    nlohmann::json rows = nlohmann::json::array();
    for (int interval = 1; interval <= kMaxDegree; ++interval) {
      rows.push_back({{"interval", interval},
                      {"n", m.total(interval)},
                      {"responses", m.counts[interval - 1]}});
    }
    j.push_back({{"group", m.haptic ? "audio-haptic" : "audio-only"},
                 {"phase", to_string(m.phase)},
                 {"by_interval", rows}});
  }
}

GuessDistribution guess_distribution(const ObservationTable& table) {
  GuessDistribution d;
  for (int h = 0; h < 2; ++h) {
    d.matrices[slot(h, PhaseKind::PreTest)].haptic = h;
    d.matrices[slot(h, PhaseKind::PreTest)].phase = PhaseKind::PreTest;
    d.matrices[slot(h, PhaseKind::PostTest)].haptic = h;
    d.matrices[slot(h, PhaseKind::PostTest)].phase = PhaseKind::PostTest;
  }
  for (const auto& row : table.rows) {
    if (row.phase != PhaseKind::PreTest && row.phase != PhaseKind::PostTest) continue;
    if (row.interval_degree < 1 || row.interval_degree > kMaxDegree || row.response_degree < 1 ||
        row.response_degree > kMaxDegree) {
      throw Error(Errc::OutOfRange, "degree outside 1..8 in " + row.participant_id);
    }
    ++d.matrices[slot(row.haptic, row.phase)]
          .counts[row.interval_degree - 1][row.response_degree - 1];
  }
  return d;
}

}  // namespace purrfect::stats
