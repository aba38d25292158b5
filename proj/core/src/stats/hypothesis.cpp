#include "purrfect/stats/hypothesis.hpp"

#include <cmath>
#include <map>

#include <boost/math/distributions/students_t.hpp>

#include "purrfect/error.hpp"
#include "purrfect/questionnaire.hpp"

namespace purrfect::stats {
namespace {

double t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double variance(std::span<const double> x) {
  const double sd = sample_sd(x);
  return sd * sd;
}

TTestResult finish(TTestResult r) {
  if (r.std_error > 0.0) {
    r.t = r.mean_difference / r.std_error;
    r.p_value = t_two_sided_p(r.t, r.df);
  } else if (r.mean_difference == 0.0) {
    r.t = 0.0;
    r.p_value = 1.0;
  } else {
    r.t = std::copysign(INFINITY, r.mean_difference);
    r.p_value = 0.0;
  }
  return r;
}

Estimate mean_ci(std::span<const double> x) {
  return wald(mean(x), sample_sd(x) / std::sqrt(static_cast<double>(x.size())));
}

}  // namespace

std::string_view to_string(TTestKind k) noexcept {
  switch (k) {
    case TTestKind::Welch: return "welch";
    case TTestKind::Pooled: return "pooled";
    case TTestKind::Paired: return "paired";
  }
  return "unknown";
}

TTestKind ttest_kind_from_string(std::string_view name) {
  if (name == "welch") return TTestKind::Welch;
  if (name == "pooled") return TTestKind::Pooled;
  if (name == "paired") return TTestKind::Paired;
  throw Error(Errc::ConfigError, "t-test must be welch, pooled or paired");
}

void to_json(nlohmann::json& j, const TTestResult& r) {
  j = {{"kind", to_string(r.kind)},
       {"n1", r.n1},
       {"n2", r.n2},
       {"mean_difference", r.mean_difference},
       {"std_error", r.std_error},
       {"t", r.t},
       {"df", r.df},
       {"p_value", r.p_value}};
}

TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestKind kind) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(Errc::InsufficientData, "t-test needs at least two values per sample");
  }
  TTestResult r;
  r.kind = kind;
  r.n1 = a.size();
  r.n2 = b.size();
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  r.mean_difference = mean(a) - mean(b);
  switch (kind) {
    case TTestKind::Welch: {
      const double v1 = variance(a) / n1;
      const double v2 = variance(b) / n2;
      r.std_error = std::sqrt(v1 + v2);
      const double denom = v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0);
      r.df = denom > 0.0 ? (v1 + v2) * (v1 + v2) / denom : n1 + n2 - 2.0;
      break;
    }
    case TTestKind::Pooled: {
      const double pooled =
          ((n1 - 1.0) * variance(a) + (n2 - 1.0) * variance(b)) / (n1 + n2 - 2.0);
      r.std_error = std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
      r.df = n1 + n2 - 2.0;
      break;
    }
    case TTestKind::Paired: {
      if (a.size() != b.size()) {
        throw Error(Errc::InsufficientData, "paired t-test needs equal sample sizes (" +
                                                std::to_string(a.size()) + " vs " +
                                                std::to_string(b.size()) + ")");
      }
      std::vector<double> diff(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
      r.std_error = sample_sd(diff) / std::sqrt(n1);
      r.df = n1 - 1.0;
      break;
    }
  }
  return finish(r);
}

void to_json(nlohmann::json& j, const PrePostResult& r) {
  auto group = [](const GroupPrePost& g) {
    return nlohmann::json{{"n", g.n},         {"pre", g.pre},
                          {"post", g.post},   {"pre_sd", g.pre_sd},
                          {"post_sd", g.post_sd}, {"delta_mean", g.delta_mean},
                          {"within_paired_post_vs_pre", g.within}};
  };
  nlohmann::json participants = nlohmann::json::array();
  for (const auto& p : r.participants) {
    participants.push_back({{"participant_id", p.participant_id},
                            {"haptic", p.haptic},
                            {"pre", p.pre},
                            {"post", p.post},
                            {"delta", p.delta()}});
  }
  j = {{"audio_only", group(r.groups[0])},
       {"audio_haptic", group(r.groups[1])},
       {"delta_test_haptic_minus_audio", r.delta_test},
       {"participants", participants}};
}

PrePostResult pre_post_test(const ObservationTable& table, TTestKind kind) {
  struct Tally {
    int haptic = 0;
    int pre_n = 0, pre_correct = 0, post_n = 0, post_correct = 0;
  };
  std::map<std::string, Tally> tallies;
  std::vector<std::string> order;
  for (const auto& row : table.rows) {
    if (row.phase != PhaseKind::PreTest && row.phase != PhaseKind::PostTest) continue;
    auto [it, inserted] = tallies.try_emplace(row.participant_id);
    if (inserted) order.push_back(row.participant_id);
    Tally& t = it->second;
    t.haptic = row.haptic;
    if (row.phase == PhaseKind::PreTest) {
      ++t.pre_n;
      t.pre_correct += row.correct;
    } else {
      ++t.post_n;
      t.post_correct += row.correct;
    }
  }
  PrePostResult result;
  std::array<std::vector<double>, 2> pre, post, delta;
  for (const auto& id : order) {
    const Tally& t = tallies[id];
    if (t.pre_n == 0 || t.post_n == 0) continue;
    ParticipantAccuracy p{id, t.haptic, double(t.pre_correct) / t.pre_n,
                          double(t.post_correct) / t.post_n};
    pre[t.haptic].push_back(p.pre);
    post[t.haptic].push_back(p.post);
    delta[t.haptic].push_back(p.delta());
    result.participants.push_back(std::move(p));
  }
  for (int g = 0; g < 2; ++g) {
    if (pre[g].size() < 2) {
      throw Error(Errc::InsufficientData,
                  std::string(g ? "audio-haptic" : "audio-only") +
                      " group has fewer than two participants with pre and post tests");
    }
    GroupPrePost& out = result.groups[g];
    out.n = pre[g].size();
    out.pre = mean_ci(pre[g]);
    out.post = mean_ci(post[g]);
    out.pre_sd = sample_sd(pre[g]);
    out.post_sd = sample_sd(post[g]);
    out.delta_mean = mean(delta[g]);
    out.within = t_test(post[g], pre[g], TTestKind::Paired);
  }
  result.delta_test = t_test(delta[1], delta[0], kind);
  return result;
}

int invert_likert(int raw) {
  if (raw < kLikertMin || raw > kLikertMax) {
    throw Error(Errc::OutOfScale, "answer " + std::to_string(raw) + " not in 1..7");
  }
  return kLikertMin + kLikertMax - raw;
}

void to_json(nlohmann::json& j, const ItemScore& s) {
  j = {{"key", s.key},
       {"label", s.label},
       {"inverted", s.inverted},
       {"audio_only", s.box[0]},
       {"audio_haptic", s.box[1]},
       {"test_haptic_minus_audio", s.test}};
}

std::vector<ItemScore> questionnaire_scores(std::span<const QuestionnaireResponse> responses,
                                            TTestKind kind) {
  std::vector<ItemScore> items;
  for (const auto& def : kQ2Items) {
    ItemScore score;
    score.key = def.key;
    score.label = def.label;
    score.inverted = def.inverted;
    items.push_back(std::move(score));
  }
  for (const auto& response : responses) {
    if (response.id != "Q2") continue;
    const int g = response.condition == Condition::AudioHaptic ? 1 : 0;
    for (std::size_t i = 0; i < kQ2Items.size(); ++i) {
      const std::string key(kQ2Items[i].key);
      if (!response.answers.contains(key)) {
        throw Error(Errc::InsufficientData, response.participant_id + " did not answer " + key);
      }
      const auto& value = response.answers[key];
      if (!value.is_number_integer()) {
        throw Error(Errc::OutOfScale, response.participant_id + "/" + key + " is not an integer");
      }
      const int raw = value.get<int>();
      const int scored = kQ2Items[i].inverted ? invert_likert(raw) : raw;
      if (scored < kLikertMin || scored > kLikertMax) {
        throw Error(Errc::OutOfScale, response.participant_id + "/" + key + " = " +
                                          std::to_string(raw) + " not in 1..7");
      }
      items[i].scores[g].push_back(scored);
    }
  }
  for (int g = 0; g < 2; ++g) {
    if (items.front().scores[g].size() < 2) {
      throw Error(Errc::InsufficientData, std::string("fewer than two Q2 responses from the ") +
                                              (g ? "audio-haptic" : "audio-only") + " group");
    }
  }
  for (auto& item : items) {
    for (int g = 0; g < 2; ++g) item.box[g] = box_stats(item.scores[g]);
    item.test = t_test(item.scores[1], item.scores[0], kind);
  }
  return items;
}

}  // namespace purrfect::stats
