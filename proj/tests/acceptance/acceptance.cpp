// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oracles/oracles.hpp"
#include "purrfect/audio.hpp"
#include "purrfect/error.hpp"
#include "purrfect/gateway/channel.hpp"
#include "purrfect/haptics.hpp"
#include "purrfect/music.hpp"
#include "purrfect/report.hpp"
#include "purrfect/simulate.hpp"
#include "purrfect/stats/filters.hpp"
#include "purrfect/stats/glmm.hpp"
#include "purrfect/stats/normalize.hpp"
#include "support/synth.hpp"
#include "support/tempdir.hpp"

using namespace purrfect;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("violated: " + what);
    }
  }
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.require(elapsed < budget_s, fmt::format("runtime {:.1f} s exceeds {:.0f} s", elapsed, budget_s));
  for (const auto& note : out.notes) std::printf("    %s\n", note.c_str());
  std::printf("%s %s (%.2f s): %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), elapsed,
              out.detail.c_str());
  std::fflush(stdout);
  if (!out.pass) ++failures;
}

Trial make_trial(int base_midi, int degree) {
  const auto base = tone_from_midi(base_midi);
  const Interval iv(degree);
  return Trial{0, base, iv, apply_interval(base, iv), PhaseKind::Training};
}

std::vector<std::vector<std::pair<double, double>>> oracle_groups(const stats::ModelData& data,
                                                                  const Eigen::VectorXd& beta) {
  std::vector<std::vector<std::pair<double, double>>> groups;
  const Eigen::VectorXd eta = data.X * beta;
  for (std::size_t g = 0; g < data.groups(); ++g) {
    auto& out = groups.emplace_back();
    for (Eigen::Index i = data.group_start[g]; i < data.group_start[g + 1]; ++i) {
      out.emplace_back(eta[i], data.y[i]);
    }
  }
  return groups;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome frequency_fidelity() {
  Outcome o;
  const auto table = tone_table();
  o.require(table.size() == 21, "21 tones");
  o.require(std::abs(table.front().frequency_hz - 65.41) <= 0.01, "lowest tone 65.41 Hz");
  o.require(std::abs(table.back().frequency_hz - 493.88) <= 0.01, "highest tone 493.88 Hz");
  for (std::size_t i = 1; i < table.size(); ++i) {
    o.require(table[i].frequency_hz > table[i - 1].frequency_hz,
              "strictly increasing at index " + std::to_string(i));
  }
  o.detail = fmt::format("C2 = {:.4f} Hz, B4 = {:.4f} Hz, {} tones", table.front().frequency_hz,
                         table.back().frequency_hz, table.size());
  return o;
}

Outcome glmm_oracle_equivalence() {
  Outcome o;
  TrialRng root(2024);
  const int datasets = 24;
  double worst_laplace = 0.0, worst_glm = 0.0;
  int laplace_ok = 0, glm_ok = 0, redrawn = 0;
  std::uint64_t stream = 0;
  for (int d = 0; d < datasets; ++d) {
    TrialRng rng = root.fork(++stream);
    const int participants = rng.uniform_int(2, 5);
    const int trials = rng.uniform_int(10, 20);
    const int n_audio = participants / 2;
    testsupport::Truth truth;
    truth.b0 = -0.7 + 0.5 * rng.normal();
    truth.b1 = 0.9 * rng.uniform01();
    truth.b2 = 0.02 * rng.normal();
    truth.b3 = 0.02 * rng.normal();
    truth.sigma_u = 0.3 + 1.2 * rng.uniform01();
    const auto table = testsupport::binomial_table(truth, n_audio, participants - n_audio, trials, rng);
    const auto data = stats::build_model_data(table, stats::Family::BinomialLogit);
    // Datasets without a finite plain-GLM MLE (separation) are redrawn: neither
    // comparison is defined on them.
    Eigen::VectorXd glm;
    try {
      glm = oracle::irls_logistic(data.X, data.y);
    } catch (const std::runtime_error&) {
      ++redrawn;
      --d;
      continue;
    }
    std::string line = fmt::format("dataset {:2d}: {} x {:2d}", d, participants, trials);
    try {
      const auto fit = stats::fit_glmm(data, stats::Family::BinomialLogit);
      const double aghq = oracle::aghq_loglik(oracle_groups(data, fit.beta), fit.sigma_u, 129);
      const double diff = std::abs(fit.loglik - aghq);
      worst_laplace = std::max(worst_laplace, diff);
      laplace_ok += diff <= 1e-3;
      line += fmt::format("  sigma_u {:.4f}  laplace {:.6f}  aghq {:.6f}  |diff| {:.2e}", fit.sigma_u,
                          fit.loglik, aghq, diff);
    } catch (const Error& e) {
      line += fmt::format("  laplace fit failed: {}", e.what());
    }
    try {
      stats::FitOptions zero;
      zero.fixed_sigma_u = 0.0;
      const auto fit0 = stats::fit_glmm(data, stats::Family::BinomialLogit, zero);
      const double diff = (fit0.beta - glm).cwiseAbs().maxCoeff();
      worst_glm = std::max(worst_glm, diff);
      glm_ok += diff <= 1e-6;
      line += fmt::format("  sigma->0 vs GLM {:.2e}", diff);
    } catch (const std::exception& e) {
      line += fmt::format("  sigma->0 fit failed: {}", e.what());
    }
    o.notes.push_back(line);
  }
  o.require(laplace_ok == datasets,
            fmt::format("Laplace within 1e-3 of AGHQ on {}/{} datasets", laplace_ok, datasets));
  o.require(glm_ok == datasets, fmt::format("sigma->0 within 1e-6 of GLM on {}/{}", glm_ok, datasets));
  o.detail = fmt::format("{} datasets ({} separated draws skipped); Laplace within 1e-3 on {}/{}, "
                         "worst |Laplace - AGHQ129| = {:.3e}; sigma->0 within 1e-6 on {}/{}, worst "
                         "|beta - GLM| = {:.3e}",
                         datasets, redrawn, laplace_ok, datasets, worst_laplace, glm_ok, datasets,
                         worst_glm);
  return o;
}

Outcome coverage_study() {
  Outcome o;
  const testsupport::Truth truth;  // (-0.7, 0.9, 3e-4, 6e-4), sigma_u 0.5
  const Eigen::Vector4d beta(truth.b0, truth.b1, truth.b2, truth.b3);
  const int reps = 200;
  std::array<int, 4> covered{};
  int failed = 0;
  TrialRng root(77);
  for (int r = 0; r < reps; ++r) {
    TrialRng rng = root.fork(r + 1);
    const auto table = testsupport::binomial_table(truth, 10, 8, 170, rng);
    try {
      const auto fit = stats::fit_glmm(table, stats::GlmmSpec::accuracy());
      const Eigen::VectorXd se = fit.std_errors();
      for (int k = 0; k < 4; ++k) {
        covered[k] += std::abs(fit.beta[k] - beta[k]) <= 1.959963984540054 * se[k];
      }
    } catch (const Error& e) {
      ++failed;
      o.notes.push_back(fmt::format("replicate {} failed: {}", r, e.what()));
    }
  }
  std::string parts;
  for (int k = 0; k < 4; ++k) {
    const double c = double(covered[k]) / reps;
    o.require(c >= 0.90 && c <= 0.99, fmt::format("{} coverage {:.3f} in [0.90, 0.99]",
                                                    stats::kCoefficientNames[k], c));
    parts += fmt::format("{}{} {:.3f}", k ? ", " : "", stats::kCoefficientNames[k], c);
  }
  o.detail = fmt::format("{} replicates of 18 x 170 (failed fits count as misses: {}); coverage {}",
                         reps, failed, parts);
  return o;
}

struct ContrastSummary {
  double accuracy = 0, rt_audio_minus_haptic = 0;
  bool accuracy_ci_excludes_zero = false, rt_ci_excludes_zero = false, groups_exclude_zero = false;
};

ContrastSummary summarize(const json& report) {
  auto excludes_zero = [](const json& e) {
    return e["ci_lower"].get<double>() > 0.0 || e["ci_upper"].get<double>() < 0.0;
  };
  const auto& acc = report.at("accuracy").at("marginal");
  const auto& rt = report.at("response_time").at("marginal");
  ContrastSummary s;
  s.accuracy = acc["contrast_haptic_minus_audio"]["estimate"];
  s.rt_audio_minus_haptic = -rt["contrast_haptic_minus_audio"]["estimate"].get<double>();
  s.accuracy_ci_excludes_zero = excludes_zero(acc["contrast_haptic_minus_audio"]);
  s.rt_ci_excludes_zero = excludes_zero(rt["contrast_haptic_minus_audio"]);
  s.groups_exclude_zero = excludes_zero(acc["prediction"]["audio_only"]) &&
                          excludes_zero(acc["prediction"]["audio_haptic"]);
  return s;
}

Outcome reference_shaped_simulation() {
  Outcome o;
  testsupport::TempDir dir;
  const int replicates = 20;
  double acc_sum = 0, rt_sum = 0;
  int all_ci = 0;
  for (int r = 0; r < replicates; ++r) {
    StudyConfig config;
    config.seed = 1000 + r;
    const auto study = dir / ("study" + std::to_string(r));
    simulate_study(config, study);
    const auto s = summarize(analyze_study(study));
    acc_sum += s.accuracy;
    rt_sum += s.rt_audio_minus_haptic;
    const bool cis = s.accuracy_ci_excludes_zero && s.rt_ci_excludes_zero && s.groups_exclude_zero;
    all_ci += cis;
    o.notes.push_back(fmt::format("replicate {:2d}: accuracy contrast {:.4f}, rt contrast {:.3f} s{}",
                                  r, s.accuracy, s.rt_audio_minus_haptic,
                                  cis ? "" : "  (a CI includes 0)"));
  }
  const double acc = acc_sum / replicates, rt = rt_sum / replicates;
  o.require(std::abs(acc - 0.203) <= 0.04, fmt::format("mean accuracy contrast {:.4f} in 0.203 +/- 0.04", acc));
  o.require(std::abs(rt - 1.674) <= 0.3, fmt::format("mean rt contrast {:.3f} in 1.674 +/- 0.3", rt));
  o.require(all_ci == replicates, fmt::format("CIs exclude 0 in {}/{} replicates", all_ci, replicates));

  StudyConfig single;
  simulate_study(single, dir / "default");
  const auto s = summarize(analyze_study(dir / "default"));
  o.detail = fmt::format("{} replicate studies (10 + 8 participants): mean accuracy contrast {:.4f} "
                         "(target 0.203 +/- 0.04), mean rt contrast {:.3f} s (target 1.674 +/- 0.3), "
                         "CIs exclude 0 in {}/{}; default seed study: {:.4f} / {:.3f} s",
                         replicates, acc, rt, all_ci, replicates, s.accuracy, s.rt_audio_minus_haptic);
  return o;
}

Outcome filter_rules() {
  Outcome o;
  const std::vector<double> rt = {0.35, 1.1999, 1.2, 2.4, 3.1, 4.7, 5.05, 6.6, 7.2,
                                  2.9,  3.3,    8.4, 5.5, 4.1, 1.9, 6.2, 31.5, 3.8,
                                  4.4,  9.0,    2.2, 0.8, 5.9, 4.9, 22.0, 7.7};
  // Computed independently (numpy, sample SD).
  const std::vector<int> expected_kept = {2,  3,  4,  5,  6,  7,  8,  9,  10, 11, 12,
                                          13, 14, 15, 17, 18, 19, 20, 22, 23, 25};
  const double expected_threshold = 20.32706994224199;
  ObservationTable table;
  for (std::size_t i = 0; i < rt.size(); ++i) {
    Observation row;
    row.participant_id = "P01";
    row.trial_number = static_cast<int>(i);
    row.response_time_s = rt[i];
    table.rows.push_back(row);
  }
  const auto result = stats::filter_response_times(table);
  std::vector<int> kept;
  for (const auto& row : result.table.rows) kept.push_back(row.trial_number);
  o.require(kept == expected_kept, "kept rows match the golden fixture");
  o.require(result.report.n_below_floor == 3 && result.report.n_above_threshold == 2, "3 + 2 removals");
  o.require(std::abs(result.report.upper_threshold_s - expected_threshold) < 1e-9,
            fmt::format("threshold {:.12f}", result.report.upper_threshold_s));
  const auto again = stats::filter_response_times(result.table);
  o.require(again.report.n_below_floor == 0, "floor rule idempotent on filtered output");
  o.detail = fmt::format("golden fixture: {} rows -> {} (floor removed {}, threshold {:.6f} s removed "
                         "{}); refilter floor removals {}",
                         rt.size(), kept.size(), result.report.n_below_floor,
                         result.report.upper_threshold_s, result.report.n_above_threshold,
                         again.report.n_below_floor);
  return o;
}

Outcome normalization() {
  Outcome o;
  TrialRng rng(5);
  int checked = 0;
  for (int v = 0; v < 1000; ++v) {
    const int n = rng.uniform_int(2, 12);
    std::vector<double> raw(n), mapped(n);
    const double scale = std::exp(4.0 * rng.normal());
    for (auto& x : raw) x = scale * (rng.uniform01() * 100.0 - 20.0);
    if (std::all_of(raw.begin(), raw.end(), [&](double x) { return x == raw[0]; })) continue;
    const double a = 0.01 + 50.0 * rng.uniform01(), b = 100.0 * rng.normal();
    for (int i = 0; i < n; ++i) mapped[i] = a * raw[i] + b;
    const auto z = stats::normalize_magnitudes(raw);
    const auto za = stats::normalize_magnitudes(mapped);
    const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
    bool ok = z[mn - raw.begin()] == 0.0 && z[mx - raw.begin()] == 1.0;
    for (int i = 0; i < n; ++i) {
      ok = ok && z[i] >= 0.0 && z[i] <= 1.0 && std::abs(z[i] - za[i]) <= 1e-9;
      for (int j = 0; j < n; ++j) {
        if (raw[i] < raw[j]) ok = ok && z[i] <= z[j];
      }
    }
    o.require(ok, "invariants on vector " + std::to_string(v));
    ++checked;
  }
  int rejected = 0;
  for (const std::vector<double>& bad :
       {std::vector<double>{3.0, 3.0, 3.0}, std::vector<double>{7.0}, std::vector<double>{}}) {
    try {
      stats::normalize_magnitudes(bad);
    } catch (const Error& e) {
      rejected += e.code() == Errc::DegenerateRatings;
    }
  }
  o.require(rejected == 3, "degenerate vectors rejected");
  o.detail = fmt::format("{} random vectors satisfy min->0, max->1, affine invariance and order; "
                         "{}/3 degenerate vectors rejected", checked, rejected);
  return o;
}

Outcome protocol_and_schedule() {
  Outcome o;
  const StimulusTiming timing;
  for (int k = 1; k <= 8; ++k) {
    const auto s = schedule_for_trial(make_trial(48, k), timing);
    o.require(s.size() == 2 && s[0].module == 1 && s[0].onset_ms == 0 && s[1].module == k &&
                  s[1].onset_ms == timing.note_ms + timing.gap_ms,
              "schedule for interval " + std::to_string(k));
  }
  int codec = 0;
  for (int m = 1; m <= 8; ++m) {
    for (int i : {0, 1, 128, 200, 255}) {
      const HapticCommand c{m, i, 500, 0};
      codec += decode_frame(encode_frame(c)) == c;
    }
  }
  o.require(codec == 40, "codec round trip");

  std::map<PhaseKind, int> counts[2];
  int audio_only_haptics = 0, test_feedback = 0, test_haptics = 0;
  for (int c = 0; c < 2; ++c) {
    const auto condition = c ? Condition::AudioHaptic : Condition::AudioOnly;
    const auto plan = SessionPlan::standard("P01", condition, 40 + c);
    TrialRng rng(c + 1);
    PhaseKind phase = PhaseKind::Questionnaire;
    simulate_participant(plan, c ? BehaviorSpec::audio_haptic_default() : BehaviorSpec::audio_only_default(),
                         rng, [&](std::int64_t, const Effect& fx) {
                           if (const auto* e = std::get_if<effect::EnterPhase>(&fx)) phase = e->kind;
                           const bool test = phase == PhaseKind::PreTest || phase == PhaseKind::PostTest;
                           if (std::holds_alternative<effect::SendHaptics>(fx)) {
                             audio_only_haptics += c == 0;
                             test_haptics += test;
                           }
                           test_feedback += test && std::holds_alternative<effect::ShowFeedback>(fx);
                           if (const auto* r = std::get_if<effect::RecordTrial>(&fx)) {
                             ++counts[c][r->record.phase];
                           }
                         });
  }
  o.require(audio_only_haptics == 0, "AudioOnly emits no haptic frames");
  o.require(test_feedback == 0 && test_haptics == 0, "Pre/PostTest emit no feedback or haptics");
  for (int c = 0; c < 2; ++c) {
    o.require(counts[c][PhaseKind::PreTest] == 20 && counts[c][PhaseKind::PostTest] == 20,
              "20 pre- and post-test trials");
  }
  o.require(counts[1][PhaseKind::SpatialTest] == 8 && counts[0][PhaseKind::SpatialTest] == 0,
            "8 spatial pairs, haptic condition only");

  // Through the gateway with a scripted client: the device stays silent for AudioOnly.
  gateway::SimulatorChannel device;
  gateway::SessionChannel channel(SessionPlan::standard("P02", Condition::AudioOnly, 3), device);
  channel.connect(0);
  std::uint64_t seq = 0;
  std::int64_t now = 0;
  for (int guard = 0; guard < 100000 && !channel.finished(); ++guard) {
    const auto kind = channel.session().current_phase()->kind;
    const auto awaiting = channel.session().state().awaiting;
    json msg = {{"seq", ++seq}};
    if (kind == PhaseKind::Questionnaire) {
      msg["type"] = "questionnaire_answer";
      msg["payload"] = {{"answers", json::object()}};
    } else if (kind == PhaseKind::Break) {
      msg["type"] = "response";
      msg["payload"] = {{"key", "Enter"}};
    } else if (awaiting == Awaiting::Response) {
      now += 1000;
      msg["type"] = "response";
      msg["payload"] = {{"key", "5"}};
    } else {
      now += 250;
      channel.tick(now);
      continue;
    }
    channel.on_client_message(msg.dump(), now);
  }
  o.require(channel.finished(), "scripted gateway client completes an AudioOnly session");
  o.require(device.log().entries.empty(), "gateway sends no frames for AudioOnly");
  o.detail = fmt::format("schedules 8/8, codec {}/40, AudioOnly haptic effects {}, test-phase "
                         "feedback {} haptics {}, pre/post {}/{}, spatial {}, gateway device frames {}",
                         codec, audio_only_haptics, test_feedback, test_haptics,
                         counts[1][PhaseKind::PreTest], counts[1][PhaseKind::PostTest],
                         counts[1][PhaseKind::SpatialTest], device.log().entries.size());
  return o;
}

Outcome determinism() {
  Outcome o;
  testsupport::TempDir a, b;
  StudyConfig config;
  config.seed = 99;
  std::vector<std::filesystem::path> files[2];
  int idx = 0;
  for (const auto* dir : {&a, &b}) {
    simulate_study(config, *dir / "study");
    files[idx++] = write_report_bundle(analyze_study(*dir / "study"), *dir / "report", true);
  }
  o.require(files[0].size() == files[1].size(), "same file list");
  int identical = 0;
  for (std::size_t i = 0; i < std::min(files[0].size(), files[1].size()); ++i) {
    const bool same = files[0][i].filename() == files[1][i].filename() &&
                      slurp(files[0][i]) == slurp(files[1][i]);
    o.require(same, files[0][i].filename().string() + " identical");
    identical += same;
  }
  int sessions = 0;
  for (const auto& f : session_files(a / "study")) {
    const bool same = slurp(f) == slurp(b / "study" / f.filename());
    o.require(same, f.filename().string() + " identical");
    sessions += same;
  }
  o.detail = fmt::format("{}/{} bundle files and {} session files byte-identical across two runs",
                         identical, files[0].size(), sessions);
  return o;
}

Outcome audio() {
  Outcome o;
  const StimulusTiming timing;
  int segments = 0, within = 0;
  double worst_bins = 0.0;
  for (int k = 1; k <= 8; ++k) {
    const auto trial = make_trial(k % 2 ? 36 : 57, k);
    const auto pcm = render_trial(trial, timing);
    const double expected = 2.0 * timing.note_ms * 44.1 + timing.gap_ms * 44.1;
    o.require(std::abs(double(pcm.samples.size()) - expected) <= 1.0,
              fmt::format("length {} vs {}", pcm.samples.size(), expected));
    const std::size_t note = ms_to_samples(timing.note_ms, 44100);
    const std::size_t onset2 = ms_to_samples(timing.second_onset_ms(), 44100);
    for (const auto& [start, hz] :
         {std::pair{std::size_t{0}, trial.base.frequency_hz}, std::pair{onset2, trial.second.frequency_hz}}) {
      std::vector<double> seg(note);
      for (std::size_t i = 0; i < note; ++i) seg[i] = pcm.samples[start + i];
      const double target_bin = hz * double(note) / 44100.0;
      const double off = std::abs(double(oracle::dominant_bin(seg)) - target_bin);
      worst_bins = std::max(worst_bins, off);
      ++segments;
      within += off <= 1.0;
    }
    const auto bytes = encode_wav(pcm);
    const auto back = decode_wav(bytes);
    o.require(back.samples == pcm.samples && back.sample_rate_hz == pcm.sample_rate_hz &&
                  encode_wav(back) == bytes,
              "WAV round trip for interval " + std::to_string(k));
  }
  o.require(within == segments, "dominant bins");
  o.detail = fmt::format("8 stimuli of {} samples; {}/{} segments within 1 bin (worst {:.3f}); WAV "
                         "round trips bit-exact",
                         ms_to_samples(timing.total_ms(), 44100), within, segments, worst_bins);
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  criterion("frequency-fidelity", 1, frequency_fidelity);
  criterion("glmm-oracle-equivalence", 120, glmm_oracle_equivalence);
  criterion("coverage-study", 300, coverage_study);
  criterion("reference-shaped-simulation", 300, reference_shaped_simulation);
  criterion("filter-rules", 5, filter_rules);
  criterion("normalization", 5, normalization);
  criterion("protocol-and-schedule", 30, protocol_and_schedule);
  criterion("determinism", 60, determinism);
  criterion("audio", 60, audio);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
