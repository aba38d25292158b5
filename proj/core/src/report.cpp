#include "purrfect/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "purrfect/datastore.hpp"
#include "purrfect/error.hpp"
#include "purrfect/stats/filters.hpp"
#include "purrfect/stats/glmm.hpp"
#include "purrfect/stats/summaries.hpp"
#include "purrfect/svg.hpp"
#include "purrfect/version.hpp"

namespace purrfect {
namespace {

constexpr std::int64_t kDayMs = 24LL * 60 * 60 * 1000;

using nlohmann::json;

json absent(std::string reason) { return {{"present", false}, {"reason", std::move(reason)}}; }

/// Statistical failures that make a section unavailable rather than the run.
bool is_section_error(Errc code) {
  return code == Errc::InsufficientData || code == Errc::RankDeficient ||
         code == Errc::DegenerateRatings || code == Errc::EmptyDataset;
}

template <typename F>
json section(std::string_view name, F&& compute) {
  try {
    json out = compute();
    out["present"] = true;
    return out;
  } catch (const Error& e) {
    if (!is_section_error(e.code())) throw;
    spdlog::warn("{} section unavailable: {}", name, e.what());
    return absent(e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw Error(Errc::StorageFailure, "cannot write " + path.string());
}

std::string csv_number(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return fmt::format("{:.10g}", v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string participant_id(int index, int total) {
  return fmt::format("P{:0{}d}", index, total >= 100 ? 3 : 2);
}

}  // namespace

void to_json(json& j, const StudyConfig& c) {
  j = {{"n_audio", c.n_audio},
       {"n_haptic", c.n_haptic},
       {"seed", c.seed},
       {"timing", c.timing},
       {"audio_behavior", c.audio_behavior},
       {"haptic_behavior", c.haptic_behavior},
       {"start_epoch_ms", c.start_epoch_ms}};
}

void from_json(const json& j, StudyConfig& c) {
  try {
    c.n_audio = j.value("n_audio", c.n_audio);
    c.n_haptic = j.value("n_haptic", c.n_haptic);
    c.seed = j.value("seed", c.seed);
    if (j.contains("timing")) c.timing = j.at("timing").get<StimulusTiming>();
    if (j.contains("audio_behavior")) c.audio_behavior = j.at("audio_behavior").get<BehaviorSpec>();
    if (j.contains("haptic_behavior")) {
      c.haptic_behavior = j.at("haptic_behavior").get<BehaviorSpec>();
    }
    c.start_epoch_ms = j.value("start_epoch_ms", c.start_epoch_ms);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("study config: ") + e.what());
  }
  if (c.n_audio < 0 || c.n_haptic < 0 || c.n_audio + c.n_haptic == 0) {
    throw Error(Errc::ConfigError, "group sizes must be non-negative with at least one participant");
  }
  try {
    c.timing.validate();
    c.audio_behavior.validate();
    c.haptic_behavior.validate();
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, std::string("study config: ") + e.what());
  }
}

StudySummary simulate_study(const StudyConfig& config, const std::filesystem::path& study_dir) {
  json round_trip = config;
  const StudyConfig checked = round_trip.get<StudyConfig>();

  std::error_code ec;
  std::filesystem::create_directories(study_dir, ec);
  if (ec) throw Error(Errc::StorageFailure, "cannot create " + study_dir.string() + ": " + ec.message());

  StudySummary summary;
  const int total = checked.n_audio + checked.n_haptic;
  const TrialRng root(checked.seed);
  for (int i = 0; i < total; ++i) {
    const std::string id = participant_id(i + 1, total);
    const Condition condition = i < checked.n_audio ? Condition::AudioOnly : Condition::AudioHaptic;
    const BehaviorSpec& behavior =
        condition == Condition::AudioOnly ? checked.audio_behavior : checked.haptic_behavior;
    TrialRng rng = root.fork(static_cast<std::uint64_t>(i + 1));
    SessionPlan plan = SessionPlan::standard(id, condition, rng.seed(), checked.timing);
    plan.start_epoch_ms = checked.start_epoch_ms + i * kDayMs;

    const auto path = study_dir / (id + std::string(kSessionFileExtension));
    SessionWriter writer(path, make_header(plan), Durability::Flush);
    const auto session = simulate_participant(
        plan, behavior, rng, [&](std::int64_t, const Effect& fx) {
          if (const auto* rec = std::get_if<effect::RecordTrial>(&fx)) {
            writer.append_record(rec->record);
          } else if (const auto* q = std::get_if<effect::RecordQuestionnaire>(&fx)) {
            writer.append_questionnaire(q->id, q->answers);
          }
        });
    summary.files.push_back(path);
    summary.trial_records += session.records.size();
    summary.haptic_commands += session.haptic_commands;
    spdlog::info("simulated {} ({}): {} records", id, to_string(condition), session.records.size());
  }
  write_text(study_dir / kStudyConfigFile, json(checked).dump(2) + "\n");
  return summary;
}

json analyze_study(const std::filesystem::path& study_dir, const AnalyzeOptions& options) {
  const auto files = session_files(study_dir);
  const Dataset data = load_dataset(files);
  const ObservationTable training = data.observations.only(PhaseKind::Training);

  json report;
  {
    json provenance = {{"software_version", software_version()},
                       {"marginal_mode", stats::to_string(options.marginal_mode)},
                       {"ttest", stats::to_string(options.ttest)},
                       {"n_participants", data.participants.size()},
                       {"n_observations", data.observations.size()}};
    json sources = json::array();
    for (const auto& p : data.participants) {
      sources.push_back({{"participant_id", p.participant_id},
                         {"condition", to_string(p.condition)},
                         {"file", p.source.filename().string()}});
    }
    provenance["sessions"] = sources;
    const auto config_path = study_dir / kStudyConfigFile;
    if (std::filesystem::exists(config_path)) {
      std::ifstream in(config_path);
      try {
        provenance["study_config"] = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(Errc::ParseError, config_path.string() + ": " + e.what());
      }
    }
    report["provenance"] = provenance;
  }

  const bool any_haptic = std::any_of(data.participants.begin(), data.participants.end(),
                                      [](const auto& p) { return p.condition == Condition::AudioHaptic; });
  report["spatial"] = any_haptic ? section("spatial", [&] {
    return json(stats::spatial_summary(data.spatial));
  }) : absent("no audio-haptic participants");

  report["accuracy"] = section("accuracy", [&] {
    const auto fit = stats::fit_glmm(training, stats::GlmmSpec::accuracy());
    const auto marginal = stats::marginal_predictions(fit, training, options.marginal_mode);
    int max_trial = 0;
    for (const auto& row : training.rows) max_trial = std::max(max_trial, row.trial_number);
    std::vector<int> trials(static_cast<std::size_t>(max_trial));
    for (int t = 0; t < max_trial; ++t) trials[t] = t + 1;
    json curves = json::array();
    for (int h = 0; h < 2; ++h) {
      for (const auto& point : stats::prediction_curve(fit, h, trials, options.marginal_mode)) {
        json entry = point.prediction;
        entry["trial"] = point.trial;
        entry["haptic"] = point.haptic;
        curves.push_back(entry);
      }
    }
    return json{{"model", "correct ~ haptic * trial + (1 | participant)"},
                {"fit", fit},
                {"marginal", marginal},
                {"curve", curves}};
  });

  report["response_time"] = section("response_time", [&] {
    const auto filtered = stats::filter_response_times(training);
    const auto fit = stats::fit_glmm(filtered.table, stats::GlmmSpec::response_time());
    const auto marginal = stats::marginal_predictions(fit, filtered.table, options.marginal_mode);
    return json{{"model", "response_time_s ~ haptic * trial + (1 | participant)"},
                {"filter", filtered.report},
                {"fit", fit},
                {"marginal", marginal}};
  });

  report["pre_post"] = section("pre_post", [&] {
    return json(stats::pre_post_test(data.observations, options.ttest));
  });

  report["guess_distribution"] = section("guess_distribution", [&] {
    return json{{"matrices", stats::guess_distribution(data.observations)}};
  });

  report["questionnaire"] = section("questionnaire", [&] {
    return json{{"items", stats::questionnaire_scores(data.questionnaires, options.ttest)}};
  });
  return report;
}

std::vector<std::filesystem::path> write_report_bundle(const json& report,
                                                       const std::filesystem::path& out_dir,
                                                       bool svg) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::StorageFailure, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(out_dir / name, text);
    written.push_back(out_dir / name);
  };
  auto present = [&](const char* key) {
    return report.contains(key) && report[key].value("present", false);
  };
  const std::vector<std::string> estimate_cols = {"estimate", "std_error", "ci_lower",
                                                  "ci_upper", "z",         "p_value"};
  auto estimate_row = [&](const json& e) {
    std::string row;
    for (const auto& c : estimate_cols) row += "," + csv_number(e.at(c));
    return row;
  };
  const std::string estimate_header = ",estimate,std_error,ci_lower,ci_upper,z,p_value\n";
  const std::vector<std::string> box_cols = {"n", "min", "q1", "median", "q3", "max", "mean", "sd"};
  auto box_row = [&](const json& b) {
    std::string row;
    for (const auto& c : box_cols) row += "," + csv_number(b.at(c));
    return row;
  };
  auto to_box = [](const json& b) {
    stats::BoxStats s;
    s.n = b.at("n");
    s.min = b.at("min");
    s.q1 = b.at("q1");
    s.median = b.at("median");
    s.q3 = b.at("q3");
    s.max = b.at("max");
    s.mean = b.at("mean");
    s.sd = b.at("sd");
    return s;
  };

  emit("report.json", report.dump(2) + "\n");

  if (present("spatial")) {
    std::string csv = "module,ground_truth,n,min,q1,median,q3,max,mean,sd\n";
    svg::BoxSeries series{"normalized rating", {}, {}};
    std::vector<double> truth;
    for (const auto& m : report["spatial"]["modules"]) {
      csv += csv_number(m["module"]) + "," + csv_number(m["ground_truth"]) + box_row(m) + "\n";
      series.categories.push_back(csv_number(m["module"]));
      series.boxes.push_back(to_box(m));
      truth.push_back(m["ground_truth"]);
    }
    emit("spatial.csv", csv);
    if (svg) {
      emit("spatial.svg", svg::box_plot({"Perceived distance between modules", "Target module",
                                         "Normalized rating", 0.0, 1.0},
                                        {series}, truth));
    }
  }

  std::string coefficients = "model,term" + estimate_header;
  std::string marginal = "model,quantity,group" + estimate_header;
  for (const char* model : {"accuracy", "response_time"}) {
    if (!present(model)) continue;
    const json& sec = report[model];
    for (const auto& c : sec["fit"]["coefficients"]) {
      coefficients += std::string(model) + "," + c["name"].get<std::string>() + estimate_row(c) + "\n";
    }
    const json& m = sec["marginal"];
    for (const char* g : {"audio_only", "audio_haptic"}) {
      marginal += std::string(model) + ",prediction," + g + estimate_row(m["prediction"][g]) + "\n";
      marginal += std::string(model) + ",slope," + g + estimate_row(m["slope"][g]) + "\n";
    }
    marginal += std::string(model) + ",contrast,haptic_minus_audio" +
                estimate_row(m["contrast_haptic_minus_audio"]) + "\n";
    marginal += std::string(model) + ",average_slope,all" + estimate_row(m["average_slope"]) + "\n";
  }
  if (present("accuracy") || present("response_time")) {
    emit("coefficients.csv", coefficients);
    emit("marginal.csv", marginal);
  }

  if (present("accuracy")) {
    std::string csv = "trial,haptic" + estimate_header;
    std::array<svg::LineSeries, 2> lines{svg::LineSeries{"audio-only", {}, {}, {}, {}},
                                         svg::LineSeries{"audio-haptic", {}, {}, {}, {}}};
    for (const auto& p : report["accuracy"]["curve"]) {
      csv += csv_number(p["trial"]) + "," + csv_number(p["haptic"]) + estimate_row(p) + "\n";
      auto& line = lines[p["haptic"].get<int>()];
      line.x.push_back(p["trial"].get<double>());
      line.y.push_back(p["estimate"]);
      line.lower.push_back(p["ci_lower"]);
      line.upper.push_back(p["ci_upper"]);
    }
    emit("accuracy_curve.csv", csv);
    if (svg) {
      emit("accuracy_curve.svg",
           svg::line_plot({"Predicted accuracy during training", "Training trial",
                           "P(correct)", 0.0, 1.0},
                          {lines[0], lines[1]}));
    }
  }

  if (present("pre_post")) {
    const json& pp = report["pre_post"];
    std::string csv = "participant_id,haptic,pre,post,delta\n";
    for (const auto& p : pp["participants"]) {
      csv += p["participant_id"].get<std::string>() + "," + csv_number(p["haptic"]) + "," +
             csv_number(p["pre"]) + "," + csv_number(p["post"]) + "," + csv_number(p["delta"]) + "\n";
    }
    emit("pre_post_participants.csv", csv);
    std::string groups = "group,phase" + estimate_header;
    std::vector<svg::LineSeries> lines;
    for (const char* g : {"audio_only", "audio_haptic"}) {
      groups += std::string(g) + ",pre" + estimate_row(pp[g]["pre"]) + "\n";
      groups += std::string(g) + ",post" + estimate_row(pp[g]["post"]) + "\n";
      lines.push_back({g,
                       {0.0, 1.0},
                       {pp[g]["pre"]["estimate"], pp[g]["post"]["estimate"]},
                       {pp[g]["pre"]["ci_lower"], pp[g]["post"]["ci_lower"]},
                       {pp[g]["pre"]["ci_upper"], pp[g]["post"]["ci_upper"]}});
    }
    emit("pre_post.csv", groups);
    if (svg) {
      emit("pre_post.svg", svg::line_plot({"Test accuracy (0 = pre, 1 = post)", "Test",
                                           "Proportion correct", 0.0, 1.0},
                                          lines));
    }
  }

  if (present("guess_distribution")) {
    std::string csv = "group,phase,interval,response,count\n";
    for (const auto& m : report["guess_distribution"]["matrices"]) {
      for (const auto& row : m["by_interval"]) {
        for (int r = 0; r < 8; ++r) {
          csv += m["group"].get<std::string>() + "," + m["phase"].get<std::string>() + "," +
                 csv_number(row["interval"]) + "," + std::to_string(r + 1) + "," +
                 csv_number(row["responses"][r]) + "\n";
        }
      }
    }
    emit("guess_distribution.csv", csv);
  }

  if (present("questionnaire")) {
    std::string csv = "item,inverted,group,n,min,q1,median,q3,max,mean,sd,t,df,p_value\n";
    std::array<svg::BoxSeries, 2> series{svg::BoxSeries{"audio-only", {}, {}},
                                         svg::BoxSeries{"audio-haptic", {}, {}}};
    for (const auto& item : report["questionnaire"]["items"]) {
      const json& test = item["test_haptic_minus_audio"];
      int g = 0;
      for (const char* group : {"audio_only", "audio_haptic"}) {
        csv += item["key"].get<std::string>() + "," + csv_number(item["inverted"]) + "," + group +
               box_row(item[group]) + "," + csv_number(test["t"]) + "," + csv_number(test["df"]) +
               "," + csv_number(test["p_value"]) + "\n";
        series[g].categories.push_back(item["label"]);
        series[g].boxes.push_back(to_box(item[group]));
        ++g;
      }
    }
    emit("questionnaire.csv", csv);
    if (svg) {
      emit("questionnaire.svg",
           svg::box_plot({"Post-study questionnaire", "", "Score (inverted items flipped)", 1.0, 7.0},
                         {series[0], series[1]}));
    }
  }
  return written;
}

}  // namespace purrfect
