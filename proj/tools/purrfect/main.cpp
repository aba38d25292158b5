#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "purrfect/audio.hpp"
#include "purrfect/datastore.hpp"
#include "purrfect/error.hpp"
#include "purrfect/gateway/channel.hpp"
#include "purrfect/gateway/device.hpp"
#include "purrfect/gateway/server.hpp"
#include "purrfect/log.hpp"
#include "purrfect/music.hpp"
#include "purrfect/report.hpp"
#include "purrfect/version.hpp"

namespace fs = std::filesystem;
using namespace purrfect;

namespace {

int exit_code(Errc code) {
  switch (code) {
    case Errc::ConfigError:
    case Errc::InvalidTiming:
    case Errc::WrongCondition:
    case Errc::OutOfRange:
    case Errc::NotDiatonic:
    case Errc::RangeOverflow:
    case Errc::ModuleOutOfRange:
      return 2;
    case Errc::ParseError:
    case Errc::ValidationError:
    case Errc::DuplicateParticipant:
    case Errc::EmptyDataset:
      return 3;
    case Errc::StorageFailure:
      return 4;
    case Errc::NetworkError:
    case Errc::ProtocolViolation:
    case Errc::ClientDisconnected:
      return 5;
    case Errc::NotConverged:
    case Errc::RankDeficient:
    case Errc::InsufficientData:
    case Errc::DegenerateRatings:
    case Errc::OutOfScale:
      return 6;
    default:
      return 1;
  }
}

std::optional<int> gap_override;

StimulusTiming timing_with_gap(StimulusTiming timing) {
  if (gap_override) timing.gap_ms = *gap_override;
  timing.validate();
  return timing;
}

gateway::GatewayServer* running_server = nullptr;

extern "C" void on_signal(int) {
  if (running_server) running_server->stop();
}

struct ServeArgs {
  fs::path study_dir = ".";
  std::string participant = "P01";
  std::string condition = "audio-haptic";
  std::uint64_t seed = 1;
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  fs::path static_dir;
  bool no_hardware = false;
  fs::path device;
};

int cmd_serve(const ServeArgs& a) {
  SessionPlan plan = SessionPlan::standard(a.participant, condition_from_string(a.condition),
                                           a.seed, timing_with_gap({}));
  plan.start_epoch_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
  std::unique_ptr<gateway::DeviceChannel> device;
  if (a.no_hardware || a.device.empty()) {
    if (!a.no_hardware) spdlog::warn("no --device given; haptic frames go to the simulator");
    device = std::make_unique<gateway::SimulatorChannel>();
  } else {
    device = std::make_unique<gateway::StreamDeviceChannel>(a.device);
  }
  fs::create_directories(a.study_dir);
  SessionWriter writer(a.study_dir / (a.participant + std::string(kSessionFileExtension)),
                       make_header(plan));
  gateway::SessionChannel channel(plan, *device, [&](const Effect& fx) {
    if (const auto* rec = std::get_if<effect::RecordTrial>(&fx)) {
      writer.append_record(rec->record);
    } else if (const auto* q = std::get_if<effect::RecordQuestionnaire>(&fx)) {
      writer.append_questionnaire(q->id, q->answers);
    }
  });
  gateway::ServerConfig config;
  config.address = a.address;
  config.port = a.port;
  config.static_dir = a.static_dir;
  gateway::GatewayServer server(config, channel);
  running_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("serving %s (%s) on http://%s:%u, session file %s\n", a.participant.c_str(),
              std::string(to_string(plan.condition)).c_str(), a.address.c_str(), server.port(),
              writer.path().c_str());
  std::fflush(stdout);
  server.run();
  running_server = nullptr;
  return 0;
}

struct SimulateArgs {
  fs::path study_dir;
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_audio;
  std::optional<int> n_haptic;
  std::string condition;
};

int cmd_simulate(const SimulateArgs& a) {
  StudyConfig config;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw Error(Errc::ConfigError, "cannot read " + a.config.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::ConfigError, a.config.string() + " is not valid JSON");
    config = j.get<StudyConfig>();
  }
  if (a.seed) config.seed = *a.seed;
  if (a.n_audio) config.n_audio = *a.n_audio;
  if (a.n_haptic) config.n_haptic = *a.n_haptic;
  if (!a.condition.empty()) {
    if (condition_from_string(a.condition) == Condition::AudioOnly) {
      config.n_haptic = 0;
    } else {
      config.n_audio = 0;
    }
  }
  config.timing = timing_with_gap(config.timing);
  const auto summary = simulate_study(config, a.study_dir);
  std::printf("wrote %zu session files (%zu trial records, %zu haptic commands) to %s\n",
              summary.files.size(), summary.trial_records, summary.haptic_commands,
              a.study_dir.c_str());
  return 0;
}

struct AnalyzeArgs {
  fs::path study_dir;
  fs::path out_dir;
  std::string marginal_mode = "conditional";
  std::string ttest = "welch";
  bool svg = false;
  bool filter_report = false;
};

void print_estimate(const char* label, const nlohmann::json& e) {
  std::printf("  %-40s %9.4f  [%8.4f, %8.4f]  p=%.4g\n", label, e["estimate"].get<double>(),
              e["ci_lower"].get<double>(), e["ci_upper"].get<double>(), e["p_value"].get<double>());
}

int cmd_analyze(const AnalyzeArgs& a) {
  AnalyzeOptions options;
  options.marginal_mode = stats::marginal_mode_from_string(a.marginal_mode);
  options.ttest = stats::ttest_kind_from_string(a.ttest);
  const auto report = analyze_study(a.study_dir, options);
  const fs::path out = a.out_dir.empty() ? a.study_dir / "report" : a.out_dir;
  const auto files = write_report_bundle(report, out, a.svg);

  std::printf("analyzed %zu participants, %zu observations\n",
              report["provenance"]["n_participants"].get<std::size_t>(),
              report["provenance"]["n_observations"].get<std::size_t>());
  for (const char* key : {"spatial", "accuracy", "response_time", "pre_post",
                          "guess_distribution", "questionnaire"}) {
    if (!report[key].value("present", false)) {
      std::printf("  %s: absent (%s)\n", key, report[key]["reason"].get<std::string>().c_str());
    }
  }
  if (report["accuracy"].value("present", false)) {
    const auto& m = report["accuracy"]["marginal"];
    print_estimate("accuracy audio-only", m["prediction"]["audio_only"]);
    print_estimate("accuracy audio-haptic", m["prediction"]["audio_haptic"]);
    print_estimate("accuracy contrast (haptic - audio)", m["contrast_haptic_minus_audio"]);
  }
  if (report["response_time"].value("present", false)) {
    const auto& m = report["response_time"]["marginal"];
    print_estimate("response time audio-only (s)", m["prediction"]["audio_only"]);
    print_estimate("response time audio-haptic (s)", m["prediction"]["audio_haptic"]);
    print_estimate("response time contrast (haptic - audio)", m["contrast_haptic_minus_audio"]);
    if (a.filter_report) {
      const auto& f = report["response_time"]["filter"];
      std::printf(
          "filter: %zu rows in, %zu below %.1f s floor, %zu above %.2f s (mean %.3f + %.0f sd %.3f), "
          "%zu kept\n",
          f["n_input"].get<std::size_t>(), f["n_below_floor"].get<std::size_t>(),
          f["floor_s"].get<double>(), f["n_above_threshold"].get<std::size_t>(),
          f["upper_threshold_s"].get<double>(), f["mean_after_floor_s"].get<double>(),
          f["sd_multiplier"].get<double>(), f["sd_after_floor_s"].get<double>(),
          f["n_output"].get<std::size_t>());
    }
  }
  std::printf("wrote %zu files to %s\n", files.size(), out.c_str());
  return 0;
}

struct RenderArgs {
  fs::path out = "stimulus.wav";
  std::optional<std::uint64_t> seed;
  int base_midi = 48;
  int interval = 5;
  int sample_rate = kDefaultSampleRate;
};

int cmd_render_audio(const RenderArgs& a) {
  Trial trial;
  if (a.seed) {
    TrialRng rng(*a.seed);
    trial = next_trial(std::nullopt, rng, PhaseKind::Training);
  } else {
    trial.base = tone_from_midi(a.base_midi);
    trial.interval = Interval(a.interval);
    trial.second = apply_interval(trial.base, trial.interval);
  }
  const StimulusTiming timing = timing_with_gap({});
  const auto wav = encode_wav(render_trial(trial, timing, a.sample_rate));
  std::ofstream out(a.out, std::ios::binary);
  out.write(reinterpret_cast<const char*>(wav.data()), static_cast<std::streamsize>(wav.size()));
  if (!out) throw Error(Errc::StorageFailure, "cannot write " + a.out.string());
  std::printf("%s: %s -> %s (interval %d), %.1f Hz -> %.1f Hz, %zu bytes\n", a.out.c_str(),
              note_name(trial.base.midi).c_str(), note_name(trial.second.midi).c_str(),
              trial.interval.degree(), trial.base.frequency_hz, trial.second.frequency_hz,
              wav.size());
  return 0;
}

int cmd_validate_log(std::vector<fs::path> files, const fs::path& study_dir) {
  if (!study_dir.empty()) {
    const auto found = session_files(study_dir);
    files.insert(files.end(), found.begin(), found.end());
  }
  if (files.empty()) throw Error(Errc::EmptyDataset, "no session files to validate");
  int failures = 0;
  for (const auto& path : files) {
    try {
      const auto file = read_session_file(path);
      std::printf("OK   %s: %s (%s), %zu records, %zu questionnaires\n", path.c_str(),
                  file.header.participant_id.c_str(),
                  std::string(to_string(file.header.condition)).c_str(), file.records.size(),
                  file.questionnaires.size());
    } catch (const Error& e) {
      ++failures;
      std::printf("FAIL %s: %s\n", path.c_str(), e.what());
    }
  }
  if (failures == 0) {
    load_dataset(files);
  }
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Interval ear-training study toolkit: simulate, analyze, serve"};
  app.set_version_flag("--version", std::string(software_version()));
  app.require_subcommand(1);
  app.add_option("--gap-ms", gap_override, "Silence between the two tones in ms (default 200)")
      ->check(CLI::NonNegativeNumber);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run one live session behind the HTTP/websocket gateway");
  serve_cmd->add_option("--study-dir", serve.study_dir, "Directory for the session file");
  serve_cmd->add_option("--participant", serve.participant, "Participant id");
  serve_cmd->add_option("--condition", serve.condition, "audio-only | audio-haptic")
      ->check(CLI::IsMember({"audio-only", "audio-haptic"}));
  serve_cmd->add_option("--seed", serve.seed, "Session seed");
  serve_cmd->add_option("--address", serve.address, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Listen port (0 = any free port)");
  serve_cmd->add_option("--static-dir", serve.static_dir, "Trainer UI assets to serve");
  serve_cmd->add_flag("--no-hardware", serve.no_hardware, "Route haptic frames to the simulator");
  serve_cmd->add_option("--device", serve.device, "Serial device for the haptic vest");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a study through the session engine");
  sim_cmd->add_option("--study-dir", sim.study_dir, "Output directory")->required();
  sim_cmd->add_option("--config", sim.config, "Study config JSON")->check(CLI::ExistingFile);
  sim_cmd->add_option("--seed", sim.seed, "Study seed");
  sim_cmd->add_option("--n-audio", sim.n_audio, "Audio-only participants (default 10)");
  sim_cmd->add_option("--n-haptic", sim.n_haptic, "Audio-haptic participants (default 8)");
  sim_cmd->add_option("--condition", sim.condition, "Simulate only this group")
      ->check(CLI::IsMember({"audio-only", "audio-haptic"}));

  AnalyzeArgs an;
  auto* an_cmd = app.add_subcommand("analyze", "Analyze a study directory into a report bundle");
  an_cmd->add_option("--study-dir", an.study_dir, "Study directory")->required();
  an_cmd->add_option("--out", an.out_dir, "Bundle directory (default <study-dir>/report)");
  an_cmd->add_option("--marginal-mode", an.marginal_mode, "conditional | integrated")
      ->check(CLI::IsMember({"conditional", "integrated"}));
  an_cmd->add_option("--ttest", an.ttest, "welch | pooled | paired")
      ->check(CLI::IsMember({"welch", "pooled", "paired"}));
  an_cmd->add_flag("--svg", an.svg, "Also write SVG plots");
  an_cmd->add_flag("--filter-report", an.filter_report,
                   "Print response-time exclusion counts and the realized threshold");

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render-audio", "Render one interval stimulus to WAV");
  render_cmd->add_option("--out", render.out, "Output WAV file");
  render_cmd->add_option("--seed", render.seed, "Draw a random first trial from this seed");
  render_cmd->add_option("--base-midi", render.base_midi, "Base tone (C-major, 36..71)");
  render_cmd->add_option("--interval", render.interval, "Interval degree 1..8")
      ->check(CLI::Range(1, 8));
  render_cmd->add_option("--sample-rate", render.sample_rate, "Sample rate in Hz");

  std::vector<fs::path> logs;
  fs::path log_dir;
  auto* validate_cmd = app.add_subcommand("validate-log", "Check session files");
  validate_cmd->add_option("files", logs, "Session files");
  validate_cmd->add_option("--study-dir", log_dir, "Validate every session file in a directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every usage error maps to the config status.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*serve_cmd) return cmd_serve(serve);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*an_cmd) return cmd_analyze(an);
    if (*render_cmd) return cmd_render_audio(render);
    if (*validate_cmd) return cmd_validate_log(logs, log_dir);
  } catch (const Error& e) {
    std::fprintf(stderr, "purrfect: %s\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "purrfect: %s\n", e.what());
    return 1;
  }
  return 0;
}
