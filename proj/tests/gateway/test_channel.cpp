#include <gtest/gtest.h>

#include "purrfect/error.hpp"
#include "purrfect/gateway/channel.hpp"

using namespace purrfect;
using namespace purrfect::gateway;
using nlohmann::json;

namespace {

std::string frame(std::uint64_t seq, const std::string& type, json payload = json::object()) {
  return json{{"type", type}, {"seq", seq}, {"payload", std::move(payload)}}.dump();
}

const WireMessage* first(const std::vector<WireMessage>& msgs, MessageType type) {
  for (const auto& m : msgs) {
    if (m.type == type) return &m;
  }
  return nullptr;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::OutOfRange;
}

struct Fixture {
  explicit Fixture(Condition c, std::uint64_t seed = 4)
      : channel(SessionPlan::standard("P01", c, seed), device,
                [this](const Effect& fx) { sunk.push_back(fx); }) {}
  SimulatorChannel device;
  std::vector<Effect> sunk;
  SessionChannel channel;
};

}  // namespace

TEST(Wire, ParseIsStrict) {
  EXPECT_EQ(parse_wire_message(frame(3, "replay")).type, MessageType::Replay);
  EXPECT_EQ(code_of([] { parse_wire_message("{"); }), Errc::ProtocolViolation);
  EXPECT_EQ(code_of([] { parse_wire_message(R"({"type":"dance","seq":1})"); }),
            Errc::ProtocolViolation);
  EXPECT_EQ(code_of([] { parse_wire_message(R"({"type":"replay"})"); }), Errc::ProtocolViolation);
  EXPECT_EQ(code_of([] { parse_wire_message(R"({"type":"replay","seq":-1})"); }),
            Errc::ProtocolViolation);
  EXPECT_EQ(code_of([] { parse_wire_message(R"({"type":"replay","seq":1,"payload":3})"); }),
            Errc::ProtocolViolation);
  for (int t = 0; t <= static_cast<int>(MessageType::Error); ++t) {
    const auto type = static_cast<MessageType>(t);
    EXPECT_EQ(message_type_from_string(to_string(type)), type);
  }
}

TEST(Channel, ScriptedPreTestFlow) {
  Fixture f(Condition::AudioOnly);
  auto out = f.channel.connect(1000);
  ASSERT_NE(first(out, MessageType::PhaseChange), nullptr);
  EXPECT_EQ(first(out, MessageType::PhaseChange)->payload["kind"], "Questionnaire");
  ASSERT_NE(first(out, MessageType::QuestionnairePrompt), nullptr);
  EXPECT_EQ(first(out, MessageType::QuestionnairePrompt)->payload["id"], "Q1");

  out = f.channel.on_client_message(frame(1, "questionnaire_answer", {{"answers", {{"age", 31}}}}),
                                    1500);
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(out[0].type, MessageType::QuestionnaireAnswer);
  EXPECT_EQ(out[0].payload["ack"], 1);
  EXPECT_EQ(out[0].payload["accepted"], true);
  EXPECT_EQ(first(out, MessageType::PhaseChange)->payload["kind"], "PreTest");
  const auto* play = first(out, MessageType::PlayStimulus);
  ASSERT_NE(play, nullptr);
  const int stimulus = play->payload["stimulus_id"];
  EXPECT_EQ(play->payload["url"], "/audio/" + std::to_string(stimulus) + ".wav");
  EXPECT_TRUE(f.channel.stimulus_wav(stimulus).has_value());
  EXPECT_FALSE(f.channel.stimulus_wav(stimulus + 100).has_value());

  // Before the second tone the key is acknowledged but not accepted.
  out = f.channel.on_client_message(frame(2, "response", {{"key", "3"}}), 1600);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].payload["accepted"], false);
  EXPECT_EQ(f.channel.records_emitted(), 1u);

  out = f.channel.on_client_message(frame(3, "response", {{"key", "3"}}), 1500 + 800);
  EXPECT_EQ(out[0].payload["accepted"], true);
  EXPECT_EQ(first(out, MessageType::Feedback), nullptr);
  EXPECT_EQ(f.channel.records_emitted(), 2u);
  ASSERT_TRUE(std::holds_alternative<effect::RecordTrial>(f.sunk.back()));
  EXPECT_DOUBLE_EQ(std::get<effect::RecordTrial>(f.sunk.back()).record.response_time_ms, 800.0);

  out = f.channel.tick(1500 + 800 + kAutoAdvanceMs);
  ASSERT_NE(first(out, MessageType::TrialStart), nullptr);
  EXPECT_EQ(first(out, MessageType::TrialStart)->payload["trial_index"], 1);

  out = f.channel.on_client_message(frame(4, "response", {{"key", "Q"}}), 5000);
  EXPECT_EQ(out[0].payload["accepted"], false);
  EXPECT_TRUE(out[0].payload.contains("reason"));
}

TEST(Channel, ProtocolViolations) {
  Fixture f(Condition::AudioOnly);
  f.channel.connect(0);
  EXPECT_EQ(code_of([&] { f.channel.connect(1); }), Errc::ProtocolViolation);
  f.channel.on_client_message(frame(5, "replay"), 10);
  EXPECT_EQ(code_of([&] { f.channel.on_client_message(frame(5, "replay"), 20); }),
            Errc::ProtocolViolation);
  EXPECT_EQ(code_of([&] { f.channel.on_client_message(frame(6, "feedback"), 20); }),
            Errc::ProtocolViolation);
  EXPECT_EQ(code_of([&] { f.channel.on_client_message("not json", 20); }), Errc::ProtocolViolation);
  const auto err = SessionChannel::error_message("busy", "SessionBusy");
  EXPECT_EQ(err.seq, 0u);
  EXPECT_EQ(json::parse(err.dump())["payload"]["code"], "SessionBusy");
  f.channel.disconnect(30);
  EXPECT_EQ(code_of([&] { f.channel.on_client_message(frame(7, "replay"), 40); }),
            Errc::ClientDisconnected);
}

TEST(Channel, ReconnectResumesWithoutDuplicates) {
  Fixture f(Condition::AudioOnly);
  f.channel.connect(0);
  f.channel.on_client_message(frame(1, "questionnaire_answer", {{"answers", json::object()}}), 100);
  f.channel.disconnect(300);
  const auto engine_at_drop = f.channel.engine_time(300);
  EXPECT_EQ(f.channel.engine_time(60'000), engine_at_drop);
  EXPECT_EQ(f.channel.tick(60'000).size(), 0u);

  auto out = f.channel.connect(60'000);
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(out[0].type, MessageType::PhaseChange);
  EXPECT_EQ(out[0].payload["resumed"], true);
  EXPECT_EQ(out[0].payload["kind"], "PreTest");
  EXPECT_NE(first(out, MessageType::TrialStart), nullptr);
  EXPECT_NE(first(out, MessageType::PlayStimulus), nullptr);
  EXPECT_EQ(f.channel.engine_time(60'000), engine_at_drop);
  EXPECT_EQ(f.channel.records_emitted(), 1u);

  // Seq numbering restarts with the new connection.
  out = f.channel.on_client_message(frame(1, "response", {{"key", "2"}}), 61'000);
  EXPECT_EQ(out[0].payload["accepted"], true);
  EXPECT_EQ(f.channel.records_emitted(), 2u);
  EXPECT_EQ(f.sunk.size(), 2u);
}

TEST(Channel, HapticsGoToDeviceOnSchedule) {
  Fixture f(Condition::AudioHaptic);
  f.channel.connect(0);
  auto out = f.channel.on_client_message(
      frame(1, "questionnaire_answer", {{"answers", json::object()}}), 0);
  EXPECT_EQ(first(out, MessageType::PhaseChange)->payload["kind"], "SpatialTest");
  EXPECT_EQ(first(out, MessageType::PlayStimulus), nullptr);
  ASSERT_NE(first(out, MessageType::SpatialPrompt), nullptr);
  auto log = f.device.log();
  ASSERT_EQ(log.entries.size(), 1u);
  EXPECT_EQ(log.entries[0].command->module, 1);

  f.channel.tick(699);
  EXPECT_EQ(f.device.log().entries.size(), 1u);
  f.channel.tick(700);
  log = f.device.log();
  ASSERT_EQ(log.entries.size(), 2u);
  EXPECT_EQ(log.entries[1].receive_time_ms, 700);
  const int module = log.entries[1].command->module;

  out = f.channel.on_client_message(frame(2, "spatial_answer", {{"value", -2}}), 900);
  EXPECT_EQ(out[0].payload["accepted"], false);
  out = f.channel.on_client_message(frame(3, "spatial_answer", {{"value", 4.5}}), 950);
  EXPECT_EQ(out[0].payload["accepted"], true);
  const auto& rec = std::get<effect::RecordTrial>(f.sunk.back()).record;
  EXPECT_EQ(rec.interval_degree, module);
  EXPECT_DOUBLE_EQ(*rec.spatial_response, 4.5);
}

TEST(Channel, FullScriptedSessionNeverLeaksHaptics) {
  Fixture f(Condition::AudioHaptic, 9);
  std::vector<WireMessage> seen = f.channel.connect(0);
  std::uint64_t client_seq = 0;
  std::int64_t now = 0;
  int trials = 0;
  auto push = [&](std::vector<WireMessage> msgs) { seen.insert(seen.end(), msgs.begin(), msgs.end()); };
  auto say = [&](const std::string& type, json payload) {
    push(f.channel.on_client_message(frame(++client_seq, type, std::move(payload)), now));
  };
  for (int guard = 0; guard < 200000 && !f.channel.finished(); ++guard) {
    const auto& st = f.channel.session().state();
    const PhaseKind kind = f.channel.session().current_phase()->kind;
    if (kind == PhaseKind::Questionnaire) {
      json answers = json::object();
      answers["fun"] = 5;
      say("questionnaire_answer", {{"answers", answers}});
    } else if (kind == PhaseKind::Break) {
      now += 30'000;
      say("response", {{"key", "Enter"}});
    } else if (st.awaiting == Awaiting::Response) {
      now += 900;
      if (kind == PhaseKind::SpatialTest) {
        say("spatial_answer", {{"value", 3}});
      } else {
        say("response", {{"key", std::to_string(1 + trials % 8)}});
      }
      ++trials;
    } else {
      now += 100;
      push(f.channel.tick(now));
    }
  }
  ASSERT_TRUE(f.channel.finished());
  EXPECT_EQ(seen.back().type, MessageType::SessionDone);
  std::uint64_t last = 0;
  for (const auto& m : seen) {
    EXPECT_GT(m.seq, last);
    last = m.seq;
    const std::string text = m.dump();
    EXPECT_EQ(text.find("VIB"), std::string::npos);
    EXPECT_EQ(text.find("module"), std::string::npos);
    EXPECT_EQ(text.find("intensity"), std::string::npos);
  }
  std::size_t trial_records = 0;
  for (const auto& fx : f.sunk) trial_records += std::holds_alternative<effect::RecordTrial>(fx);
  EXPECT_EQ(static_cast<int>(trial_records), trials);
  const auto log = f.device.log();
  for (const auto& e : log.entries) EXPECT_TRUE(e.ok()) << e.raw;
  EXPECT_EQ(log.entries.size() % 2, 0u);
  EXPECT_GT(log.entries.size(), 16u);
}
