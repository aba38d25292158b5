#include "purrfect/gateway/channel.hpp"

#include <algorithm>
#include <array>

#include <spdlog/spdlog.h>

#include "purrfect/error.hpp"
#include "purrfect/questionnaire.hpp"

namespace purrfect::gateway {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<MessageType, std::string_view>, 12> kTypeNames{{
    {MessageType::PhaseChange, "phase_change"},
    {MessageType::TrialStart, "trial_start"},
    {MessageType::PlayStimulus, "play_stimulus"},
    {MessageType::Response, "response"},
    {MessageType::Replay, "replay"},
    {MessageType::Feedback, "feedback"},
    {MessageType::SessionDone, "session_done"},
    {MessageType::QuestionnairePrompt, "questionnaire_prompt"},
    {MessageType::QuestionnaireAnswer, "questionnaire_answer"},
    {MessageType::SpatialPrompt, "spatial_prompt"},
    {MessageType::SpatialAnswer, "spatial_answer"},
    {MessageType::Error, "error"},
}};

constexpr std::size_t kRetainedStimuli = 32;

json questionnaire_items(const std::string& id) {
  json items = json::array();
  if (id != "Q2") return items;
  for (const auto& item : kQ2Items) {
    items.push_back({{"key", item.key},
                     {"label", item.label},
                     {"prompt", item.prompt},
                     {"low_anchor", item.low_anchor},
                     {"high_anchor", item.high_anchor},
                     {"min", kLikertMin},
                     {"max", kLikertMax}});
  }
  return items;
}

/// Client key names to engine keys. Unknown keys map to nothing.
std::optional<char> key_from_name(const std::string& name) {
  if (name.size() == 1 && name[0] >= '1' && name[0] <= '8') return name[0];
  if (name == " " || name == "Space") return ' ';
  if (name == "Enter") return '\n';
  return std::nullopt;
}

}  // namespace

std::string_view to_string(MessageType t) noexcept {
  for (const auto& [type, name] : kTypeNames) {
    if (type == t) return name;
  }
  return "error";
}

std::optional<MessageType> message_type_from_string(std::string_view name) noexcept {
  for (const auto& [type, n] : kTypeNames) {
    if (n == name) return type;
  }
  return std::nullopt;
}

void to_json(json& j, const WireMessage& m) {
  j = {{"type", to_string(m.type)}, {"seq", m.seq}, {"payload", m.payload}};
}

std::string WireMessage::dump() const { return json(*this).dump(); }

WireMessage parse_wire_message(std::string_view text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::ProtocolViolation, "frame is not a JSON object");
  }
  if (!j.contains("type") || !j["type"].is_string()) {
    throw Error(Errc::ProtocolViolation, "frame has no string \"type\"");
  }
  const auto type = message_type_from_string(j["type"].get<std::string>());
  if (!type) throw Error(Errc::ProtocolViolation, "unknown message type " + j["type"].dump());
  if (!j.contains("seq") || !j["seq"].is_number_unsigned()) {
    throw Error(Errc::ProtocolViolation, "frame has no non-negative integer \"seq\"");
  }
  WireMessage m;
  m.type = *type;
  m.seq = j["seq"].get<std::uint64_t>();
  if (j.contains("payload")) {
    if (!j["payload"].is_object()) throw Error(Errc::ProtocolViolation, "payload must be an object");
    m.payload = j["payload"];
  }
  return m;
}

SessionChannel::SessionChannel(SessionPlan plan, DeviceChannel& device, RecordSink sink)
    : session_(std::move(plan)), device_(device), sink_(std::move(sink)) {}

WireMessage SessionChannel::make(MessageType type, json payload) {
  return {type, ++seq_, std::move(payload)};
}

WireMessage SessionChannel::ack(const WireMessage& input, bool accepted, std::string reason) {
  json payload = {{"ack", input.seq}, {"accepted", accepted}};
  if (!reason.empty()) payload["reason"] = std::move(reason);
  return make(input.type, std::move(payload));
}

WireMessage SessionChannel::error_message(std::string_view reason, std::string_view code) {
  return {MessageType::Error, 0, {{"reason", reason}, {"code", code}}};
}

std::int64_t SessionChannel::engine_time(std::int64_t now_ms) const noexcept {
  if (!started_) return 0;
  const std::int64_t wall = connected_ ? now_ms : paused_at_ms_;
  return std::max<std::int64_t>(0, wall - start_wall_ms_ - paused_total_ms_);
}

std::vector<WireMessage> SessionChannel::connect(std::int64_t now_ms) {
  if (connected_) throw Error(Errc::ProtocolViolation, "a client is already attached to this session");
  std::vector<WireMessage> out;
  last_client_seq_.reset();
  if (!started_) {
    started_ = true;
    connected_ = true;
    start_wall_ms_ = now_ms;
    relay(0, session_.start(0), out);
    flush_haptics(0);
    return out;
  }
  paused_total_ms_ += now_ms - paused_at_ms_;
  connected_ = true;
  spdlog::info("client reconnected at engine time {}", engine_time(now_ms));
  if (finished()) {
    out.push_back(make(MessageType::SessionDone, json::object()));
    return out;
  }
  if (last_phase_) {
    json payload = last_phase_->second;
    payload["resumed"] = true;
    out.push_back(make(last_phase_->first, std::move(payload)));
  }
  for (const auto& [type, payload] : last_prompt_) out.push_back(make(type, payload));
  return out;
}

void SessionChannel::disconnect(std::int64_t now_ms) {
  if (!connected_) return;
  paused_at_ms_ = now_ms;
  connected_ = false;
  spdlog::info("client disconnected; session paused at engine time {}", engine_time(now_ms));
}

std::vector<WireMessage> SessionChannel::tick(std::int64_t now_ms) {
  std::vector<WireMessage> out;
  if (!started_ || !connected_ || finished()) return out;
  const std::int64_t t = engine_time(now_ms);
  relay(t, session_.dispatch({t, event::Tick{}}), out);
  flush_haptics(t);
  return out;
}

std::vector<WireMessage> SessionChannel::on_client_message(std::string_view text,
                                                           std::int64_t now_ms) {
  if (!connected_) throw Error(Errc::ClientDisconnected, "no client attached");
  const WireMessage input = parse_wire_message(text);
  if (last_client_seq_ && input.seq <= *last_client_seq_) {
    throw Error(Errc::ProtocolViolation, "client seq " + std::to_string(input.seq) +
                                             " does not increase");
  }
  last_client_seq_ = input.seq;

  std::optional<Event> event;
  std::string reject_reason;
  const std::int64_t t = engine_time(now_ms);
  switch (input.type) {
    case MessageType::Response: {
      const auto& key = input.payload.find("key");
      if (key == input.payload.end() || !key->is_string()) {
        reject_reason = "response needs a string \"key\"";
      } else if (const auto k = key_from_name(key->get<std::string>())) {
        event = Event{t, event::Key{*k}};
      } else {
        reject_reason = "key " + key->dump() + " is not an answer key";
      }
      break;
    }
    case MessageType::Replay:
      event = Event{t, event::ReplayRequested{}};
      break;
    case MessageType::SpatialAnswer: {
      const auto& value = input.payload.find("value");
      if (value == input.payload.end() || !value->is_number()) {
        reject_reason = "spatial_answer needs a numeric \"value\"";
      } else {
        event = Event{t, event::SpatialAnswer{value->get<double>()}};
      }
      break;
    }
    case MessageType::QuestionnaireAnswer: {
      const auto& answers = input.payload.find("answers");
      if (answers == input.payload.end() || !answers->is_object()) {
        reject_reason = "questionnaire_answer needs an \"answers\" object";
      } else {
        event = Event{t, event::QuestionnaireAnswer{*answers}};
      }
      break;
    }
    default:
      throw Error(Errc::ProtocolViolation,
                  "clients may not send " + std::string(to_string(input.type)) + " messages");
  }

  std::vector<WireMessage> out;
  if (!event) {
    out.push_back(ack(input, false, reject_reason));
    return out;
  }
  if (finished()) {
    out.push_back(ack(input, false, "session is finished"));
    return out;
  }
  // Fire any timers that are due before the input itself is applied.
  std::vector<WireMessage> timers;
  relay(t, session_.dispatch({t, event::Tick{}}), timers);

  const int ignored_before = session_.state().ignored_events;
  const std::vector<Effect> effects = session_.dispatch(*event);
  std::string rejected;
  for (const auto& fx : effects) {
    if (const auto* r = std::get_if<effect::Rejected>(&fx)) rejected = r->reason;
  }
  const bool ignored = session_.state().ignored_events > ignored_before;
  out = std::move(timers);
  if (ignored) {
    out.push_back(ack(input, false, "not accepted in the current state"));
  } else if (!rejected.empty()) {
    out.push_back(ack(input, false, rejected));
  } else {
    out.push_back(ack(input, true));
  }
  relay(t, effects, out);
  flush_haptics(t);
  return out;
}

void SessionChannel::relay(std::int64_t engine_ms, const std::vector<Effect>& effects,
                           std::vector<WireMessage>& out) {
  for (const auto& fx : effects) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, effect::EnterPhase>) {
            const PhaseSpec& spec = session_.plan().phases.at(e.index);
            json payload = {{"index", e.index},
                            {"kind", to_string(e.kind)},
                            {"label", e.label},
                            {"feedback", spec.feedback},
                            {"audio", spec.audio}};
            if (spec.trial_count) payload["trial_count"] = *spec.trial_count;
            if (spec.duration_ms) payload["duration_ms"] = *spec.duration_ms;
            last_phase_ = {MessageType::PhaseChange, payload};
            last_prompt_.clear();
            out.push_back(make(MessageType::PhaseChange, std::move(payload)));
          } else if constexpr (std::is_same_v<T, effect::StartTrial>) {
            if (const auto& trial = session_.state().current_trial;
                trial && session_.current_phase() && session_.current_phase()->audio) {
              stimuli_[e.stimulus_id] = *trial;
              while (stimuli_.size() > kRetainedStimuli) stimuli_.erase(stimuli_.begin());
            }
            json payload = {{"phase", to_string(e.phase)},
                            {"trial_index", e.trial_index},
                            {"stimulus_id", e.stimulus_id}};
            last_prompt_.assign(1, {MessageType::TrialStart, payload});
            out.push_back(make(MessageType::TrialStart, std::move(payload)));
          } else if constexpr (std::is_same_v<T, effect::PlayAudio>) {
            json payload = {{"stimulus_id", e.stimulus_id},
                            {"descriptor", e.descriptor},
                            {"url", "/audio/" + std::to_string(e.stimulus_id) + ".wav"},
                            {"replay", e.replay}};
            if (!e.replay) last_prompt_.push_back({MessageType::PlayStimulus, payload});
            out.push_back(make(MessageType::PlayStimulus, std::move(payload)));
          } else if constexpr (std::is_same_v<T, effect::SendHaptics>) {
            for (const auto& command : e.commands) {
              pending_haptics_.push_back({engine_ms + command.onset_ms, haptic_order_++, command});
            }
          } else if constexpr (std::is_same_v<T, effect::PromptSpatial>) {
            json payload = {{"pair_index", e.pair_index}};
            last_prompt_.assign(1, {MessageType::SpatialPrompt, payload});
            out.push_back(make(MessageType::SpatialPrompt, std::move(payload)));
          } else if constexpr (std::is_same_v<T, effect::PromptQuestionnaire>) {
            json payload = {{"id", e.id}, {"items", questionnaire_items(e.id)}};
            last_prompt_.assign(1, {MessageType::QuestionnairePrompt, payload});
            out.push_back(make(MessageType::QuestionnairePrompt, std::move(payload)));
          } else if constexpr (std::is_same_v<T, effect::ShowFeedback>) {
            out.push_back(make(MessageType::Feedback,
                               {{"color", e.color == FeedbackColor::Green ? "green" : "red"},
                                {"correct_degree", e.correct_degree},
                                {"clear_after_ms", kAutoAdvanceMs}}));
          } else if constexpr (std::is_same_v<T, effect::RecordTrial> ||
                               std::is_same_v<T, effect::RecordQuestionnaire>) {
            ++records_emitted_;
            if (sink_) sink_(fx);
          } else if constexpr (std::is_same_v<T, effect::Rejected>) {
            spdlog::debug("engine rejected input: {}", e.reason);
          } else if constexpr (std::is_same_v<T, effect::EndSession>) {
            last_prompt_.clear();
            out.push_back(make(MessageType::SessionDone, json::object()));
          }
        },
        fx);
  }
}

void SessionChannel::flush_haptics(std::int64_t engine_ms) {
  std::sort(pending_haptics_.begin(), pending_haptics_.end(), [](const auto& a, const auto& b) {
    return a.due_ms != b.due_ms ? a.due_ms < b.due_ms : a.order < b.order;
  });
  auto due_end = std::find_if(pending_haptics_.begin(), pending_haptics_.end(),
                              [&](const auto& p) { return p.due_ms > engine_ms; });
  for (auto it = pending_haptics_.begin(); it != due_end; ++it) {
    device_.send(it->due_ms, it->command);
  }
  pending_haptics_.erase(pending_haptics_.begin(), due_end);
}

std::optional<std::vector<std::uint8_t>> SessionChannel::stimulus_wav(int stimulus_id) const {
  const auto it = stimuli_.find(stimulus_id);
  if (it == stimuli_.end()) return std::nullopt;
  return encode_wav(render_trial(it->second, session_.plan().timing));
}

json SessionChannel::status(std::int64_t now_ms) const {
  const PhaseSpec* phase = session_.current_phase();
  json j = {{"schema_version", kWireSchemaVersion},
            {"participant_id", session_.plan().participant_id},
            {"condition", to_string(session_.plan().condition)},
            {"started", started_},
            {"connected", connected_},
            {"finished", finished()},
            {"engine_time_ms", engine_time(now_ms)},
            {"records", records_emitted_}};
  if (phase && !finished()) {
    j["phase_index"] = session_.state().current_phase;
    j["phase"] = to_string(phase->kind);
  }
  return j;
}

}  // namespace purrfect::gateway
