#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "purrfect/audio.hpp"
#include "purrfect/gateway/device.hpp"
#include "purrfect/session.hpp"

namespace purrfect::gateway {

inline constexpr int kWireSchemaVersion = 1;

enum class MessageType {
  PhaseChange,
  TrialStart,
  PlayStimulus,
  Response,
  Replay,
  Feedback,
  SessionDone,
  QuestionnairePrompt,
  QuestionnaireAnswer,
  SpatialPrompt,
  SpatialAnswer,
  Error,
};

std::string_view to_string(MessageType t) noexcept;
std::optional<MessageType> message_type_from_string(std::string_view name) noexcept;

/// {"type": "...", "seq": n, "payload": {...}}
struct WireMessage {
  MessageType type = MessageType::Error;
  std::uint64_t seq = 0;
  nlohmann::json payload = nlohmann::json::object();

  std::string dump() const;
};

void to_json(nlohmann::json& j, const WireMessage& m);

/// Strict parse of a client frame. Errc::ProtocolViolation for invalid JSON,
/// unknown types, or a missing/negative seq.
WireMessage parse_wire_message(std::string_view text);

/// Transport-independent relay between one client and one session.
///
/// Client inputs (response, replay, spatial_answer, questionnaire_answer) are
/// answered by a message of the same type whose payload is
/// {"ack": <client seq>, "accepted": bool, "reason"?}; effects follow in
/// engine order. Haptic effects go to the device channel at their scheduled
/// onsets and never into client payloads. While no client is connected the
/// engine clock is frozen, so a session can be resumed by reconnecting.
class SessionChannel {
 public:
  using RecordSink = std::function<void(const Effect&)>;

  SessionChannel(SessionPlan plan, DeviceChannel& device, RecordSink sink = {});

  /// Attaches the client. The first connection starts the session; later
  /// ones resume it and replay the current phase and prompt.
  /// Errc::ProtocolViolation when a client is already attached.
  std::vector<WireMessage> connect(std::int64_t now_ms);
  void disconnect(std::int64_t now_ms);

  /// Errc::ProtocolViolation for malformed frames, unsupported client
  /// message types, or a client seq that does not increase.
  std::vector<WireMessage> on_client_message(std::string_view text, std::int64_t now_ms);

  /// Advances the engine clock and flushes due haptic frames.
  std::vector<WireMessage> tick(std::int64_t now_ms);

  /// Error frame for a refused or violating client, outside any session seq.
  static WireMessage error_message(std::string_view reason, std::string_view code);

  bool connected() const noexcept { return connected_; }
  bool finished() const noexcept { return session_.state().finished; }
  const Session& session() const noexcept { return session_; }
  std::int64_t engine_time(std::int64_t now_ms) const noexcept;
  std::size_t records_emitted() const noexcept { return records_emitted_; }

  /// Server-rendered fallback audio for a stimulus id, if it is known.
  std::optional<std::vector<std::uint8_t>> stimulus_wav(int stimulus_id) const;

  nlohmann::json status(std::int64_t now_ms) const;

 private:
  struct PendingHaptic {
    std::int64_t due_ms;
    std::uint64_t order;
    HapticCommand command;
  };

  WireMessage make(MessageType type, nlohmann::json payload);
  WireMessage ack(const WireMessage& input, bool accepted, std::string reason = {});
  void relay(std::int64_t engine_ms, const std::vector<Effect>& effects,
             std::vector<WireMessage>& out);
  void flush_haptics(std::int64_t engine_ms);

  Session session_;
  DeviceChannel& device_;
  RecordSink sink_;
  bool started_ = false;
  bool connected_ = false;
  std::uint64_t seq_ = 0;
  std::optional<std::uint64_t> last_client_seq_;
  std::int64_t start_wall_ms_ = 0;
  std::int64_t paused_total_ms_ = 0;
  std::int64_t paused_at_ms_ = 0;
  std::size_t records_emitted_ = 0;

  std::vector<PendingHaptic> pending_haptics_;
  std::uint64_t haptic_order_ = 0;
  std::map<int, Trial> stimuli_;

  // Resent on reconnect so the client can rebuild its view.
  std::optional<std::pair<MessageType, nlohmann::json>> last_phase_;
  std::vector<std::pair<MessageType, nlohmann::json>> last_prompt_;
};

}  // namespace purrfect::gateway
