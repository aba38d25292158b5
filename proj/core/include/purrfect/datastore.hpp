#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "purrfect/session.hpp"

namespace purrfect {

inline constexpr std::string_view kSessionFileExtension = ".jsonl";

/// First line of every session file.
struct SessionHeader {
  std::string participant_id;
  Condition condition = Condition::AudioOnly;
  std::uint64_t seed = 0;
  StimulusTiming timing;
  std::string software_version;
  std::int64_t created_at_ms = 0;
  nlohmann::json plan;
};

void to_json(nlohmann::json& j, const SessionHeader& h);
void from_json(const nlohmann::json& j, SessionHeader& h);

SessionHeader make_header(const SessionPlan& plan);

/// Whether each append is fsync'ed (durable against power loss) or only
/// flushed to the OS (durable against process crash).
enum class Durability { Sync, Flush };

/// Append-only writer for one session file. Lines are written whole with a
/// single write(2), so a crash loses at most the line being written.
class SessionWriter {
 public:
  /// Creates `path` and writes the header. Errc::StorageFailure if the file
  /// exists or cannot be created.
  SessionWriter(const std::filesystem::path& path, const SessionHeader& header,
                Durability durability = Durability::Sync);
  ~SessionWriter();

  SessionWriter(const SessionWriter&) = delete;
  SessionWriter& operator=(const SessionWriter&) = delete;
  SessionWriter(SessionWriter&& other) noexcept;
  SessionWriter& operator=(SessionWriter&& other) noexcept;

  /// Validates then persists; returns once the line is durable.
  /// Errc::ValidationError for invalid records, Errc::StorageFailure on I/O errors.
  void append_record(const TrialRecord& record);
  void append_questionnaire(const std::string& id, const nlohmann::json& answers);

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void write_line(const nlohmann::json& line);

  std::filesystem::path path_;
  int fd_ = -1;
  Durability durability_;
};

struct SessionFile {
  SessionHeader header;
  std::vector<TrialRecord> records;
  std::map<std::string, nlohmann::json> questionnaires;
};

/// Errc::ParseError (with file:line) for unreadable lines, a missing header,
/// or records that fail validation.
SessionFile read_session_file(const std::filesystem::path& path);

/// One trial, flattened for analysis.
struct Observation {
  std::string participant_id;
  int haptic = 0;
  /// Training: 1-based and continuous across both training sessions.
  /// Other phases: 1-based within the phase.
  int trial_number = 0;
  int correct = 0;
  double response_time_s = 0.0;
  PhaseKind phase = PhaseKind::Training;
  int interval_degree = 1;
  int response_degree = 1;
};

struct ObservationTable {
  std::vector<Observation> rows;

  std::size_t size() const noexcept { return rows.size(); }
  bool empty() const noexcept { return rows.empty(); }
  ObservationTable only(PhaseKind phase) const;
};

struct SpatialRatings {
  std::string participant_id;
  /// Raw magnitude estimate keyed by target module 1..8.
  std::map<int, double> by_module;
};

struct QuestionnaireResponse {
  std::string participant_id;
  Condition condition = Condition::AudioOnly;
  std::string id;
  nlohmann::json answers;
};

struct ParticipantInfo {
  std::string participant_id;
  Condition condition = Condition::AudioOnly;
  std::filesystem::path source;
};

struct Dataset {
  std::vector<ParticipantInfo> participants;
  ObservationTable observations;
  std::vector<SpatialRatings> spatial;
  std::vector<QuestionnaireResponse> questionnaires;
};

/// Errc::EmptyDataset for no paths, Errc::DuplicateParticipant when two files
/// share a participant id, plus read_session_file's errors. Participants are
/// ordered as the paths are given.
Dataset load_dataset(std::span<const std::filesystem::path> paths);

/// All *.jsonl files of a directory, sorted by file name.
std::vector<std::filesystem::path> session_files(const std::filesystem::path& study_dir);

Dataset load_study(const std::filesystem::path& study_dir);

/// Header: participant_id,haptic,trial_number,correct,response_time_s,phase,
/// interval_degree,response_degree
void write_csv(const ObservationTable& table, std::ostream& out);
/// Errc::ParseError on malformed input.
ObservationTable read_csv(std::istream& in);

}  // namespace purrfect
