#include "purrfect/datastore.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "purrfect/error.hpp"
#include "purrfect/version.hpp"

namespace purrfect {
namespace {

const char* kCsvHeader =
    "participant_id,haptic,trial_number,correct,response_time_s,phase,interval_degree,"
    "response_degree";

std::string errno_text() { return std::strerror(errno); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void to_json(nlohmann::json& j, const SessionHeader& h) {
  j = {{"kind", "header"},
       {"participant_id", h.participant_id},
       {"condition", to_string(h.condition)},
       {"seed", h.seed},
       {"timing", h.timing},
       {"software_version", h.software_version},
       {"created_at_ms", h.created_at_ms},
       {"plan", h.plan}};
}

void from_json(const nlohmann::json& j, SessionHeader& h) {
  h.participant_id = j.at("participant_id").get<std::string>();
  h.condition = condition_from_string(j.at("condition").get<std::string>());
  h.seed = j.at("seed").get<std::uint64_t>();
  h.timing = j.at("timing").get<StimulusTiming>();
  h.software_version = j.value("software_version", std::string());
  h.created_at_ms = j.value("created_at_ms", std::int64_t{0});
  h.plan = j.value("plan", nlohmann::json::object());
}

SessionHeader make_header(const SessionPlan& plan) {
  return SessionHeader{plan.participant_id, plan.condition, plan.seed, plan.timing,
                       std::string(software_version()), plan.start_epoch_ms, nlohmann::json(plan)};
}

SessionWriter::SessionWriter(const std::filesystem::path& path, const SessionHeader& header,
                             Durability durability)
    : path_(path), durability_(durability) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(Errc::StorageFailure, "cannot create " + path.string() + ": " + errno_text());
  }
  write_line(nlohmann::json(header));
}

SessionWriter::~SessionWriter() {
  if (fd_ >= 0) ::close(fd_);
}

SessionWriter::SessionWriter(SessionWriter&& other) noexcept
    : path_(std::move(other.path_)), fd_(other.fd_), durability_(other.durability_) {
  other.fd_ = -1;
}

SessionWriter& SessionWriter::operator=(SessionWriter&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(other.path_);
    fd_ = other.fd_;
    durability_ = other.durability_;
    other.fd_ = -1;
  }
  return *this;
}

void SessionWriter::append_record(const TrialRecord& record) {
  record.validate();
  nlohmann::json line = record;
  line["kind"] = "trial";
  write_line(line);
}

void SessionWriter::append_questionnaire(const std::string& id, const nlohmann::json& answers) {
  write_line({{"kind", "questionnaire"}, {"id", id}, {"answers", answers}});
}

void SessionWriter::write_line(const nlohmann::json& line) {
  if (fd_ < 0) throw Error(Errc::StorageFailure, "writer is closed");
  const std::string text = line.dump() + "\n";
  std::size_t written = 0;
  while (written < text.size()) {
    const ssize_t n = ::write(fd_, text.data() + written, text.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::StorageFailure, "write " + path_.string() + ": " + errno_text());
    }
    written += static_cast<std::size_t>(n);
  }
  if (durability_ == Durability::Sync && ::fsync(fd_) != 0) {
    throw Error(Errc::StorageFailure, "fsync " + path_.string() + ": " + errno_text());
  }
}

SessionFile read_session_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, path.string() + ": cannot open");
  SessionFile file;
  bool have_header = false;
  std::string text;
  int line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (text.empty()) continue;
    try {
      const auto line = nlohmann::json::parse(text);
      const std::string kind = line.at("kind").get<std::string>();
      if (kind == "header") {
        if (have_header) throw Error(Errc::ParseError, "duplicate header");
        file.header = line.get<SessionHeader>();
        have_header = true;
      } else if (!have_header) {
        throw Error(Errc::ParseError, "line before header");
      } else if (kind == "trial") {
        auto record = line.get<TrialRecord>();
        record.validate();
        if (record.participant_id != file.header.participant_id) {
          throw Error(Errc::ParseError, "record participant differs from header");
        }
        file.records.push_back(std::move(record));
      } else if (kind == "questionnaire") {
        file.questionnaires[line.at("id").get<std::string>()] = line.at("answers");
      } else {
        throw Error(Errc::ParseError, "unknown line kind '" + kind + "'");
      }
    } catch (const Error& e) {
      throw Error(Errc::ParseError, where + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, where + ": " + e.what());
    }
  }
  if (!have_header) throw Error(Errc::ParseError, path.string() + ": missing header");
  return file;
}

ObservationTable ObservationTable::only(PhaseKind phase) const {
  ObservationTable out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out.rows),
               [phase](const Observation& o) { return o.phase == phase; });
  return out;
}

Dataset load_dataset(std::span<const std::filesystem::path> paths) {
  if (paths.empty()) throw Error(Errc::EmptyDataset, "no session files given");
  Dataset data;
  std::set<std::string> seen;
  for (const auto& path : paths) {
    SessionFile file = read_session_file(path);
    const std::string& id = file.header.participant_id;
    if (!seen.insert(id).second) {
      throw Error(Errc::DuplicateParticipant, id + " appears in more than one file (" +
                                                  path.string() + ")");
    }
    data.participants.push_back({id, file.header.condition, path});
    const int haptic = file.header.condition == Condition::AudioHaptic ? 1 : 0;
    std::map<PhaseKind, int> counters;
    SpatialRatings spatial{id, {}};
    for (const auto& r : file.records) {
      if (r.phase == PhaseKind::SpatialTest) {
        spatial.by_module[r.interval_degree] = *r.spatial_response;
        continue;
      }
      Observation o;
      o.participant_id = id;
      o.haptic = haptic;
      o.trial_number = ++counters[r.phase];
      o.correct = r.correct.value_or(false) ? 1 : 0;
      o.response_time_s = r.response_time_ms / 1000.0;
      o.phase = r.phase;
      o.interval_degree = r.interval_degree;
      o.response_degree = r.response_degree.value_or(0);
      data.observations.rows.push_back(std::move(o));
    }
    if (!spatial.by_module.empty()) data.spatial.push_back(std::move(spatial));
    for (const auto& [qid, answers] : file.questionnaires) {
      data.questionnaires.push_back({id, file.header.condition, qid, answers});
    }
  }
  return data;
}

std::vector<std::filesystem::path> session_files(const std::filesystem::path& study_dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(study_dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == kSessionFileExtension) {
      files.push_back(entry.path());
    }
  }
  if (ec) throw Error(Errc::ParseError, study_dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  return files;
}

Dataset load_study(const std::filesystem::path& study_dir) {
  const auto files = session_files(study_dir);
  return load_dataset(files);
}

void write_csv(const ObservationTable& table, std::ostream& out) {
  out << kCsvHeader << '\n';
  std::ostringstream num;
  for (const auto& o : table.rows) {
    num.str("");
    num << std::setprecision(17) << o.response_time_s;
    out << o.participant_id << ',' << o.haptic << ',' << o.trial_number << ',' << o.correct << ','
        << num.str() << ',' << to_string(o.phase) << ',' << o.interval_degree << ','
        << o.response_degree << '\n';
  }
}

ObservationTable read_csv(std::istream& in) {
  ObservationTable table;
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(Errc::ParseError, "csv:1: unexpected header");
  }
  line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = "csv:" + std::to_string(line_no);
    if (f.size() != 8) throw Error(Errc::ParseError, where + ": expected 8 fields");
    try {
      Observation o;
      o.participant_id = f[0];
      o.haptic = std::stoi(f[1]);
      o.trial_number = std::stoi(f[2]);
      o.correct = std::stoi(f[3]);
      o.response_time_s = std::stod(f[4]);
      o.phase = phase_kind_from_string(f[5]);
      o.interval_degree = std::stoi(f[6]);
      o.response_degree = std::stoi(f[7]);
      if ((o.haptic != 0 && o.haptic != 1) || (o.correct != 0 && o.correct != 1)) {
        throw Error(Errc::ParseError, "haptic and correct must be 0/1");
      }
      table.rows.push_back(std::move(o));
    } catch (const Error& e) {
      throw Error(Errc::ParseError, where + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::ParseError, where + ": " + e.what());
    }
  }
  return table;
}

}  // namespace purrfect
