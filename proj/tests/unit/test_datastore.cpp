#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "purrfect/datastore.hpp"
#include "purrfect/error.hpp"
#include "purrfect/simulate.hpp"
#include "support/tempdir.hpp"

using namespace purrfect;
using testsupport::TempDir;

namespace {

TrialRecord record(const std::string& id, PhaseKind phase, int index, int truth, int answer) {
  TrialRecord r;
  r.participant_id = id;
  r.phase = phase;
  r.trial_index = index;
  r.interval_degree = truth;
  r.response_degree = answer;
  r.correct = truth == answer;
  r.response_time_ms = 1500 + index;
  r.stimulus_onset_ms = 1'700'000'000'000 + index * 4000;
  return r;
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

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST(Datastore, WriteReadRoundTrip) {
  TempDir dir;
  const auto plan = SessionPlan::standard("P01", Condition::AudioOnly, 4);
  std::vector<TrialRecord> written;
  {
    SessionWriter w(dir / "P01.jsonl", make_header(plan), Durability::Flush);
    for (int i = 0; i < 5; ++i) {
      written.push_back(record("P01", PhaseKind::PreTest, i, 1 + i, 3));
      w.append_record(written.back());
    }
    w.append_questionnaire("Q2", {{"fun", 6}});
  }
  const auto file = read_session_file(dir / "P01.jsonl");
  EXPECT_EQ(file.header.participant_id, "P01");
  EXPECT_EQ(file.header.seed, 4u);
  EXPECT_FALSE(file.header.software_version.empty());
  EXPECT_EQ(file.records, written);
  EXPECT_EQ(file.questionnaires.at("Q2")["fun"], 6);
}

TEST(Datastore, WriterRefusesExistingFileAndInvalidRecords) {
  TempDir dir;
  const auto header = make_header(SessionPlan::standard("P01", Condition::AudioOnly, 1));
  SessionWriter w(dir / "P01.jsonl", header);
  EXPECT_EQ(code_of([&] { SessionWriter again(dir / "P01.jsonl", header); }), Errc::StorageFailure);
  auto bad = record("P01", PhaseKind::PreTest, 0, 2, 2);
  bad.correct = false;
  EXPECT_EQ(code_of([&] { w.append_record(bad); }), Errc::ValidationError);
  EXPECT_EQ(code_of([&] { SessionWriter nowhere(dir / "missing" / "x.jsonl", header); }),
            Errc::StorageFailure);
}

TEST(Datastore, ParseErrorsCarryFileAndLine) {
  TempDir dir;
  const auto path = dir / "P01.jsonl";
  {
    SessionWriter w(path, make_header(SessionPlan::standard("P01", Condition::AudioOnly, 1)));
    w.append_record(record("P01", PhaseKind::PreTest, 0, 2, 2));
  }
  std::ofstream(path, std::ios::app) << "{\"kind\": \"trial\", \"oops\n";
  try {
    read_session_file(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_NE(std::string(e.what()).find("P01.jsonl:3"), std::string::npos) << e.what();
  }
  write_text(dir / "nohead.jsonl", "");
  EXPECT_EQ(code_of([&] { read_session_file(dir / "nohead.jsonl"); }), Errc::ParseError);
  write_text(dir / "orphan.jsonl", R"({"kind":"questionnaire","id":"Q1","answers":{}})" "\n");
  EXPECT_EQ(code_of([&] { read_session_file(dir / "orphan.jsonl"); }), Errc::ParseError);
}

TEST(Datastore, DatasetNumbersTrialsAndRejectsDuplicates) {
  TempDir dir;
  auto plan = SessionPlan::standard("P07", Condition::AudioHaptic, 1);
  {
    SessionWriter w(dir / "a.jsonl", make_header(plan), Durability::Flush);
    w.append_record(record("P07", PhaseKind::PreTest, 0, 1, 1));
    w.append_record(record("P07", PhaseKind::Training, 0, 1, 2));
    w.append_record(record("P07", PhaseKind::Training, 1, 1, 1));
    // Second training block continues the trial count.
    w.append_record(record("P07", PhaseKind::Training, 0, 4, 4));
    auto spatial = record("P07", PhaseKind::SpatialTest, 0, 5, 1);
    spatial.response_degree.reset();
    spatial.correct.reset();
    spatial.spatial_response = 9.5;
    w.append_record(spatial);
  }
  const auto data = load_study(dir.path());
  ASSERT_EQ(data.participants.size(), 1u);
  const auto training = data.observations.only(PhaseKind::Training);
  ASSERT_EQ(training.size(), 3u);
  EXPECT_EQ(training.rows[2].trial_number, 3);
  EXPECT_EQ(training.rows[0].haptic, 1);
  EXPECT_EQ(data.observations.only(PhaseKind::PreTest).rows[0].trial_number, 1);
  EXPECT_DOUBLE_EQ(data.spatial.at(0).by_module.at(5), 9.5);

  std::filesystem::copy_file(dir / "a.jsonl", dir / "b.jsonl");
  EXPECT_EQ(code_of([&] { load_study(dir.path()); }), Errc::DuplicateParticipant);
  EXPECT_EQ(code_of([] { load_dataset({}); }), Errc::EmptyDataset);
}

TEST(Datastore, CsvRoundTrip) {
  TempDir dir;
  TrialRng rng(3);
  const auto plan = SessionPlan::standard("P02", Condition::AudioHaptic, 3);
  const auto sim = simulate_participant(plan, BehaviorSpec::audio_haptic_default(), rng);
  {
    SessionWriter w(dir / "P02.jsonl", make_header(plan), Durability::Flush);
    for (const auto& r : sim.records) w.append_record(r);
  }
  const auto table = load_study(dir.path()).observations;
  std::stringstream csv;
  write_csv(table, csv);
  const auto back = read_csv(csv);
  ASSERT_EQ(back.size(), table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    EXPECT_EQ(back.rows[i].trial_number, table.rows[i].trial_number);
    EXPECT_EQ(back.rows[i].correct, table.rows[i].correct);
    EXPECT_DOUBLE_EQ(back.rows[i].response_time_s, table.rows[i].response_time_s);
    EXPECT_EQ(back.rows[i].phase, table.rows[i].phase);
  }
  std::stringstream bad("nope\n");
  EXPECT_EQ(code_of([&] { read_csv(bad); }), Errc::ParseError);
}
