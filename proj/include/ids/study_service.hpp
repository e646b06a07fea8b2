#pragma once

// Backend for the timed real-vs-fake user study: participants see a real image
// and its generated counterpart side by side, have 5 seconds to pick the fake
// (or answer "don't know"), and every round is scored 0 (fake found),
// 1 (real mistaken for fake) or 0.5 (don't know / overtime).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ids/errors.hpp"
#include "ids/rng.hpp"

namespace ids::study {

inline constexpr std::int64_t kDeadlineMs = 5000;

enum class Side { kLeft, kRight };
enum class Answer { kLeft, kRight, kDontKnow, kOvertime };
enum class Mode { kRealVsFake, kAVsB };

const char* to_string(Side s);
const char* to_string(Answer a);
const char* to_string(Mode m);
Side side_from_string(const std::string& s);
Answer answer_from_string(const std::string& s);
Mode mode_from_string(const std::string& s);

struct ManifestEntry {
  std::string pair_id;
  std::string method;
  std::string bucket;
  std::filesystem::path real_path;
  std::filesystem::path fake_path;
};

/// Pairs shown in the study. In A-vs-B mode `real_path` holds method A's
/// output and `fake_path` method B's; scoring is unchanged.
struct StudyManifest {
  Mode mode = Mode::kRealVsFake;
  std::vector<ManifestEntry> entries;

  /// Unique pair ids, resolvable paths, buckets from the standard five.
  void validate() const;
  const ManifestEntry* find(const std::string& pair_id) const;
};

/// Relative image paths are resolved against the manifest's directory.
StudyManifest load_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const StudyManifest& manifest);

struct TrialRecord {
  std::string session_id;
  std::string trial_id;
  std::string pair_id;
  std::string method;
  std::string bucket;
  /// Side on which the fake (method B in A-vs-B mode) was shown.
  Side fake_side = Side::kLeft;
  std::int64_t issued_at = 0;
  std::int64_t answered_at = 0;
  Answer answer = Answer::kDontKnow;
  double score = 0.5;
};

nlohmann::json to_json(const TrialRecord& r);
TrialRecord trial_record_from_json(const nlohmann::json& j);

/// 0 if `answer` names the fake side, 1 if it names the other side, 0.5 for
/// don't-know, and 0.5 whenever elapsed exceeds the 5000 ms deadline.
Answer effective_answer(Answer submitted, std::int64_t elapsed_ms);
double score_answer(Answer answer, Side fake_side, std::int64_t elapsed_ms);

/// A trial as shown to the client; carries no hint of the fake side.
struct IssuedTrial {
  std::string trial_id;
  std::string pair_id;
  std::string left_url;
  std::string right_url;
  std::int64_t deadline_ms = kDeadlineMs;
};

struct StudyComplete {};

struct SessionInfo {
  std::string session_id;
  std::string participant;
  std::vector<std::string> served_pairs;
  std::size_t completed = 0;
  bool has_pending = false;
};

struct AggregateCell {
  std::string method;
  std::string bucket;
  std::size_t count = 0;
  double preference_rate = 0.0;
};

struct AggregateTable {
  std::vector<AggregateCell> cells;
  std::size_t total = 0;
  std::size_t answered = 0;
  std::size_t dont_know = 0;
  std::size_t overtime = 0;

  nlohmann::json to_json() const;
  bool operator==(const AggregateTable& other) const;
};

/// Mean score per (method, bucket); empty cells are omitted.
AggregateTable aggregate(const std::vector<TrialRecord>& records);

/// Rejections that leave state untouched.
class StudyError : public Error {
 public:
  enum class Kind { kNotReady, kUnknownSession, kUnknownTrial, kDuplicate, kPendingTrial, kBadRequest };
  StudyError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }

 private:
  Kind kind_;
};

using Clock = std::function<std::int64_t()>;
/// Wall-clock milliseconds since the Unix epoch.
std::int64_t system_clock_ms();

struct ServiceOptions {
  /// When set, trial selection and side assignment are seeded per session
  /// (split(test_seed, session_id)); otherwise they draw from entropy.
  std::optional<std::uint64_t> test_seed;
  Clock clock = system_clock_ms;
};

/// Session bookkeeping, trial issue/answer, and the append-only JSONL log.
/// Thread-safe; all operations are serialized on one mutex.
class StudyService {
 public:
  /// Replays `log_path` if it exists, so sessions survive restarts.
  StudyService(std::optional<StudyManifest> manifest, std::filesystem::path log_path,
               ServiceOptions options = {});

  bool ready() const;
  Mode mode() const;

  SessionInfo create_session(const std::string& participant);
  std::variant<IssuedTrial, StudyComplete> next_trial(const std::string& session_id);
  TrialRecord submit_answer(const std::string& session_id, const std::string& trial_id,
                            Answer answer);
  AggregateTable aggregate_results() const;

  std::optional<SessionInfo> session(const std::string& session_id) const;
  std::vector<TrialRecord> records() const;

  /// Image for one side of an issued trial; throws StudyError if unknown.
  std::filesystem::path image_for(const std::string& trial_id, const std::string& pair_id,
                                  Side side) const;

  /// Rebuilds records from a log file without touching any service state.
  static std::vector<TrialRecord> replay_records(const std::filesystem::path& log_path);

 private:
  struct Pending {
    std::string trial_id;
    std::string pair_id;
    Side fake_side;
    std::int64_t issued_at;
  };
  struct Session {
    std::string participant;
    std::vector<std::string> served_pairs;
    std::vector<std::string> served_reals;
    std::size_t completed = 0;
    std::optional<Pending> pending;
    std::unique_ptr<Pcg64> rng;
  };

  void require_ready() const;
  Session& require_session(const std::string& session_id);
  void append_log(const nlohmann::json& line);
  void replay();
  std::unique_ptr<Pcg64> session_rng(const std::string& session_id);
  std::string random_token();
  SessionInfo info(const std::string& id, const Session& s) const;

  mutable std::mutex mutex_;
  std::optional<StudyManifest> manifest_;
  std::filesystem::path log_path_;
  ServiceOptions options_;
  std::map<std::string, Session> sessions_;
  /// Every issued trial, answered or not, for image lookup.
  std::map<std::string, Pending> issued_;
  std::map<std::string, std::string> trial_session_;
  std::vector<TrialRecord> records_;
  Pcg64 token_rng_;
};

}  // namespace ids::study
