#include "ids/study_service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "ids/manipulations.hpp"

namespace ids::study {

namespace {

std::uint64_t entropy64() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
}

}  // namespace

const char* to_string(Side s) { return s == Side::kLeft ? "left" : "right"; }

const char* to_string(Answer a) {
  switch (a) {
    case Answer::kLeft: return "left";
    case Answer::kRight: return "right";
    case Answer::kDontKnow: return "dont_know";
    case Answer::kOvertime: return "overtime";
  }
  return "dont_know";
}

const char* to_string(Mode m) { return m == Mode::kRealVsFake ? "real-vs-fake" : "a-vs-b"; }

Side side_from_string(const std::string& s) {
  if (s == "left") return Side::kLeft;
  if (s == "right") return Side::kRight;
  throw StudyError(StudyError::Kind::kBadRequest, "unknown side '" + s + "'");
}

Answer answer_from_string(const std::string& s) {
  if (s == "left") return Answer::kLeft;
  if (s == "right") return Answer::kRight;
  if (s == "dont_know") return Answer::kDontKnow;
  if (s == "overtime") return Answer::kOvertime;
  throw StudyError(StudyError::Kind::kBadRequest, "unknown answer '" + s + "'");
}

Mode mode_from_string(const std::string& s) {
  if (s == "real-vs-fake") return Mode::kRealVsFake;
  if (s == "a-vs-b") return Mode::kAVsB;
  throw ConfigError("unknown study mode '" + s + "'");
}

void StudyManifest::validate() const {
  if (entries.empty()) throw ConfigError("study manifest has no entries");
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.pair_id.empty()) throw ConfigError("manifest entry with empty pair_id");
    if (!ids.insert(e.pair_id).second) throw ConfigError("duplicate pair_id '" + e.pair_id + "'");
    RatioBucket b;
    try {
      b = parse_bucket_label(e.bucket);
    } catch (const DomainError&) {
      throw ConfigError("pair '" + e.pair_id + "' has invalid bucket '" + e.bucket + "'");
    }
    bool standard = false;
    for (const auto& s : standard_buckets()) standard = standard || (s.lo == b.lo && s.hi == b.hi);
    if (!standard) throw ConfigError("pair '" + e.pair_id + "' bucket is not one of the five standard buckets");
    if (!std::filesystem::exists(e.real_path))
      throw ConfigError("pair '" + e.pair_id + "' real image missing: " + e.real_path.string());
    if (!std::filesystem::exists(e.fake_path))
      throw ConfigError("pair '" + e.pair_id + "' fake image missing: " + e.fake_path.string());
  }
}

const ManifestEntry* StudyManifest::find(const std::string& pair_id) const {
  for (const auto& e : entries)
    if (e.pair_id == pair_id) return &e;
  return nullptr;
}

StudyManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open study manifest: " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed study manifest " + path.string() + ": " + e.what());
  }
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  StudyManifest m;
  m.mode = mode_from_string(j.value("mode", std::string("real-vs-fake")));
  for (const auto& e : j.at("entries")) {
    m.entries.push_back({e.at("pair_id").get<std::string>(), e.value("method", std::string()),
                         e.at("bucket").get<std::string>(), resolve(e.at("real").get<std::string>()),
                         resolve(e.at("fake").get<std::string>())});
  }
  m.validate();
  return m;
}

nlohmann::json to_json(const StudyManifest& manifest) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries)
    entries.push_back({{"pair_id", e.pair_id}, {"method", e.method}, {"bucket", e.bucket},
                       {"real", e.real_path.string()}, {"fake", e.fake_path.string()}});
  return {{"mode", to_string(manifest.mode)}, {"entries", entries}};
}

nlohmann::json to_json(const TrialRecord& r) {
  return {{"event", "trial"},           {"session_id", r.session_id},
          {"trial_id", r.trial_id},     {"pair_id", r.pair_id},
          {"method", r.method},         {"bucket", r.bucket},
          {"fake_side", to_string(r.fake_side)},
          {"issued_at", r.issued_at},   {"answered_at", r.answered_at},
          {"answer", to_string(r.answer)}, {"score", r.score}};
}

TrialRecord trial_record_from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.session_id = j.at("session_id").get<std::string>();
  r.trial_id = j.at("trial_id").get<std::string>();
  r.pair_id = j.at("pair_id").get<std::string>();
  r.method = j.value("method", std::string());
  r.bucket = j.value("bucket", std::string());
  r.fake_side = side_from_string(j.at("fake_side").get<std::string>());
  r.issued_at = j.at("issued_at").get<std::int64_t>();
  r.answered_at = j.at("answered_at").get<std::int64_t>();
  r.answer = answer_from_string(j.at("answer").get<std::string>());
  r.score = j.at("score").get<double>();
  return r;
}

Answer effective_answer(Answer submitted, std::int64_t elapsed_ms) {
  return elapsed_ms > kDeadlineMs ? Answer::kOvertime : submitted;
}

double score_answer(Answer answer, Side fake_side, std::int64_t elapsed_ms) {
  switch (effective_answer(answer, elapsed_ms)) {
    case Answer::kDontKnow:
    case Answer::kOvertime:
      return 0.5;
    case Answer::kLeft:
      return fake_side == Side::kLeft ? 0.0 : 1.0;
    case Answer::kRight:
      return fake_side == Side::kRight ? 0.0 : 1.0;
  }
  return 0.5;
}

nlohmann::json AggregateTable::to_json() const {
  nlohmann::json cells_json = nlohmann::json::array();
  nlohmann::json table = nlohmann::json::object();
  for (const auto& c : cells) {
    cells_json.push_back({{"method", c.method}, {"bucket", c.bucket}, {"count", c.count},
                          {"preference_rate", c.preference_rate}});
    table[c.bucket][c.method] = c.preference_rate;
  }
  return {{"cells", cells_json},
          {"by_bucket", table},
          {"counts", {{"total", total}, {"answered", answered}, {"dont_know", dont_know},
                      {"overtime", overtime}}}};
}

bool AggregateTable::operator==(const AggregateTable& o) const {
  if (total != o.total || answered != o.answered || dont_know != o.dont_know || overtime != o.overtime ||
      cells.size() != o.cells.size())
    return false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& a = cells[i];
    const auto& b = o.cells[i];
    if (a.method != b.method || a.bucket != b.bucket || a.count != b.count ||
        a.preference_rate != b.preference_rate)
      return false;
  }
  return true;
}

AggregateTable aggregate(const std::vector<TrialRecord>& records) {
  // Scores take only the values 0, 0.5, 1, so per-cell sums are exact and
  // independent of record order.
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> sums;
  AggregateTable t;
  for (const auto& r : records) {
    auto& cell = sums[{r.method, r.bucket}];
    cell.first += r.score;
    cell.second += 1;
    ++t.total;
    switch (r.answer) {
      case Answer::kLeft:
      case Answer::kRight: ++t.answered; break;
      case Answer::kDontKnow: ++t.dont_know; break;
      case Answer::kOvertime: ++t.overtime; break;
    }
  }
  for (const auto& [key, v] : sums)
    t.cells.push_back({key.first, key.second, v.second, v.first / static_cast<double>(v.second)});
  return t;
}

std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

StudyService::StudyService(std::optional<StudyManifest> manifest, std::filesystem::path log_path,
                           ServiceOptions options)
    : manifest_(std::move(manifest)),
      log_path_(std::move(log_path)),
      options_(std::move(options)),
      token_rng_(entropy64(), entropy64()) {
  if (!options_.clock) options_.clock = system_clock_ms;
  if (manifest_) manifest_->validate();
  if (!log_path_.empty() && std::filesystem::exists(log_path_)) replay();
}

bool StudyService::ready() const {
  std::lock_guard lock(mutex_);
  return manifest_.has_value();
}

Mode StudyService::mode() const {
  std::lock_guard lock(mutex_);
  return manifest_ ? manifest_->mode : Mode::kRealVsFake;
}

void StudyService::require_ready() const {
  if (!manifest_) throw StudyError(StudyError::Kind::kNotReady, "study service has no manifest loaded");
}

StudyService::Session& StudyService::require_session(const std::string& session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end())
    throw StudyError(StudyError::Kind::kUnknownSession, "unknown session '" + session_id + "'");
  return it->second;
}

std::string StudyService::random_token() {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(token_rng_()),
                static_cast<unsigned long long>(token_rng_()));
  return buf;
}

std::unique_ptr<Pcg64> StudyService::session_rng(const std::string& session_id) {
  if (options_.test_seed) return std::make_unique<Pcg64>(split_seed(*options_.test_seed, session_id));
  return std::make_unique<Pcg64>(entropy64());
}

void StudyService::append_log(const nlohmann::json& line) {
  if (log_path_.empty()) return;
  std::ofstream os(log_path_, std::ios::app);
  if (!os) throw IoError("cannot append to study log: " + log_path_.string());
  os << line.dump() << '\n';
  os.flush();
  if (!os) throw IoError("write to study log failed: " + log_path_.string());
}

SessionInfo StudyService::info(const std::string& id, const Session& s) const {
  return {id, s.participant, s.served_pairs, s.completed, s.pending.has_value()};
}

SessionInfo StudyService::create_session(const std::string& participant) {
  std::lock_guard lock(mutex_);
  require_ready();
  std::string id = random_token();
  while (sessions_.count(id)) id = random_token();
  Session s;
  s.participant = participant.empty() ? "anonymous" : participant;
  s.rng = session_rng(id);
  append_log({{"event", "session"}, {"session_id", id}, {"participant", s.participant},
              {"created_at", options_.clock()}});
  auto& stored = sessions_[id] = std::move(s);
  return info(id, stored);
}

std::variant<IssuedTrial, StudyComplete> StudyService::next_trial(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  require_ready();
  Session& s = require_session(session_id);
  if (s.pending)
    throw StudyError(StudyError::Kind::kPendingTrial,
                     "session has an unanswered trial '" + s.pending->trial_id + "'");

  std::set<std::string> served(s.served_pairs.begin(), s.served_pairs.end());
  std::set<std::string> reals(s.served_reals.begin(), s.served_reals.end());
  std::vector<const ManifestEntry*> candidates;
  for (const auto& e : manifest_->entries)
    if (!served.count(e.pair_id) && !reals.count(e.real_path.lexically_normal().string()))
      candidates.push_back(&e);
  if (candidates.empty()) return StudyComplete{};

  const auto pick = static_cast<std::size_t>(
      s.rng->uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1));
  const ManifestEntry& entry = *candidates[pick];
  const Side fake_side = s.rng->uniform_int(0, 1) == 0 ? Side::kLeft : Side::kRight;

  Pending p{random_token(), entry.pair_id, fake_side, options_.clock()};
  append_log({{"event", "issue"}, {"session_id", session_id}, {"trial_id", p.trial_id},
              {"pair_id", p.pair_id}, {"fake_side", to_string(fake_side)}, {"issued_at", p.issued_at}});
  s.pending = p;
  s.served_pairs.push_back(entry.pair_id);
  s.served_reals.push_back(entry.real_path.lexically_normal().string());
  issued_[p.trial_id] = p;
  trial_session_[p.trial_id] = session_id;

  IssuedTrial t;
  t.trial_id = p.trial_id;
  t.pair_id = p.pair_id;
  t.left_url = "/images/" + p.pair_id + "/left?trial=" + p.trial_id;
  t.right_url = "/images/" + p.pair_id + "/right?trial=" + p.trial_id;
  return t;
}

TrialRecord StudyService::submit_answer(const std::string& session_id, const std::string& trial_id,
                                        Answer answer) {
  std::lock_guard lock(mutex_);
  require_ready();
  Session& s = require_session(session_id);
  auto owner = trial_session_.find(trial_id);
  if (owner == trial_session_.end() || owner->second != session_id)
    throw StudyError(StudyError::Kind::kUnknownTrial, "unknown trial '" + trial_id + "'");
  if (!s.pending || s.pending->trial_id != trial_id)
    throw StudyError(StudyError::Kind::kDuplicate, "trial '" + trial_id + "' was already answered");
  if (answer == Answer::kOvertime)
    throw StudyError(StudyError::Kind::kBadRequest, "overtime is assigned by the server only");

  const Pending& p = *s.pending;
  const ManifestEntry* entry = manifest_->find(p.pair_id);
  TrialRecord r;
  r.session_id = session_id;
  r.trial_id = trial_id;
  r.pair_id = p.pair_id;
  r.method = entry ? entry->method : std::string();
  r.bucket = entry ? entry->bucket : std::string();
  r.fake_side = p.fake_side;
  r.issued_at = p.issued_at;
  r.answered_at = std::max(options_.clock(), p.issued_at);
  const std::int64_t elapsed = r.answered_at - r.issued_at;
  r.answer = effective_answer(answer, elapsed);
  r.score = score_answer(answer, p.fake_side, elapsed);

  append_log(to_json(r));
  records_.push_back(r);
  s.pending.reset();
  ++s.completed;
  return r;
}

AggregateTable StudyService::aggregate_results() const {
  std::lock_guard lock(mutex_);
  return aggregate(records_);
}

std::optional<SessionInfo> StudyService::session(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return info(it->first, it->second);
}

std::vector<TrialRecord> StudyService::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::filesystem::path StudyService::image_for(const std::string& trial_id, const std::string& pair_id,
                                              Side side) const {
  std::lock_guard lock(mutex_);
  require_ready();
  auto it = issued_.find(trial_id);
  if (it == issued_.end() || it->second.pair_id != pair_id)
    throw StudyError(StudyError::Kind::kUnknownTrial, "no trial '" + trial_id + "' for pair '" + pair_id + "'");
  const ManifestEntry* entry = manifest_->find(pair_id);
  if (!entry) throw StudyError(StudyError::Kind::kUnknownTrial, "pair '" + pair_id + "' not in manifest");
  return side == it->second.fake_side ? entry->fake_path : entry->real_path;
}

std::vector<TrialRecord> StudyService::replay_records(const std::filesystem::path& log_path) {
  std::ifstream is(log_path);
  if (!is) throw IoError("cannot open study log: " + log_path.string());
  std::vector<TrialRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    if (j.value("event", std::string()) == "trial") out.push_back(trial_record_from_json(j));
  }
  return out;
}

void StudyService::replay() {
  std::ifstream is(log_path_);
  if (!is) throw IoError("cannot open study log: " + log_path_.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(ParseError::Kind::kCorrupt,
                       log_path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::string event = j.value("event", std::string());
    const std::string sid = j.value("session_id", std::string());
    if (event == "session") {
      Session s;
      s.participant = j.value("participant", std::string("anonymous"));
      s.rng = session_rng(sid);
      sessions_[sid] = std::move(s);
    } else if (event == "issue") {
      Session& s = require_session(sid);
      Pending p{j.at("trial_id").get<std::string>(), j.at("pair_id").get<std::string>(),
                side_from_string(j.at("fake_side").get<std::string>()), j.at("issued_at").get<std::int64_t>()};
      s.pending = p;
      s.served_pairs.push_back(p.pair_id);
      if (manifest_)
        if (const ManifestEntry* e = manifest_->find(p.pair_id))
          s.served_reals.push_back(e->real_path.lexically_normal().string());
      issued_[p.trial_id] = p;
      trial_session_[p.trial_id] = sid;
    } else if (event == "trial") {
      TrialRecord r = trial_record_from_json(j);
      Session& s = require_session(r.session_id);
      if (s.pending && s.pending->trial_id == r.trial_id) s.pending.reset();
      ++s.completed;
      records_.push_back(std::move(r));
    }
  }
}

}  // namespace ids::study
