#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "ids/study_service.hpp"

namespace httplib {
class Server;
}

namespace ids::study {

/// HTTP+JSON front of a StudyService:
///   POST /sessions                  {participant}        -> {session_id}
///   GET  /sessions/{id}/next                             -> {trial_id, left_url, right_url, deadline_ms}
///                                                           or {status: "complete"}
///   POST /sessions/{id}/answers     {trial_id, answer}   -> {accepted, trial_id}
///   GET  /results                                        -> aggregate table
///   GET  /images/{pair_id}/{left|right}?trial=ID         -> PNG bytes
class StudyHttpServer {
 public:
  explicit StudyHttpServer(StudyService& service, std::filesystem::path static_dir = {});
  ~StudyHttpServer();

  StudyHttpServer(const StudyHttpServer&) = delete;
  StudyHttpServer& operator=(const StudyHttpServer&) = delete;

  /// Binds to `port` (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void listen();
  void stop();

 private:
  void install_routes();

  StudyService& service_;
  std::filesystem::path static_dir_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace ids::study
