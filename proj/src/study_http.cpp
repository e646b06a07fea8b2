#include "ids/study_http.hpp"

#include <fstream>
#include <iterator>

#include <httplib.h>

namespace ids::study {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int status_for(StudyError::Kind kind) {
  switch (kind) {
    case StudyError::Kind::kNotReady: return 503;
    case StudyError::Kind::kUnknownSession:
    case StudyError::Kind::kUnknownTrial: return 404;
    case StudyError::Kind::kDuplicate:
    case StudyError::Kind::kPendingTrial: return 409;
    case StudyError::Kind::kBadRequest: return 400;
  }
  return 400;
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const StudyError& e) {
    send_json(res, status_for(e.kind()), {{"error", e.what()}});
  } catch (const nlohmann::json::exception& e) {
    send_json(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", e.what()}});
  }
}

}  // namespace

StudyHttpServer::StudyHttpServer(StudyService& service, std::filesystem::path static_dir)
    : service_(service), static_dir_(std::move(static_dir)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

StudyHttpServer::~StudyHttpServer() { stop(); }

int StudyHttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void StudyHttpServer::listen() { server_->listen_after_bind(); }

void StudyHttpServer::stop() {
  if (server_) server_->stop();
}

void StudyHttpServer::install_routes() {
  server_->Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::string participant;
      if (!req.body.empty()) participant = nlohmann::json::parse(req.body).value("participant", std::string());
      SessionInfo s = service_.create_session(participant);
      send_json(res, 201, {{"session_id", s.session_id}, {"participant", s.participant}});
    });
  });

  server_->Get(R"(/sessions/([0-9a-f]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto next = service_.next_trial(req.matches[1]);
      if (std::holds_alternative<StudyComplete>(next)) {
        send_json(res, 200, {{"status", "complete"}});
        return;
      }
      const auto& t = std::get<IssuedTrial>(next);
      send_json(res, 200, {{"trial_id", t.trial_id}, {"left_url", t.left_url},
                           {"right_url", t.right_url}, {"deadline_ms", t.deadline_ms}});
    });
  });

  server_->Post(R"(/sessions/([0-9a-f]+)/answers)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = nlohmann::json::parse(req.body);
      // Client timestamps, if any, are ignored; timing is measured server-side.
      TrialRecord r = service_.submit_answer(req.matches[1], body.at("trial_id").get<std::string>(),
                                             answer_from_string(body.at("answer").get<std::string>()));
      send_json(res, 200, {{"accepted", true}, {"trial_id", r.trial_id}});
    });
  });

  server_->Get("/results", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, service_.aggregate_results().to_json()); });
  });

  server_->Get(R"(/images/([^/]+)/(left|right))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("trial"))
        throw StudyError(StudyError::Kind::kBadRequest, "missing trial parameter");
      auto path = service_.image_for(req.get_param_value("trial"), req.matches[1],
                                     side_from_string(req.matches[2]));
      std::ifstream is(path, std::ios::binary);
      if (!is) throw std::runtime_error("cannot read image " + path.string());
      std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
      res.set_header("Cache-Control", "no-store");
      res.set_content(std::move(bytes), "image/png");
    });
  });

  if (!static_dir_.empty()) server_->set_mount_point("/", static_dir_.string());
}

}  // namespace ids::study
