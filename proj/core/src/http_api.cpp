#include "crowdroute/http_api.hpp"

#include <regex>

#include "codec.hpp"
#include "crowdroute/error.hpp"
#include "httplib.h"

namespace crowdroute {

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
    case ErrorCode::kUnknownWorker:
    case ErrorCode::kUnknownLandmark:
      return 404;
    case ErrorCode::kNotAssigned:
      return 403;
    case ErrorCode::kTaskClosed:
    case ErrorCode::kWrongQuestion:
      return 409;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse:
    case ErrorCode::kEmptyCalibration:
    case ErrorCode::kInvalidTrace:
      return 400;
    case ErrorCode::kStorage:
      return 500;
    default:
      return 422;
  }
}

ApiResponse ok(const json& body) { return {200, body.dump()}; }

ApiResponse failure(int status, std::string_view code, const std::string& message) {
  return {status, json{{"error", code}, {"message", message}}.dump()};
}

json prompt_json(const QuestionPrompt& p) {
  json j{{"task", p.task_id}, {"finished", p.finished}, {"question_index", p.question_index},
         {"departure", p.departure}};
  if (p.finished) {
    j["leaf"] = *p.leaf;
  } else {
    j["landmark"] = p.landmark;
    j["name"] = p.landmark_name;
    j["location"] = p.location;
  }
  return j;
}

json step_json(const NextStep& s) {
  json j{{"resolved", s.resolved}, {"depth", s.depth}};
  if (s.resolved) {
    j["route"] = s.route;
  } else {
    j["landmark"] = s.landmark;
  }
  return j;
}

std::uint64_t id_of(const std::string& s) { return std::stoull(s); }

}  // namespace

ApiResponse ApiHandler::handle(const ApiRequest& req) const {
  static const std::regex request_re(R"(^/requests/(\d+)$)");
  static const std::regex assignments_re(R"(^/workers/([^/]+)/assignments$)");
  static const std::regex next_re(R"(^/workers/([^/]+)/tasks/(\d+)/next$)");
  static const std::regex answer_re(R"(^/workers/([^/]+)/tasks/(\d+)/answers$)");
  static const std::regex rewards_re(R"(^/workers/([^/]+)/rewards$)");
  static const std::regex task_re(R"(^/admin/tasks/(\d+)$)");

  const bool get = req.method == "GET";
  const bool post = req.method == "POST";
  std::smatch m;
  try {
    const auto body = [&] { return req.body.empty() ? json::object() : json::parse(req.body); };

    if (post && req.path == "/requests") {
      const auto j = body();
      const auto request = j.at("request").get<RouteRequest>();
      const auto candidates = j.value("candidates", json::array()).get<std::vector<CandidateInput>>();
      return ok(service_.submit(request, candidates));
    }
    if (get && std::regex_match(req.path, m, request_re)) return ok(service_.request(id_of(m[1])));
    if (get && std::regex_match(req.path, m, assignments_re)) {
      return ok(json{{"worker", m[1].str()}, {"tasks", service_.open_assignments(m[1])}});
    }
    if (get && std::regex_match(req.path, m, next_re)) {
      return ok(prompt_json(service_.next_question(id_of(m[2]), m[1])));
    }
    if (post && std::regex_match(req.path, m, answer_re)) {
      const auto j = body();
      const auto out = service_.record_answer(id_of(m[2]), m[1], j.at("landmark").get<std::string>(),
                                              j.at("yes").get<bool>());
      return ok(json{{"step", step_json(out.step)}, {"duplicate", out.duplicate},
                     {"task_resolved", out.task_resolved}, {"balance", service_.reward_balance(m[1])}});
    }
    if (get && std::regex_match(req.path, m, rewards_re)) {
      return ok(json{{"worker", m[1].str()}, {"balance", service_.reward_balance(m[1])}});
    }
    if (post && req.path == "/admin/ingest") {
      const auto j = body();
      json out = json::object();
      if (j.contains("landmarks")) {
        service_.ingest_landmarks(j.at("landmarks").get<std::vector<Landmark>>());
        out["landmarks"] = j.at("landmarks").size();
      }
      if (j.contains("workers")) {
        service_.ingest_workers(j.at("workers").get<std::vector<WorkerProfile>>());
        out["workers"] = j.at("workers").size();
      }
      if (j.contains("checkins")) {
        std::vector<VisitEvent> events;
        for (const auto& e : j.at("checkins")) {
          events.push_back({e.at("traveller").get<std::string>(), e.at("landmark").get<std::string>(),
                            e.value("timestamp", std::int64_t{0}), e.value("weight", 1.0)});
        }
        const auto result = service_.ingest_checkins(events);
        out["checkins"] = events.size();
        out["hits_iterations"] = result.iterations;
        out["hits_converged"] = result.converged;
      }
      return ok(out);
    }
    if (post && req.path == "/admin/retrain") {
      const auto f = service_.retrain();
      return ok(json{{"iterations", f.iterations}, {"objective", f.objective}, {"gradient_norm", f.gradient_norm},
                     {"effective_rank", f.effective_rank}});
    }
    if (post && req.path == "/admin/tick") {
      service_.tick();
      return ok(json{{"now", service_.now()}});
    }
    if (get && std::regex_match(req.path, m, task_re)) return ok(service_.task(id_of(m[1])));
    if (get && req.path == "/admin/truths") return ok(service_.truths());
    return failure(404, "route", "no route for " + req.method + " " + req.path);
  } catch (const Error& e) {
    return failure(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    return failure(400, "bad_request", e.what());
  } catch (const std::out_of_range& e) {
    return failure(404, "not_found", e.what());
  }
}

struct ApiServer::Impl {
  explicit Impl(TaskService& service) : handler(service) {}
  ApiHandler handler;
  httplib::Server server;
};

ApiServer::ApiServer(TaskService& service) : impl_(std::make_unique<Impl>(service)) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = impl_->handler.handle({req.method, req.path, req.body});
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  impl_->server.Get(R"(/.*)", route);
  impl_->server.Post(R"(/.*)", route);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kStorage, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error(ErrorCode::kStorage, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::serve() { impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace crowdroute
