#pragma once

#include <memory>
#include <string>

#include "crowdroute/task_service.hpp"

namespace crowdroute {

struct ApiRequest {
  std::string method;  // "GET" or "POST"
  std::string path;
  std::string body;  // JSON
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON; errors are {"error": code, "message": text}
};

// Transport-independent routing of the JSON API onto a TaskService.
//
//   POST /requests                              submit {request, candidates}
//   GET  /requests/{id}
//   GET  /workers/{w}/assignments
//   GET  /workers/{w}/tasks/{t}/next
//   POST /workers/{w}/tasks/{t}/answers         {landmark, yes}
//   GET  /workers/{w}/rewards
//   POST /admin/ingest                          {landmarks?, workers?, checkins?}
//   POST /admin/retrain
//   POST /admin/tick
//   GET  /admin/tasks/{t}
//   GET  /admin/truths
class ApiHandler {
 public:
  explicit ApiHandler(TaskService& service) : service_(service) {}
  ApiResponse handle(const ApiRequest& request) const;

 private:
  TaskService& service_;
};

// HTTP/1.1 front end for ApiHandler.
class ApiServer {
 public:
  explicit ApiServer(TaskService& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Returns the bound port.
  int bind(const std::string& host, int port = 0);
  // Blocks until stop() is called.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace crowdroute
