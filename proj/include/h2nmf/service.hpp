#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>

#include "h2nmf/hierarchy.hpp"
#include "h2nmf/matrix.hpp"

namespace httplib {
class Server;
}

namespace h2nmf::service {

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Interactive clustering sessions behind a small REST-style contract.
// Mutations carry the revision they were computed against; a stale revision
// is rejected with 409, so two racing writers cannot both succeed.
//
//   POST /sessions                          {source, options?, replay?}
//   GET  /sessions/{id}/tree
//   GET  /sessions/{id}/log
//   POST /sessions/{id}/split               {node_id, method?, revision}
//   POST /sessions/{id}/fuse                {leaf_a, leaf_b, revision}
//   POST /sessions/{id}/undo                {revision}
//   POST /sessions/{id}/auto                {r, revision?}
//   GET  /sessions/{id}/clusters/{node}/map.pgm
//   GET  /sessions/{id}/map.ppm
//   GET  /sessions/{id}/endmembers
class Service {
 public:
  explicit Service(HierarchyOptions defaults = {});

  // Registers a matrix as a new session and returns its id.
  std::string create_session(DataMatrix data);
  std::string create_session(DataMatrix data, const HierarchyOptions& options);

  Response handle(std::string_view method, std::string_view path, std::string_view body);

  // After every mutation, write the session's operation log to
  // <dir>/<session id>.log.json (schema h2nmf-log/1, replayable on create).
  // An empty path disables snapshots.
  void set_snapshot_dir(std::filesystem::path dir);

 private:
  struct Session {
    std::string id;
    std::shared_ptr<const DataMatrix> data;
    ClusterTree tree;
    std::uint64_t revision = 0;
    mutable std::shared_mutex mutex;

    Session(std::string sid, std::shared_ptr<const DataMatrix> d, ClusterTree t)
        : id(std::move(sid)), data(std::move(d)), tree(std::move(t)) {}
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  std::string add(std::shared_ptr<const DataMatrix> data, const HierarchyOptions& options,
                  const std::vector<TreeOp>& replay);

  Response create(std::string_view body);
  Response session_route(Session& s, std::string_view method, const std::vector<std::string>& rest,
                         std::string_view body);

  void snapshot(const Session& s) const;

  HierarchyOptions defaults_;
  std::filesystem::path snapshot_dir_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

// HTTP/1.1 front end for a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void start();   // listens on a background thread
  void stop();

 private:
  Service& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace h2nmf::service
