#include "h2nmf/service.hpp"

#include <httplib.h>

#include <charconv>
#include <fstream>

#include "h2nmf/endmembers.hpp"
#include "h2nmf/error.hpp"
#include "h2nmf/io.hpp"
#include "h2nmf/synth.hpp"

namespace h2nmf::service {
namespace {

using nlohmann::json;

Response json_response(int status, const json& body) {
  return {status, "application/json", body.dump()};
}

Response error_response(int status, std::string_view code, std::string_view message) {
  return json_response(status, {{"error", code}, {"message", message}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kStaleRevision: return 409;
    case ErrorCode::kUnsplittable:
    case ErrorCode::kDomain:
    case ErrorCode::kNoGeometry:
    case ErrorCode::kDegenerateFactors: return 422;
    case ErrorCode::kIo: return 422;
    default: return 400;
  }
}

std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDomain: return "domain_error";
    case ErrorCode::kUnsplittable: return "unsplittable";
    case ErrorCode::kDegenerateFactors: return "degenerate_factors";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kTruncatedPayload: return "truncated_payload";
    case ErrorCode::kSizeMismatch: return "size_mismatch";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kNoGeometry: return "no_geometry";
    case ErrorCode::kStaleRevision: return "stale_revision";
    case ErrorCode::kNotFound: return "not_found";
  }
  return "error";
}

std::vector<std::string> split_path(std::string_view path) {
  const auto q = path.find('?');
  if (q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos < path.size()) {
    const auto slash = path.find('/', pos);
    const auto end = slash == std::string_view::npos ? path.size() : slash;
    if (end > pos) parts.emplace_back(path.substr(pos, end - pos));
    pos = end + 1;
  }
  return parts;
}

json parse_body(std::string_view body) {
  if (body.empty()) return json::object();
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorCode::kParse, "request body must be a JSON object");
  return j;
}

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::kInvalidArgument, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string("bad field '") + key + "'");
  }
}

std::size_t parse_id(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(ErrorCode::kNotFound, "bad node id " + s);
  return v;
}

json geometry_json(const std::optional<Geometry>& g) {
  if (!g) return nullptr;
  return {{"width", g->width}, {"height", g->height}};
}

HierarchyOptions parse_options(const json& body, HierarchyOptions base) {
  if (!body.contains("options")) return base;
  const json& o = body["options"];
  if (o.contains("method")) base.split.method = parse_split_method(o["method"].get<std::string>());
  if (o.contains("delta_hat")) base.split.delta_hat = o["delta_hat"].get<double>();
  if (o.contains("objective")) {
    const auto name = o["objective"].get<std::string>();
    if (name == "eq3" || name == "log_balance") base.split.objective = SplitObjective::kLogBalance;
    else if (name == "alt" || name == "quadratic") base.split.objective = SplitObjective::kQuadratic;
    else fail(ErrorCode::kInvalidArgument, "unknown objective " + name);
  }
  if (o.contains("seed")) base.split.iteration.seed = o["seed"].get<std::uint64_t>();
  return base;
}

DataMatrix load_source(const json& src) {
  if (!src.is_object()) fail(ErrorCode::kInvalidArgument, "source must be an object");
  if (src.contains("path")) return io::load_any(src["path"].get<std::string>()).data;
  if (src.contains("synthetic")) {
    const json& c = src["synthetic"];
    SynthConfig sc;
    sc.epsilon = c.value("epsilon", 0.0);
    sc.scaling = c.value("s", 0) != 0;
    sc.outliers = c.value("b", 0) != 0;
    sc.seed = c.value("seed", std::uint64_t{1});
    sc.r = c.value("r", std::size_t{6});
    sc.bands = c.value("bands", std::size_t{188});
    if (c.contains("cluster_sizes")) sc.cluster_sizes = c["cluster_sizes"].get<std::vector<std::size_t>>();
    DataMatrix d;
    d.values = generate(sc).m;
    if (c.contains("width") && c.contains("height"))
      d.geometry = Geometry{c["width"].get<std::size_t>(), c["height"].get<std::size_t>()};
    return d;
  }
  if (src.contains("matrix")) {
    const json& mj = src["matrix"];
    const auto rows = required<std::size_t>(mj, "rows");
    const auto cols = required<std::size_t>(mj, "cols");
    const auto data = required<std::vector<double>>(mj, "data");
    if (data.size() != rows * cols) fail(ErrorCode::kSizeMismatch, "matrix data length must be rows * cols");
    DataMatrix d;
    d.values = Eigen::Map<const Matrix>(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    d.values = d.values.cwiseMax(0.0);
    if (mj.contains("width") && mj.contains("height"))
      d.geometry = Geometry{mj["width"].get<std::size_t>(), mj["height"].get<std::size_t>()};
    return d;
  }
  fail(ErrorCode::kInvalidArgument, "source needs one of: path, synthetic, matrix");
}

}  // namespace

Service::Service(HierarchyOptions defaults) : defaults_(std::move(defaults)) {}

std::string Service::create_session(DataMatrix data) { return create_session(std::move(data), defaults_); }

std::string Service::create_session(DataMatrix data, const HierarchyOptions& options) {
  return add(std::make_shared<const DataMatrix>(std::move(data)), options, {});
}

std::string Service::add(std::shared_ptr<const DataMatrix> data, const HierarchyOptions& options,
                         const std::vector<TreeOp>& replay) {
  if (data->geometry && data->geometry->pixels() != data->pixels())
    fail(ErrorCode::kSizeMismatch, "geometry does not match the number of pixels");
  std::shared_ptr<const Matrix> values(data, &data->values);
  auto session = std::make_shared<Session>("", data, ClusterTree::replay(values, options, replay));
  std::lock_guard lock(sessions_mutex_);
  session->id = "s" + std::to_string(++counter_);
  sessions_.emplace(session->id, session);
  return session->id;
}

void Service::set_snapshot_dir(std::filesystem::path dir) {
  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string());
  }
  std::lock_guard lock(sessions_mutex_);
  snapshot_dir_ = std::move(dir);
}

void Service::snapshot(const Session& s) const {
  std::filesystem::path dir;
  {
    std::lock_guard lock(sessions_mutex_);
    dir = snapshot_dir_;
  }
  if (dir.empty()) return;
  const auto target = dir / (s.id + ".log.json");
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << log_document(s.tree.log()).dump(2) << '\n';
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) fail(ErrorCode::kIo, "cannot write " + target.string());
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kNotFound, "no session " + id);
  return it->second;
}

Response Service::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    const std::vector<std::string> parts = split_path(path);
    if (parts.empty() || parts[0] != "sessions") return error_response(404, "not_found", "unknown route");
    if (parts.size() == 1) {
      if (method != "POST") return error_response(405, "method_not_allowed", "use POST /sessions");
      return create(body);
    }
    const std::shared_ptr<Session> s = find(parts[1]);
    return session_route(*s, method, {parts.begin() + 2, parts.end()}, body);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), code_name(e.code()), e.what());
  } catch (const json::exception& e) {
    return error_response(400, "invalid_argument", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

Response Service::create(std::string_view body) {
  const json req = parse_body(body);
  if (!req.contains("source")) fail(ErrorCode::kInvalidArgument, "missing field 'source'");
  DataMatrix d = load_source(req["source"]);
  const HierarchyOptions options = parse_options(req, defaults_);
  std::vector<TreeOp> replay;
  if (req.contains("replay")) replay = parse_log_document(req["replay"]);
  const auto m = d.bands();
  const auto n = d.pixels();
  const auto geometry = d.geometry;
  const std::string id = add(std::make_shared<const DataMatrix>(std::move(d)), options, replay);
  if (!replay.empty()) {
    const std::shared_ptr<Session> s = find(id);
    std::shared_lock lock(s->mutex);
    snapshot(*s);
  }
  return json_response(201, {{"session_id", id}, {"n", n}, {"m", m}, {"geometry", geometry_json(geometry)},
                             {"revision", 0}});
}

Response Service::session_route(Session& s, std::string_view method, const std::vector<std::string>& rest,
                                std::string_view body) {
  auto tree_reply = [&](int status) {
    return json_response(status, {{"revision", s.revision}, {"tree", tree_document(s.tree)}});
  };
  const std::string route = rest.empty() ? "" : rest[0];

  if (method == "GET") {
    std::shared_lock lock(s.mutex);
    if (rest.size() == 1 && route == "tree") return tree_reply(200);
    if (rest.size() == 1 && route == "log") {
      json doc = log_document(s.tree.log());
      doc["revision"] = s.revision;
      return json_response(200, doc);
    }
    if (rest.size() == 1 && route == "map.ppm") {
      if (!s.data->geometry) fail(ErrorCode::kNoGeometry, "no image geometry");
      return {200, "image/x-portable-pixmap", io::encode_ppm(s.tree.flatten(), *s.data->geometry)};
    }
    if (rest.size() == 3 && route == "clusters" && rest[2] == "map.pgm") {
      const ClusterNode& node = s.tree.node(parse_id(rest[1]));
      if (!s.data->geometry) fail(ErrorCode::kNoGeometry, "no image geometry");
      const Geometry& g = *s.data->geometry;
      std::string pgm = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
      const std::size_t header = pgm.size();
      pgm.resize(header + s.data->pixels(), '\0');
      for (std::size_t j : node.indices) pgm[header + j] = static_cast<char>(255);
      return {200, "image/x-portable-graymap", pgm};
    }
    if (rest.size() == 1 && route == "endmembers") {
      const EndmemberSet e = extract_pure_pixels(s.tree, s.tree.options().split.iteration);
      json sigs = json::array();
      for (Eigen::Index k = 0; k < e.signatures.cols(); ++k) {
        sigs.push_back(std::vector<double>(e.signatures.col(k).data(), e.signatures.col(k).data() + e.signatures.rows()));
      }
      return json_response(200, {{"format", "h2nmf-endmembers/1"},
                                 {"revision", s.revision},
                                 {"leaf_ids", e.leaf_ids},
                                 {"pixel_indices", e.pixel_indices},
                                 {"signatures", sigs}});
    }
    return error_response(404, "not_found", "unknown route");
  }

  if (method != "POST") return error_response(405, "method_not_allowed", "unsupported method");
  const json req = parse_body(body);
  std::unique_lock lock(s.mutex);
  auto check_revision = [&](bool mandatory) {
    if (!req.contains("revision")) {
      if (mandatory) fail(ErrorCode::kInvalidArgument, "missing field 'revision'");
      return;
    }
    if (required<std::uint64_t>(req, "revision") != s.revision)
      fail(ErrorCode::kStaleRevision, "stale revision: current is " + std::to_string(s.revision));
  };

  if (rest.size() == 1 && route == "split") {
    check_revision(true);
    const auto node = required<std::size_t>(req, "node_id");
    std::optional<SplitMethod> m;
    if (req.contains("method") && !req["method"].is_null()) m = parse_split_method(req["method"].get<std::string>());
    s.tree.split(node, m);
    ++s.revision;
    snapshot(s);
    return tree_reply(200);
  }
  if (rest.size() == 1 && route == "fuse") {
    check_revision(true);
    s.tree.fuse(required<std::size_t>(req, "leaf_a"), required<std::size_t>(req, "leaf_b"));
    ++s.revision;
    snapshot(s);
    return tree_reply(200);
  }
  if (rest.size() == 1 && route == "undo") {
    check_revision(true);
    if (!s.tree.undo()) fail(ErrorCode::kDomain, "nothing to undo");
    ++s.revision;
    snapshot(s);
    return tree_reply(200);
  }
  if (rest.size() == 1 && route == "auto") {
    check_revision(false);
    const auto r = required<std::size_t>(req, "r");
    if (r < 1 || r > s.data->pixels()) fail(ErrorCode::kDomain, "r must lie in [1, n]");
    const std::size_t before = s.tree.log().size();
    const bool complete = s.tree.grow_to(r);
    if (s.tree.log().size() != before) {
      ++s.revision;
      snapshot(s);
    }
    json reply = {{"revision", s.revision}, {"tree", tree_document(s.tree)}, {"stopped_early", !complete}};
    return json_response(200, reply);
  }
  return error_response(404, "not_found", "unknown route");
}

HttpServer::HttpServer(Service& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = service_.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server_->Get(".*", forward);
  server_->Post(".*", forward);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) fail(ErrorCode::kIo, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) fail(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace h2nmf::service
