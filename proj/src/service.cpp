#include "ftcad/service.hpp"

#include "ftcad/error.hpp"
#include "ftcad/graph_io.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace ftcad::service {

using ojson = nlohmann::ordered_json;

int default_port() {
  if (const char *env = std::getenv("FTCAD_PORT")) {
    char *end = nullptr;
    long port = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && port > 0 && port < 65536)
      return static_cast<int>(port);
  }
  return kDefaultPort;
}

namespace {

std::string sequence_text(const DependencyGraph &graph, const Pipeline &p) {
  std::string out = "(";
  for (std::size_t i = 0; i < p.sequence.size(); ++i) {
    const Node *n = graph.find(p.sequence[i]);
    if (i)
      out += ", ";
    out += n ? n->label() : p.sequence[i];
  }
  return out + ")";
}

std::optional<Mask> try_mask(const DependencyGraph &graph, const Pipeline &p) {
  try {
    return pipeline_mask(graph, p);
  } catch (const Error &e) {
    if (e.code() == ErrorCode::MissingId)
      return std::nullopt;
    throw;
  }
}

std::string fixed(const char *fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

} // namespace

std::string render_validation(const ValidationReport &report) {
  std::string out;
  for (const auto &v : report) {
    out += v.rule;
    if (!v.key.empty())
      out += " [" + v.key + "]";
    out += ": " + v.message + "\n";
  }
  out += std::to_string(report.size()) +
         (report.size() == 1 ? " violation\n" : " violations\n");
  return out;
}

std::string render_pipelines(const DependencyGraph &graph,
                             const std::vector<Pipeline> &pipelines) {
  std::string out;
  for (const auto &p : pipelines)
    out += "Pipeline " + std::to_string(p.index) + ": " +
           sequence_text(graph, p) + "\n";
  return out;
}

std::string render_rank_table(const DependencyGraph &graph,
                              const std::vector<RankedPipeline> &ranked,
                              double t_ref) {
  std::string out = "t_ref = " + format_double(t_ref) + " h\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-5s %-9s %-10s %-11s %-10s %-20s %-14s\n",
                "rank", "pipeline", "mask", "mask_dec", "sum_lambda",
                "R(t_ref)", "MTTF_h");
  out += line;
  for (const auto &r : ranked) {
    auto mask = try_mask(graph, r.pipeline);
    std::string hex = mask ? hex_mask(*mask) : "-";
    std::string dec = mask ? std::to_string(*mask) : "-";
    std::string life =
        r.total_lambda > 0.0 ? fixed("%.6g", mttf(r.total_lambda)) : "inf";
    std::snprintf(line, sizeof line, "%-5zu %-9zu %-10s %-11s %-10s %-20s %-14s\n",
                  r.rank, r.pipeline.index, hex.c_str(), dec.c_str(),
                  fixed("%.6g", r.total_lambda).c_str(),
                  fixed("%.15f", r.r_at_ref).c_str(), life.c_str());
    out += line;
  }
  return out;
}

std::string emit_curve_csv(const DependencyGraph &graph, double t_max,
                           std::size_t n, double t_ref) {
  auto ranked = rank_pipelines(graph, extract_pipelines(graph), t_ref);
  std::vector<ReliabilityCurve> curves;
  curves.reserve(ranked.size());
  std::string out = "t_hours";
  for (const auto &r : ranked) {
    curves.push_back(sample_curve(graph, r.pipeline, t_max, n));
    out += ",r_pipeline_" + std::to_string(r.pipeline.index) + "_rank" +
           std::to_string(r.rank);
    if (auto mask = try_mask(graph, r.pipeline))
      out += "_" + hex_mask(*mask);
  }
  out += "\n";
  if (curves.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      out += format_double(i + 1 == n ? t_max
                                      : t_max * static_cast<double>(i) /
                                            static_cast<double>(n - 1)) +
             "\n";
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out += format_double(curves.front().samples[i].t);
    for (const auto &c : curves)
      out += "," + format_double(c.samples[i].r);
    out += "\n";
  }
  return out;
}

std::string export_options(const DependencyGraph &graph, bool paper_compat,
                           double t_ref) {
  return serialize_options_document(build_options(graph, t_ref).options,
                                    paper_compat);
}

std::string validation_json(const ValidationReport &report) {
  ojson out = ojson::object();
  out["valid"] = report.empty();
  out["violations"] = ojson::array();
  for (const auto &v : report)
    out["violations"].push_back(
        {{"rule", v.rule}, {"key", v.key}, {"message", v.message}});
  return out.dump();
}

std::string pipelines_json(const DependencyGraph &graph,
                           const std::vector<Pipeline> &pipelines) {
  ojson out = ojson::array();
  for (const auto &p : pipelines) {
    ojson rec = ojson::object();
    rec["index"] = p.index;
    rec["sink"] = p.sink;
    rec["sequence"] = p.sequence;
    ojson names = ojson::array();
    for (const auto &key : p.sequence) {
      const Node *n = graph.find(key);
      names.push_back(n ? n->label() : key);
    }
    rec["names"] = std::move(names);
    if (auto mask = try_mask(graph, p))
      rec["mask"] = *mask;
    out.push_back(std::move(rec));
  }
  return out.dump();
}

std::string rank_json(const DependencyGraph &graph,
                      const std::vector<RankedPipeline> &ranked, double t_ref) {
  ojson out = ojson::object();
  out["t_ref"] = t_ref;
  out["pipelines"] = ojson::array();
  for (const auto &r : ranked) {
    ojson rec = ojson::object();
    rec["rank"] = r.rank;
    rec["index"] = r.pipeline.index;
    rec["sequence"] = r.pipeline.sequence;
    if (auto mask = try_mask(graph, r.pipeline)) {
      rec["mask"] = *mask;
      rec["mask_hex"] = hex_mask(*mask);
    }
    rec["total_lambda"] = r.total_lambda;
    rec["static_factor"] = r.static_factor;
    rec["r_at_ref"] = r.r_at_ref;
    rec["mttf_hours"] =
        r.total_lambda > 0.0 ? ojson(mttf(r.total_lambda)) : ojson(nullptr);
    out["pipelines"].push_back(std::move(rec));
  }
  return out.dump();
}

std::string sim_state_json(const std::string &session,
                           const sim::Simulation &simulation) {
  const auto &m = simulation.manager();
  ojson out = ojson::object();
  out["session"] = session;
  out["tick"] = simulation.now();
  out["status"] = hex_mask(m.status);
  std::string bits;
  int width = 1;
  for (const auto &[id, key] : simulation.pe_directory())
    width = std::max(width, std::countr_zero(id) + 1);
  for (int b = width - 1; b >= 0; --b)
    bits += ((m.status >> b) & 1u) ? '1' : '0';
  out["status_bits"] = bits;
  out["active"] = m.active ? ojson(*m.active) : ojson(nullptr);
  if (m.active) {
    Mask mask = m.options[*m.active];
    out["active_mask"] = hex_mask(mask);
    out["active_members"] = decode_mask(simulation.pe_directory(), mask);
  } else {
    out["active_mask"] = nullptr;
    out["active_members"] = ojson::array();
  }
  out["options"] = m.options;
  ojson pes = ojson::array();
  for (const auto &a : simulation.agents())
    pes.push_back({{"node", a.key},
                   {"pe_id", hex_mask(a.pe_id)},
                   {"health", sim::to_string(a.health)},
                   {"live", (m.status & a.pe_id) != 0}});
  out["pes"] = std::move(pes);
  return out.dump();
}

namespace {

struct Session {
  std::mutex lock;
  std::unique_ptr<sim::Simulation> simulation;
  std::jthread auto_runner;
};

struct HttpError {
  int status;
  std::string code;
  std::string message;
  std::string key;
};

} // namespace

struct Server::Impl {
  httplib::Server http;
  std::mutex sessions_lock;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions;
  std::atomic<std::uint64_t> next_id{1};

  std::shared_ptr<Session> find(const std::string &id) {
    std::lock_guard guard(sessions_lock);
    auto it = sessions.find(id);
    if (it == sessions.end())
      throw HttpError{404, "NotFound", "no session '" + id + "'", id};
    return it->second;
  }
};

namespace {

void reply_error(httplib::Response &res, const HttpError &e) {
  ojson body = {{"code", e.code}, {"message", e.message}, {"key", e.key}};
  res.status = e.status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request &req, httplib::Response &res) {
    try {
      fn(req, res);
    } catch (const HttpError &e) {
      reply_error(res, e);
    } catch (const Error &e) {
      int status = is_input_error(e.code()) ? 400 : 422;
      reply_error(res, {status, std::string(to_string(e.code())), e.what(),
                        e.key()});
    } catch (const std::exception &e) {
      reply_error(res, {400, "BadRequest", e.what(), {}});
    }
  };
}

double query_double(const httplib::Request &req, const char *name,
                    double fallback) {
  if (!req.has_param(name))
    return fallback;
  auto text = req.get_param_value(name);
  char *end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    throw HttpError{400, "SchemaError",
                    std::string("query parameter '") + name +
                        "' is not a number",
                    name};
  return v;
}

std::uint64_t query_count(const httplib::Request &req, const char *name,
                          std::uint64_t fallback) {
  double v = query_double(req, name, static_cast<double>(fallback));
  if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v)))
    throw HttpError{400, "SchemaError",
                    std::string("query parameter '") + name +
                        "' must be a non-negative integer",
                    name};
  return static_cast<std::uint64_t>(v);
}

bool query_flag(const httplib::Request &req, const char *name) {
  if (!req.has_param(name))
    return false;
  auto v = req.get_param_value(name);
  return v.empty() || v == "1" || v == "true";
}

ojson body_json(const httplib::Request &req) {
  try {
    return ojson::parse(req.body);
  } catch (const ojson::parse_error &e) {
    throw Error(ErrorCode::Syntax,
                "malformed JSON at byte " + std::to_string(e.byte), {},
                e.byte);
  }
}

std::string body_string(const ojson &body, const char *field) {
  auto it = body.find(field);
  if (it == body.end() || !it->is_string())
    throw HttpError{400, "SchemaError",
                    std::string("body needs string '") + field + "'", field};
  return it->get<std::string>();
}

// Runs `fn` with the session locked; a concurrent holder yields 409.
template <typename Fn>
void with_session(const std::shared_ptr<Session> &s, const std::string &id,
                  Fn fn) {
  std::unique_lock guard(s->lock, std::try_to_lock);
  if (!guard.owns_lock())
    throw HttpError{409, "SessionBusy", "session '" + id + "' is busy", id};
  fn(*s->simulation);
}

} // namespace

Server::Server(std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>()) {
  auto &http = impl_->http;
  Impl *impl = impl_.get();

  if (!static_dir.empty())
    http.set_mount_point("/", static_dir.string());

  http.Get("/api/health", [](const httplib::Request &, httplib::Response &res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  http.Post("/api/graph/validate",
            guarded([](const httplib::Request &req, httplib::Response &res) {
              auto graph = parse_graph_document(req.body);
              res.set_content(validation_json(validate_graph(graph)),
                              "application/json");
            }));

  http.Post("/api/graph/pipelines",
            guarded([](const httplib::Request &req, httplib::Response &res) {
              auto graph = parse_graph_document(req.body);
              res.set_content(pipelines_json(graph, extract_pipelines(graph)),
                              "application/json");
            }));

  http.Post("/api/graph/rank",
            guarded([](const httplib::Request &req, httplib::Response &res) {
              auto graph = parse_graph_document(req.body);
              double t_ref = query_double(req, "t_ref", kDefaultReferenceHours);
              auto ranked = rank_pipelines(graph, extract_pipelines(graph), t_ref);
              res.set_content(rank_json(graph, ranked, t_ref), "application/json");
            }));

  http.Post("/api/graph/curves",
            guarded([](const httplib::Request &req, httplib::Response &res) {
              auto graph = parse_graph_document(req.body);
              double t_max = query_double(req, "t_max", 200000.0);
              auto n = static_cast<std::size_t>(query_count(req, "n", 101));
              double t_ref = query_double(req, "t_ref", kDefaultReferenceHours);
              res.set_content(emit_curve_csv(graph, t_max, n, t_ref), "text/csv");
            }));

  http.Post("/api/graph/export",
            guarded([](const httplib::Request &req, httplib::Response &res) {
              auto graph = parse_graph_document(req.body);
              double t_ref = query_double(req, "t_ref", kDefaultReferenceHours);
              res.set_content(
                  export_options(graph, query_flag(req, "paper_compat"), t_ref),
                  "application/json");
            }));

  http.Post("/api/sim",
            guarded([impl](const httplib::Request &req, httplib::Response &res) {
              ojson body = body_json(req);
              if (!body.is_object() || !body.contains("graph"))
                throw HttpError{400, "SchemaError", "body needs 'graph'", "graph"};
              auto graph = parse_graph_document(body["graph"].dump());
              double t_ref = body.value("t_ref", kDefaultReferenceHours);
              auto options = build_options(graph, t_ref);
              sim::Scenario scenario;
              scenario.duration = std::uint64_t{1} << 40;
              if (body.contains("scenario"))
                scenario = sim::parse_scenario(body["scenario"].dump());
              std::uint64_t seed = body.value("seed", std::uint64_t{0});

              auto session = std::make_shared<Session>();
              session->simulation =
                  std::make_unique<sim::Simulation>(graph, options, scenario, seed);
              std::string id = "s" + std::to_string(impl->next_id++);

              auto interval = body.value("auto_interval_ms", std::uint64_t{0});
              if (interval > 0) {
                std::weak_ptr<Session> weak = session;
                session->auto_runner = std::jthread(
                    [weak, interval](std::stop_token stop) {
                      while (!stop.stop_requested()) {
                        std::this_thread::sleep_for(
                            std::chrono::milliseconds(interval));
                        auto s = weak.lock();
                        if (!s)
                          return;
                        std::lock_guard guard(s->lock);
                        if (!s->simulation->finished())
                          s->simulation->step();
                      }
                    });
              }
              {
                std::lock_guard guard(impl->sessions_lock);
                impl->sessions.emplace(id, session);
              }
              ojson out = {{"session", id}, {"options", options.options}};
              res.status = 201;
              res.set_content(out.dump(), "application/json");
            }));

  http.Post(R"(/api/sim/([^/]+)/step)",
            guarded([impl](const httplib::Request &req, httplib::Response &res) {
              std::string id = req.matches[1];
              auto n = query_count(req, "n", 1);
              with_session(impl->find(id), id, [&](sim::Simulation &s) {
                for (std::uint64_t i = 0; i < n && !s.finished(); ++i)
                  s.step();
                res.set_content(sim_state_json(id, s), "application/json");
              });
            }));

  http.Post(R"(/api/sim/([^/]+)/fault)",
            guarded([impl](const httplib::Request &req, httplib::Response &res) {
              std::string id = req.matches[1];
              ojson body = body_json(req);
              auto node = body_string(body, "node");
              auto action = sim::parse_action(body.value("action", "fail"));
              with_session(impl->find(id), id, [&](sim::Simulation &s) {
                s.inject(node, action);
                res.set_content(sim_state_json(id, s), "application/json");
              });
            }));

  http.Post(R"(/api/sim/([^/]+)/repair)",
            guarded([impl](const httplib::Request &req, httplib::Response &res) {
              std::string id = req.matches[1];
              ojson body = body_json(req);
              auto node = body_string(body, "node");
              with_session(impl->find(id), id, [&](sim::Simulation &s) {
                s.inject(node, sim::Action::Repair);
                res.set_content(sim_state_json(id, s), "application/json");
              });
            }));

  http.Get(R"(/api/sim/([^/]+)/state)",
           guarded([impl](const httplib::Request &req, httplib::Response &res) {
             std::string id = req.matches[1];
             with_session(impl->find(id), id, [&](sim::Simulation &s) {
               res.set_content(sim_state_json(id, s), "application/json");
             });
           }));

  http.Get(R"(/api/sim/([^/]+)/trace)",
           guarded([impl](const httplib::Request &req, httplib::Response &res) {
             std::string id = req.matches[1];
             auto since = query_count(req, "since", 0);
             with_session(impl->find(id), id, [&](sim::Simulation &s) {
               const auto &trace = s.trace();
               std::span<const sim::TraceRecord> tail;
               if (since < trace.size())
                 tail = std::span(trace).subspan(static_cast<std::size_t>(since));
               res.set_content(sim::trace_jsonl(tail), "application/x-ndjson");
             });
           }));
}

Server::~Server() {
  stop();
  // Stop auto-runners before the sessions go away.
  std::lock_guard guard(impl_->sessions_lock);
  for (auto &[id, s] : impl_->sessions)
    if (s->auto_runner.joinable()) {
      s->auto_runner.request_stop();
      s->auto_runner.join();
    }
}

bool Server::listen(const std::string &host, int port) {
  return impl_->http.listen(host, port);
}

int Server::bind_any(const std::string &host) {
  return impl_->http.bind_to_any_port(host);
}

bool Server::listen_after_bind() { return impl_->http.listen_after_bind(); }

void Server::stop() { impl_->http.stop(); }

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

} // namespace ftcad::service
