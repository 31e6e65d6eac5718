#pragma once

// Shared renderers for the command line and HTTP surfaces, plus the HTTP
// service with simulation sessions. Both surfaces go through the same
// functions so their artifacts are byte-identical.

#include "ftcad/graph.hpp"
#include "ftcad/manager.hpp"
#include "ftcad/pipeline.hpp"
#include "ftcad/reliability.hpp"
#include "ftcad/strategy.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace ftcad::service {

inline constexpr int kDefaultPort = 8780;

/// Port from FTCAD_PORT, else kDefaultPort.
int default_port();

std::string render_validation(const ValidationReport &report);
std::string render_pipelines(const DependencyGraph &graph,
                             const std::vector<Pipeline> &pipelines);
std::string render_rank_table(const DependencyGraph &graph,
                              const std::vector<RankedPipeline> &ranked,
                              double t_ref);

/// One t column plus one column per ranked pipeline, headed
/// r_pipeline_<index>_rank<rank>[_0x<mask>].
std::string emit_curve_csv(const DependencyGraph &graph, double t_max,
                           std::size_t n,
                           double t_ref = kDefaultReferenceHours);

std::string export_options(const DependencyGraph &graph, bool paper_compat,
                           double t_ref = kDefaultReferenceHours);

std::string validation_json(const ValidationReport &report);
std::string pipelines_json(const DependencyGraph &graph,
                           const std::vector<Pipeline> &pipelines);
std::string rank_json(const DependencyGraph &graph,
                      const std::vector<RankedPipeline> &ranked, double t_ref);
std::string sim_state_json(const std::string &session,
                           const sim::Simulation &simulation);

/// HTTP front end. Sessions are isolated; each one is serialized by its own
/// lock and a request that finds it locked gets 409.
class Server {
public:
  explicit Server(std::filesystem::path static_dir = {});
  ~Server();
  Server(const Server &) = delete;
  Server &operator=(const Server &) = delete;

  /// Binds and serves until stop(). Returns false if the port is taken.
  bool listen(const std::string &host, int port);
  /// Binds to an ephemeral port and returns it; serve with listen_after_bind().
  int bind_any(const std::string &host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace ftcad::service
