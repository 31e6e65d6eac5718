// ftcad: command line front end. Exit codes: 0 success, 1 domain error or
// violations found, 2 usage error.

#include "ftcad/error.hpp"
#include "ftcad/graph_io.hpp"
#include "ftcad/manager.hpp"
#include "ftcad/service.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace ftcad;

void emit(const std::string &text, const std::string &path) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_text_file(path, text);
}

DependencyGraph load(const std::string &path) {
  return parse_graph_document(read_text_file(path));
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Fault-tolerance design toolkit"};
  app.require_subcommand(1, 1);

  std::string file, out, scenario_path, frames_path, static_dir;
  double t_ref = kDefaultReferenceHours;
  double t_max = 200000.0;
  std::size_t samples = 101;
  bool paper_compat = false;
  std::uint64_t seed = 0;
  int port = service::default_port();

  auto *validate = app.add_subcommand("validate", "check graph structure");
  validate->add_option("file", file, "graph document")->required();

  auto *pipelines = app.add_subcommand("pipelines", "list pipelines");
  pipelines->add_option("file", file, "graph document")->required();

  auto *rank = app.add_subcommand("rank", "rank pipelines by reliability");
  rank->add_option("file", file, "graph document")->required();
  rank->add_option("--t-ref", t_ref, "reference time in hours")
      ->check(CLI::PositiveNumber);

  auto *curve = app.add_subcommand("curve", "reliability curves as CSV");
  curve->add_option("file", file, "graph document")->required();
  curve->add_option("--t-max", t_max, "end of the time axis in hours")
      ->check(CLI::PositiveNumber);
  curve->add_option("--n", samples, "number of samples")
      ->check(CLI::Range(2, 1000000));
  curve->add_option("--t-ref", t_ref, "reference time for ranking")
      ->check(CLI::PositiveNumber);
  curve->add_option("-o,--output", out, "output file");

  auto *exp = app.add_subcommand("export", "write the reliability options");
  exp->add_option("file", file, "graph document")->required();
  exp->add_flag("--paper-compat", paper_compat, "emit {[a, b, c]}");
  exp->add_option("--t-ref", t_ref, "reference time for ranking")
      ->check(CLI::PositiveNumber);
  exp->add_option("-o,--output", out, "output file");

  auto *simulate = app.add_subcommand("simulate", "run a manager simulation");
  simulate->add_option("file", file, "graph document")->required();
  simulate->add_option("--scenario", scenario_path, "scenario document")
      ->required();
  simulate->add_option("--seed", seed, "seed for frame drops");
  simulate->add_option("--t-ref", t_ref, "reference time for ranking")
      ->check(CLI::PositiveNumber);
  simulate->add_option("-o,--output", out, "trace file (JSONL)");
  simulate->add_option("--frames", frames_path, "bus frame log (CSV)");

  auto *serve = app.add_subcommand("serve", "HTTP service");
  serve->add_option("--port", port, "listen port (FTCAD_PORT)")
      ->check(CLI::Range(1, 65535));
  serve->add_option("--static", static_dir, "static asset directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) {
      auto report = validate_graph(load(file));
      std::cout << service::render_validation(report);
      return report.empty() ? 0 : 1;
    }
    if (*pipelines) {
      auto graph = load(file);
      std::cout << service::render_pipelines(graph, extract_pipelines(graph));
      return 0;
    }
    if (*rank) {
      auto graph = load(file);
      auto ranked = rank_pipelines(graph, extract_pipelines(graph), t_ref);
      std::cout << service::render_rank_table(graph, ranked, t_ref);
      return 0;
    }
    if (*curve) {
      emit(service::emit_curve_csv(load(file), t_max, samples, t_ref), out);
      return 0;
    }
    if (*exp) {
      emit(service::export_options(load(file), paper_compat, t_ref), out);
      return 0;
    }
    if (*simulate) {
      auto graph = load(file);
      auto scenario = sim::parse_scenario(read_text_file(scenario_path));
      sim::Simulation run(graph, build_options(graph, t_ref), scenario, seed);
      run.run();
      emit(sim::trace_jsonl(run.trace()), out);
      if (!frames_path.empty())
        write_text_file(frames_path, can::frame_log_csv(run.bus().log()));
      return 0;
    }
    if (*serve) {
      service::Server server(static_dir);
      std::cerr << "listening on port " << port << "\n";
      if (!server.listen("0.0.0.0", port)) {
        std::cerr << "error: cannot bind port " << port << "\n";
        return 1;
      }
      return 0;
    }
  } catch (const Error &e) {
    std::cerr << "error (" << to_string(e.code()) << ")";
    if (!e.key().empty())
      std::cerr << " [" << e.key() << "]";
    std::cerr << ": " << e.what() << "\n";
    return 1;
  }
  return 2;
}
