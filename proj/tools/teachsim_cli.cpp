#include <cstdlib>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "teachsim/harness.hpp"
#include "teachsim/serialize.hpp"
#include "teachsim/session_http.hpp"

using namespace teachsim;

namespace {

teachsim::SessionServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated teaching of a Bayesian reward learner that gives feedback"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run an experiment and write curves");
  std::string preset_name, config_path, out_dir = "out", format = "csv";
  std::optional<std::size_t> trials, horizon, jobs;
  std::optional<std::uint64_t> seed;
  auto* preset_opt = run->add_option("--preset", preset_name, "Preset name")->check(CLI::IsMember(preset_names()));
  run->add_option("--config", config_path, "JSON experiment config")->excludes(preset_opt)->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--trials", trials, "Override trial count");
  run->add_option("--horizon", horizon, "Override demonstrations per trial");
  run->add_option("--seed", seed, "Override master seed");
  run->add_option("--jobs", jobs, "Worker threads (default: hardware concurrency)");
  run->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  // serve
  auto* serve = app.add_subcommand("serve", "Serve interactive teaching sessions over HTTP");
  std::string listen = env_or("TEACHSIM_LISTEN", "127.0.0.1:8080");
  std::string data_dir = env_or("TEACHSIM_DATA", "sessions");
  std::string static_dir = env_or("TEACHSIM_STATIC", "");
  serve->add_option("--listen", listen, "host:port (env TEACHSIM_LISTEN)");
  serve->add_option("--data", data_dir, "Event-log directory (env TEACHSIM_DATA)");
  serve->add_option("--static", static_dir, "UI bundle directory (env TEACHSIM_STATIC)");

  // env
  auto* envcmd = app.add_subcommand("env", "Print a generated environment as JSON");
  std::string task = "random";
  std::size_t n_bins = 3, n_objects = 50, d = 3;
  std::uint64_t env_seed = 0;
  envcmd->add_option("--task", task)->check(CLI::IsMember({"random", "ring"}));
  envcmd->add_option("--bins", n_bins);
  envcmd->add_option("--objects", n_objects);
  envcmd->add_option("--d", d);
  envcmd->add_option("--seed", env_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (preset_name.empty() && config_path.empty()) throw std::invalid_argument("run needs --preset or --config");
      ExperimentConfig config = preset_name.empty() ? load_experiment_config(config_path) : preset(preset_name);
      if (trials) config.trials = *trials;
      if (horizon) config.horizon = *horizon;
      if (seed) config.master_seed = *seed;
      config.validate();
      const std::size_t workers = jobs ? *jobs : std::max(1u, std::thread::hardware_concurrency());
      const auto result = run_experiment(config, workers);
      write_outputs(out_dir, result, format);
      std::cerr << "wrote " << result.cells.size() << " cells x " << config.trials << " trials to " << out_dir
                << '\n';
    } else if (*serve) {
      ServerOptions opts;
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) throw std::invalid_argument("--listen must be host:port");
      opts.host = listen.substr(0, colon);
      opts.port = std::stoi(listen.substr(colon + 1));
      opts.data_dir = data_dir;
      opts.static_dir = static_dir;
      SessionServer server(opts);
      const int port = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << opts.host << ':' << port << '\n';
      server.listen();
      g_server = nullptr;
    } else if (*envcmd) {
      const Environment env = task == "ring" ? generate_ring_task(env_seed)
                                             : generate_random_task(n_bins, n_objects, d, env_seed);
      std::cout << to_json(env).dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "teachsim: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
