#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pairsearch/bound_suite.hpp"
#include "pairsearch/embedding.hpp"
#include "pairsearch/harness.hpp"
#include "pairsearch/session_service.hpp"

namespace {

using namespace pairsearch;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path);
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(path + ": " + e.what());
  }
}

HttpServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active preference search with paired comparisons"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> threads;

  auto* run = app.add_subcommand("run", "Run a batch experiment from a JSON config");
  std::string run_config;
  run->add_option("config", run_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* bounds = app.add_subcommand("bounds", "Run the bound verification suite");
  std::string bounds_config;
  bounds->add_option("config", bounds_config, "Bound-suite config (JSON)")->check(CLI::ExistingFile);
  bounds->add_option("--seed", seed, "Override the seed");
  bounds->add_option("--out", out_dir, "Directory for report.json");
  bounds->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit-k0", "Fit the noise constant to triplet judgements");
  std::string fit_embedding, fit_triplets, fit_scheme = "constant";
  double k0_max = kDefaultK0Max;
  bool no_prepare = false;
  fit->add_option("--embedding", fit_embedding, "Item coordinates")->required()->check(CLI::ExistingFile);
  fit->add_option("--triplets", fit_triplets, "Triplets: reference, a, b[, choice]")->required()->check(CLI::ExistingFile);
  fit->add_option("--scheme", fit_scheme, "constant | normalized | decaying (or K1/K2/K3)");
  fit->add_option("--k0-max", k0_max, "Upper end of the search interval");
  fit->add_flag("--no-prepare", no_prepare, "Use the coordinates as given");

  auto* prep = app.add_subcommand("prep-embedding", "Center and rescale an embedding");
  std::string prep_in, prep_out;
  prep->add_option("input", prep_in, "Item coordinates")->required()->check(CLI::ExistingFile);
  prep->add_option("--out", prep_out, "Output file (stdout if omitted)");

  auto* serve = app.add_subcommand("serve", "Serve live sessions over HTTP");
  std::vector<std::string> serve_embeddings;
  std::string host = "127.0.0.1", store, serve_scheme = "constant";
  int port = 8080;
  double serve_k0 = 10.0;
  serve->add_option("--embedding", serve_embeddings, "id=path[,labels_path]")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--store", store, "Event log file (sessions survive restarts)");
  serve->add_option("--scheme", serve_scheme, "Noise scheme for all embeddings");
  serve->add_option("--k0", serve_k0, "Noise constant for all embeddings");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentConfig cfg = experiment_config_from_json(read_json(run_config));
      if (seed) cfg.seed = *seed;
      if (threads) cfg.threads = *threads;
      const ExperimentResult res = run_experiment(cfg);
      write_results(res, out_dir);
      std::cout << summary_csv(res);
      if (res.failed) {
        std::cerr << res.aborted << " trials aborted; experiment failed\n";
        return 1;
      }
      return 0;
    }
    if (*bounds) {
      BoundSuiteConfig cfg = bounds_config.empty() ? BoundSuiteConfig{}
                                                   : bound_suite_config_from_json(read_json(bounds_config));
      if (seed) cfg.seed = *seed;
      if (threads) {
        cfg.stopping.threads = *threads;
        if (cfg.experiment) cfg.experiment->threads = *threads;
      }
      const BoundReport report = run_bound_suite(cfg);
      for (const BoundCheck& c : report.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " margin=" << c.margin << " cases=" << c.cases
                  << " (" << c.detail << ")\n";
      }
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(std::filesystem::path(out_dir) / "report.json") << to_json(report).dump(2) << '\n';
      }
      return report.passed() ? 0 : 1;
    }
    if (*fit) {
      Embedding e = load_embedding_file(fit_embedding);
      if (!no_prepare) e = prepare_embedding(e);
      const auto triplets = load_triplets_file(fit_triplets, e.size());
      const K0Fit k = fit_k0(e, triplets, parse_noise_scheme(fit_scheme), k0_max);
      const nlohmann::json out{{"k0", k.k0},
                               {"log_likelihood", k.log_likelihood},
                               {"triplet_error", triplet_error_fraction(e, triplets)},
                               {"triplets", triplets.size()}};
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (*prep) {
      const Embedding e = prepare_embedding(load_embedding_file(prep_in));
      if (prep_out.empty()) {
        write_embedding(std::cout, e);
      } else {
        std::ofstream f(prep_out);
        if (!f) throw ArgumentError("cannot write " + prep_out);
        write_embedding(f, e);
      }
      std::cerr << "scale " << e.scale_applied << '\n';
      return 0;
    }
    if (*serve) {
      auto registry = std::make_shared<EmbeddingRegistry>();
      const NoiseSchemeConfig scheme{parse_noise_scheme(serve_scheme), serve_k0};
      for (const std::string& arg : serve_embeddings) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0) throw ArgumentError("--embedding expects id=path: " + arg);
        std::string path = arg.substr(eq + 1);
        std::optional<std::string> labels;
        if (const auto comma = path.find(','); comma != std::string::npos) {
          labels = path.substr(comma + 1);
          path = path.substr(0, comma);
        }
        registry->add_file(arg.substr(0, eq), path, scheme, labels);
      }
      SessionService service(registry, store);
      HttpServer server(service);
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cerr << "listening on http://" << host << ':' << bound << '\n';
      server.listen_after_bind();
      g_server = nullptr;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
