#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "sundman/scenario.hpp"

namespace {

constexpr const char* kOutEnv = "SUNDMAN_OUT_DIR";

std::string default_out_dir() {
  const char* env = std::getenv(kOutEnv);
  return env ? std::string(env) : std::string();
}

int report_exit(const sundman::Report& rep) { return rep.pass ? 0 : 1; }

int run_file(const std::string& path, const std::string& out_dir,
             unsigned seed) {
  const sundman::Scenario sc = sundman::parse_scenario_file(path);
  const sundman::Report rep = sundman::run_scenario(sc, out_dir, seed);
  std::cout << rep.to_json();
  return report_exit(rep);
}

int verify_all(int jobs, unsigned seed, const std::string& out_dir) {
  const std::vector<std::string> names = sundman::builtin_names();
  std::vector<sundman::Report> reports(names.size());
  std::vector<std::string> errors(names.size());

  std::mutex mu;
  std::size_t cursor = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (cursor >= names.size()) return;
        i = cursor++;
      }
      try {
        const sundman::Scenario sc =
            sundman::parse_scenario(sundman::builtin_scenario(names[i]));
        reports[i] = sundman::run_scenario(sc, out_dir, seed);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  if (jobs < 1) jobs = 1;
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  bool all_pass = true;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!errors[i].empty()) {
      std::cerr << names[i] << ": error: " << errors[i] << "\n";
      return 2;
    }
    std::cout << reports[i].to_json();
    all_pass = all_pass && reports[i].pass;
    if (!out_dir.empty()) {
      std::ofstream out(std::filesystem::path(out_dir) /
                            (names[i] + "-report.json"),
                        std::ios::binary);
      out << reports[i].to_json();
    }
  }
  return all_pass ? 0 : 1;
}

int emit(const std::string& name, const std::string& out_dir, unsigned seed) {
  const std::string text = sundman::builtin_scenario(name);
  const sundman::Scenario sc = sundman::parse_scenario(text);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(std::filesystem::path(out_dir) / (name + ".json"),
                      std::ios::binary);
    out << text;
  }
  const sundman::Report rep = sundman::run_scenario(sc, out_dir, seed);
  {
    std::ofstream out(std::filesystem::path(out_dir) / (name + "-report.json"),
                      std::ios::binary);
    out << rep.to_json();
  }
  std::cout << rep.to_json();
  return report_exit(rep);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario runner for Sundman-reparametrization experiments"};
  app.require_subcommand(1);

  std::string scenario_path, builtin_name;
  std::string out_dir = default_out_dir();
  unsigned seed = 0;
  int jobs = 1;

  CLI::App* run = app.add_subcommand("run", "Run a scenario file");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory for CSV files");
  run->add_option("--seed", seed, "Sample seed");

  CLI::App* list = app.add_subcommand("list-builtins", "List builtin scenarios");

  CLI::App* verify =
      app.add_subcommand("verify-all", "Run every builtin scenario");
  verify->add_option("--jobs", jobs, "Concurrent scenarios");
  verify->add_option("--seed", seed, "Sample seed");
  verify->add_option("--out", out_dir, "Output directory for CSV and reports");

  CLI::App* em = app.add_subcommand("emit", "Write a builtin scenario and its outputs");
  em->add_option("name", builtin_name, "Builtin scenario name")->required();
  CLI::Option* em_out = em->add_option("--out", out_dir, "Output directory");
  if (default_out_dir().empty()) em_out->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return run_file(scenario_path, out_dir, seed);
    if (list->parsed()) {
      for (const std::string& n : sundman::builtin_names()) {
        std::cout << n << "\n";
      }
      return 0;
    }
    if (verify->parsed()) return verify_all(jobs, seed, out_dir);
    if (em->parsed()) return emit(builtin_name, out_dir, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
