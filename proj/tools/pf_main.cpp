// pf: batch scenario runner for the path-following library.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime abort.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pf/exceptions.hpp"
#include "pf/scenario.hpp"

namespace fs = std::filesystem;

namespace {

int log_level() {
  const char* env = std::getenv("PF_LOG");
  if (!env) return 0;
  const std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[pf] " << msg << "\n";
}

int write_file(const std::string& name, const std::string& content) {
  std::ofstream out(name, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << name << "\n";
    return 2;
  }
  out << content;
  return 0;
}

int run_one(const std::string& scenario_file, const std::string& trace_file,
            const std::string& metrics_file) {
  pf::Scenario sc;
  try {
    sc = pf::load_scenario_file(scenario_file);
  } catch (const pf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  log_info("running " + scenario_file);
  const pf::RunResult result = pf::run(sc);
  if (int rc = write_file(trace_file, pf::to_csv(result.trace)); rc != 0) return rc;
  log_info("trace written to " + trace_file);

  const std::string label = sc.name.empty() ? sc.method : sc.name;
  std::vector<std::pair<std::string, pf::Metrics>> entries{{label, result.metrics}};
  std::cout << pf::summarize(entries);
  if (!metrics_file.empty()) {
    if (int rc = write_file(metrics_file, pf::summary_json(entries)); rc != 0) return rc;
  }
  if (result.trace.aborted) {
    std::cerr << "error: run aborted: " << result.trace.abort_reason << "\n";
    return 2;
  }
  for (const auto& note : result.trace.notes) std::cerr << "note: " << note << "\n";
  return 0;
}

int run_batch(const std::string& dir, int jobs, const std::string& summary_file,
              const std::string& out_dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "error: no scenario files in " << dir << "\n";
    return 1;
  }

  std::vector<pf::Scenario> scenarios(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    try {
      scenarios[i] = pf::load_scenario_file(files[i].string());
    } catch (const pf::Error& e) {
      std::cerr << "error: " << files[i].string() << ": " << e.what() << "\n";
      return 1;
    }
  }

  fs::create_directories(out_dir);
  std::vector<pf::RunResult> results(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= files.size()) return;
      log_info("running " + files[i].string());
      results[i] = pf::run(scenarios[i]);
    }
  };
  jobs = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  bool aborted = false;
  std::vector<std::pair<std::string, pf::Metrics>> entries;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string label = scenarios[i].name.empty() ? files[i].stem().string()
                                                        : scenarios[i].name;
    const fs::path trace_path = fs::path(out_dir) / (files[i].stem().string() + "_trace.csv");
    if (int rc = write_file(trace_path.string(), pf::to_csv(results[i].trace)); rc != 0) {
      return rc;
    }
    entries.emplace_back(label, results[i].metrics);
    if (results[i].trace.aborted) {
      std::cerr << "error: " << label << " aborted: " << results[i].trace.abort_reason << "\n";
      aborted = true;
    }
  }
  std::cout << pf::summarize(entries);
  if (!summary_file.empty()) {
    if (int rc = write_file(summary_file, pf::summary_json(entries)); rc != 0) return rc;
  }
  return aborted ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-following scenario simulator"};
  app.require_subcommand(1);

  std::string scenario_file, trace_file, metrics_file;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario and write its trace");
  run_cmd->add_option("scenario", scenario_file, "Scenario JSON file")->required();
  run_cmd->add_option("--out", trace_file, "Trace CSV output (default: <scenario>_trace.csv)");
  run_cmd->add_option("--metrics", metrics_file, "Metrics JSON output");

  std::string batch_dir, summary_file, out_dir = ".";
  int jobs = 1;
  auto* batch_cmd = app.add_subcommand("batch", "Run every scenario in a directory");
  batch_cmd->add_option("dir", batch_dir, "Directory of scenario JSON files")->required();
  batch_cmd->add_option("--jobs", jobs, "Concurrent runs");
  batch_cmd->add_option("--summary", summary_file, "Summary JSON output");
  batch_cmd->add_option("--out-dir", out_dir, "Directory for trace CSV files");

  auto* list_cmd = app.add_subcommand("list-methods", "Print the available method selectors");

  std::string validate_file;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
  validate_cmd->add_option("scenario", validate_file, "Scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    if (trace_file.empty()) {
      trace_file = fs::path(scenario_file).stem().string() + "_trace.csv";
    }
    return run_one(scenario_file, trace_file, metrics_file);
  }
  if (batch_cmd->parsed()) {
    return run_batch(batch_dir, jobs, summary_file, out_dir);
  }
  if (list_cmd->parsed()) {
    for (const auto& name : pf::method_names()) std::cout << name << "\n";
    return 0;
  }
  if (validate_cmd->parsed()) {
    try {
      pf::load_scenario_file(validate_file);
    } catch (const pf::Error& e) {
      std::cerr << "invalid: " << e.what() << "\n";
      return 1;
    }
    std::cout << "ok\n";
    return 0;
  }
  return 0;
}
