#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "edgesim/edgesim.hpp"

namespace fs = std::filesystem;
using namespace edgesim;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("edgesim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("EDGESIM_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else {
    if (level != "error") spdlog::warn("EDGESIM_LOG='{}' not recognised, using error", level);
    spdlog::set_level(spdlog::level::err);
  }
}

struct SeedRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
};

// "seeds=a..b", inclusive on both ends.
std::optional<SeedRange> parse_sweep(const std::string& text) {
  const std::string prefix = "seeds=";
  if (text.rfind(prefix, 0) != 0) return std::nullopt;
  const std::string body = text.substr(prefix.size());
  const auto dots = body.find("..");
  if (dots == std::string::npos) return std::nullopt;
  try {
    std::size_t used = 0;
    const std::string a = body.substr(0, dots);
    const std::string b = body.substr(dots + 2);
    if (a.empty() || b.empty() || a[0] == '-' || b[0] == '-') return std::nullopt;
    SeedRange r;
    r.first = std::stoull(a, &used);
    if (used != a.size()) return std::nullopt;
    r.last = std::stoull(b, &used);
    if (used != b.size() || r.last < r.first) return std::nullopt;
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<Scenario> load_or_report(const std::string& path) {
  LoadResult res = load_scenario(path);
  if (res.ok()) return std::move(res.scenario);
  std::cerr << "error: " << path << " is not a valid scenario\n";
  for (const auto& i : res.issues) std::cerr << "  " << i.str() << "\n";
  return std::nullopt;
}

void run_one(const Scenario& sc, std::uint64_t seed, const fs::path& dir, FrameFormat fmt) {
  spdlog::info("seed {}: running '{}' for {} s", seed, sc.name, sc.sim.duration_s);
  const MetricsReport r = run(sc, seed);
  write_report_set(r, dir, fmt);
  spdlog::info("seed {}: {} frames completed, {} qos violations, {} migrations -> {}", seed,
               r.counters.frames_completed, r.counters.qos_violations, r.counters.migrations,
               dir.string());
}

int cmd_validate(const std::string& path) {
  if (!load_or_report(path)) return kInvalid;
  std::cout << path << ": ok\n";
  return kOk;
}

struct RunFlags {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string policy;
  std::string format = "csv";
  std::string sweep;
  std::string offloading;
  unsigned jobs = 0;
};

int cmd_run(const RunFlags& f) {
  auto sc = load_or_report(f.scenario);
  if (!sc) return kInvalid;
  if (!f.policy.empty()) sc->orchestrator.policy = policy_from_string(f.policy);
  if (!f.offloading.empty()) sc->orchestrator.offloading = f.offloading == "on";
  const FrameFormat fmt = f.format == "json" ? FrameFormat::json : FrameFormat::csv;

  if (f.sweep.empty()) {
    try {
      run_one(*sc, f.seed.value_or(sc->sim.seed), f.out, fmt);
    } catch (const std::exception& e) {
      spdlog::error("{}", e.what());
      std::cerr << "error: " << e.what() << "\n";
      return kRuntime;
    }
    return kOk;
  }

  const auto range = parse_sweep(f.sweep);
  if (!range) {
    std::cerr << "error: --sweep expects seeds=a..b with a <= b\n";
    return kInvalid;
  }
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = range->first;; ++s) {
    seeds.push_back(s);
    if (s == range->last) break;
  }
  unsigned workers = f.jobs ? f.jobs : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(seeds.size()));

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::vector<std::string> errors;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < seeds.size(); i = next++) {
        const auto seed = seeds[i];
        try {
          run_one(*sc, seed, fs::path(f.out) / ("seed-" + std::to_string(seed)), fmt);
        } catch (const std::exception& e) {
          std::lock_guard lk(err_mu);
          errors.push_back("seed " + std::to_string(seed) + ": " + e.what());
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (!errors.empty()) {
    std::sort(errors.begin(), errors.end());
    for (const auto& e : errors) std::cerr << "error: " << e << "\n";
    return kRuntime;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Discrete-event simulator for edge inference clusters"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file and list every problem");
  validate_cmd->add_option("--scenario,scenario", validate_path, "Scenario JSON")->required();

  RunFlags flags;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write a report set");
  run_cmd->add_option("--scenario", flags.scenario, "Scenario JSON")->required();
  run_cmd->add_option("--seed", flags.seed, "Master seed (defaults to the scenario's)");
  run_cmd->add_option("--out", flags.out, "Output directory")->required();
  run_cmd->add_option("--policy", flags.policy, "Override the placement policy")
      ->check(CLI::IsMember({"min-latency", "weighted"}));
  run_cmd->add_option("--format", flags.format, "Per-frame output format")
      ->check(CLI::IsMember({"csv", "json"}));
  run_cmd->add_option("--sweep", flags.sweep, "Run a seed range, e.g. seeds=1..5");
  run_cmd->add_option("--offloading", flags.offloading, "Override offloading")
      ->check(CLI::IsMember({"on", "off"}));
  run_cmd->add_option("--jobs", flags.jobs, "Worker threads for sweeps (default: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*validate_cmd) return cmd_validate(validate_path);
    if (flags.seed && !flags.sweep.empty()) {
      std::cerr << "error: --seed and --sweep are mutually exclusive\n";
      return kInvalid;
    }
    return cmd_run(flags);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
