// Copyright 2026 The eqcl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// eqcl: run constrained-learning experiments from JSON configs, query the
// closed-form QP oracles, and run the property suites.
//
// Exit codes: 0 success, 1 failed verification or internal error,
// 2 invalid config or input, 3 solver divergence.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "config.h"
#include "eqcl/error.h"
#include "eqcl/runtime.h"
#include "eqcl/trajectory_io.h"
#include "experiments.h"
#include "verify.h"

namespace {

using namespace eqcl;
using namespace eqcl::cli;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;

int ExitCodeFor(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const DivergenceError&) {
    return kExitDivergence;
  } catch (const ValidationError&) {
    return kExitValidation;
  } catch (const ShapeError&) {
    return kExitValidation;
  } catch (const BindingError&) {
    return kExitValidation;
  } catch (...) {
    return kExitFailed;
  }
}

std::string Describe(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

struct SolveArgs {
  std::vector<std::string> configs;
  std::vector<std::uint64_t> seeds;
  std::string out;
  int jobs = 1;
};

// One run per (config, seed). With several runs each gets its own
// subdirectory <out>/<config stem>[-seed<N>].
int Solve(const SolveArgs& args) {
  struct Job {
    std::string config;
    Overrides overrides;
  };
  std::vector<Job> jobs;
  const bool many = args.configs.size() > 1 || args.seeds.size() > 1;
  std::vector<std::optional<std::uint64_t>> seeds(args.seeds.begin(), args.seeds.end());
  if (seeds.empty()) seeds.push_back(std::nullopt);
  for (const std::string& c : args.configs) {
    for (const auto& s : seeds) {
      Overrides o;
      o.seed = s;
      if (!args.out.empty()) {
        std::filesystem::path dir = args.out;
        if (many) {
          std::string leaf = std::filesystem::path(c).stem().string();
          if (s) leaf += "-seed" + std::to_string(*s);
          dir /= leaf;
        }
        o.output_dir = dir;
      }
      jobs.push_back({c, o});
    }
  }

  std::vector<int> codes(jobs.size(), kExitOk);
  std::mutex print;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      std::exception_ptr error;
      std::string summary;
      try {
        const RunConfig rc = LoadRunConfig(jobs[i].config, jobs[i].overrides);
        const nlohmann::json m = RunExperiment(rc);
        summary = rc.output_dir.string() + " (" + std::to_string(m.at("steps").get<int>()) +
                  " steps)";
      } catch (...) {
        error = std::current_exception();
      }
      const std::lock_guard<std::mutex> lock(print);
      if (error) {
        codes[i] = ExitCodeFor(error);
        std::fprintf(stderr, "eqcl: %s: %s\n", jobs[i].config.c_str(),
                     Describe(error).c_str());
      } else {
        std::printf("eqcl: %s -> %s\n", jobs[i].config.c_str(), summary.c_str());
      }
    }
  };
  const int threads = std::max(1, std::min<int>(args.jobs, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return *std::max_element(codes.begin(), codes.end());
}

int QpOracle(const std::string& config, const std::string& out,
             std::optional<std::uint64_t> seed) {
  Overrides o;
  o.seed = seed;
  // The oracle writes nothing unless asked, so the output dir is optional.
  o.output_dir = out.empty() ? std::filesystem::current_path() : std::filesystem::path(out);
  const RunConfig rc = LoadRunConfig(config, o);
  const std::string text = QpOracleReport(rc).dump(2) + "\n";
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::filesystem::create_directories(rc.output_dir);
    WriteFileAtomic(rc.output_dir / "qp_oracle.json", text);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  eqcl::TuneAllocator();
  CLI::App app{"eqcl: primal-dual learning under expectation constraints"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run experiments from config files");
  solve_cmd->add_option("--config", solve.configs, "Config file (repeatable)")->required();
  solve_cmd->add_option("--out", solve.out, "Output directory (overrides output_dir)");
  solve_cmd->add_option("--seed", solve.seeds, "Seed (repeatable; overrides the config)");
  solve_cmd->add_option("--jobs", solve.jobs, "Worker threads for independent runs")
      ->check(CLI::PositiveNumber);

  std::string oracle_config, oracle_out;
  std::optional<std::uint64_t> oracle_seed;
  auto* oracle_cmd = app.add_subcommand("qp-oracle", "Closed-form solution of a QP config");
  oracle_cmd->add_option("--config", oracle_config, "Config file")->required();
  oracle_cmd->add_option("--out", oracle_out, "Write qp_oracle.json here instead of stdout");
  oracle_cmd->add_option("--seed", oracle_seed, "Seed (overrides the config)");

  std::string suite;
  std::uint64_t verify_seed = 1;
  auto* verify_cmd = app.add_subcommand("verify", "Run a property suite");
  verify_cmd->add_option("suite", suite, "gradients | qp | perturbation | equivalence")
      ->required();
  verify_cmd->add_option("--seed", verify_seed, "Seed for the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*solve_cmd) return Solve(solve);
    if (*oracle_cmd) return QpOracle(oracle_config, oracle_out, oracle_seed);
    if (*verify_cmd) return RunVerifySuite(suite, verify_seed) ? kExitOk : kExitFailed;
  } catch (...) {
    const std::exception_ptr error = std::current_exception();
    std::fprintf(stderr, "eqcl: %s\n", Describe(error).c_str());
    return ExitCodeFor(error);
  }
  return kExitFailed;
}
