// Copyright 2026 The distpriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line experiment runner.
//
//   distpriv run <config> --curve <name|all> [--out <dir>] [--seed N]
//       [--samples N] [--threads N]
//   distpriv validate <config>
//
// Exit codes: 0 success, 2 configuration error, 3 estimation failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/match.h"
#include "distpriv/experiment.h"
#include "distpriv/geo_data.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

bool IsConfigError(const absl::Status& status) {
  return absl::StartsWith(status.message(), "config");
}

std::optional<distpriv::ExperimentConfig> Load(const std::string& path) {
  auto config = distpriv::LoadExperimentConfig(path);
  if (!config.ok()) {
    std::cerr << "error: " << config.status().message() << "\n";
    return std::nullopt;
  }
  return *std::move(config);
}

int Fail(const absl::Status& status) {
  std::cerr << "error: " << status.message() << "\n";
  return IsConfigError(status) ? kExitConfig : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution privacy experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string curve;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> samples;
  std::optional<int> threads;

  CLI::App* run = app.add_subcommand("run", "Run a curve and write its CSV");
  run->add_option("config", config_path, "Config file (JSON)")->required();
  run->add_option("--curve", curve, "Curve name, or \"all\"")->required();
  run->add_option("--out", out_dir, "Output directory (default: config output)");
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--samples", samples, "Override the Monte-Carlo sample count");
  run->add_option("--threads", threads, "Worker threads")
      ->check(CLI::PositiveNumber);

  CLI::App* validate =
      app.add_subcommand("validate", "Check a config and its dataset");
  validate->add_option("config", config_path, "Config file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto config = Load(config_path);
  if (!config.has_value()) return kExitConfig;

  if (*validate) {
    auto scenario = distpriv::BuildScenario(*config);
    if (!scenario.ok()) return Fail(scenario.status());
    std::cout << "ok: |X| = " << scenario->domain.input()->size()
              << ", |Y| = " << scenario->domain.output()->size() << "\n";
    return kExitOk;
  }

  if (seed.has_value()) config->seed = *seed;
  if (samples.has_value()) {
    if (*samples < distpriv::kMinDistpSamples) {
      std::cerr << "error: config field 'privacy.samples': must be at least "
                << distpriv::kMinDistpSamples << "\n";
      return kExitConfig;
    }
    config->privacy.samples = *samples;
  }
  if (threads.has_value()) config->threads = *threads;
  if (out_dir.empty()) out_dir = config->output;

  std::vector<std::string> curves;
  if (curve == "all") {
    for (auto name : distpriv::kCurveNames) curves.emplace_back(name);
  } else if (distpriv::IsCurveName(curve)) {
    curves.push_back(curve);
  } else {
    std::cerr << "error: unknown curve \"" << curve << "\"\n";
    return kExitConfig;
  }

  auto scenario = distpriv::BuildScenario(*config);
  if (!scenario.ok()) return Fail(scenario.status());
  if (scenario->depth_limited) {
    std::cerr << "warning: adaptive partition hit the depth limit\n";
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create " << out_dir << ": " << ec.message()
              << "\n";
    return kExitRuntime;
  }
  {
    std::ofstream regions(out_dir + "/regions.csv", std::ios::binary);
    distpriv::WriteRegionsCsv(scenario->regions, regions);
  }
  const std::string timestamp = distpriv::UtcTimestamp();
  for (const std::string& name : curves) {
    auto path =
        distpriv::RunAndWrite(*config, *scenario, name, out_dir, timestamp);
    if (!path.ok()) return Fail(path.status());
    std::cout << *path << "\n";
  }
  return kExitOk;
}
