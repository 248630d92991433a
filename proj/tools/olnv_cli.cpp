// Copyright 2026 The olnv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment runner: backtest, grid-search, synth and report verbs.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "olnv/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kSolver = 4 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> methods;
};

olnv::ExperimentConfig load(const Overrides& o) {
  olnv::ExperimentConfig cfg = olnv::load_experiment_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  if (o.methods) {
    cfg.methods = olnv::detail::split_list(*o.methods);
    cfg.validate();
  }
  return cfg;
}

void add_common(CLI::App* cmd, Overrides& o, bool with_methods) {
  cmd->add_option("--config", o.config, "experiment config file")->required();
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--out", o.out, "output directory");
  if (with_methods) cmd->add_option("--methods", o.methods, "comma-separated method list");
}

int backtest(const Overrides& o) {
  const auto cfg = load(o);
  const auto rep = olnv::run_backtest(cfg);
  olnv::emit_reports(rep, cfg.out);
  std::cout << olnv::rerender_report(cfg.out);
  return kOk;
}

int grid(const Overrides& o) {
  const auto cfg = load(o);
  const auto data = olnv::load_dataset(cfg);
  const auto g = olnv::grid_search(cfg, data, cfg.grid_mu, cfg.grid_eta);
  olnv::emit_grid(g, cfg.out);
  const auto& best = g.cells[g.best];
  std::cout << "best mu=" << olnv::format_double(best.mu) << " eta=" << olnv::format_double(best.eta)
            << " NV_oos=" << olnv::format_double(best.improvement) << "%\n";
  return kOk;
}

int synth(const Overrides& o) {
  const auto cfg = load(o);
  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  if (cfg.source == olnv::Source::synth_market) {
    const auto m = olnv::synth_market({cfg.seed, cfg.market_hours});
    std::ofstream f(dir / "market.csv", std::ios::binary);
    olnv::write_market_csv(f, m.records);
    std::ofstream c(dir / "capacity.csv", std::ios::binary);
    c << olnv::kCapacityHeader << '\n';
    static constexpr const char* names[] = {"dk1,onshore", "dk1,offshore", "dk2,onshore",
                                            "dk2,offshore"};
    for (const auto& e : m.capacity)
      c << olnv::format_timestamp(e.from) << ',' << names[static_cast<std::size_t>(e.zone)] << ','
        << olnv::format_double(e.capacity_mw) << '\n';
    std::cout << "wrote " << m.records.size() << " hours to " << (dir / "market.csv").string()
              << '\n';
    return kOk;
  }
  const auto data = olnv::load_dataset(cfg);
  std::ofstream f(dir / "stream.csv", std::ios::binary);
  olnv::write_stream_csv(f, data.samples, data.forecast);
  std::cout << "wrote " << data.samples.size() << " samples to " << (dir / "stream.csv").string()
            << '\n';
  for (const auto& n : data.notes) std::cout << n << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online newsvendor offering backtests"};
  app.require_subcommand(1);
  Overrides o;
  auto* bt = app.add_subcommand("backtest", "run every configured method and write reports");
  add_common(bt, o, true);
  auto* gs = app.add_subcommand("grid-search", "validate OLNV over a (mu, eta) grid");
  add_common(gs, o, false);
  auto* sy = app.add_subcommand("synth", "write the configured generated data to CSV");
  add_common(sy, o, false);
  std::string report_dir;
  auto* rp = app.add_subcommand("report", "re-render summary.txt from stored outputs");
  rp->add_option("--out", report_dir, "directory written by backtest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*bt) return backtest(o);
    if (*gs) return grid(o);
    if (*sy) return synth(o);
    if (*rp) {
      std::cout << olnv::rerender_report(report_dir);
      return kOk;
    }
  } catch (const olnv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const olnv::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const olnv::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
