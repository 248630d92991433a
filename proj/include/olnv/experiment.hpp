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

#ifndef OLNV_EXPERIMENT_HPP
#define OLNV_EXPERIMENT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "olnv/batch.hpp"
#include "olnv/data.hpp"
#include "olnv/learner.hpp"
#include "olnv/metrics.hpp"
#include "olnv/types.hpp"

namespace olnv {

enum class Source { synth, synth_market, market_csv, stream_csv };

inline constexpr std::size_t kHoursPerMonth = 720;

/// Everything one backtest needs. Parsed from a key = value document.
struct ExperimentConfig {
  std::string experiment = "experiment";
  Source source = Source::synth;
  std::uint64_t seed = 1;

  SynthConfig synth;                 // source = synth
  std::size_t market_hours = 8760;   // source = synth_market
  std::string market_csv, capacity_csv, stream_csv;
  std::size_t forecast_train_len = 4320;

  std::vector<std::string> methods{"OLNV"};
  OlnvConfig olnv;
  std::optional<std::vector<double>> q_init;
  std::optional<std::size_t> forecast_feature;

  std::vector<std::size_t> lp_windows{720};
  std::size_t refresh_every = 24;
  std::size_t lp2_window = 0;          // 0: first of lp_windows
  std::size_t lp2_wind_features = 0;   // 0: source default

  std::size_t eval_start = 0;
  std::size_t eval_len = 0;  // 0: to the end of the stream
  std::size_t olnv_warmup = 0;

  std::size_t regret_step = 0;  // 0: no regret series
  std::vector<std::size_t> regret_partitions;

  std::vector<double> grid_mu;
  std::vector<double> grid_eta;
  std::size_t validation_start = 0;
  std::size_t validation_len = 0;

  std::string out = "out";

  void validate() const {
    static const std::set<std::string> known{"FO", "OLNV", "LP", "LP2", "FX"};
    if (methods.empty()) throw ConfigError("at least one method is required");
    for (const auto& m : methods)
      if (!known.contains(m)) throw ConfigError("unknown method '" + m + "'");
    if (lp_windows.empty()) throw ConfigError("lp_windows is empty");
    for (auto w : lp_windows) RollingWindowConfig{w, refresh_every}.validate();
    if (source == Source::market_csv && (market_csv.empty() || capacity_csv.empty()))
      throw ConfigError("market_csv and capacity_csv are required for source = market_csv");
    if (source == Source::stream_csv && stream_csv.empty())
      throw ConfigError("stream_csv is required for source = stream_csv");
    if (olnv_warmup > eval_start) throw ConfigError("olnv_warmup exceeds eval_start");
  }
};

// ---------------------------------------------------------------------------
// config parsing

namespace detail {

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  for (auto part : split(s, ','))
    if (!part.empty()) out.emplace_back(part);
  return out;
}

class ConfigReader {
 public:
  ConfigReader(std::map<std::string, std::string> kv, std::filesystem::path base)
      : kv_(std::move(kv)), base_(std::move(base)) {}

  bool has(const std::string& k) const { return kv_.contains(k); }

  std::string str(const std::string& k, std::string fallback) {
    used_.insert(k);
    auto it = kv_.find(k);
    return it == kv_.end() ? fallback : it->second;
  }

  std::string path(const std::string& k) {
    std::string v = str(k, "");
    if (v.empty()) return v;
    std::filesystem::path p(v);
    return p.is_absolute() ? v : (base_ / p).lexically_normal().string();
  }

  double real(const std::string& k, double fallback) {
    if (!has(k)) {
      used(k);
      return fallback;
    }
    double v = 0.0;
    if (!parse_double(str(k, ""), v)) throw ConfigError(k + ": expected a number");
    return v;
  }

  std::size_t count(const std::string& k, std::size_t fallback) {
    if (!has(k)) {
      used(k);
      return fallback;
    }
    return to_count(k, str(k, ""));
  }

  std::uint64_t u64(const std::string& k, std::uint64_t fallback) {
    if (!has(k)) {
      used(k);
      return fallback;
    }
    const std::string v = str(k, "");
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw ConfigError(k + ": expected an unsigned integer");
    return out;
  }

  std::vector<double> reals(const std::string& k) {
    std::vector<double> out;
    for (const auto& s : split_list(str(k, ""))) {
      double v = 0.0;
      if (!parse_double(s, v)) throw ConfigError(k + ": expected a list of numbers");
      out.push_back(v);
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& k) {
    std::vector<std::size_t> out;
    for (const auto& s : split_list(str(k, ""))) out.push_back(to_count(k, s));
    return out;
  }

  PenaltyPair pair(const std::string& k, PenaltyPair fallback) {
    if (!has(k)) {
      used(k);
      return fallback;
    }
    const auto v = reals(k);
    if (v.size() != 2 || v[0] < 0.0 || v[1] < 0.0)
      throw ConfigError(k + ": expected two nonnegative numbers");
    return {v[0], v[1]};
  }

  void reject_unused() const {
    for (const auto& [k, v] : kv_)
      if (!used_.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }

 private:
  void used(const std::string& k) { used_.insert(k); }

  static std::size_t to_count(const std::string& k, const std::string& s) {
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ConfigError(k + ": expected a nonnegative integer");
    return out;
  }

  std::map<std::string, std::string> kv_;
  std::filesystem::path base_;
  std::set<std::string> used_;
};

inline std::map<std::string, std::string> parse_key_values(std::istream& in,
                                                          const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto eq = row.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key(trim(row.substr(0, eq)));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, std::string(trim(row.substr(eq + 1)))).second)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::istream& in,
                                                const std::string& source = "<config>",
                                                const std::filesystem::path& base = ".") {
  detail::ConfigReader r(detail::parse_key_values(in, source), base);
  ExperimentConfig c;
  c.experiment = r.str("experiment", c.experiment);
  const std::string src = r.str("source", "synth");
  if (src == "synth")
    c.source = Source::synth;
  else if (src == "synth_market")
    c.source = Source::synth_market;
  else if (src == "market_csv")
    c.source = Source::market_csv;
  else if (src == "stream_csv")
    c.source = Source::stream_csv;
  else
    throw ConfigError("source: unknown value '" + src + "'");
  c.seed = r.u64("seed", c.seed);

  SynthConfig& s = c.synth;
  s.horizon = r.count("horizon", s.horizon);
  s.feature_low = r.real("feature_low", s.feature_low);
  s.feature_high = r.real("feature_high", s.feature_high);
  s.noise_sd = r.real("noise_sd", s.noise_sd);
  s.capacity = r.real("capacity", s.capacity);
  s.zero_penalty_share = r.real("zero_penalty_share", s.zero_penalty_share);
  const std::string scheme = r.str("penalty_scheme", "fixed");
  if (scheme == "fixed") {
    s.penalty_scheme = FixedPenalties{r.pair("fixed_penalties", {1.0, 1.0})};
  } else if (scheme == "alternating") {
    AlternatingPenalties a;
    a.period = r.count("period", a.period);
    a.scheme_a = r.pair("scheme_a", a.scheme_a);
    a.scheme_b = r.pair("scheme_b", a.scheme_b);
    s.penalty_scheme = a;
  } else if (scheme == "real_csv") {
    const std::string p = r.path("penalty_csv");
    if (p.empty()) throw ConfigError("penalty_csv is required for penalty_scheme = real_csv");
    RecordedPenalties rec;
    for (const auto& m : load_market_csv(p).records)
      rec.pairs.push_back(penalties_from_prices(m.prices));
    s.penalty_scheme = std::move(rec);
  } else {
    throw ConfigError("penalty_scheme: unknown value '" + scheme + "'");
  }
  const std::string drift = r.str("drift", "none");
  if (drift == "none")
    s.drift = NoDrift{};
  else if (drift == "linear")
    s.drift = LinearDrift{r.real("drift_start", 1.0), r.real("drift_end", 1.0)};
  else if (drift == "sine")
    s.drift = SineDrift{r.real("drift_amplitude", 0.0), r.real("drift_period", 720.0)};
  else
    throw ConfigError("drift: unknown value '" + drift + "'");

  c.market_hours = r.count("market_hours", c.market_hours);
  c.market_csv = r.path("market_csv");
  c.capacity_csv = r.path("capacity_csv");
  c.stream_csv = r.path("stream_csv");
  c.forecast_train_len = r.count("forecast_train_len", c.forecast_train_len);

  if (r.has("methods")) c.methods = detail::split_list(r.str("methods", ""));
  OlnvConfig& o = c.olnv;
  o.eta = r.real("eta", o.eta);
  o.rho = r.real("rho", o.rho);
  o.epsilon = r.real("epsilon", o.epsilon);
  o.anchor.mu = r.real("mu", o.anchor.mu);
  o.anchor.psi_bar_plus = r.real("psi_bar_plus", o.anchor.psi_bar_plus);
  o.anchor.psi_bar_minus = r.real("psi_bar_minus", o.anchor.psi_bar_minus);
  o.capacity = s.capacity;
  const std::string mode = r.str("mode", "subgradient");
  if (mode == "subgradient")
    o.mode = SubgradientMode{};
  else if (mode == "smooth")
    o.mode = SmoothMode{r.real("alpha", 1.0)};
  else
    throw ConfigError("mode: unknown value '" + mode + "'");
  if (r.has("q_init")) c.q_init = r.reals("q_init");
  if (r.has("forecast_feature")) c.forecast_feature = r.count("forecast_feature", 0);

  if (r.has("lp_windows")) c.lp_windows = r.counts("lp_windows");
  c.refresh_every = r.count("refresh_every", c.refresh_every);
  c.lp2_window = r.count("lp2_window", c.lp2_window);
  c.lp2_wind_features = r.count("lp2_wind_features", c.lp2_wind_features);
  c.eval_start = r.count("eval_start", c.eval_start);
  c.eval_len = r.count("eval_len", c.eval_len);
  c.olnv_warmup = r.count("olnv_warmup", c.olnv_warmup);
  c.regret_step = r.count("regret_step", c.regret_step);
  c.regret_partitions = r.counts("regret_partitions");
  c.grid_mu = r.reals("grid_mu");
  c.grid_eta = r.reals("grid_eta");
  c.validation_start = r.count("validation_start", c.validation_start);
  c.validation_len = r.count("validation_len", c.validation_len);
  c.out = r.str("out", c.out);
  r.reject_unused();
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_experiment_config(in, path, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// data sets

struct Dataset {
  std::vector<Sample> samples;
  std::vector<double> forecast;  // FO baseline, aligned with samples
  double capacity = 100.0;
  std::size_t forecast_feature = 0;
  std::size_t wind_features = 1;  // leading features that describe production
  std::vector<std::string> notes;
};

inline Dataset from_market(std::span<const RawMarketRecord> records,
                           std::span<const CapacityEpoch> capacity, std::size_t train_len) {
  const MarketSeries m = prepare_market(records, capacity, train_len);
  Dataset d;
  d.samples = build_features(m);
  d.forecast.reserve(d.samples.size());
  for (const auto& s : d.samples) d.forecast.push_back(std::clamp(s.features[1], 0.0, 100.0));
  d.forecast_feature = 1;
  d.wind_features = 1 + kZones;
  d.notes.push_back("normalized values clamped: " + std::to_string(m.clamped));
  return d;
}

inline Dataset load_dataset(const ExperimentConfig& cfg) {
  Dataset d;
  switch (cfg.source) {
    case Source::synth: {
      SynthConfig s = cfg.synth;
      s.seed = cfg.seed;
      SynthStream st = synth_stream(s);
      d.samples = std::move(st.samples);
      d.forecast = std::move(st.forecast);
      d.capacity = s.capacity;
      d.wind_features = 1;
      d.notes.push_back("energies clamped: " + std::to_string(st.clamped));
      return d;
    }
    case Source::synth_market: {
      const SynthMarket m = synth_market({cfg.seed, cfg.market_hours});
      return from_market(m.records, m.capacity, cfg.forecast_train_len);
    }
    case Source::market_csv: {
      const MarketLoad load = load_market_csv(cfg.market_csv);
      const auto cap = load_capacity_csv(cfg.capacity_csv);
      d = from_market(load.records, cap, cfg.forecast_train_len);
      d.notes.push_back("rows dropped (missing fields): " + std::to_string(load.dropped_missing));
      d.notes.push_back("rows dropped (negative penalty): " +
                        std::to_string(load.dropped_penalty));
      for (const auto& w : load.warnings) d.notes.push_back("warning: " + w);
      return d;
    }
    case Source::stream_csv: {
      LoadedStream st = load_stream_csv(cfg.stream_csv);
      d.samples = std::move(st.samples);
      d.forecast = std::move(st.forecast);
      d.capacity = cfg.synth.capacity;
      d.wind_features = d.samples.empty() ? 1 : d.samples.front().dim();
      return d;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// backtest

struct MethodRun {
  std::string name;
  std::vector<double> offers;
  std::vector<DecisionVector> decisions;
  double seconds = 0.0;  // decision computation only
  double cost = 0.0;
  std::optional<double> improvement;  // percent vs FO, absent when FO is perfect
};

struct RegretSeries {
  std::string label;  // "static", "worst" or the partition length in hours
  std::vector<RegretPoint> points;
};

struct BacktestReport {
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t eval_start = 0;
  std::vector<Sample> eval;
  std::vector<MethodRun> methods;
  std::vector<RegretSeries> regret;
  std::vector<std::string> notes;

  const MethodRun& method(const std::string& name) const {
    for (const auto& m : methods)
      if (m.name == name) return m;
    throw std::out_of_range("no method named " + name);
  }
};

/// LP-<k>M when the window is a whole number of 720-hour months.
inline std::string lp_name(std::size_t window) {
  if (window % kHoursPerMonth == 0) return "LP-" + std::to_string(window / kHoursPerMonth) + "M";
  return "LP-" + std::to_string(window) + "h";
}

namespace detail {

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline DecisionVector initial_decision(const ExperimentConfig& cfg, std::size_t p,
                                       std::size_t forecast_feature) {
  if (cfg.q_init) {
    if (cfg.q_init->size() != p)
      throw ConfigError("q_init has " + std::to_string(cfg.q_init->size()) +
                        " entries, the features have " + std::to_string(p));
    return DecisionVector(*cfg.q_init);
  }
  return forecast_aligned_init(p, forecast_feature);
}

inline std::vector<Sample> restrict_features(std::span<const Sample> in, std::size_t k,
                                             PenaltyPair pen) {
  std::vector<Sample> out;
  out.reserve(in.size());
  for (const auto& s : in)
    out.push_back({s.energy, pen, std::vector<double>(s.features.begin(), s.features.begin() + k)});
  return out;
}

}  // namespace detail

/// Runs OLNV over `eval` after pre-training on `pretrain`. Records the
/// decision vector played at each hour.
inline MethodRun run_olnv(std::span<const Sample> pretrain, std::span<const Sample> eval,
                          const OlnvConfig& config) {
  MethodRun m{"OLNV"};
  OlnvState state = init(config);
  m.seconds = detail::timed([&] {
    for (const Sample& s : pretrain) state = step(std::move(state), s, config).first;
    m.offers.reserve(eval.size());
    m.decisions.reserve(eval.size());
    for (const Sample& s : eval) {
      m.decisions.push_back(state.q);
      auto [next, rec] = step(std::move(state), s, config);
      state = std::move(next);
      m.offers.push_back(rec.offer);
    }
  });
  return m;
}

/// Two-step rolling benchmark: a capacity-constrained median regression on
/// the production features yields an enhanced forecast f_t, then an
/// unconstrained newsvendor regression on [1, f_t] with the true penalties
/// turns it into the offer.
inline MethodRun run_lp2(std::span<const Sample> warmup, std::span<const Sample> eval,
                         std::size_t window, std::size_t refresh, std::size_t wind_k,
                         double capacity) {
  RollingWindowConfig{window, refresh}.validate();
  if (warmup.size() < window) throw ConfigError("LP2: warmup shorter than the window");
  std::vector<Sample> history(warmup.begin(), warmup.end());
  history.insert(history.end(), eval.begin(), eval.end());
  MethodRun m{"LP2"};
  m.seconds = detail::timed([&] {
    DecisionVector q1, q2;
    for (std::size_t i = 0; i < eval.size(); ++i) {
      if (i % refresh == 0) {
        const std::span<const Sample> win(history.data() + warmup.size() + i - window, window);
        const auto first = detail::restrict_features(win, wind_k, {1.0, 1.0});
        const ErmSolution s1 = solve_erm({first, capacity, true});
        if (s1.solver_status == SolverStatus::infeasible)
          throw SolverError("LP2 first step reported infeasibility");
        q1 = s1.q_star;
        std::vector<Sample> second;
        second.reserve(window);
        for (std::size_t t = 0; t < window; ++t)
          second.push_back({win[t].energy, win[t].penalties,
                            {1.0, dot(first[t].features, q1.view())}});
        const ErmSolution s2 = solve_erm({second, capacity, false});
        if (s2.solver_status == SolverStatus::infeasible || !s2.q_star.finite())
          throw SolverError("LP2 second step failed");
        q2 = s2.q_star;
      }
      const auto& x = eval[i].features;
      const double f = dot(std::span<const double>(x).first(wind_k), q1.view());
      const std::vector<double> z{1.0, f};
      m.offers.push_back(box_offer(z, q2, capacity));
      m.decisions.push_back(q2);
    }
  });
  return m;
}

inline BacktestReport run_backtest(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  const std::size_t n = data.samples.size();
  if (n == 0) throw DataError("the data set is empty");
  if (cfg.eval_start >= n) throw ConfigError("eval_start lies beyond the data");
  const std::size_t len = cfg.eval_len == 0 ? n - cfg.eval_start : cfg.eval_len;
  if (cfg.eval_start + len > n) throw ConfigError("evaluation span exceeds the data");
  const std::span<const Sample> all(data.samples);
  const auto warm = all.first(cfg.eval_start);
  const auto eval = all.subspan(cfg.eval_start, len);
  const std::size_t p = eval.front().dim();
  const std::size_t ff = cfg.forecast_feature.value_or(data.forecast_feature);
  if (ff >= p) throw ConfigError("forecast_feature out of range");
  const double cap = data.capacity;

  BacktestReport rep;
  rep.experiment = cfg.experiment;
  rep.seed = cfg.seed;
  rep.eval_start = cfg.eval_start;
  rep.eval.assign(eval.begin(), eval.end());
  rep.notes = data.notes;

  {
    MethodRun fo{"FO"};
    std::vector<double> q(p, 0.0);
    q[ff] = 1.0;
    fo.seconds = detail::timed([&] {
      for (std::size_t t = 0; t < len; ++t)
        fo.offers.push_back(std::clamp(data.forecast[cfg.eval_start + t], 0.0, cap));
    });
    fo.decisions.assign(len, DecisionVector(q));
    rep.methods.push_back(std::move(fo));
  }

  for (const auto& name : cfg.methods) {
    if (name == "FO") continue;
    if (name == "OLNV") {
      OlnvConfig oc = cfg.olnv;
      oc.capacity = cap;
      oc.q_init = detail::initial_decision(cfg, p, ff);
      rep.methods.push_back(
          run_olnv(warm.subspan(cfg.eval_start - cfg.olnv_warmup), eval, oc));
    } else if (name == "LP") {
      for (auto w : cfg.lp_windows) {
        if (warm.size() < w) throw ConfigError(lp_name(w) + ": eval_start is shorter than the window");
        MethodRun m{lp_name(w)};
        std::vector<RollingOffer> ro;
        m.seconds = detail::timed([&] { ro = rolling_window_run(eval, warm, {w, cfg.refresh_every}, cap); });
        for (auto& r : ro) {
          m.offers.push_back(r.offer);
          m.decisions.push_back(std::move(r.q_used));
        }
        rep.methods.push_back(std::move(m));
      }
    } else if (name == "LP2") {
      const std::size_t w = cfg.lp2_window ? cfg.lp2_window : cfg.lp_windows.front();
      const std::size_t k = cfg.lp2_wind_features ? cfg.lp2_wind_features : data.wind_features;
      if (k == 0 || k > p) throw ConfigError("lp2_wind_features out of range");
      rep.methods.push_back(run_lp2(warm, eval, w, cfg.refresh_every, k, cap));
    } else if (name == "FX") {
      MethodRun m{"FX"};
      m.seconds = detail::timed([&] {
        const ErmSolution sol = hindsight_fx(eval, cap);
        if (sol.solver_status == SolverStatus::infeasible)
          throw SolverError("hindsight solve reported infeasibility");
        for (const auto& s : eval) m.offers.push_back(box_offer(s.features, sol.q_star, cap));
        m.decisions.assign(len, sol.q_star);
      });
      rep.methods.push_back(std::move(m));
    }
  }

  for (auto& m : rep.methods) {
    m.cost = deviation_cost({m.offers, m.decisions, eval});
  }
  const double cost_fo = rep.methods.front().cost;
  for (auto& m : rep.methods)
    if (cost_fo > 0.0) m.improvement = relative_improvement(m.cost, cost_fo);

  const bool has_olnv = std::find(cfg.methods.begin(), cfg.methods.end(), "OLNV") != cfg.methods.end();
  if (cfg.regret_step > 0 && has_olnv) {
    const MethodRun& ol = rep.method("OLNV");
    const EvaluationRun run{ol.offers, ol.decisions, eval};
    rep.regret.push_back({"static", static_regret_series(run, cfg.regret_step, cap)});

    auto at_prefixes = [&](std::span<const RegretPoint> hourly) {
      std::vector<RegretPoint> out;
      for (std::size_t end = cfg.regret_step;; end += cfg.regret_step) {
        end = std::min(end, len);
        out.push_back(hourly[end - 1]);
        if (end == len) break;
      }
      return out;
    };
    std::vector<RegretPoint> worst(len);
    {
      std::vector<double> losses(len);
      for (std::size_t t = 0; t < len; ++t) losses[t] = nv_loss(eval[t], ol.decisions[t]);
      double acc = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        acc += losses[t];
        worst[t] = {t + 1, acc, acc / static_cast<double>(t + 1)};
      }
      // The full-horizon value is re-summed pairwise to match worst_case_regret.
      worst.back().regret = worst_case_regret(run);
      worst.back().averaged = worst.back().regret / static_cast<double>(len);
    }
    rep.regret.push_back({"worst", at_prefixes(worst)});
    for (auto l : cfg.regret_partitions) {
      const auto comp = comparator_sequence(eval, l, cap);
      rep.regret.push_back({std::to_string(l), at_prefixes(dynamic_regret_series(run, comp))});
    }
  }
  return rep;
}

inline BacktestReport run_backtest(const ExperimentConfig& cfg) {
  return run_backtest(cfg, load_dataset(cfg));
}

// ---------------------------------------------------------------------------
// grid search

struct GridCell {
  double mu = 0.0;
  double eta = 0.0;
  double improvement = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;  // eta-major, both axes ascending
  std::size_t best = 0;
};

/// One OLNV validation run per (mu, eta) pair. Ties go to the smaller eta,
/// then the smaller mu.
inline GridResult grid_search(const ExperimentConfig& cfg, const Dataset& data,
                              std::vector<double> mus, std::vector<double> etas) {
  if (mus.empty() || etas.empty()) throw ConfigError("grid_search: empty grid");
  const std::size_t n = data.samples.size();
  if (cfg.validation_len == 0 || cfg.validation_start + cfg.validation_len > n)
    throw ConfigError("validation span is empty or exceeds the data");
  const std::size_t es = cfg.eval_start;
  const std::size_t ee = cfg.eval_len == 0 ? n : es + cfg.eval_len;
  const std::size_t vs = cfg.validation_start, ve = vs + cfg.validation_len;
  if (vs < ee && es < ve) throw ConfigError("validation span overlaps the evaluation span");

  std::sort(mus.begin(), mus.end());
  std::sort(etas.begin(), etas.end());
  const std::span<const Sample> all(data.samples);
  const auto val = all.subspan(vs, cfg.validation_len);
  const auto pre = all.subspan(vs - std::min(cfg.olnv_warmup, vs), std::min(cfg.olnv_warmup, vs));
  const std::size_t p = val.front().dim();
  const std::size_t ff = cfg.forecast_feature.value_or(data.forecast_feature);
  if (ff >= p) throw ConfigError("forecast_feature out of range");

  std::vector<double> fo(cfg.validation_len);
  for (std::size_t t = 0; t < fo.size(); ++t)
    fo[t] = std::clamp(data.forecast[vs + t], 0.0, data.capacity);
  const std::vector<DecisionVector> placeholder(fo.size(), DecisionVector(std::vector<double>(p, 0.0)));
  const double cost_fo = deviation_cost({fo, placeholder, val});
  if (!(cost_fo > 0.0)) throw DataError("grid_search: the baseline has zero cost on validation");

  GridResult g;
  for (double eta : etas)
    for (double mu : mus) {
      OlnvConfig oc = cfg.olnv;
      oc.eta = eta;
      oc.anchor.mu = mu;
      oc.capacity = data.capacity;
      oc.q_init = detail::initial_decision(cfg, p, ff);
      const MethodRun m = run_olnv(pre, val, oc);
      const double imp = relative_improvement(deviation_cost({m.offers, m.decisions, val}), cost_fo);
      if (!std::isfinite(imp)) throw SolverError("grid_search: non-finite cell");
      g.cells.push_back({mu, eta, imp});
      if (imp > g.cells[g.best].improvement) g.best = g.cells.size() - 1;
    }
  return g;
}

// ---------------------------------------------------------------------------
// reports

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

inline std::string file_tag(std::string s) {
  for (auto& ch : s)
    if (ch == '-') ch = '_';
  return s;
}

}  // namespace detail

struct MetricRow {
  std::string method;
  double cost = 0.0;
  std::optional<double> improvement;
};

struct TimingRow {
  std::string method;
  double seconds = 0.0;
};

inline std::string render_summary(const std::map<std::string, std::string>& info,
                                  std::span<const MetricRow> metrics,
                                  std::span<const TimingRow> timings) {
  std::ostringstream s;
  for (const auto& [k, v] : info) s << k << ": " << v << '\n';
  s << '\n';
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %16s %12s %12s\n", "method", "deviation_cost",
                "NV_oos_%", "seconds");
  s << buf;
  for (const auto& m : metrics) {
    double secs = std::nan("");
    for (const auto& t : timings)
      if (t.method == m.method) secs = t.seconds;
    std::snprintf(buf, sizeof buf, "%-10s %16.6f %12s %12.4f\n", m.method.c_str(), m.cost,
                  m.improvement ? format_double(std::round(*m.improvement * 1e4) / 1e4).c_str()
                                : "undefined",
                  secs);
    s << buf;
  }
  return s.str();
}

/// Writes the per-method, metric and regret files of one backtest.
inline void emit_reports(const BacktestReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto f = detail::open_out(dir / "metrics.csv");
    f << "method,deviation_cost,relative_improvement_pct\n";
    for (const auto& m : rep.methods)
      f << m.name << ',' << format_double(m.cost) << ','
        << (m.improvement ? format_double(*m.improvement) : std::string("undefined")) << '\n';
  }
  {
    auto f = detail::open_out(dir / "timings.csv");
    f << "method,seconds\n";
    for (const auto& m : rep.methods) f << m.name << ',' << format_double(m.seconds) << '\n';
  }
  for (const auto& m : rep.methods) {
    const std::string tag = detail::file_tag(m.name);
    auto f = detail::open_out(dir / ("offers_" + tag + ".csv"));
    f << "hour,energy,offer,psi_plus,psi_minus,loss\n";
    for (std::size_t t = 0; t < m.offers.size(); ++t) {
      const Sample& s = rep.eval[t];
      f << rep.eval_start + t << ',' << format_double(s.energy) << ',' << format_double(m.offers[t])
        << ',' << format_double(s.penalties.psi_plus) << ',' << format_double(s.penalties.psi_minus)
        << ',' << format_double(deviation_loss(s.energy, m.offers[t], s.penalties)) << '\n';
    }
    auto q = detail::open_out(dir / ("q_trajectory_" + tag + ".csv"));
    const std::size_t d = m.decisions.empty() ? 0 : m.decisions.front().size();
    q << "hour";
    for (std::size_t j = 0; j < d; ++j) q << ",q" << j;
    q << '\n';
    for (std::size_t t = 0; t < m.decisions.size(); ++t) {
      q << rep.eval_start + t;
      for (double v : m.decisions[t].q) q << ',' << format_double(v);
      q << '\n';
    }
  }
  for (const auto& r : rep.regret) {
    auto f = detail::open_out(dir / ("regret_" + r.label + ".csv"));
    f << "hours,regret,averaged_regret\n";
    for (const auto& p : r.points)
      f << p.hours << ',' << format_double(p.regret) << ',' << format_double(p.averaged) << '\n';
  }
  std::map<std::string, std::string> info{{"experiment", rep.experiment},
                                          {"seed", std::to_string(rep.seed)},
                                          {"eval_start", std::to_string(rep.eval_start)},
                                          {"eval_hours", std::to_string(rep.eval.size())}};
  for (std::size_t i = 0; i < rep.notes.size(); ++i) info["note_" + std::to_string(i)] = rep.notes[i];
  {
    auto f = detail::open_out(dir / "run.txt");
    for (const auto& [k, v] : info) f << k << " = " << v << '\n';
  }
  std::vector<MetricRow> metrics;
  std::vector<TimingRow> timings;
  for (const auto& m : rep.methods) {
    metrics.push_back({m.name, m.cost, m.improvement});
    timings.push_back({m.name, m.seconds});
  }
  auto f = detail::open_out(dir / "summary.txt");
  f << render_summary(info, metrics, timings);
}

inline void emit_grid(const GridResult& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto f = detail::open_out(dir / "grid.csv");
  f << "mu,eta,relative_improvement_pct,best\n";
  for (std::size_t i = 0; i < g.cells.size(); ++i)
    f << format_double(g.cells[i].mu) << ',' << format_double(g.cells[i].eta) << ','
      << format_double(g.cells[i].improvement) << ',' << (i == g.best ? 1 : 0) << '\n';
}

/// Rebuilds summary.txt from the CSV files of an earlier backtest and
/// returns its text.
inline std::string rerender_report(const std::filesystem::path& dir) {
  auto open = [&](const char* name) {
    std::ifstream in(dir / name);
    if (!in) throw DataError("cannot read " + (dir / name).string());
    return in;
  };
  std::map<std::string, std::string> info;
  {
    auto in = open("run.txt");
    info = detail::parse_key_values(in, (dir / "run.txt").string());
  }
  std::vector<MetricRow> metrics;
  std::vector<TimingRow> timings;
  std::string line;
  {
    auto in = open("metrics.csv");
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto f = detail::split(line);
      if (f.size() != 3) throw DataError("metrics.csv: malformed row");
      MetricRow r{std::string(f[0])};
      double v = 0.0;
      if (!detail::parse_double(f[1], r.cost)) throw DataError("metrics.csv: bad cost");
      if (detail::parse_double(f[2], v)) r.improvement = v;
      metrics.push_back(r);
    }
  }
  {
    auto in = open("timings.csv");
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto f = detail::split(line);
      TimingRow r{std::string(f[0])};
      if (f.size() != 2 || !detail::parse_double(f[1], r.seconds))
        throw DataError("timings.csv: malformed row");
      timings.push_back(r);
    }
  }
  const std::string text = render_summary(info, metrics, timings);
  auto f = detail::open_out(dir / "summary.txt");
  f << text;
  return text;
}

}  // namespace olnv

#endif
