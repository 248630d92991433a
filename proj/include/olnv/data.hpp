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

#ifndef OLNV_DATA_HPP
#define OLNV_DATA_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "olnv/nv_core.hpp"
#include "olnv/types.hpp"

namespace olnv {

using Timestamp = std::chrono::sys_seconds;

/// Wind zones in feature order.
enum class Zone : std::size_t { onshore_dk1 = 0, offshore_dk1, onshore_dk2, offshore_dk2 };
inline constexpr std::size_t kZones = 4;

struct RawMarketRecord {
  Timestamp timestamp{};
  MarketPrices prices;
  std::array<double, kZones> realized{};
  std::array<double, kZones> forecast{};  // day-ahead
};

inline constexpr std::string_view kMarketHeader =
    "timestamp,spot,up_reg,down_reg,onshore_dk1_real,onshore_dk1_fc,offshore_dk1_real,"
    "offshore_dk1_fc,onshore_dk2_real,onshore_dk2_fc,offshore_dk2_real,offshore_dk2_fc";

inline constexpr std::string_view kCapacityHeader = "from,zone,technology,capacity_mw";

// ---------------------------------------------------------------------------
// text helpers

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool is_missing(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

inline bool parse_int(std::string_view s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Parses YYYY-MM-DD[(T| )HH:MM[:SS]][Z|+00:00] as UTC.
inline Timestamp parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  s = detail::trim(s);
  if (s.ends_with('Z')) s.remove_suffix(1);
  if (s.ends_with("+00:00")) s.remove_suffix(6);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  auto fail = [&] { return std::invalid_argument("bad timestamp '" + std::string(s) + "'"); };
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw fail();
  if (!detail::parse_int(s.substr(0, 4), y) || !detail::parse_int(s.substr(5, 2), mo) ||
      !detail::parse_int(s.substr(8, 2), d))
    throw fail();
  if (s.size() > 10) {
    if ((s[10] != 'T' && s[10] != ' ') || s.size() < 16 || s[13] != ':') throw fail();
    if (!detail::parse_int(s.substr(11, 2), h) || !detail::parse_int(s.substr(14, 2), mi))
      throw fail();
    if (s.size() > 16) {
      if (s.size() != 19 || s[16] != ':' || !detail::parse_int(s.substr(17, 2), sec))
        throw fail();
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59 || h < 0 || mi < 0 || sec < 0) throw fail();
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

// ---------------------------------------------------------------------------
// market CSV

struct MarketLoad {
  std::vector<RawMarketRecord> records;
  std::size_t dropped_missing = 0;
  std::size_t dropped_penalty = 0;
  std::vector<std::string> warnings;  // spacing irregularities
};

/// Reads a market CSV from a stream. `source` names it in error messages.
inline MarketLoad parse_market_csv(std::istream& in, const std::string& source = "<input>") {
  MarketLoad out;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = detail::trim(line);
    if (row.empty()) continue;
    if (!have_header) {
      if (row != kMarketHeader)
        throw DataError(source + ": malformed header, expected '" + std::string(kMarketHeader) +
                        "'");
      have_header = true;
      continue;
    }
    const auto fields = detail::split(row);
    const auto where = source + ":" + std::to_string(lineno);
    if (fields.size() != 12)
      throw DataError(where + ": expected 12 fields, found " + std::to_string(fields.size()));
    RawMarketRecord rec;
    try {
      rec.timestamp = parse_timestamp(fields[0]);
    } catch (const std::invalid_argument& e) {
      throw DataError(where + ": " + e.what());
    }
    if (std::any_of(fields.begin() + 1, fields.end(), detail::is_missing)) {
      ++out.dropped_missing;
      continue;
    }
    std::array<double, 11> v{};
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!detail::parse_double(fields[i + 1], v[i]))
        throw DataError(where + ": unparseable number '" + std::string(fields[i + 1]) + "'");
    rec.prices = {v[0], v[1], v[2]};
    for (std::size_t z = 0; z < kZones; ++z) {
      rec.realized[z] = v[3 + 2 * z];
      rec.forecast[z] = v[4 + 2 * z];
    }
    try {
      (void)penalties_from_prices(rec.prices);
    } catch (const DataError&) {
      ++out.dropped_penalty;
      continue;
    }
    out.records.push_back(rec);
  }
  if (!have_header) throw DataError(source + ": missing header");

  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < out.records.size(); ++i) {
    const auto dt = out.records[i].timestamp - out.records[i - 1].timestamp;
    if (dt == std::chrono::seconds{0})
      throw DataError(source + ": duplicate timestamp " +
                      format_timestamp(out.records[i].timestamp));
    if (dt != std::chrono::hours{1})
      out.warnings.push_back("non-hourly spacing between " +
                             format_timestamp(out.records[i - 1].timestamp) + " and " +
                             format_timestamp(out.records[i].timestamp));
  }
  return out;
}

inline MarketLoad load_market_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_market_csv(in, path);
}

inline void write_market_csv(std::ostream& out, std::span<const RawMarketRecord> records) {
  out << kMarketHeader << '\n';
  for (const auto& r : records) {
    out << format_timestamp(r.timestamp) << ',' << format_double(r.prices.forward) << ','
        << format_double(r.prices.up_reg) << ',' << format_double(r.prices.down_reg);
    for (std::size_t z = 0; z < kZones; ++z)
      out << ',' << format_double(r.realized[z]) << ',' << format_double(r.forecast[z]);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// installed capacity

struct CapacityEpoch {
  Timestamp from{};
  Zone zone = Zone::onshore_dk1;
  double capacity_mw = 0.0;
};

inline Zone zone_from_names(std::string_view area, std::string_view technology) {
  const bool dk1 = area == "dk1" || area == "DK1";
  const bool dk2 = area == "dk2" || area == "DK2";
  const bool on = technology == "onshore";
  const bool off = technology == "offshore";
  if ((!dk1 && !dk2) || (!on && !off))
    throw std::invalid_argument("unknown zone " + std::string(area) + "/" +
                                std::string(technology));
  return static_cast<Zone>((dk2 ? 2 : 0) + (off ? 1 : 0));
}

inline std::vector<CapacityEpoch> parse_capacity_csv(std::istream& in,
                                                     const std::string& source = "<input>") {
  std::vector<CapacityEpoch> out;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = detail::trim(line);
    if (row.empty()) continue;
    if (!have_header) {
      if (row != kCapacityHeader) throw DataError(source + ": malformed capacity header");
      have_header = true;
      continue;
    }
    const auto f = detail::split(row);
    const auto where = source + ":" + std::to_string(lineno);
    if (f.size() != 4) throw DataError(where + ": expected 4 fields");
    CapacityEpoch e;
    try {
      e.from = parse_timestamp(f[0]);
      e.zone = zone_from_names(f[1], f[2]);
    } catch (const std::invalid_argument& err) {
      throw DataError(where + ": " + err.what());
    }
    if (!detail::parse_double(f[3], e.capacity_mw) || !(e.capacity_mw > 0.0))
      throw DataError(where + ": capacity must be a positive number");
    out.push_back(e);
  }
  if (!have_header) throw DataError(source + ": missing capacity header");
  return out;
}

inline std::vector<CapacityEpoch> load_capacity_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_capacity_csv(in, path);
}

struct NormalizedSeries {
  std::vector<double> values;
  std::size_t clamped = 0;
};

/// Rescales a production series to a 100 MW plant. `installed` holds
/// (from, capacity) epochs of one zone in any order.
inline NormalizedSeries normalize_capacity(std::span<const double> series,
                                           std::span<const Timestamp> timestamps,
                                           std::span<const std::pair<Timestamp, double>> installed) {
  if (series.size() != timestamps.size())
    throw DataError("normalize_capacity: series and timestamps differ in length");
  std::vector<std::pair<Timestamp, double>> epochs(installed.begin(), installed.end());
  std::sort(epochs.begin(), epochs.end());
  NormalizedSeries out;
  out.values.resize(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto it = std::upper_bound(
        epochs.begin(), epochs.end(), timestamps[i],
        [](Timestamp t, const auto& e) { return t < e.first; });
    if (it == epochs.begin())
      throw DataError("no installed capacity covers " + format_timestamp(timestamps[i]));
    const double v = series[i] * 100.0 / std::prev(it)->second;
    const double c = std::clamp(v, 0.0, 100.0);
    if (c != v) ++out.clamped;
    out.values[i] = c;
  }
  return out;
}

// ---------------------------------------------------------------------------
// hour-ahead forecast enhancement

inline constexpr std::size_t kEnhanceLags = 3;

struct ForecastFit {
  std::array<double, 2 + kEnhanceLags> coefficients{};  // intercept, raw, lag1..lag3
  std::vector<double> enhanced;
};

/// Least-squares regression of realized_t on [1, raw_t, realized_{t-1..t-3}]
/// fitted on the first train_len hours, then applied causally. The first
/// three hours have no lags and keep the raw forecast.
inline ForecastFit enhance_forecast(std::span<const double> raw_forecast,
                                    std::span<const double> realized, std::size_t train_len) {
  constexpr std::size_t k = 2 + kEnhanceLags;
  if (raw_forecast.size() != realized.size())
    throw DataError("enhance_forecast: series are not aligned");
  if (train_len < 24) throw DataError("enhance_forecast: train_len must be at least 24");
  if (train_len > realized.size())
    throw DataError("enhance_forecast: train_len exceeds the series length");

  auto row = [&](std::size_t t) {
    Eigen::Matrix<double, k, 1> r;
    r << 1.0, raw_forecast[t], realized[t - 1], realized[t - 2], realized[t - 3];
    return r;
  };
  Eigen::Matrix<double, k, k> xtx = Eigen::Matrix<double, k, k>::Zero();
  Eigen::Matrix<double, k, 1> xty = Eigen::Matrix<double, k, 1>::Zero();
  for (std::size_t t = kEnhanceLags; t < train_len; ++t) {
    const auto r = row(t);
    xtx.noalias() += r * r.transpose();
    xty.noalias() += r * realized[t];
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, k, k>> eig(xtx);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * hi))
    throw DataError("enhance_forecast: design matrix is rank deficient");
  const Eigen::Matrix<double, k, 1> beta = xtx.ldlt().solve(xty);

  ForecastFit fit;
  for (std::size_t i = 0; i < k; ++i) fit.coefficients[i] = beta[i];
  fit.enhanced.resize(realized.size());
  for (std::size_t t = 0; t < realized.size(); ++t)
    fit.enhanced[t] = t < kEnhanceLags ? raw_forecast[t] : row(t).dot(beta);
  return fit;
}

// ---------------------------------------------------------------------------
// feature assembly

struct FeatureSpec {
  std::vector<std::string> names{"one",           "onshore_dk1_fc", "offshore_dk1_fc",
                                 "onshore_dk2_fc", "offshore_dk2_fc", "psi_plus_lag",
                                 "psi_minus_lag",  "ratio_lag"};
  double ratio_epsilon = 1e-5;

  void validate() const {
    if (names.empty() || names.front() != "one")
      throw ConfigError("the first feature must be the constant one");
    if (names.size() != 8) throw ConfigError("the market feature set has 8 entries");
    if (!(ratio_epsilon > 0.0)) throw ConfigError("ratio_epsilon must be positive");
  }
};

/// Hourly market inputs after normalization and enhancement, all aligned.
struct MarketSeries {
  std::vector<Timestamp> timestamps;
  std::vector<PenaltyPair> penalties;
  std::vector<double> energy;                            // normalized DK1 onshore realized
  std::array<std::vector<double>, kZones> forecasts;     // normalized, enhanced
  std::array<ForecastFit, kZones> fits;
  std::size_t clamped = 0;

  std::size_t size() const { return timestamps.size(); }
};

inline MarketSeries prepare_market(std::span<const RawMarketRecord> records,
                                   std::span<const CapacityEpoch> capacity,
                                   std::size_t train_len) {
  MarketSeries m;
  const std::size_t n = records.size();
  m.timestamps.reserve(n);
  m.penalties.reserve(n);
  for (const auto& r : records) {
    m.timestamps.push_back(r.timestamp);
    m.penalties.push_back(penalties_from_prices(r.prices));
  }
  for (std::size_t z = 0; z < kZones; ++z) {
    std::vector<std::pair<Timestamp, double>> epochs;
    for (const auto& c : capacity)
      if (static_cast<std::size_t>(c.zone) == z) epochs.emplace_back(c.from, c.capacity_mw);
    std::vector<double> real(n), fc(n);
    for (std::size_t i = 0; i < n; ++i) {
      real[i] = records[i].realized[z];
      fc[i] = records[i].forecast[z];
    }
    auto nr = normalize_capacity(real, m.timestamps, epochs);
    auto nf = normalize_capacity(fc, m.timestamps, epochs);
    m.clamped += nr.clamped + nf.clamped;
    m.fits[z] = enhance_forecast(nf.values, nr.values, train_len);
    m.forecasts[z] = m.fits[z].enhanced;
    if (z == static_cast<std::size_t>(Zone::onshore_dk1)) m.energy = std::move(nr.values);
  }
  return m;
}

/// One sample per hour from the second one on:
/// x_t = [1, four enhanced forecasts at t, psi+_{t-1}, psi-_{t-1}, r_{t-1}].
inline std::vector<Sample> build_features(const MarketSeries& m, const FeatureSpec& spec = {}) {
  spec.validate();
  const std::size_t n = m.size();
  if (m.penalties.size() != n || m.energy.size() != n)
    throw DataError("build_features: inputs are not aligned");
  for (const auto& f : m.forecasts)
    if (f.size() != n) throw DataError("build_features: forecast series are not aligned");
  std::vector<Sample> out;
  if (n < 2) return out;
  out.reserve(n - 1);
  for (std::size_t t = 1; t < n; ++t) {
    const PenaltyPair& lag = m.penalties[t - 1];
    const double r = lag.psi_plus / (lag.psi_plus + lag.psi_minus + spec.ratio_epsilon);
    Sample s;
    s.energy = m.energy[t];
    s.penalties = m.penalties[t];
    s.features = {1.0,           m.forecasts[0][t], m.forecasts[1][t], m.forecasts[2][t],
                  m.forecasts[3][t], lag.psi_plus, lag.psi_minus,      r};
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// synthetic streams

/// Independent generator per series so that changing one schedule never
/// shifts the draws of another.
enum class RandomStream : std::uint32_t { features = 1, noise = 2, penalties = 3, mask = 4, market = 5 };

inline std::mt19937_64 make_rng(std::uint64_t seed, RandomStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

struct FixedPenalties {
  PenaltyPair pair{1.0, 1.0};
};

/// scheme_a on [0, period), scheme_b on [period, 2 period), and so on.
struct AlternatingPenalties {
  std::size_t period = 1440;
  PenaltyPair scheme_a{1.0, 3.0};
  PenaltyPair scheme_b{3.0, 1.0};
};

/// Replays a recorded penalty sequence, cycling if it is shorter.
struct RecordedPenalties {
  std::vector<PenaltyPair> pairs;
};

using PenaltyScheme = std::variant<FixedPenalties, AlternatingPenalties, RecordedPenalties>;

/// Multiplier s_t in E_t = s_t x_t + noise.
struct NoDrift {};
struct LinearDrift {
  double start = 1.0;
  double end = 1.0;
};
struct SineDrift {
  double amplitude = 0.0;
  double period = 1.0;  // hours
};
using Drift = std::variant<NoDrift, LinearDrift, SineDrift>;

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t horizon = 8760;
  double feature_low = 10.0;
  double feature_high = 90.0;
  double noise_sd = 6.0;
  double capacity = 100.0;
  PenaltyScheme penalty_scheme = FixedPenalties{};
  Drift drift = NoDrift{};
  double zero_penalty_share = 0.0;  // hours whose penalties are replaced by (0, 0)

  void validate() const {
    if (!(feature_low < feature_high)) throw ConfigError("feature_low must be below feature_high");
    if (!(noise_sd > 0.0)) throw ConfigError("noise_sd must be positive");
    if (!(capacity > 0.0)) throw ConfigError("capacity must be positive");
    if (!(zero_penalty_share >= 0.0 && zero_penalty_share <= 1.0))
      throw ConfigError("zero_penalty_share must lie in [0, 1]");
    if (const auto* a = std::get_if<AlternatingPenalties>(&penalty_scheme); a && a->period == 0)
      throw ConfigError("alternation period must be positive");
    if (const auto* r = std::get_if<RecordedPenalties>(&penalty_scheme); r && r->pairs.empty())
      throw ConfigError("recorded penalty scheme is empty");
    if (const auto* s = std::get_if<SineDrift>(&drift); s && !(s->period > 0.0))
      throw ConfigError("drift period must be positive");
  }
};

struct SynthStream {
  std::vector<Sample> samples;
  std::vector<double> forecast;  // noiseless x_t, the FO baseline
  std::size_t clamped = 0;
};

inline PenaltyPair scheme_penalty(const PenaltyScheme& scheme, std::size_t t) {
  return std::visit(
      [t](const auto& s) -> PenaltyPair {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FixedPenalties>)
          return s.pair;
        else if constexpr (std::is_same_v<S, AlternatingPenalties>)
          return (t / s.period) % 2 == 0 ? s.scheme_a : s.scheme_b;
        else
          return s.pairs[t % s.pairs.size()];
      },
      scheme);
}

inline double drift_slope(const Drift& drift, std::size_t t, std::size_t horizon) {
  return std::visit(
      [&](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, NoDrift>)
          return 1.0;
        else if constexpr (std::is_same_v<D, LinearDrift>)
          return horizon < 2 ? d.start
                             : d.start + (d.end - d.start) * static_cast<double>(t) /
                                             static_cast<double>(horizon - 1);
        else
          return 1.0 + d.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                              d.period);
      },
      drift);
}

/// Single-feature stream without intercept: x_t ~ U(low, high) and
/// E_t = s_t x_t + N(0, sd), clamped to [0, capacity].
inline SynthStream synth_stream(const SynthConfig& cfg) {
  cfg.validate();
  auto feat_rng = make_rng(cfg.seed, RandomStream::features);
  auto noise_rng = make_rng(cfg.seed, RandomStream::noise);
  auto mask_rng = make_rng(cfg.seed, RandomStream::mask);
  std::uniform_real_distribution<double> feat(cfg.feature_low, cfg.feature_high);
  std::normal_distribution<double> noise(0.0, cfg.noise_sd);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  SynthStream out;
  out.samples.reserve(cfg.horizon);
  out.forecast.reserve(cfg.horizon);
  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    const double x = feat(feat_rng);
    const double raw = drift_slope(cfg.drift, t, cfg.horizon) * x + noise(noise_rng);
    const double e = std::clamp(raw, 0.0, cfg.capacity);
    if (e != raw) ++out.clamped;
    PenaltyPair pen = scheme_penalty(cfg.penalty_scheme, t);
    if (coin(mask_rng) < cfg.zero_penalty_share) pen = {0.0, 0.0};
    out.samples.push_back({e, pen, {x}});
    out.forecast.push_back(x);
  }
  return out;
}

/// A synthetic four-zone wind and price history in the market CSV shape.
struct SynthMarketConfig {
  std::uint64_t seed = 0;
  std::size_t hours = 8760;
  Timestamp start = std::chrono::sys_days{std::chrono::year{2015} / 1 / 1};
};

struct SynthMarket {
  std::vector<RawMarketRecord> records;
  std::vector<CapacityEpoch> capacity;
};

/// Capacity factors follow a shared AR(1) weather state in logit space with
/// zone-specific deviations; day-ahead forecasts miss by a persistent AR(1)
/// error. The regulation direction follows the aggregate forecast error, so
/// penalties carry information about the coming hour.
inline SynthMarket synth_market(const SynthMarketConfig& cfg) {
  auto rng = make_rng(cfg.seed, RandomStream::market);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::exponential_distribution<double> premium(1.0 / 8.0);

  constexpr std::array<double, kZones> cap{2966.0, 1271.0, 611.0, 874.0};
  constexpr std::array<double, kZones> offset{-0.6, 0.1, -0.8, -0.1};
  SynthMarket m;
  for (std::size_t z = 0; z < kZones; ++z)
    m.capacity.push_back({cfg.start, static_cast<Zone>(z), cap[z]});
  // An onshore DK1 capacity change half way exercises the epoch lookup.
  m.capacity.push_back({cfg.start + std::chrono::hours{cfg.hours / 2}, Zone::onshore_dk1, 3200.0});

  auto logistic = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double weather = 0.0;
  std::array<double, kZones> local{}, err{};
  m.records.reserve(cfg.hours);
  for (std::size_t h = 0; h < cfg.hours; ++h) {
    weather = 0.97 * weather + 0.25 * n01(rng);
    RawMarketRecord r;
    r.timestamp = cfg.start + std::chrono::hours{h};
    const double installed_on1 = h < cfg.hours / 2 ? cap[0] : 3200.0;
    double surplus = 0.0;
    for (std::size_t z = 0; z < kZones; ++z) {
      local[z] = 0.9 * local[z] + 0.15 * n01(rng);
      err[z] = 0.9 * err[z] + 0.12 * n01(rng);
      const double c = z == 0 ? installed_on1 : cap[z];
      r.realized[z] = c * logistic(weather + offset[z] + local[z]);
      r.forecast[z] = c * logistic(weather + offset[z] + local[z] - err[z]);
      surplus += (r.realized[z] - r.forecast[z]) / c;
    }
    const double hour_of_day = static_cast<double>(h % 24);
    const double spot =
        35.0 + 10.0 * std::sin(2.0 * std::numbers::pi * (hour_of_day - 6.0) / 24.0) +
        4.0 * n01(rng);
    const double shock = 0.2 * n01(rng);
    r.prices = {spot, spot, spot};
    if (surplus + shock > 0.08)
      r.prices.down_reg = spot - premium(rng);
    else if (surplus + shock < -0.08)
      r.prices.up_reg = spot + premium(rng);
    m.records.push_back(r);
  }
  return m;
}

// ---------------------------------------------------------------------------
// stream CSV: energy, penalties, FO baseline, then the features

inline void write_stream_csv(std::ostream& out, std::span<const Sample> samples,
                             std::span<const double> forecast) {
  if (samples.size() != forecast.size())
    throw std::invalid_argument("write_stream_csv: forecast length mismatch");
  const std::size_t p = samples.empty() ? 0 : samples.front().dim();
  out << "energy,psi_plus,psi_minus,forecast";
  for (std::size_t j = 0; j < p; ++j) out << ",x" << j;
  out << '\n';
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const Sample& s = samples[t];
    out << format_double(s.energy) << ',' << format_double(s.penalties.psi_plus) << ','
        << format_double(s.penalties.psi_minus) << ',' << format_double(forecast[t]);
    for (double v : s.features) out << ',' << format_double(v);
    out << '\n';
  }
}

struct LoadedStream {
  std::vector<Sample> samples;
  std::vector<double> forecast;
};

inline LoadedStream parse_stream_csv(std::istream& in, const std::string& source = "<input>") {
  LoadedStream out;
  std::string line;
  std::size_t lineno = 0, p = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = detail::trim(line);
    if (row.empty()) continue;
    const auto f = detail::split(row);
    if (!have_header) {
      if (f.size() < 5 || f[0] != "energy" || f[1] != "psi_plus" || f[2] != "psi_minus" ||
          f[3] != "forecast")
        throw DataError(source + ": malformed stream header");
      p = f.size() - 4;
      have_header = true;
      continue;
    }
    const auto where = source + ":" + std::to_string(lineno);
    if (f.size() != p + 4) throw DataError(where + ": wrong number of fields");
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
      if (!detail::parse_double(f[i], v[i]))
        throw DataError(where + ": unparseable number '" + std::string(f[i]) + "'");
    if (v[0] < 0.0 || v[1] < 0.0 || v[2] < 0.0)
      throw DataError(where + ": negative energy or penalty");
    out.samples.push_back({v[0], {v[1], v[2]}, std::vector<double>(v.begin() + 4, v.end())});
    out.forecast.push_back(v[3]);
  }
  if (!have_header) throw DataError(source + ": missing stream header");
  return out;
}

inline LoadedStream load_stream_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_stream_csv(in, path);
}

}  // namespace olnv

#endif
