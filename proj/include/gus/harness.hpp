/**
 * @file harness.hpp
 * @brief Seeded Monte-Carlo experiment driver: per-trial scenario draw,
 * scheduling with GUS / GWC / RANDOM, ZF sum-rate of the scheduled users,
 * aggregation per (algorithm, K_s, P, Omega) cell, CSV and manifest output.
 *
 * Trial t uses scenario seed base_seed + t. All other streams (fading,
 * random schedules, localization error signs, pilot noise) derive from that
 * seed, so results do not depend on thread count or evaluation order.
 */
#pragma once

#include "gus/common.hpp"
#include "gus/gscm.hpp"
#include "gus/localization.hpp"
#include "gus/rx_rate.hpp"
#include "gus/scenario_io.hpp"
#include "gus/scheduler.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace gus {

inline constexpr const char* kCodeVersion = "1.0.0";
inline constexpr int kExperimentSchemaVersion = 1;

enum class Algorithm { kGus, kGwc, kRandom };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kGus: return "GUS";
    case Algorithm::kGwc: return "GWC";
    case Algorithm::kRandom: return "RANDOM";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "GUS") return Algorithm::kGus;
  if (s == "GWC") return Algorithm::kGwc;
  if (s == "RANDOM") return Algorithm::kRandom;
  throw ConfigError("unknown algorithm: " + s);
}

enum class CsiMode { kPerfect, kMmse };

struct NoiseConfig {
  double bandwidth = 20e6;
  double temperature = 290.0;
  double noise_figure_db = 9.0;

  double power() const { return noise_power(bandwidth, temperature, noise_figure_db); }
};

struct LoadSweepConfig {
  std::vector<std::size_t> antennas{50, 100, 150, 200, 250, 300, 350, 400};
  std::vector<std::size_t> users{50, 100, 150};
  std::size_t num_selected = 10;
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  std::vector<Algorithm> algorithms{Algorithm::kGus, Algorithm::kGwc, Algorithm::kRandom};
  std::vector<double> power_w{1.0};
  std::vector<std::size_t> num_selected{5, 10};
  std::vector<unsigned> omega{0};
  std::size_t trials = 50;
  std::uint64_t base_seed = 1;
  NoiseConfig noise;
  NoiseModel mode = NoiseModel::kPhysical;
  GusVariant gus_variant = GusVariant::kLastSelected;
  CsiMode csi = CsiMode::kPerfect;
  std::size_t covariance_samples = 500;
  CrlbParams crlb;  // antennas and d/lambda are taken from the scenario
  ClosureForm closure = ClosureForm::kExact;
  LoadSweepConfig load_sweep;
  std::size_t threads = 1;
  std::string output = "results.csv";

  void validate() const {
    scenario.validate();
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (algorithms.empty()) throw ConfigError("algorithm list is empty");
    if (power_w.empty()) throw ConfigError("power grid is empty");
    if (num_selected.empty()) throw ConfigError("K_s list is empty");
    if (omega.empty()) throw ConfigError("omega list is empty");
    for (double p : power_w) {
      if (!(p > 0.0)) throw ConfigError("powers must be > 0");
    }
    for (std::size_t ks : num_selected) {
      if (ks < 1 || ks > scenario.num_users) throw ConfigError("each K_s must lie in [1, num_users]");
      if (ks > scenario.antenna_count) throw ConfigError("each K_s must not exceed antenna_count (ZF)");
    }
    if (csi == CsiMode::kMmse && covariance_samples < 1) throw ConfigError("covariance_samples must be >= 1");
  }

  CrlbParams crlb_for_scenario() const {
    CrlbParams p = crlb;
    p.antennas = scenario.antenna_count;
    p.d_over_lambda = scenario.antenna_spacing_fraction;
    return p;
  }
};

// ---------------------------------------------------------------------------
// Config (de)serialization. Keys mirror ExperimentConfig; missing keys keep
// their defaults and unknown keys are errors.

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json algs = nlohmann::json::array();
  for (Algorithm a : c.algorithms) algs.push_back(to_string(a));
  return {
      {"schema_version", kExperimentSchemaVersion},
      {"scenario", c.scenario},
      {"algorithms", algs},
      {"power_w", c.power_w},
      {"num_selected", c.num_selected},
      {"omega", c.omega},
      {"trials", c.trials},
      {"base_seed", c.base_seed},
      {"noise", {{"bandwidth", c.noise.bandwidth}, {"temperature", c.noise.temperature},
                 {"noise_figure_db", c.noise.noise_figure_db}}},
      {"mode", c.mode == NoiseModel::kPhysical ? "physical" : "paper-literal"},
      {"gus_variant", c.gus_variant == GusVariant::kLastSelected ? "last" : "set"},
      {"csi", c.csi == CsiMode::kPerfect ? "perfect" : "mmse"},
      {"covariance_samples", c.covariance_samples},
      {"crlb", {{"sensors_per_dir", c.crlb.sensors_per_dir}, {"periods", c.crlb.periods},
                {"pn_length", c.crlb.pn_length}, {"input_snr_db", 10.0 * std::log10(c.crlb.input_snr)},
                {"bandwidth", c.crlb.bandwidth},
                {"pattern", c.crlb.pattern == FieldPatternForm::kPrinted ? "printed" : "quartic"}}},
      {"closure", c.closure == ClosureForm::kExact ? "exact" : "printed"},
      {"load_sweep", {{"antennas", c.load_sweep.antennas}, {"users", c.load_sweep.users},
                      {"num_selected", c.load_sweep.num_selected}}},
      {"threads", c.threads},
      {"output", c.output},
  };
}

inline NoiseModel noise_model_from_string(const std::string& s) {
  if (s == "physical") return NoiseModel::kPhysical;
  if (s == "paper-literal") return NoiseModel::kPaperLiteral;
  throw ConfigError("mode must be physical or paper-literal, got " + s);
}

inline GusVariant gus_variant_from_string(const std::string& s) {
  if (s == "last") return GusVariant::kLastSelected;
  if (s == "set") return GusVariant::kSelectedSet;
  throw ConfigError("gus_variant must be last or set, got " + s);
}

namespace detail {

template <typename F>
void for_each_key(const nlohmann::json& j, const char* section, F&& f) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    try {
      if (!f(it.key(), it.value())) throw ConfigError(std::string("unknown key in ") + section + ": " + it.key());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad value for ") + section + "." + it.key() + ": " + e.what());
    }
  }
}

}  // namespace detail

/// Overlay the keys present in `j` onto `c`.
inline void apply_json(const nlohmann::json& j, ExperimentConfig& c) {
  detail::for_each_key(j, "config", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "schema_version") {
      if (v.get<int>() != kExperimentSchemaVersion) throw ConfigError("unsupported config schema_version");
    } else if (k == "scenario") {
      from_json(v, c.scenario);
    } else if (k == "algorithms") {
      c.algorithms.clear();
      for (const auto& a : v) c.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
    } else if (k == "power_w") {
      c.power_w = v.get<std::vector<double>>();
    } else if (k == "power_dbm") {
      c.power_w.clear();
      for (double dbm : v.get<std::vector<double>>()) c.power_w.push_back(std::pow(10.0, (dbm - 30.0) / 10.0));
    } else if (k == "num_selected") {
      c.num_selected = v.get<std::vector<std::size_t>>();
    } else if (k == "omega") {
      c.omega = v.get<std::vector<unsigned>>();
    } else if (k == "trials") {
      c.trials = v.get<std::size_t>();
    } else if (k == "base_seed") {
      c.base_seed = v.get<std::uint64_t>();
    } else if (k == "noise") {
      detail::for_each_key(v, "noise", [&](const std::string& nk, const nlohmann::json& nv) {
        if (nk == "bandwidth") c.noise.bandwidth = nv.get<double>();
        else if (nk == "temperature") c.noise.temperature = nv.get<double>();
        else if (nk == "noise_figure_db") c.noise.noise_figure_db = nv.get<double>();
        else return false;
        return true;
      });
    } else if (k == "mode") {
      c.mode = noise_model_from_string(v.get<std::string>());
    } else if (k == "gus_variant") {
      c.gus_variant = gus_variant_from_string(v.get<std::string>());
    } else if (k == "csi") {
      const auto s = v.get<std::string>();
      if (s == "perfect") c.csi = CsiMode::kPerfect;
      else if (s == "mmse") c.csi = CsiMode::kMmse;
      else throw ConfigError("csi must be perfect or mmse");
    } else if (k == "covariance_samples") {
      c.covariance_samples = v.get<std::size_t>();
    } else if (k == "crlb") {
      detail::for_each_key(v, "crlb", [&](const std::string& ck, const nlohmann::json& cv) {
        if (ck == "sensors_per_dir") c.crlb.sensors_per_dir = cv.get<std::size_t>();
        else if (ck == "periods") c.crlb.periods = cv.get<std::size_t>();
        else if (ck == "pn_length") c.crlb.pn_length = cv.get<std::size_t>();
        else if (ck == "input_snr_db") c.crlb.input_snr = db_to_linear(cv.get<double>());
        else if (ck == "bandwidth") c.crlb.bandwidth = cv.get<double>();
        else if (ck == "pattern") {
          const auto s = cv.get<std::string>();
          if (s == "printed") c.crlb.pattern = FieldPatternForm::kPrinted;
          else if (s == "quartic") c.crlb.pattern = FieldPatternForm::kQuartic;
          else throw ConfigError("crlb.pattern must be printed or quartic");
        } else return false;
        return true;
      });
    } else if (k == "closure") {
      const auto s = v.get<std::string>();
      if (s == "exact") c.closure = ClosureForm::kExact;
      else if (s == "printed") c.closure = ClosureForm::kPrinted;
      else throw ConfigError("closure must be exact or printed");
    } else if (k == "load_sweep") {
      detail::for_each_key(v, "load_sweep", [&](const std::string& lk, const nlohmann::json& lv) {
        if (lk == "antennas") c.load_sweep.antennas = lv.get<std::vector<std::size_t>>();
        else if (lk == "users") c.load_sweep.users = lv.get<std::vector<std::size_t>>();
        else if (lk == "num_selected") c.load_sweep.num_selected = lv.get<std::size_t>();
        else return false;
        return true;
      });
    } else if (k == "threads") {
      c.threads = v.get<std::size_t>();
    } else if (k == "output") {
      c.output = v.get<std::string>();
    } else {
      return false;
    }
    return true;
  });
}

inline void load_config_file(const std::string& path, ExperimentConfig& c) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config file " + path + ": " + e.what());
  }
  apply_json(j, c);
}

// ---------------------------------------------------------------------------
// Figure presets (desk scale)

inline ExperimentConfig figure2_defaults() {
  ExperimentConfig c;
  c.algorithms = {Algorithm::kGus, Algorithm::kGwc, Algorithm::kRandom};
  c.power_w = {0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0};
  c.num_selected = {5, 10};
  c.omega = {0};
  c.output = "fig2.csv";
  return c;
}

inline ExperimentConfig figure4_defaults() {
  ExperimentConfig c;
  c.algorithms = {Algorithm::kGus, Algorithm::kRandom};
  c.power_w = {1.0};
  c.num_selected = {5, 10};
  c.omega = {0, 1, 2, 3, 4, 5};
  c.crlb.sensors_per_dir = 5;
  c.crlb.pn_length = 127;
  c.crlb.input_snr = db_to_linear(20.0);
  c.crlb.bandwidth = 20e6;
  c.output = "fig4.csv";
  return c;
}

inline ExperimentConfig figure3_defaults() {
  ExperimentConfig c;
  c.output = "fig3.csv";
  return c;
}

// ---------------------------------------------------------------------------
// Results

struct TrialResult {
  std::size_t trial = 0;
  Algorithm algorithm = Algorithm::kGus;
  double power_w = 0.0;
  std::size_t num_selected = 0;
  unsigned omega = 0;
  double sum_rate = 0.0;
  std::uint64_t load = 0;
  std::vector<std::size_t> selected;
  std::vector<double> scores;
  bool failed = false;
  std::string failure;
};

struct AggregateStats {
  Algorithm algorithm = Algorithm::kGus;
  std::size_t num_selected = 0;
  double power_w = 0.0;
  unsigned omega = 0;
  std::size_t count = 0;     // rows entering the mean
  std::size_t excluded = 0;  // flagged trials
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t load = 0;
};

struct ExperimentResult {
  std::vector<TrialResult> trials;  // ordered by (trial, K_s, P, omega, algorithm)
  std::vector<AggregateStats> cells;
  std::size_t gus_excluded_rows = 0;
  std::size_t localization_fallbacks = 0;

  const AggregateStats* find(Algorithm a, std::size_t ks, double p, unsigned omega) const {
    for (const AggregateStats& c : cells) {
      if (c.algorithm == a && c.num_selected == ks && c.power_w == p && c.omega == omega) return &c;
    }
    return nullptr;
  }
};

namespace detail {

struct TrialOutput {
  std::vector<TrialResult> rows;
  std::size_t gus_excluded_rows = 0;
  std::size_t localization_fallbacks = 0;
};

inline CMatrix select_columns(const CMatrix& h, std::span<const std::size_t> cols) {
  CMatrix out(h.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = h.col(static_cast<Eigen::Index>(cols[i]));
  return out;
}

/// Receiver built from the configured CSI, rate evaluated on the true channel.
inline double evaluate_rate(const ExperimentConfig& cfg, const Scenario& s, const CMatrix& h_true,
                            std::span<const std::size_t> selected, const PowerConfig& power, std::uint64_t noise_seed) {
  if (cfg.csi == CsiMode::kPerfect) return sum_rate(h_true, zf_weights(h_true), power, cfg.mode);

  const Eigen::Index m = h_true.rows();
  const auto ks = static_cast<Eigen::Index>(selected.size());
  std::vector<CVector> samples;
  samples.reserve(cfg.covariance_samples);
  for (std::size_t r = 1; r <= cfg.covariance_samples; ++r) {
    samples.push_back(vectorize(channel_matrix(s, selected, r).entries));
  }
  const CMatrix cov = channel_covariance(samples);
  const PilotConfig pilot = orthogonal_pilots(selected.size(), power.per_user(selected.size()), power.noise_power);

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(power.noise_power / 2.0));
  CMatrix noise(m, pilot.length());
  for (Eigen::Index c = 0; c < noise.cols(); ++c) {
    for (Eigen::Index r = 0; r < m; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      noise(r, c) = {re, im};
    }
  }
  const CMatrix y = h_true * pilot.pilots + noise;
  const CMatrix h_est = unvectorize(mmse_estimate(y, pilot, cov), m, ks);
  return sum_rate(h_true, zf_weights(h_est), power, cfg.mode);
}

inline TrialOutput run_trial(const ExperimentConfig& cfg, std::size_t trial) {
  TrialOutput out;
  ScenarioConfig sc = cfg.scenario;
  sc.rng_seed = cfg.base_seed + trial;
  const Scenario s = generate_scenario(sc);
  const VMatrix v = build_v_matrix(s);
  const CMatrix h_all = full_channel(s).entries;
  const std::size_t k_total = s.users.size();
  const std::size_t m = sc.antenna_count;
  const double pn = cfg.noise.power();
  const CrlbParams crlb_params = cfg.crlb_for_scenario();

  // GUS selections depend on (K_s, omega) only; RANDOM on K_s only.
  std::map<unsigned, VMatrix> v_by_omega;
  for (unsigned w : cfg.omega) {
    if (w == 0) {
      v_by_omega[w] = v;
    } else {
      PerturbedGeometry g = perturb_and_rebuild(s, w, crlb_params, sc.rng_seed, cfg.closure);
      out.localization_fallbacks += g.fallbacks;
      v_by_omega[w] = std::move(g.v_tilde);
    }
  }

  for (std::size_t ks : cfg.num_selected) {
    std::map<unsigned, std::optional<ScheduleResult>> gus;
    std::map<unsigned, std::string> gus_error;
    for (unsigned w : cfg.omega) {
      try {
        gus[w] = gus_select(v_by_omega.at(w), ks, cfg.gus_variant);
        out.gus_excluded_rows += gus[w]->excluded.size();
      } catch (const std::exception& e) {
        gus[w] = std::nullopt;
        gus_error[w] = e.what();
      }
    }
    const ScheduleResult rnd = random_select(k_total, ks, derive_seed(sc.rng_seed, ks));

    for (std::size_t pi = 0; pi < cfg.power_w.size(); ++pi) {
      const PowerConfig power{cfg.power_w[pi], pn};
      std::optional<ScheduleResult> gwc;
      std::string gwc_error;
      const bool want_gwc = std::find(cfg.algorithms.begin(), cfg.algorithms.end(), Algorithm::kGwc) != cfg.algorithms.end();
      if (want_gwc) {
        try {
          gwc = gwc_select(h_all, ks, power);
        } catch (const std::exception& e) {
          gwc_error = e.what();
        }
      }

      for (unsigned w : cfg.omega) {
        for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai) {
          const Algorithm alg = cfg.algorithms[ai];
          TrialResult row;
          row.trial = trial;
          row.algorithm = alg;
          row.power_w = cfg.power_w[pi];
          row.num_selected = ks;
          row.omega = w;
          row.load = estimation_load(m, alg == Algorithm::kGwc ? k_total : ks);

          const ScheduleResult* sel = nullptr;
          switch (alg) {
            case Algorithm::kGus:
              if (gus[w]) sel = &*gus[w];
              else row.failure = gus_error[w];
              break;
            case Algorithm::kGwc:
              if (gwc) sel = &*gwc;
              else row.failure = gwc_error;
              break;
            case Algorithm::kRandom:
              sel = &rnd;
              break;
          }
          if (sel) {
            row.selected = sel->selected;
            row.scores = sel->per_step_scores;
            try {
              const CMatrix h = select_columns(h_all, sel->selected);
              row.sum_rate = evaluate_rate(cfg, s, h, sel->selected, power,
                                           derive_seed(sc.rng_seed, Stream::kPilotNoise, ks, pi, ai));
            } catch (const std::exception& e) {
              row.failure = e.what();
            }
          }
          row.failed = !row.failure.empty() || !std::isfinite(row.sum_rate);
          if (row.failed && row.failure.empty()) row.failure = "non-finite sum-rate";
          out.rows.push_back(std::move(row));
        }
      }
    }
  }
  return out;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<detail::TrialOutput> outputs(cfg.trials);
  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, cfg.trials));
  if (threads == 1) {
    for (std::size_t t = 0; t < cfg.trials; ++t) outputs[t] = detail::run_trial(cfg, t);
  } else {
    // Static interleaved partition; each trial writes only its own slot.
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t t = w; t < cfg.trials; t += threads) outputs[t] = detail::run_trial(cfg, t);
      }));
    }
    for (auto& f : workers) f.get();
  }

  ExperimentResult res;
  for (auto& o : outputs) {
    res.gus_excluded_rows += o.gus_excluded_rows;
    res.localization_fallbacks += o.localization_fallbacks;
    for (auto& r : o.rows) res.trials.push_back(std::move(r));
  }

  // Ordered reduction: cells in config order, trials in index order.
  for (Algorithm alg : cfg.algorithms) {
    for (std::size_t ks : cfg.num_selected) {
      for (double p : cfg.power_w) {
        for (unsigned w : cfg.omega) {
          AggregateStats cell;
          cell.algorithm = alg;
          cell.num_selected = ks;
          cell.power_w = p;
          cell.omega = w;
          double sum = 0.0;
          double sum_sq = 0.0;
          for (const TrialResult& r : res.trials) {
            if (r.algorithm != alg || r.num_selected != ks || r.power_w != p || r.omega != w) continue;
            cell.load = r.load;
            if (r.failed) {
              ++cell.excluded;
              continue;
            }
            ++cell.count;
            sum += r.sum_rate;
            sum_sq += r.sum_rate * r.sum_rate;
          }
          if (cell.count > 0) {
            const double n = static_cast<double>(cell.count);
            cell.mean = sum / n;
            if (cell.count > 1) {
              const double var = std::max(0.0, (sum_sq - n * cell.mean * cell.mean) / (n - 1.0));
              cell.std_error = std::sqrt(var / n);
            }
          } else {
            cell.mean = NAN;
            cell.std_error = NAN;
          }
          res.cells.push_back(cell);
        }
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string join_indices(std::span<const std::size_t> idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(idx[i]);
  }
  return s;
}

inline std::string join_doubles(std::span<const double> xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ' ';
    s += fmt_double(xs[i]);
  }
  return s;
}

}  // namespace detail

inline constexpr const char* kCellCsvHeader =
    "algorithm,num_selected,power_w,power_dbm,omega,trials,excluded,mean_sum_rate,std_error,estimation_load";

inline std::string cells_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << kCellCsvHeader << '\n';
  for (const AggregateStats& c : r.cells) {
    os << to_string(c.algorithm) << ',' << c.num_selected << ',' << detail::fmt_double(c.power_w) << ','
       << detail::fmt_double(watts_to_dbm(c.power_w)) << ',' << c.omega << ',' << c.count << ',' << c.excluded << ','
       << detail::fmt_double(c.mean) << ',' << detail::fmt_double(c.std_error) << ',' << c.load << '\n';
  }
  return os.str();
}

inline constexpr const char* kTrialCsvHeader =
    "trial,algorithm,num_selected,power_w,omega,sum_rate,estimation_load,failed,selected,scores";

/// Per-trial rows including the ordered schedule and per-step scores.
inline std::string trials_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << kTrialCsvHeader << '\n';
  for (const TrialResult& t : r.trials) {
    os << t.trial << ',' << to_string(t.algorithm) << ',' << t.num_selected << ',' << detail::fmt_double(t.power_w)
       << ',' << t.omega << ',' << detail::fmt_double(t.sum_rate) << ',' << t.load << ',' << (t.failed ? 1 : 0) << ','
       << detail::join_indices(t.selected) << ',' << detail::join_doubles(t.scores) << '\n';
  }
  return os.str();
}

struct LoadRow {
  std::size_t antennas;
  std::size_t users;
  std::size_t num_selected;
  std::uint64_t load_gus;
  std::uint64_t load_full_csi;
  double ratio;
};

/// Estimation load of GUS (K_s channels) against full CSI (all K channels) over M.
inline std::vector<LoadRow> figure3_load(const LoadSweepConfig& c) {
  if (c.antennas.empty() || c.users.empty()) throw ConfigError("load sweep grids are empty");
  std::vector<LoadRow> rows;
  for (std::size_t k : c.users) {
    if (c.num_selected > k) throw ConfigError("load sweep: K_s exceeds K");
    for (std::size_t m : c.antennas) {
      const std::uint64_t gus = estimation_load(m, c.num_selected);
      const std::uint64_t full = estimation_load(m, k);
      rows.push_back({m, k, c.num_selected, gus, full, static_cast<double>(gus) / static_cast<double>(full)});
    }
  }
  return rows;
}

inline constexpr const char* kLoadCsvHeader = "antennas,users,num_selected,load_gus,load_full_csi,ratio";

inline std::string load_csv(std::span<const LoadRow> rows) {
  std::ostringstream os;
  os << kLoadCsvHeader << '\n';
  for (const LoadRow& r : rows) {
    os << r.antennas << ',' << r.users << ',' << r.num_selected << ',' << r.load_gus << ',' << r.load_full_csi << ','
       << detail::fmt_double(r.ratio) << '\n';
  }
  return os.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
  return buf;
}

inline std::string manifest_text(const ExperimentConfig& c, const std::string& command,
                                 const ExperimentResult* r = nullptr) {
  std::ostringstream os;
  os << "command=" << command << '\n'
     << "code_version=" << kCodeVersion << '\n'
     << "config_schema_version=" << kExperimentSchemaVersion << '\n'
     << "config_hash=" << config_hash(c) << '\n'
     << "base_seed=" << c.base_seed << '\n'
     << "trials=" << c.trials << '\n';
  if (r) {
    std::size_t flagged = 0;
    for (const auto& t : r->trials) flagged += t.failed ? 1 : 0;
    os << "flagged_rows=" << flagged << '\n'
       << "gus_excluded_rows=" << r->gus_excluded_rows << '\n'
       << "localization_fallbacks=" << r->localization_fallbacks << '\n';
  }
  os << "config=" << to_json(c).dump() << '\n';
  return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << text;
}

}  // namespace gus
