#include "qsmooth/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qsmooth/errors.hpp"
#include "qsmooth/filtering.hpp"
#include "qsmooth/io.hpp"
#include "qsmooth/parallel.hpp"
#include "qsmooth/rng.hpp"
#include "qsmooth/unraveling.hpp"

#ifndef QSMOOTH_VERSION
#define QSMOOTH_VERSION "unknown"
#endif

namespace qsmooth {

using nlohmann::ordered_json;

std::string library_version() { return QSMOOTH_VERSION; }

namespace {

template <class T>
T get_as(const ordered_json& value, const std::string& key, const char* type) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(key, std::string("expected ") + type);
  }
}

double get_positive(const ordered_json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

std::size_t get_count(const ordered_json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<Combo> parse_combos(const ordered_json& v) {
  auto parse_list = [](const std::vector<std::string>& items) {
    std::vector<Combo> out;
    for (const auto& item : items) {
      if (item == "all27") {
        for (const auto& c : Combo::all()) out.push_back(c);
        continue;
      }
      try {
        out.push_back(Combo::parse(item));
      } catch (const DomainError& e) {
        throw ConfigError("combos", e.what());
      }
    }
    return out;
  };
  if (v.is_string()) {
    std::vector<std::string> items;
    std::stringstream ss(v.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) items.push_back(item);
    }
    return parse_list(items);
  }
  if (v.is_array()) return parse_list(get_as<std::vector<std::string>>(v, "combos", "a list of strings"));
  throw ConfigError("combos", "expected \"all27\" or a list of dOdVdW strings");
}

BlochVector parse_initial(const ordered_json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "ground") return {0.0, 0.0, -1.0};
    if (s == "excited") return {0.0, 0.0, 1.0};
    if (s == "plus_y") return {0.0, 1.0, 0.0};
    if (s == "plus_x") return {1.0, 0.0, 0.0};
    throw ConfigError("initial_state", "unknown state name '" + s + "'");
  }
  const auto b = get_as<std::vector<double>>(v, "initial_state", "a state name or a Bloch vector [x, y, z]");
  if (b.size() != 3) throw ConfigError("initial_state", "Bloch vector needs three components");
  return {b[0], b[1], b[2]};
}

ordered_json setup_table_json(const CorrelationMatrix& m) {
  ordered_json j = ordered_json::object();
  for (Setup a : kAllSetups) {
    for (Setup b : kAllSetups) {
      j[setup_label(a) + setup_label(b)] =
          m[setup_index(a)][setup_index(b)] == Correlation::nonzero ? "nonzero" : "zero";
    }
  }
  return j;
}

ordered_json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"err", e.err}}; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string());
  out << text;
}

std::vector<std::string> powers_row(const PowerSeries& s, std::size_t i) {
  return {format_double(s.t[i]),    format_double(s.R_S[i]), format_double(s.R_S_err[i]),
          format_double(s.R_F[i]),  format_double(s.R_F_err[i]), format_double(s.R_P[i]),
          format_double(s.R_P_err[i]), format_double(s.alpha[i]), format_double(s.ess_mean[i])};
}

}  // namespace

const std::vector<std::string>& powers_header() {
  static const std::vector<std::string> header{"t", "R_S", "R_S_err", "R_F", "R_F_err", "R_P", "R_P_err", "alpha", "ess_mean"};
  return header;
}

ModelParams ExperimentConfig::params() const {
  ModelParams p;
  p.gamma = gamma;
  p.omega = omega_over_gamma * gamma;
  p.dt = dt;
  p.t_i = 0.0;
  p.t_f = t_total;
  return p;
}

QubitState ExperimentConfig::initial() const { return bloch_to_state(initial_state); }

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("configuration is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, v] : doc.items()) {
    if (key == "gamma") c.gamma = get_positive(v, key);
    else if (key == "omega_over_gamma") c.omega_over_gamma = get_positive(v, key);
    else if (key == "dt") c.dt = get_positive(v, key);
    else if (key == "t_total") c.t_total = get_positive(v, key);
    else if (key == "n_true_trajectories") c.n_true_trajectories = get_count(v, key);
    else if (key == "n_hypothetical") c.n_hypothetical = get_count(v, key);
    else if (key == "ss_window") {
      const auto w = get_as<std::vector<double>>(v, key, "[start, end]");
      if (w.size() != 2) throw ConfigError(key, "expected [start, end]");
      c.ss_window = {w[0], w[1]};
    } else if (key == "master_seed") {
      if (!v.is_number_unsigned()) throw ConfigError(key, "expected a non-negative integer");
      c.master_seed = v.get<std::uint64_t>();
    } else if (key == "combos") c.combos = parse_combos(v);
    else if (key == "output_dir") c.output_dir = get_as<std::string>(v, key, "a path string");
    else if (key == "initial_state") c.initial_state = parse_initial(v);
    else if (key == "output_stride") c.output_stride = get_count(v, key);
    else if (key == "bootstrap_resamples") c.bootstrap_resamples = get_count(v, key);
    else if (key == "resample_threshold") c.resample_threshold = get_positive(v, key);
    else if (key == "estimator") {
      const auto s = get_as<std::string>(v, key, "\"filter_anchored\" or \"plain\"");
      if (s == "filter_anchored") c.estimator = SmoothingEstimator::filter_anchored;
      else if (s == "plain") c.estimator = SmoothingEstimator::plain;
      else throw ConfigError(key, "expected \"filter_anchored\" or \"plain\"");
    } else if (key == "threads") c.threads = static_cast<unsigned>(get_count(v, key));
    else if (key == "budget_particle_steps") c.budget_particle_steps = get_positive(v, key);
    else if (key == "dump_trajectories") c.dump_trajectories = get_count(v, key);
    else if (key == "correlators") {
      if (v.is_boolean()) {
        c.correlators = v.get<bool>();
        continue;
      }
      if (!v.is_object()) throw ConfigError(key, "expected a boolean or an object");
      for (const auto& [sub, sv] : v.items()) {
        const std::string name = key + "." + sub;
        if (sub == "enabled") c.correlators = get_as<bool>(sv, name, "a boolean");
        else if (sub == "tau_max") c.correlator.tau_max = get_positive(sv, name);
        else if (sub == "n_tau") c.correlator.n_tau = get_count(sv, name);
        else if (sub == "n_trajectories") c.correlator.n_trajectories = get_count(sv, name);
        else if (sub == "duration") c.correlator.duration = get_positive(sv, name);
        else if (sub == "burn_in") c.correlator.burn_in = get_positive(sv, name);
        else if (sub == "threshold") c.correlator.threshold = get_positive(sv, name);
        else if (sub == "min_band") c.correlator.min_band = get_count(sv, name);
        else throw ConfigError(name, "unknown configuration key");
      }
    } else if (key == "thresholds") {
      if (!v.is_object()) throw ConfigError(key, "expected an object");
      for (const auto& [sub, sv] : v.items()) {
        const std::string name = key + "." + sub;
        if (sub == "small") c.thresholds.small = get_positive(sv, name);
        else if (sub == "large") c.thresholds.large = get_positive(sv, name);
        else if (sub == "similar") c.thresholds.similar = get_positive(sv, name);
        else if (sub == "significance") c.thresholds.significance = get_positive(sv, name);
        else throw ConfigError(name, "unknown configuration key");
      }
    } else {
      throw ConfigError(key, "unknown configuration key");
    }
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ExperimentConfig::to_json() const {
  ordered_json j;
  j["gamma"] = gamma;
  j["omega_over_gamma"] = omega_over_gamma;
  j["dt"] = dt;
  j["t_total"] = t_total;
  j["n_true_trajectories"] = n_true_trajectories;
  j["n_hypothetical"] = n_hypothetical;
  j["ss_window"] = {ss_window[0], ss_window[1]};
  j["master_seed"] = master_seed;
  std::vector<std::string> labels;
  for (const auto& c : combos) labels.push_back(c.label());
  j["combos"] = labels;
  j["output_dir"] = output_dir.string();
  j["initial_state"] = {initial_state.x, initial_state.y, initial_state.z};
  j["output_stride"] = output_stride;
  j["bootstrap_resamples"] = bootstrap_resamples;
  j["resample_threshold"] = resample_threshold;
  j["estimator"] = estimator == SmoothingEstimator::filter_anchored ? "filter_anchored" : "plain";
  j["threads"] = threads;
  j["budget_particle_steps"] = budget_particle_steps;
  j["dump_trajectories"] = dump_trajectories;
  j["correlators"] = {{"enabled", correlators},
                      {"tau_max", correlator.tau_max},
                      {"n_tau", correlator.n_tau},
                      {"n_trajectories", correlator.n_trajectories},
                      {"duration", correlator.duration},
                      {"burn_in", correlator.burn_in},
                      {"threshold", correlator.threshold},
                      {"min_band", correlator.min_band}};
  j["thresholds"] = {{"small", thresholds.small},
                     {"large", thresholds.large},
                     {"similar", thresholds.similar},
                     {"significance", thresholds.significance}};
  return j.dump(2);
}

void ExperimentConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("gamma", "must be positive");
  if (!(omega_over_gamma >= 0.0)) throw ConfigError("omega_over_gamma", "must be non-negative");
  if (!(dt > 0.0)) throw ConfigError("dt", "must be positive");
  if (!(t_total > 0.0)) throw ConfigError("t_total", "must be positive");
  if (!(0.5 * gamma * dt <= 0.01)) {
    std::ostringstream os;
    os << "gamma*dt/2 = " << 0.5 * gamma * dt << " exceeds 0.01";
    throw ConfigError("dt", os.str());
  }
  const ModelParams p = params();
  if (std::abs(static_cast<double>(p.steps()) * dt - t_total) > 1e-9 * t_total) {
    throw ConfigError("t_total", "must be a whole number of steps");
  }
  if (n_true_trajectories < 2) throw ConfigError("n_true_trajectories", "must be at least 2");
  if (n_hypothetical < 1) throw ConfigError("n_hypothetical", "must be at least 1");
  if (!(ss_window[0] >= 0.0 && ss_window[0] < ss_window[1] && ss_window[1] <= t_total)) {
    throw ConfigError("ss_window", "must satisfy 0 <= start < end <= t_total");
  }
  if (combos.empty()) throw ConfigError("combos", "no combos selected");
  if (output_stride == 0 || p.steps() % output_stride != 0) {
    throw ConfigError("output_stride", "must be positive and divide the number of steps");
  }
  if (bootstrap_resamples < 2) throw ConfigError("bootstrap_resamples", "must be at least 2");
  if (!(resample_threshold >= 0.0 && resample_threshold <= 1.0)) {
    throw ConfigError("resample_threshold", "must lie in [0, 1]");
  }
  if (std::abs(initial_state.norm() - 1.0) > 1e-9) throw ConfigError("initial_state", "must be a pure state (|b| = 1)");
  if (!(budget_particle_steps >= 0.0)) throw ConfigError("budget_particle_steps", "must be non-negative");
  if (correlators) {
    try {
      correlator.validate(p);
    } catch (const DomainError& e) {
      throw ConfigError("correlators", e.what());
    }
  }
  const auto& th = thresholds;
  if (!(th.small > 0.0 && th.small <= th.large && th.similar > 0.0 && th.significance > 0.0)) {
    throw ConfigError("thresholds", "need 0 < small <= large, similar > 0, significance > 0");
  }
}

namespace {

// (dO, dV) pairs in canonical order with the assumed setups each needs; the
// valid setup is always included because wrong combos are judged against it.
std::map<std::pair<int, int>, std::set<int>> plan_pairs(const std::vector<Combo>& combos) {
  std::map<std::pair<int, int>, std::set<int>> pairs;
  for (const auto& c : combos) {
    auto& s = pairs[{static_cast<int>(c.observed), static_cast<int>(c.valid)}];
    s.insert(static_cast<int>(c.valid));
    s.insert(static_cast<int>(c.assumed));
  }
  return pairs;
}

}  // namespace

std::string CostEstimate::summary() const {
  std::ostringstream os;
  os << smoothing_runs << " smoothing ensembles x " << steps << " steps: " << particle_steps
     << " particle-steps (" << per_combo << " per ensemble), ~" << memory_bytes / 1e6 << " MB of state tables, ~"
     << projected_seconds / 60.0 << " min on one thread";
  return os.str();
}

CostEstimate estimate(const ExperimentConfig& config) {
  CostEstimate e;
  const ModelParams p = config.params();
  e.steps = p.steps();
  for (const auto& [pair, setups] : plan_pairs(config.combos)) e.smoothing_runs += setups.size();
  e.per_combo = static_cast<double>(config.n_true_trajectories) * static_cast<double>(config.n_hypothetical) *
                static_cast<double>(e.steps);
  e.particle_steps = e.per_combo * static_cast<double>(e.smoothing_runs);
  const double times = static_cast<double>(e.steps / std::max<std::size_t>(config.output_stride, 1) + 1);
  // Five Bloch tables per pair, six power matrices per combo, bootstrap weights.
  e.memory_bytes = static_cast<double>(config.n_true_trajectories) * times * (5 * 24 + 6 * 8) +
                   static_cast<double>(config.n_true_trajectories * config.bootstrap_resamples) * 8;
  e.projected_seconds = e.particle_steps * 40e-9;
  return e;
}

const WindowSummary& ExperimentResult::summary(const Combo& c) const {
  for (const auto& s : summaries) {
    if (s.combo == c) return s;
  }
  throw DomainError("no summary for " + c.label());
}

const PowerSeries& ExperimentResult::power(const Combo& c) const {
  for (const auto& s : powers) {
    if (s.combo == c) return s;
  }
  throw DomainError("no power series for " + c.label());
}

std::vector<CorrelatorSeries> run_correlators(const ExperimentConfig& config, CorrelationMatrix* classification) {
  const ModelParams p = config.params();
  std::vector<CorrelatorSeries> out;
  CorrelationMatrix m{};
  for (Setup a : kAllSetups) {
    for (Setup b : kAllSetups) {
      out.push_back(two_time_correlator(a, b, p, config.correlator, config.master_seed, config.threads));
      m[setup_index(a)][setup_index(b)] =
          classify_pair(out.back(), config.correlator.threshold, config.correlator.min_band);
    }
  }
  if (classification) *classification = m;
  return out;
}

namespace {

struct RecordDiagnostics {
  double identity = 0.0;
  double delta_trace = 0.0;
  double min_purity = 1.0;
  double inplane_x = 0.0;
  std::size_t clamped = 0;
  std::size_t repairs = 0;
};

}  // namespace

ExperimentResult run(const ExperimentConfig& config, const ProgressFn& progress) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const CostEstimate cost = estimate(config);
  if (config.budget_particle_steps > 0.0 && cost.particle_steps > config.budget_particle_steps) {
    std::ostringstream os;
    os << "projected cost exceeds budget of " << config.budget_particle_steps << " particle-steps: " << cost.summary();
    throw BudgetError(os.str());
  }
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };

  const ModelParams p = config.params();
  const QubitState rho0 = config.initial();
  const std::vector<std::size_t> grid = output_grid(p.steps(), config.output_stride);
  const std::size_t n = config.n_true_trajectories;
  const std::size_t m = grid.size();
  const bool in_plane = config.initial_state.x == 0.0;

  std::filesystem::create_directories(config.output_dir);
  if (config.dump_trajectories > 0) std::filesystem::create_directories(config.output_dir / "trajectories");

  ExperimentResult result;
  for (std::size_t j : grid) result.t.push_back(p.time(j));
  const std::vector<std::size_t> window = window_indices(result.t, config.ss_window[0], config.ss_window[1]);
  const BootstrapPlan plan(n, config.bootstrap_resamples, config.master_seed);

  SmootherOptions options;
  options.n_samples = config.n_hypothetical;
  options.stride = config.output_stride;
  options.resample_threshold = config.resample_threshold;
  options.estimator = config.estimator;

  for (const auto& [pair, assumed_set] : plan_pairs(config.combos)) {
    const Setup d_o = static_cast<Setup>(pair.first);
    const Setup d_v = static_cast<Setup>(pair.second);
    const std::uint64_t pair_key = 3 * setup_index(d_o) + setup_index(d_v);
    say("pair " + setup_label(d_o) + setup_label(d_v) + ": " + std::to_string(n) + " records");

    StateTable truth(n, m), filtered(n, m);
    std::array<StateTable, 3> smoothed;
    std::array<std::vector<double>, 3> ess;
    for (int u : assumed_set) {
      smoothed[static_cast<std::size_t>(u)] = StateTable(n, m);
      ess[static_cast<std::size_t>(u)].assign(n * m, 0.0);
    }
    std::vector<RecordDiagnostics> diag(n);

    parallel_for(n, config.threads, [&](std::size_t r) {
      Engine rng = make_stream(config.master_seed, StreamKind::true_trajectory, {pair_key, r});
      TrueTrajectory traj = generate_true_trajectory(d_o, d_v, rho0, p, rng, config.output_stride);
      traj.seed = config.master_seed;
      if (r < config.dump_trajectories) {
        write_trajectory_csv(config.output_dir / "trajectories" /
                                 ("trajectory_" + setup_label(d_o) + setup_label(d_v) + "_" + std::to_string(r) + ".csv"),
                             traj, p);
      }
      const FilterResult f = filter(traj.record_O, rho0, p);
      const BackwardEffect effect = backward_effect(traj.record_O, p);
      RecordDiagnostics& d = diag[r];
      d.repairs = f.repairs.repairs;

      std::vector<Matrix2> truth_m(m), filtered_m(m);
      for (std::size_t i = 0; i < m; ++i) {
        const QubitState t_state = QubitState::from_ket(traj.kets[i]);
        truth_m[i] = t_state.matrix();
        truth.at(r, i) = ket_to_bloch(traj.kets[i]);
        const QubitState& fs = f.states[grid[i]];
        filtered_m[i] = fs.matrix();
        filtered.at(r, i) = state_to_bloch(fs);
        d.min_purity = std::min(d.min_purity, purity(t_state));
        const double id = trsd(fs, t_state) - (purity(fs) - 2.0 * fidelity(fs, t_state) + 1.0);
        d.identity = std::max(d.identity, std::abs(id));
        if (in_plane && d_o != Setup::X) d.inplane_x = std::max(d.inplane_x, std::abs(filtered.at(r, i).x));
      }
      for (int u : assumed_set) {
        const Setup d_u = static_cast<Setup>(u);
        Engine hyp = make_stream(config.master_seed, StreamKind::hypothetical, {pair_key, r, static_cast<std::uint64_t>(u)});
        const SmoothingResult s = smooth(traj.record_O, d_u, f, effect, rho0, p, hyp, options);
        d.clamped += s.clamped;
        StateTable& table = smoothed[static_cast<std::size_t>(u)];
        std::vector<double>& e = ess[static_cast<std::size_t>(u)];
        for (std::size_t i = 0; i < m; ++i) {
          table.at(r, i) = state_to_bloch(s.states[i]);
          e[r * m + i] = s.ess[i];
          const QubitState t_state(truth_m[i]);
          const double id = trsd(s.states[i], t_state) -
                            (purity(s.states[i]) - 2.0 * fidelity(s.states[i], t_state) + 1.0);
          d.identity = std::max(d.identity, std::abs(id));
          d.delta_trace = std::max(d.delta_trace, std::abs((s.states[i].matrix() - filtered_m[i]).trace()));
          if (in_plane && d_o != Setup::X && d_u != Setup::X) {
            d.inplane_x = std::max(d.inplane_x, std::abs(table.at(r, i).x));
          }
        }
      }
    });

    for (const auto& d : diag) {
      result.max_identity_error = std::max(result.max_identity_error, d.identity);
      result.max_delta_trace = std::max(result.max_delta_trace, d.delta_trace);
      result.min_true_purity = std::min(result.min_true_purity, d.min_purity);
      result.max_inplane_x = std::max(result.max_inplane_x, d.inplane_x);
      result.clamped += d.clamped;
      result.psd_repairs += d.repairs;
    }

    if (in_plane && d_o != Setup::X && assumed_set.count(static_cast<int>(Setup::X))) {
      const StateTable& table = smoothed[setup_index(Setup::X)];
      std::vector<double> xs(n, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i : window) xs[r] += table.at(r, i).x / static_cast<double>(window.size());
      }
      double mean = 0.0, var = 0.0;
      for (double x : xs) mean += x / static_cast<double>(n);
      for (double x : xs) var += (x - mean) * (x - mean) / static_cast<double>(n - 1);
      const double se = std::sqrt(var / static_cast<double>(n));
      if (se > 0.0) result.max_inplane_x_z = std::max(result.max_inplane_x_z, std::abs(mean) / se);
    }

    const StateTable& valid_table = smoothed[setup_index(d_v)];
    std::vector<WindowSummary> pair_summaries;
    for (int u : assumed_set) {
      const Combo combo{d_o, d_v, static_cast<Setup>(u)};
      const PowerSamples samples = power_samples(truth, filtered, smoothed[static_cast<std::size_t>(u)], valid_table);
      const PowerSamples valid_samples =
          combo.is_valid_smoothing() ? samples : power_samples(truth, filtered, valid_table, valid_table);
      std::vector<double> ess_mean(m, 0.0);
      const auto& e = ess[static_cast<std::size_t>(u)];
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < m; ++i) ess_mean[i] += e[r * m + i] / static_cast<double>(n);

      PowerSeries series = smoothing_powers(combo, result.t, samples, plan, ess_mean);
      for (std::size_t i = 0; i < m; ++i) {
        const double err = std::abs(series.R_S[i] - (2.0 * series.R_F[i] - series.R_P[i]));
        result.max_power_identity_error = std::max(result.max_power_identity_error, err);
      }
      pair_summaries.push_back(window_summary(combo, samples, valid_samples, window, plan, ess_mean));

      const bool requested = std::find(config.combos.begin(), config.combos.end(), combo) != config.combos.end();
      if (requested) {
        CsvTable table;
        table.header = powers_header();
        for (std::size_t i = 0; i < m; ++i) table.rows.push_back(powers_row(series, i));
        write_csv(config.output_dir / ("powers_" + combo.label() + ".csv"), table);
      }
      result.powers.push_back(std::move(series));
    }
    const WindowSummary* valid_summary = nullptr;
    for (const auto& s : pair_summaries) {
      if (s.combo.is_valid_smoothing()) valid_summary = &s;
    }
    for (const auto& s : pair_summaries) {
      if (!s.combo.is_valid_smoothing()) result.strange.push_back(strange_regime_check(s, *valid_summary));
    }
    for (auto& s : pair_summaries) result.summaries.push_back(std::move(s));
  }

  CorrelationMatrix table = reference_table();
  if (config.correlators) {
    say("correlators: 9 pairs x " + std::to_string(config.correlator.n_trajectories) + " trajectories");
    result.correlator_series = run_correlators(config, &result.classification);
    result.have_classification = true;
    table = result.classification;
    write_correlators_csv(config.output_dir / "correlators.csv", result.correlator_series);
  }
  result.conjectures = conjecture_report(result.summaries, table, config.thresholds);

  // Report.
  ordered_json report;
  report["version"] = library_version();
  report["master_seed"] = config.master_seed;
  report["ss_window"] = {config.ss_window[0], config.ss_window[1]};
  report["thresholds"] = {{"small", config.thresholds.small},
                          {"large", config.thresholds.large},
                          {"similar", config.thresholds.similar},
                          {"significance", config.thresholds.significance}};
  report["classification_source"] = config.correlators ? "computed" : "reference";
  std::ostringstream rule;
  rule << "nonzero iff |value|/stderr >= " << config.correlator.threshold << " on >= " << config.correlator.min_band
       << " adjacent tau points";
  report["classification_rule"] = rule.str();
  report["classification"] = setup_table_json(table);
  ordered_json combos = ordered_json::array();
  for (const auto& s : result.summaries) {
    ordered_json c;
    c["combo"] = s.combo.label();
    c["valid_smoothing"] = s.combo.is_valid_smoothing();
    c["conjecture"] = conjecture_name(conjecture_label(s.combo, table));
    c["R_S"] = estimate_json(s.R_S);
    c["R_F"] = estimate_json(s.R_F);
    c["R_P"] = estimate_json(s.R_P);
    c["E_tr_delta_sq"] = estimate_json(s.delta_sq);
    c["E_tr_delta_cross"] = estimate_json(s.delta_cross);
    c["alpha"] = estimate_json(s.alpha);
    c["alpha_sq_time_average"] = estimate_json(s.alpha_sq);
    c["R_S_minus_valid"] = estimate_json(s.R_S_minus_valid);
    c["R_F_minus_valid"] = estimate_json(s.R_F_minus_valid);
    c["R_S_delta"] = estimate_json(s.R_S_delta);
    c["R_S_delta_minus_valid"] = estimate_json(s.R_S_delta_minus_valid);
    c["R_F_delta_minus_valid"] = estimate_json(s.R_F_delta_minus_valid);
    c["valid_equality_max_z"] = {{"S_F", s.max_z_SF}, {"F_P", s.max_z_FP}};
    c["ess_mean"] = s.ess_mean;
    for (const auto& v : result.strange) {
      if (!(v.combo == s.combo)) continue;
      c["strange"] = {{"ratio", v.ratio},
                      {"bound", v.bound},
                      {"condition", v.condition},
                      {"trsd_negative", v.trsd_negative},
                      {"fidelity_exceeds", v.fidelity_exceeds},
                      {"strange", v.strange},
                      {"trsd_negative_2se", v.trsd_negative_2se},
                      {"fidelity_exceeds_2se", v.fidelity_exceeds_2se},
                      {"consistent", v.consistent},
                      {"quarter", v.quarter}};
    }
    for (const auto& k : result.conjectures) {
      if (!(k.combo == s.combo)) continue;
      c["conjecture_check"] = {{"pass", k.pass},
                               {"rule", k.detail},
                               {"small_valid", k.small_valid},
                               {"small_wrong", k.small_wrong},
                               {"large_valid", k.large_valid},
                               {"large_wrong", k.large_wrong},
                               {"similar", k.similar},
                               {"wrong_below_valid", k.wrong_below_valid},
                               {"optimal", k.optimal}};
    }
    combos.push_back(std::move(c));
  }
  report["combos"] = std::move(combos);
  report["diagnostics"] = {{"max_identity_error", result.max_identity_error},
                           {"max_power_identity_error", result.max_power_identity_error},
                           {"max_delta_trace", result.max_delta_trace},
                           {"min_true_purity", result.min_true_purity},
                           {"max_inplane_x", result.max_inplane_x},
                           {"max_inplane_x_z", result.max_inplane_x_z},
                           {"clamped_estimates", result.clamped},
                           {"psd_repairs", result.psd_repairs}};
  write_text(config.output_dir / "report.json", report.dump(2) + "\n");

  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ordered_json manifest;
  manifest["tool"] = "qsmooth";
  manifest["version"] = library_version();
  manifest["master_seed"] = config.master_seed;
  manifest["config"] = ordered_json::parse(config.to_json());
  manifest["cost_estimate"] = {{"particle_steps", cost.particle_steps}, {"smoothing_runs", cost.smoothing_runs}};
  manifest["wall_seconds"] = result.wall_seconds;
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(config.output_dir)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") files.push_back(entry.path().filename().string());
  }
  std::sort(files.begin(), files.end());
  manifest["files"] = files;
  write_text(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace qsmooth
