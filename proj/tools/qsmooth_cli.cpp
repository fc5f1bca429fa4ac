#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qsmooth/errors.hpp"
#include "qsmooth/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string combos;
  std::string out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--combos", o.combos, "Comma-separated dOdVdW list or all27");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
}

qsmooth::ExperimentConfig load(const Overrides& o) {
  qsmooth::ExperimentConfig c;
  if (!o.config_path.empty()) c = qsmooth::ExperimentConfig::from_file(o.config_path);
  // Flags override individual keys by round-tripping through the parser, so
  // they get the same validation and error messages as the file.
  nlohmann::ordered_json patch = nlohmann::ordered_json::parse(c.to_json());
  if (o.seed) patch["master_seed"] = *o.seed;
  if (!o.combos.empty()) patch["combos"] = o.combos;
  if (!o.out.empty()) patch["output_dir"] = o.out;
  if (o.threads) patch["threads"] = *o.threads;
  return qsmooth::ExperimentConfig::from_json(patch.dump());
}

std::string fmt(const qsmooth::Estimate& e) {
  std::ostringstream os;
  os << std::showpos << std::fixed << std::setprecision(4) << e.mean << std::noshowpos << " +- " << e.err;
  return os.str();
}

void print_classification(const qsmooth::CorrelationMatrix& m) {
  std::cout << "        dN       dX       dY\n";
  for (auto a : qsmooth::kAllSetups) {
    std::cout << qsmooth::setup_label(a);
    for (auto b : qsmooth::kAllSetups) {
      const bool nz = m[qsmooth::setup_index(a)][qsmooth::setup_index(b)] == qsmooth::Correlation::nonzero;
      std::cout << "    " << (nz ? "nonzero" : "zero   ");
    }
    std::cout << '\n';
  }
}

int cmd_run(const Overrides& o) {
  const auto config = load(o);
  const auto result = qsmooth::run(config, [](const std::string& msg) { std::cerr << "[qsmooth] " << msg << '\n'; });
  std::cout << "combo       R_S (window)          R_F (window)          R_P (window)          conj\n";
  for (const auto& s : result.summaries) {
    std::string conj = "-";
    for (const auto& c : result.conjectures) {
      if (c.combo == s.combo) conj = qsmooth::conjecture_name(c.label) + (c.pass ? " pass" : " FAIL");
    }
    std::cout << s.combo.label() << "  " << fmt(s.R_S) << "  " << fmt(s.R_F) << "  " << fmt(s.R_P) << "  " << conj
              << '\n';
  }
  std::cout << "max |S - (P - 2F + 1)| = " << result.max_identity_error << '\n';
  std::cout << "wrote " << config.output_dir.string() << " in " << result.wall_seconds << " s\n";
  return 0;
}

int cmd_validate(const Overrides& o) {
  const auto config = load(o);
  config.validate();
  std::cout << "configuration ok: " << config.combos.size() << " combos\n";
  return 0;
}

int cmd_estimate(const Overrides& o) {
  const auto config = load(o);
  config.validate();
  const auto e = qsmooth::estimate(config);
  std::cout << e.summary() << '\n';
  if (config.budget_particle_steps > 0.0 && e.particle_steps > config.budget_particle_steps) {
    std::cout << "exceeds budget of " << config.budget_particle_steps << " particle-steps\n";
    return kExitConfig;
  }
  return 0;
}

int cmd_correlators(const Overrides& o) {
  auto config = load(o);
  config.validate();
  std::filesystem::create_directories(config.output_dir);
  qsmooth::CorrelationMatrix m{};
  const auto series = qsmooth::run_correlators(config, &m);
  qsmooth::write_correlators_csv(config.output_dir / "correlators.csv", series);
  print_classification(m);
  return 0;
}

int cmd_report(const std::string& dir) {
  const std::filesystem::path path = std::filesystem::path(dir) / "report.json";
  std::ifstream in(path);
  if (!in) throw qsmooth::ConfigError("out", "no report.json in " + dir);
  const auto report = nlohmann::json::parse(in);
  std::cout << "classification (" << report.at("classification_source").get<std::string>() << "):\n";
  for (const auto& [pair, value] : report.at("classification").items()) {
    std::cout << "  " << pair << " " << value.get<std::string>() << '\n';
  }
  for (const auto& c : report.at("combos")) {
    std::cout << c.at("combo").get<std::string>() << "  R_S " << c.at("R_S").at("mean").get<double>() << "  R_F "
              << c.at("R_F").at("mean").get<double>() << "  R_P " << c.at("R_P").at("mean").get<double>();
    if (c.contains("conjecture_check")) {
      std::cout << "  " << c.at("conjecture").get<std::string>() << " "
                << (c.at("conjecture_check").at("pass").get<bool>() ? "pass" : "FAIL");
    }
    if (c.contains("strange") && c.at("strange").at("strange").get<bool>()) std::cout << "  strange";
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum state smoothing with a wrongly assumed unobserved unraveling"};
  app.set_version_flag("--version", qsmooth::library_version());
  app.require_subcommand(1);

  Overrides run_o, validate_o, estimate_o, corr_o;
  std::string report_dir = ".";
  auto* run = app.add_subcommand("run", "Run the sweep and write the artifact directory");
  add_common(run, run_o);
  auto* validate = app.add_subcommand("validate", "Check a configuration without running");
  add_common(validate, validate_o);
  auto* est = app.add_subcommand("estimate", "Report the projected cost of a configuration");
  add_common(est, estimate_o);
  auto* corr = app.add_subcommand("correlators", "Compute the nine two-time correlators and classify each pair");
  add_common(corr, corr_o);
  auto* report = app.add_subcommand("report", "Summarise report.json of a finished run");
  report->add_option("--out,dir", report_dir, "Artifact directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_o);
    if (*validate) return cmd_validate(validate_o);
    if (*est) return cmd_estimate(estimate_o);
    if (*corr) return cmd_correlators(corr_o);
    if (*report) return cmd_report(report_dir);
  } catch (const qsmooth::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qsmooth::BudgetError& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
