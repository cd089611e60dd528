// retrosim command-line tool.
//
//   retrosim enumerate <config> [--out PATH] [--format csv|json]
//   retrosim simulate  <config> [--out PATH] [--format csv|json] [--threads N]
//   retrosim sweep     <config> --betas 0,0.1,0.2 [--out PATH] [--format csv|json] [--threads N]
//   retrosim verify    <config> [--out PATH] [--format csv|json]
//
// Exit status: 0 success, 1 runtime error, 2 config error, 3 verification failure.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "retrosim/errors.hpp"
#include "retrosim/harness.hpp"
#include "retrosim/histories.hpp"
#include "retrosim/report_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::string format;
  std::size_t threads = 0;
};

retrosim::RunConfig resolve(const CommonOptions& opts) {
  retrosim::RunConfig config = retrosim::load_config(opts.config_path);
  if (!opts.format.empty()) config.format = retrosim::parse_report_format(opts.format);
  if (opts.threads != 0) config.threads = opts.threads;
  config.validate();
  return config;
}

void write_output(const CommonOptions& opts, const std::function<void(std::ostream&)>& emit) {
  if (opts.out_path.empty()) {
    emit(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(opts.out_path, std::ios::binary);
  if (!out) throw retrosim::Error(retrosim::ErrorKind::ConfigError, "cannot write '" + opts.out_path + "'");
  emit(out);
}

std::vector<double> parse_betas(const std::string& text) {
  std::vector<double> betas;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = item.find_last_not_of(" \t");
    item = item.substr(first, last - first + 1);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || used == 0) {
      throw retrosim::Error(retrosim::ErrorKind::ConfigError, "--betas entry '" + item + "' is not a number");
    }
    betas.push_back(value);
  }
  return betas;
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_threads) {
  cmd->add_option("config", opts.config_path, "JSON run config")->required();
  cmd->add_option("--out", opts.out_path, "Output path (default: stdout)");
  cmd->add_option("--format", opts.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  if (with_threads) {
    cmd->add_option("--threads", opts.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Valence-biased history simulator"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string betas_text;

  auto* enumerate = app.add_subcommand("enumerate", "Exact history ensemble table");
  add_common(enumerate, opts, false);
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo trial report");
  add_common(simulate, opts, true);
  auto* sweep = app.add_subcommand("sweep", "Trial reports over a list of beta values");
  add_common(sweep, opts, true);
  sweep->add_option("--betas", betas_text, "Comma-separated beta values")->required();
  auto* verify = app.add_subcommand("verify", "Invariant checks on the configured protocol");
  add_common(verify, opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const retrosim::RunConfig config = resolve(opts);
    if (enumerate->parsed()) {
      const auto ensemble = retrosim::enumerate_ensemble(retrosim::build_protocol(config),
                                                         retrosim::build_policy(config), config.enumeration_cap);
      write_output(opts, [&](std::ostream& out) { retrosim::emit_ensemble(ensemble, config.format, out); });
    } else if (simulate->parsed()) {
      const std::vector<retrosim::TrialReport> reports{retrosim::run_simulation(config)};
      write_output(opts, [&](std::ostream& out) { retrosim::emit_reports(reports, config.format, out); });
    } else if (sweep->parsed()) {
      const auto betas = parse_betas(betas_text);
      const auto reports = retrosim::sweep_beta(config, betas);
      write_output(opts, [&](std::ostream& out) { retrosim::emit_reports(reports, config.format, out); });
    } else if (verify->parsed()) {
      const auto report = retrosim::verify(config);
      write_output(opts, [&](std::ostream& out) { retrosim::emit_verification(report, config.format, out); });
      if (!report.passed()) {
        std::cerr << "verification failed\n";
        return kExitVerification;
      }
    }
  } catch (const retrosim::Error& e) {
    std::cerr << "retrosim: " << e.what() << '\n';
    return e.kind() == retrosim::ErrorKind::ConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "retrosim: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
