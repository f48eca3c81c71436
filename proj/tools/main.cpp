// safe-sim: runs the sine-sweep and VEP experiments, re-analyzes stored
// recordings and renders reports.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "safe/errors.hpp"
#include "safe/experiment.hpp"
#include "safe/report.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kIo = 3, kAnalysis = 4, kInternal = 5 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset;
  std::optional<int> jobs;
  std::string path;
};

safe::ExperimentConfig load_config(const Options& opt, safe::ExperimentKind kind) {
  auto kv = opt.config.empty() ? safe::KeyValueConfig{} : safe::KeyValueConfig::load(opt.config);
  const auto wanted = std::string(safe::to_string(kind));
  if (auto declared = kv.get("experiment"); declared && *declared != wanted)
    throw safe::ConfigError(kv.origin() + ": experiment = " + *declared + " but the '" + wanted +
                            "' subcommand was used");
  kv.set("experiment", wanted);
  if (!opt.preset.empty()) kv.set("presets", opt.preset);
  if (opt.jobs) kv.set("jobs", std::int64_t{*opt.jobs});
  return safe::ExperimentConfig::from_config(kv, opt.seed);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw safe::IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_experiment(const Options& opt, safe::ExperimentKind kind) {
  const auto cfg = load_config(opt, kind);
  std::optional<std::filesystem::path> out;
  if (!opt.out.empty()) out = opt.out;
  std::vector<std::filesystem::path> written;
  if (kind == safe::ExperimentKind::SineSweep) {
    std::cout << safe::sine_summary_text(safe::run_sine_experiment(cfg, out, &written));
  } else {
    std::cout << safe::vep_summary_text(safe::run_vep_experiment(cfg, out, &written));
  }
  if (out) std::cerr << "wrote " << written.size() << " recordings and reports to " << out->string() << '\n';
  return kOk;
}

int run_analyze(const Options& opt) {
  const auto outputs = safe::analyze_path(opt.path);
  if (!opt.out.empty()) safe::write_reports(outputs, opt.out);
  if (outputs.sine) std::cout << safe::sine_summary_text(*outputs.sine);
  if (outputs.vep) std::cout << safe::vep_summary_text(*outputs.vep);
  return kOk;
}

int run_report(const Options& opt) {
  namespace fs = std::filesystem;
  const fs::path dir = opt.path;
  const auto sine_csv = dir / safe::kSineReportFile;
  const auto vep_csv = dir / safe::kVepReportFile;
  bool any = false;
  if (fs::exists(sine_csv)) {
    std::cout << safe::sine_summary_text(safe::parse_sine_report_csv(slurp(sine_csv)));
    any = true;
  }
  if (fs::exists(vep_csv)) {
    std::cout << safe::vep_summary_text(safe::parse_vep_report_csv(slurp(vep_csv)));
    any = true;
  }
  if (!any) throw safe::IoError("no report CSV found in " + dir.string());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAFE wireless ECoG amplifier simulator"};
  app.require_subcommand(1);
  Options opt;

  auto add_run_flags = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "RNG seed (overrides the config)");
    sub->add_option("--out", opt.out, "output directory for recordings and reports");
    sub->add_option("--preset", opt.preset, "run only one device preset")
        ->check(CLI::IsMember({"safe", "reference"}));
    sub->add_option("--jobs", opt.jobs, "worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
  };
  auto* sine = app.add_subcommand("sine-sweep", "calibrated sinusoid sweep, RMSE per condition");
  add_run_flags(sine);
  auto* vep = app.add_subcommand("vep", "simulated flash-VEP sessions, SAFE vs reference");
  add_run_flags(vep);
  auto* analyze = app.add_subcommand("analyze", "re-analyze stored recordings");
  analyze->add_option("path", opt.path, "run directory, recordings directory or a single CSV")->required();
  analyze->add_option("--out", opt.out, "write report files here");
  auto* report = app.add_subcommand("report", "print the summary tables of an existing run");
  report->add_option("path", opt.path, "directory holding sine_report.csv / vep_report.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (sine->parsed()) return run_experiment(opt, safe::ExperimentKind::SineSweep);
    if (vep->parsed()) return run_experiment(opt, safe::ExperimentKind::VepSession);
    if (analyze->parsed()) return run_analyze(opt);
    return run_report(opt);
  } catch (const safe::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const safe::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const safe::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kIo;
  } catch (const safe::AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << '\n';
    return kAnalysis;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
}
