#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "safe/config.hpp"
#include "safe/device.hpp"
#include "safe/recorder.hpp"
#include "safe/siggen.hpp"
#include "safe/stats.hpp"
#include "safe/transport.hpp"

namespace safe {

enum class ExperimentKind { SineSweep, VepSession };
enum class Preset { Safe, Reference };

std::string_view to_string(ExperimentKind k) noexcept;
std::string_view to_string(Preset p) noexcept;
Preset preset_from_string(std::string_view text);

struct SineSweepParams {
  std::vector<double> frequencies_hz = sweep_frequencies();
  double fixed_amplitude_uv = 50.0;
  std::vector<double> amplitudes_uv = sweep_amplitudes();
  double fixed_frequency_hz = 20.0;
  double duration_s = 30.0;
  DacModel dac;
};

struct VepParams {
  int sessions = 4;
  // Per-session template sizes; a single value applies to every session.
  std::vector<double> peak_to_peak_uv = {400.0, 70.0, 60.0, 14.0};
  std::vector<double> peak_time_ms = {90.0};
  double flash_rate_hz = 0.99;
  double duration_s = 300.0;
  // Recording starts this long before the first flash so it has a full
  // pre-stimulus window.
  double lead_in_s = 0.5;
  double background_sigma_uv = 5.0;
  double jitter_ms = 40.0;
  std::vector<double> channel_gains;
};

struct AnalysisParams {
  double highpass_hz = 3.0;
  int highpass_order = 6;
  std::int64_t epochs = 200;
  double k_mad = 5.0;
  double pre_ms = 200.0;
  double post_ms = 200.0;
  // Manual peak-time override per channel (ms); empty for automatic.
  std::vector<double> peak_override_ms;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::SineSweep;
  std::vector<Preset> presets = {Preset::Safe, Preset::Reference};
  DeviceSpec safe_spec = DeviceSpec::safe();
  DeviceSpec reference_spec = DeviceSpec::reference();
  std::uint64_t seed = 0;
  std::string start_time = "1970-01-01T00:00:00Z";
  SineSweepParams sine;
  VepParams vep;
  AnalysisParams analysis;
  // Worker threads for independent conditions; 0 picks hardware concurrency.
  int jobs = 0;

  const DeviceSpec& spec_for(Preset p) const { return p == Preset::Safe ? safe_spec : reference_spec; }

  // Collects every problem and throws one ConfigError listing them all.
  // `seed` is mandatory unless `seed_override` is supplied.
  static ExperimentConfig from_config(const KeyValueConfig& cfg, std::optional<std::uint64_t> seed_override = {});
  void validate() const;
  KeyValueConfig to_config() const;
};

// ---- sine sweep ---------------------------------------------------------

struct ChannelRmse {
  int channel = 0;
  std::int64_t epochs = 0;
  double rmse_mean_uv = 0.0;
  double rmse_std_uv = 0.0;
};

struct SineConditionResult {
  std::string preset;
  std::string arm;  // "frequency" or "amplitude"
  double freq_hz = 0.0;
  double amplitude_uv = 0.0;
  std::vector<ChannelRmse> channels;
  std::int64_t epochs = 0;
  double rmse_mean_uv = 0.0;
  double rmse_std_uv = 0.0;
  PacketLossReport loss;
  std::vector<double> rmse_values;  // pooled over channels, not persisted
};

struct SinePresetSummary {
  std::string preset;
  std::int64_t conditions = 0;
  std::int64_t epochs = 0;
  double rmse_mean_uv = 0.0;
  double rmse_std_uv = 0.0;
  double received_mean = 0.0;
  double received_std = 0.0;
};

struct SineReport {
  std::vector<SineConditionResult> conditions;
  std::vector<SinePresetSummary> presets;
};

struct SineCondition {
  Preset preset = Preset::Safe;
  std::string arm;
  double freq_hz = 0.0;
  double amplitude_uv = 0.0;
  std::size_t index = 0;
};

std::vector<SineCondition> sine_conditions(const ExperimentConfig& cfg);

// generate -> acquire -> packetize -> transmit -> reassemble.
Recording simulate_sine_condition(const ExperimentConfig& cfg, const SineCondition& cond);
// highpass -> epoch -> reject -> first N -> phase fit, driven by recording metadata.
SineConditionResult analyze_sine_recording(const Recording& rec);
SineReport summarize_sine(std::vector<SineConditionResult> conditions);

// ---- VEP -----------------------------------------------------------------

struct VepArmResult {
  std::string preset;
  int session = 0;
  std::vector<double> amplitude_uv;
  std::vector<double> snr_db;  // NaN where undefined
  std::vector<double> peak_time_ms;
  std::int64_t triggers = 0;
  std::int64_t clean_trials = 0;
  std::int64_t skipped_at_edges = 0;
  PacketLossReport loss;
};

struct VepSessionResult {
  int session = 0;
  std::optional<VepArmResult> safe;
  std::optional<VepArmResult> reference;
  std::vector<ComparisonStats> comparisons;  // present when both arms ran
};

struct VepReport {
  std::vector<VepSessionResult> sessions;
};

Recording simulate_vep_arm(const ExperimentConfig& cfg, int session, Preset preset);
VepArmResult analyze_vep_recording(const Recording& rec);
VepSessionResult compare_vep_arms(int session, std::optional<VepArmResult> safe, std::optional<VepArmResult> reference);

// ---- end to end ----------------------------------------------------------

struct RunOutputs {
  std::optional<SineReport> sine;
  std::optional<VepReport> vep;
  std::vector<std::filesystem::path> recordings;
};

// Runs the configured experiment. With `out_dir`, recordings go to
// out_dir/recordings and reports to out_dir; analysis always runs on the
// exact Recording that is (or would be) persisted.
SineReport run_sine_experiment(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir,
                               std::vector<std::filesystem::path>* written = nullptr);
VepReport run_vep_experiment(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir,
                             std::vector<std::filesystem::path>* written = nullptr);

// Re-analyzes stored recordings (a run directory, its recordings/
// subdirectory, or a single file). Throws AnalysisError listing every file
// that failed, or when no recordings are found.
RunOutputs analyze_path(const std::filesystem::path& path);

// Writes the report files for whatever `outputs` contains.
void write_reports(const RunOutputs& outputs, const std::filesystem::path& out_dir);

}  // namespace safe
