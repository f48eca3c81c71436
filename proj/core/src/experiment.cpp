#include "safe/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <fstream>
#include <set>
#include <thread>

#include "safe/errors.hpp"
#include "safe/filter.hpp"
#include "safe/report.hpp"
#include "safe/sine_fit.hpp"
#include "safe/triggering.hpp"
#include "safe/vep.hpp"

namespace safe {

std::string_view to_string(ExperimentKind k) noexcept {
  return k == ExperimentKind::SineSweep ? "sine-sweep" : "vep";
}

std::string_view to_string(Preset p) noexcept { return p == Preset::Safe ? "safe" : "reference"; }

Preset preset_from_string(std::string_view text) {
  if (text == "safe") return Preset::Safe;
  if (text == "reference") return Preset::Reference;
  throw ConfigError("unknown preset '" + std::string(text) + "' (expected safe or reference)");
}

// ---- configuration ---------------------------------------------------------

namespace {

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = [] {
    std::set<std::string, std::less<>> k = {
        "experiment", "seed", "presets", "start_time", "jobs",
        "dac.dac_step_v", "dac.divider_ratio",
        "sine.frequencies_hz", "sine.fixed_amplitude_uv", "sine.amplitudes_uv", "sine.fixed_frequency_hz",
        "sine.duration_s",
        "vep.sessions", "vep.peak_to_peak_uv", "vep.peak_time_ms", "vep.flash_rate_hz", "vep.duration_s",
        "vep.lead_in_s", "vep.background_sigma_uv", "vep.jitter_ms", "vep.channel_gains",
        "analysis.highpass_hz", "analysis.highpass_order", "analysis.epochs", "analysis.k_mad", "analysis.pre_ms",
        "analysis.post_ms", "analysis.peak_override_ms"};
    KeyValueConfig spec_keys;
    DeviceSpec{}.to_config(spec_keys);
    for (const auto& f : spec_keys.keys()) {
      k.insert("safe." + f);
      k.insert("reference." + f);
    }
    return k;
  }();
  return keys;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

double per_session(const std::vector<double>& values, int session) {
  return values.size() == 1 ? values.front() : values.at(static_cast<std::size_t>(session));
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& kv, std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg;
  std::vector<std::string> errors;
  auto attempt = [&errors](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors.emplace_back(e.what());
    }
  };

  for (const auto& key : kv.keys())
    if (known_keys().count(key) == 0) errors.push_back("unknown key '" + key + "'");

  attempt([&] {
    const auto kind = kv.get_string("experiment", "sine-sweep");
    if (kind == "sine-sweep") cfg.experiment = ExperimentKind::SineSweep;
    else if (kind == "vep") cfg.experiment = ExperimentKind::VepSession;
    else throw ConfigError("experiment must be 'sine-sweep' or 'vep', got '" + kind + "'");
  });
  if (seed_override) {
    cfg.seed = *seed_override;
  } else if (!kv.contains("seed")) {
    errors.emplace_back("seed is mandatory (set 'seed' or pass --seed)");
  } else {
    attempt([&] {
      const auto s = kv.get_int("seed", 0);
      if (s < 0) throw ConfigError("seed must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(s);
    });
  }
  attempt([&] {
    if (auto v = kv.get("presets")) {
      cfg.presets.clear();
      std::string_view rest = *v;
      while (true) {
        const auto comma = rest.find(',');
        cfg.presets.push_back(preset_from_string(trim(rest.substr(0, comma))));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    }
  });
  cfg.start_time = kv.get_string("start_time", cfg.start_time);
  attempt([&] { cfg.jobs = static_cast<int>(kv.get_int("jobs", cfg.jobs)); });
  attempt([&] { cfg.safe_spec = DeviceSpec::from_config(kv, DeviceSpec::safe(), "safe."); });
  attempt([&] { cfg.reference_spec = DeviceSpec::from_config(kv, DeviceSpec::reference(), "reference."); });

  auto& s = cfg.sine;
  attempt([&] { s.dac = DacModel::from_config(kv, s.dac, "dac."); });
  attempt([&] { s.frequencies_hz = kv.get_double_list("sine.frequencies_hz", s.frequencies_hz); });
  attempt([&] { s.fixed_amplitude_uv = kv.get_double("sine.fixed_amplitude_uv", s.fixed_amplitude_uv); });
  attempt([&] { s.amplitudes_uv = kv.get_double_list("sine.amplitudes_uv", s.amplitudes_uv); });
  attempt([&] { s.fixed_frequency_hz = kv.get_double("sine.fixed_frequency_hz", s.fixed_frequency_hz); });
  attempt([&] { s.duration_s = kv.get_double("sine.duration_s", s.duration_s); });

  auto& v = cfg.vep;
  attempt([&] { v.sessions = static_cast<int>(kv.get_int("vep.sessions", v.sessions)); });
  attempt([&] { v.peak_to_peak_uv = kv.get_double_list("vep.peak_to_peak_uv", v.peak_to_peak_uv); });
  attempt([&] { v.peak_time_ms = kv.get_double_list("vep.peak_time_ms", v.peak_time_ms); });
  attempt([&] { v.flash_rate_hz = kv.get_double("vep.flash_rate_hz", v.flash_rate_hz); });
  attempt([&] { v.duration_s = kv.get_double("vep.duration_s", v.duration_s); });
  attempt([&] { v.lead_in_s = kv.get_double("vep.lead_in_s", v.lead_in_s); });
  attempt([&] { v.background_sigma_uv = kv.get_double("vep.background_sigma_uv", v.background_sigma_uv); });
  attempt([&] { v.jitter_ms = kv.get_double("vep.jitter_ms", v.jitter_ms); });
  attempt([&] { v.channel_gains = kv.get_double_list("vep.channel_gains", v.channel_gains); });

  auto& a = cfg.analysis;
  attempt([&] { a.highpass_hz = kv.get_double("analysis.highpass_hz", a.highpass_hz); });
  attempt([&] { a.highpass_order = static_cast<int>(kv.get_int("analysis.highpass_order", a.highpass_order)); });
  attempt([&] { a.epochs = kv.get_int("analysis.epochs", a.epochs); });
  attempt([&] { a.k_mad = kv.get_double("analysis.k_mad", a.k_mad); });
  attempt([&] { a.pre_ms = kv.get_double("analysis.pre_ms", a.pre_ms); });
  attempt([&] { a.post_ms = kv.get_double("analysis.post_ms", a.post_ms); });
  attempt([&] { a.peak_override_ms = kv.get_double_list("analysis.peak_override_ms", a.peak_override_ms); });

  // Range checks run even after parse errors so one pass reports everything;
  // fields that failed to parse keep their defaults.
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    errors.emplace_back(e.what());
  }
  if (!errors.empty()) {
    std::string msg = kv.origin() + ": " + std::to_string(errors.size()) + " configuration error(s):";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  auto check = [&errors](bool ok, std::string msg) {
    if (!ok) errors.push_back(std::move(msg));
  };
  auto check_spec = [&](const DeviceSpec& spec, std::string_view name) {
    try {
      spec.validate();
      return true;
    } catch (const std::exception& e) {
      errors.push_back(std::string(name) + ": " + e.what());
      return false;
    }
  };

  check(!presets.empty(), "presets must name at least one device");
  const bool safe_ok = check_spec(safe_spec, "safe");
  const bool reference_ok = check_spec(reference_spec, "reference");
  check(jobs >= 0, "jobs must be >= 0");

  if (experiment == ExperimentKind::SineSweep) {
    try {
      sine.dac.validate();
    } catch (const std::exception& e) {
      errors.push_back(std::string("dac: ") + e.what());
    }
    check(!sine.frequencies_hz.empty() || !sine.amplitudes_uv.empty(), "sine sweep has no conditions");
    check(sine.duration_s > 0.0, "sine.duration_s must be positive");
    check(sine.fixed_amplitude_uv >= 0.0, "sine.fixed_amplitude_uv must be >= 0");
    for (double a : sine.amplitudes_uv) check(a >= 0.0, "sine.amplitudes_uv entries must be >= 0");
    std::vector<double> freqs = sine.frequencies_hz;
    freqs.push_back(sine.fixed_frequency_hz);
    for (Preset p : presets) {
      if (!(p == Preset::Safe ? safe_ok : reference_ok)) continue;
      const auto& spec = spec_for(p);
      for (double f : freqs)
        check(f > 0.0 && f < spec.sample_rate_hz / 2.0,
              "frequency " + format_double(f) + " Hz is outside (0, Nyquist) for preset " + std::string(to_string(p)));
      check(analysis.highpass_hz > 0.0 && analysis.highpass_hz < spec.sample_rate_hz / 2.0,
            "analysis.highpass_hz must be inside (0, Nyquist)");
    }
    check(analysis.highpass_order >= 2 && analysis.highpass_order % 2 == 0,
          "analysis.highpass_order must be even and >= 2");
    check(analysis.epochs > 0, "analysis.epochs must be positive");
    check(analysis.k_mad > 0.0, "analysis.k_mad must be positive");
  } else {
    check(vep.sessions >= 1, "vep.sessions must be >= 1");
    auto check_list = [&](const std::vector<double>& values, std::string_view name) {
      check(values.size() == 1 || values.size() == static_cast<std::size_t>(vep.sessions),
            std::string(name) + " needs one value or one per session");
    };
    check_list(vep.peak_to_peak_uv, "vep.peak_to_peak_uv");
    check_list(vep.peak_time_ms, "vep.peak_time_ms");
    for (double p : vep.peak_to_peak_uv) check(p > 0.0, "vep.peak_to_peak_uv entries must be positive");
    for (double t : vep.peak_time_ms) check(t > 0.0 && t < 200.0, "vep.peak_time_ms entries must be in (0, 200)");
    check(vep.flash_rate_hz > 0.0 && vep.flash_rate_hz * 0.2 < 1.0, "vep.flash_rate_hz must be in (0, 5)");
    check(vep.duration_s > 0.0, "vep.duration_s must be positive");
    check(vep.lead_in_s >= 0.0, "vep.lead_in_s must be >= 0");
    check(vep.background_sigma_uv >= 0.0, "vep.background_sigma_uv must be >= 0");
    check(vep.jitter_ms >= 0.0, "vep.jitter_ms must be >= 0");
    check(analysis.pre_ms > 0.0 && analysis.post_ms >= analysis.pre_ms,
          "analysis.pre_ms must be positive and analysis.post_ms >= analysis.pre_ms");
  }
  if (!errors.empty()) {
    std::string msg;
    for (std::size_t i = 0; i < errors.size(); ++i) msg += (i ? "\n  - " : "") + errors[i];
    throw ConfigError(msg);
  }
}

KeyValueConfig ExperimentConfig::to_config() const {
  KeyValueConfig kv;
  kv.set("experiment", std::string(to_string(experiment)));
  kv.set("seed", static_cast<std::int64_t>(seed));
  std::string p;
  for (std::size_t i = 0; i < presets.size(); ++i) p += (i ? "," : "") + std::string(to_string(presets[i]));
  kv.set("presets", p);
  kv.set("start_time", start_time);
  safe_spec.to_config(kv, "safe.");
  reference_spec.to_config(kv, "reference.");
  kv.set("dac.dac_step_v", sine.dac.dac_step_v);
  kv.set("dac.divider_ratio", sine.dac.divider_ratio);
  kv.set("sine.frequencies_hz", join_doubles(sine.frequencies_hz));
  kv.set("sine.fixed_amplitude_uv", sine.fixed_amplitude_uv);
  kv.set("sine.amplitudes_uv", join_doubles(sine.amplitudes_uv));
  kv.set("sine.fixed_frequency_hz", sine.fixed_frequency_hz);
  kv.set("sine.duration_s", sine.duration_s);
  kv.set("vep.sessions", std::int64_t{vep.sessions});
  kv.set("vep.peak_to_peak_uv", join_doubles(vep.peak_to_peak_uv));
  kv.set("vep.peak_time_ms", join_doubles(vep.peak_time_ms));
  kv.set("vep.flash_rate_hz", vep.flash_rate_hz);
  kv.set("vep.duration_s", vep.duration_s);
  kv.set("vep.lead_in_s", vep.lead_in_s);
  kv.set("vep.background_sigma_uv", vep.background_sigma_uv);
  kv.set("vep.jitter_ms", vep.jitter_ms);
  kv.set("vep.channel_gains", join_doubles(vep.channel_gains));
  kv.set("analysis.highpass_hz", analysis.highpass_hz);
  kv.set("analysis.highpass_order", std::int64_t{analysis.highpass_order});
  kv.set("analysis.epochs", analysis.epochs);
  kv.set("analysis.k_mad", analysis.k_mad);
  kv.set("analysis.pre_ms", analysis.pre_ms);
  kv.set("analysis.post_ms", analysis.post_ms);
  kv.set("analysis.peak_override_ms", join_doubles(analysis.peak_override_ms));
  return kv;
}

// ---- shared helpers ----------------------------------------------------------

namespace {

std::uint64_t preset_id(Preset p) { return p == Preset::Safe ? 1 : 2; }

const std::string& require_meta(const Recording& rec, const std::string& key) {
  auto it = rec.meta.extra.find(key);
  if (it == rec.meta.extra.end()) throw AnalysisError("recording lacks metadata '" + key + "'");
  return it->second;
}

double meta_double(const Recording& rec, const std::string& key) {
  auto v = parse_double(require_meta(rec, key));
  if (!v) throw AnalysisError("metadata '" + key + "' is not numeric");
  return *v;
}

std::int64_t meta_int(const Recording& rec, const std::string& key) {
  auto v = parse_int(require_meta(rec, key));
  if (!v) throw AnalysisError("metadata '" + key + "' is not an integer");
  return *v;
}

PacketLossReport loss_from_record(const Recording& rec) {
  const auto expected = packet_count_for(rec.record.total_frames(), rec.spec);
  PacketLossReport r;
  r.expected = expected;
  r.received = expected - static_cast<std::int64_t>(rec.record.gaps().size());
  r.fraction_received = expected > 0 ? static_cast<double>(r.received) / static_cast<double>(expected) : 0.0;
  return r;
}

// Runs fn(i) for i in [0, n) on `jobs` threads. Results must be written to
// per-index slots, so the schedule does not affect output.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::filesystem::path recordings_dir(const std::filesystem::path& out) { return out / "recordings"; }

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.close();
  if (!f) throw IoError("failed writing: " + path.string());
}

std::string padded(double v, int width) {
  auto s = std::to_string(static_cast<long long>(std::llround(v)));
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

}  // namespace

// ---- sine sweep -----------------------------------------------------------------

std::vector<SineCondition> sine_conditions(const ExperimentConfig& cfg) {
  std::vector<SineCondition> out;
  for (Preset p : cfg.presets) {
    std::size_t index = 0;
    for (double f : cfg.sine.frequencies_hz) out.push_back({p, "frequency", f, cfg.sine.fixed_amplitude_uv, index++});
    for (double a : cfg.sine.amplitudes_uv) out.push_back({p, "amplitude", cfg.sine.fixed_frequency_hz, a, index++});
  }
  return out;
}

Recording simulate_sine_condition(const ExperimentConfig& cfg, const SineCondition& cond) {
  const auto& spec = cfg.spec_for(cond.preset);
  const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, preset_id(cond.preset)), cond.index);
  // Both presets see the identical generated source, as if wired in parallel.
  const auto src = gen_sinusoid(cond.amplitude_uv, cond.freq_hz, cfg.sine.dac, cfg.sine.duration_s);
  const auto frames = run_acquisition(src, spec, cfg.sine.duration_s, derive_seed(seed, 1));
  const auto packets = packetize(frames, spec);
  const auto received = transmit(packets, spec.loss_probability, derive_seed(seed, 2));

  Recording rec;
  rec.spec = spec;
  rec.record = reassemble(received, spec, static_cast<std::int64_t>(frames.size()));
  rec.meta.seed = cfg.seed;
  rec.meta.source = src.description();
  rec.meta.start_time = cfg.start_time;
  auto& x = rec.meta.extra;
  x["experiment"] = std::string(to_string(ExperimentKind::SineSweep));
  x["preset"] = std::string(to_string(cond.preset));
  x["arm"] = cond.arm;
  x["freq_hz"] = format_double(cond.freq_hz);
  x["amplitude_uv"] = format_double(cond.amplitude_uv);
  x["condition_seed"] = std::to_string(seed);
  x["dac_step_v"] = format_double(cfg.sine.dac.dac_step_v);
  x["divider_ratio"] = format_double(cfg.sine.dac.divider_ratio);
  x["analysis.highpass_hz"] = format_double(cfg.analysis.highpass_hz);
  x["analysis.highpass_order"] = std::to_string(cfg.analysis.highpass_order);
  x["analysis.epochs"] = std::to_string(cfg.analysis.epochs);
  x["analysis.k_mad"] = format_double(cfg.analysis.k_mad);
  return rec;
}

SineConditionResult analyze_sine_recording(const Recording& rec) {
  if (require_meta(rec, "experiment") != to_string(ExperimentKind::SineSweep))
    throw AnalysisError("not a sine-sweep recording");
  SineConditionResult out;
  out.preset = require_meta(rec, "preset");
  out.arm = require_meta(rec, "arm");
  out.freq_hz = meta_double(rec, "freq_hz");
  out.amplitude_uv = meta_double(rec, "amplitude_uv");
  const double cutoff = meta_double(rec, "analysis.highpass_hz");
  const auto order = meta_int(rec, "analysis.highpass_order");
  const auto max_epochs = meta_int(rec, "analysis.epochs");
  const double k_mad = meta_double(rec, "analysis.k_mad");
  out.loss = loss_from_record(rec);

  HighpassOptions hp;
  hp.order = static_cast<int>(order);
  const auto filtered = highpass(rec.record, cutoff, rec.spec.sample_rate_hz, hp);

  for (int c = 0; c < filtered.channel_count(); ++c) {
    auto ep = epoch_sine(filtered, c, out.freq_hz, rec.spec, 0);
    std::vector<Epoch> kept = ep.epochs.size() >= 8 ? reject_artifacts(ep.epochs, k_mad) : std::move(ep.epochs);
    if (static_cast<std::int64_t>(kept.size()) > max_epochs) kept.resize(static_cast<std::size_t>(max_epochs));
    std::vector<double> rmse;
    rmse.reserve(kept.size());
    for (const auto& e : kept) rmse.push_back(fit_sine_phase(e, out.amplitude_uv, out.freq_hz, rec.spec).rmse_uv);
    ChannelRmse ch;
    ch.channel = c + 1;
    ch.epochs = static_cast<std::int64_t>(rmse.size());
    if (!rmse.empty()) ch.rmse_mean_uv = mean_of(rmse);
    if (rmse.size() >= 2) ch.rmse_std_uv = sample_std(rmse);
    out.channels.push_back(ch);
    out.rmse_values.insert(out.rmse_values.end(), rmse.begin(), rmse.end());
  }
  out.epochs = static_cast<std::int64_t>(out.rmse_values.size());
  if (out.epochs == 0) throw AnalysisError("no clean epochs for " + rec.meta.source);
  out.rmse_mean_uv = mean_of(out.rmse_values);
  out.rmse_std_uv = out.epochs >= 2 ? sample_std(out.rmse_values) : 0.0;
  return out;
}

SineReport summarize_sine(std::vector<SineConditionResult> conditions) {
  SineReport report;
  report.conditions = std::move(conditions);
  std::vector<std::string> order;
  for (const auto& c : report.conditions)
    if (std::find(order.begin(), order.end(), c.preset) == order.end()) order.push_back(c.preset);
  for (const auto& preset : order) {
    SinePresetSummary s;
    s.preset = preset;
    // Pooled mean/std over every epoch, combined from per-condition moments.
    double sum = 0.0;
    std::vector<double> fractions;
    for (const auto& c : report.conditions) {
      if (c.preset != preset) continue;
      ++s.conditions;
      s.epochs += c.epochs;
      sum += c.rmse_mean_uv * static_cast<double>(c.epochs);
      fractions.push_back(c.loss.fraction_received);
    }
    s.rmse_mean_uv = s.epochs > 0 ? sum / static_cast<double>(s.epochs) : 0.0;
    double ss = 0.0;
    for (const auto& c : report.conditions) {
      if (c.preset != preset) continue;
      const double dm = c.rmse_mean_uv - s.rmse_mean_uv;
      ss += static_cast<double>(c.epochs - 1) * c.rmse_std_uv * c.rmse_std_uv + static_cast<double>(c.epochs) * dm * dm;
    }
    s.rmse_std_uv = s.epochs >= 2 ? std::sqrt(ss / static_cast<double>(s.epochs - 1)) : 0.0;
    s.received_mean = fractions.empty() ? 0.0 : mean_of(fractions);
    s.received_std = fractions.size() >= 2 ? sample_std(fractions) : 0.0;
    report.presets.push_back(s);
  }
  return report;
}

SineReport run_sine_experiment(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir,
                               std::vector<std::filesystem::path>* written) {
  if (cfg.experiment != ExperimentKind::SineSweep) throw ConfigError("configuration is not a sine-sweep experiment");
  cfg.validate();
  const auto conds = sine_conditions(cfg);
  if (out_dir) ensure_dir(recordings_dir(*out_dir));

  std::vector<SineConditionResult> results(conds.size());
  std::vector<std::filesystem::path> paths(conds.size());
  parallel_for(conds.size(), cfg.jobs, [&](std::size_t i) {
    auto rec = simulate_sine_condition(cfg, conds[i]);
    rec.meta.extra["order"] = std::to_string(i);
    if (out_dir) {
      const auto& c = conds[i];
      paths[i] = recordings_dir(*out_dir) / ("sine_" + std::string(to_string(c.preset)) + "_" + c.arm + "_f" +
                                             padded(c.freq_hz, 3) + "hz_a" + padded(c.amplitude_uv, 3) + "uv.csv");
      write_csv(rec, paths[i]);
    }
    results[i] = analyze_sine_recording(rec);
  });

  auto report = summarize_sine(std::move(results));
  if (out_dir) {
    RunOutputs outputs;
    outputs.sine = report;
    write_reports(outputs, *out_dir);
    write_text(*out_dir / "run_config.txt", cfg.to_config().to_string());
    if (written) *written = paths;
  }
  return report;
}

// ---- VEP ------------------------------------------------------------------------

Recording simulate_vep_arm(const ExperimentConfig& cfg, int session, Preset preset) {
  const auto& spec = cfg.spec_for(preset);
  const auto& v = cfg.vep;
  VepTemplate tmpl;
  tmpl.peak_to_peak_uv = per_session(v.peak_to_peak_uv, session);
  tmpl.peak_time_ms = per_session(v.peak_time_ms, session);

  // Arms are recorded one after the other, so each has its own background.
  const std::uint64_t seed =
      derive_seed(derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(session)), preset_id(preset));
  auto gen = gen_vep_session(tmpl, v.flash_rate_hz, v.duration_s, v.background_sigma_uv, derive_seed(seed, 1),
                             v.channel_gains);
  const auto src = gen.source.delayed(v.lead_in_s, background_noise(v.background_sigma_uv, derive_seed(seed, 2)));
  std::vector<double> flashes = gen.flash_times_s;
  for (double& t : flashes) t += v.lead_in_s;

  std::vector<TriggerEvent> triggers;
  if (preset == Preset::Reference) {
    triggers = label_sample_accurate(jitter_triggers(flashes, v.jitter_ms, derive_seed(seed, 3)), spec);
  } else {
    triggers = label_packet_granular(flashes, spec);
  }

  const double duration = v.duration_s + v.lead_in_s;
  const auto frames = run_acquisition(src, spec, duration, derive_seed(seed, 4));
  auto packets = packetize(frames, spec);
  flag_trigger_packets(packets, triggers, spec);
  const auto received = transmit(packets, spec.loss_probability, derive_seed(seed, 5));

  Recording rec;
  rec.spec = spec;
  rec.record = reassemble(received, spec, static_cast<std::int64_t>(frames.size()));
  rec.triggers = std::move(triggers);
  rec.meta.seed = cfg.seed;
  rec.meta.source = src.description();
  rec.meta.start_time = cfg.start_time;
  auto& x = rec.meta.extra;
  x["experiment"] = std::string(to_string(ExperimentKind::VepSession));
  x["preset"] = std::string(to_string(preset));
  x["session"] = std::to_string(session + 1);
  x["arm_seed"] = std::to_string(seed);
  x["lead_in_s"] = format_double(v.lead_in_s);
  x["jitter_ms"] = format_double(preset == Preset::Reference ? v.jitter_ms : 0.0);
  x["background_sigma_uv"] = format_double(v.background_sigma_uv);
  x["analysis.pre_ms"] = format_double(cfg.analysis.pre_ms);
  x["analysis.post_ms"] = format_double(cfg.analysis.post_ms);
  x["analysis.peak_override_ms"] = join_doubles(cfg.analysis.peak_override_ms);
  return rec;
}

VepArmResult analyze_vep_recording(const Recording& rec) {
  if (require_meta(rec, "experiment") != to_string(ExperimentKind::VepSession))
    throw AnalysisError("not a VEP recording");
  VepArmResult out;
  out.preset = require_meta(rec, "preset");
  out.session = static_cast<int>(meta_int(rec, "session"));
  out.loss = loss_from_record(rec);
  const double pre_ms = meta_double(rec, "analysis.pre_ms");
  const double post_ms = meta_double(rec, "analysis.post_ms");
  KeyValueConfig kv;
  kv.set("peak_override_ms", require_meta(rec, "analysis.peak_override_ms"));
  const auto overrides = kv.get_double_list("peak_override_ms", {});

  const auto trials = epoch_vep(rec, pre_ms, post_ms);
  out.triggers = static_cast<std::int64_t>(rec.triggers.size());
  out.skipped_at_edges = trials.skipped_at_edges;
  out.clean_trials = trials.clean_count();
  const auto avg = vep_average(trials);
  for (std::size_t c = 0; c < avg.channels.size(); ++c) {
    const auto& trace = avg.channels[c];
    out.amplitude_uv.push_back(vep_amplitude(trace, avg.pre_samples));
    out.peak_time_ms.push_back(c < overrides.size() ? overrides[c]
                                                    : vep_peak_time_ms(trace, avg.pre_samples, avg.sample_rate_hz));
    try {
      out.snr_db.push_back(vep_snr_db(trace, avg.pre_samples));
    } catch (const AnalysisError&) {
      out.snr_db.push_back(std::nan(""));
    }
  }
  return out;
}

VepSessionResult compare_vep_arms(int session, std::optional<VepArmResult> safe_arm,
                                  std::optional<VepArmResult> reference_arm) {
  VepSessionResult out;
  out.session = session;
  out.safe = std::move(safe_arm);
  out.reference = std::move(reference_arm);
  if (!out.safe || !out.reference) return out;
  auto compare = [&](const std::vector<double>& s, const std::vector<double>& r, Metric m) {
    for (std::size_t i = 0; i < s.size(); ++i)
      if (!std::isfinite(s[i]) || !std::isfinite(r[i])) return;
    try {
      out.comparisons.push_back(percent_difference(s, r, m));
    } catch (const std::domain_error&) {
    }
  };
  compare(out.safe->amplitude_uv, out.reference->amplitude_uv, Metric::Amplitude);
  compare(out.safe->snr_db, out.reference->snr_db, Metric::Snr);
  compare(out.safe->peak_time_ms, out.reference->peak_time_ms, Metric::PeakTime);
  return out;
}

namespace {

VepReport assemble_vep(std::vector<VepArmResult> arms) {
  std::sort(arms.begin(), arms.end(), [](const VepArmResult& a, const VepArmResult& b) {
    return std::tie(a.session, a.preset) < std::tie(b.session, b.preset);
  });
  VepReport report;
  for (std::size_t i = 0; i < arms.size();) {
    const int session = arms[i].session;
    std::optional<VepArmResult> s, r;
    for (; i < arms.size() && arms[i].session == session; ++i) {
      if (arms[i].preset == "safe") s = arms[i];
      else r = arms[i];
    }
    report.sessions.push_back(compare_vep_arms(session, std::move(s), std::move(r)));
  }
  return report;
}

}  // namespace

VepReport run_vep_experiment(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir,
                             std::vector<std::filesystem::path>* written) {
  if (cfg.experiment != ExperimentKind::VepSession) throw ConfigError("configuration is not a vep experiment");
  cfg.validate();
  if (out_dir) ensure_dir(recordings_dir(*out_dir));
  struct Task {
    int session;
    Preset preset;
  };
  std::vector<Task> tasks;
  for (int s = 0; s < cfg.vep.sessions; ++s)
    for (Preset p : cfg.presets) tasks.push_back({s, p});

  std::vector<VepArmResult> arms(tasks.size());
  std::vector<std::filesystem::path> paths(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    auto rec = simulate_vep_arm(cfg, tasks[i].session, tasks[i].preset);
    if (out_dir) {
      paths[i] = recordings_dir(*out_dir) /
                 ("vep_s" + padded(tasks[i].session + 1, 2) + "_" + std::string(to_string(tasks[i].preset)) + ".csv");
      write_csv(rec, paths[i]);
    }
    arms[i] = analyze_vep_recording(rec);
  });

  auto report = assemble_vep(std::move(arms));
  if (out_dir) {
    RunOutputs outputs;
    outputs.vep = report;
    write_reports(outputs, *out_dir);
    write_text(*out_dir / "run_config.txt", cfg.to_config().to_string());
    if (written) *written = paths;
  }
  return report;
}

// ---- analyze from disk ----------------------------------------------------------

RunOutputs analyze_path(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) {
    files.push_back(path);
  } else if (fs::is_directory(path, ec)) {
    const auto dir = fs::is_directory(recordings_dir(path), ec) ? recordings_dir(path) : path;
    for (const auto& entry : fs::directory_iterator(dir, ec))
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
  } else {
    throw IoError("no such file or directory: " + path.string());
  }
  if (files.empty()) throw AnalysisError("no recordings found in " + path.string());

  std::vector<std::pair<std::int64_t, SineConditionResult>> sine;
  std::vector<VepArmResult> vep;
  std::vector<std::string> errors;
  RunOutputs outputs;
  for (const auto& file : files) {
    try {
      const auto version = read_csv_version(file);
      if (version.empty()) throw UnknownVersionError("not a safe-csv recording");
      if (version != kCsvVersionTag) throw UnknownVersionError("unknown version '" + version + "'");
      const auto rec = read_csv(file);
      const auto& kind = require_meta(rec, "experiment");
      if (kind == to_string(ExperimentKind::SineSweep)) {
        const auto order = rec.meta.extra.count("order") ? meta_int(rec, "order") : 0;
        sine.emplace_back(order, analyze_sine_recording(rec));
      } else if (kind == to_string(ExperimentKind::VepSession)) {
        vep.push_back(analyze_vep_recording(rec));
      } else {
        throw AnalysisError("unknown experiment '" + kind + "'");
      }
      outputs.recordings.push_back(file);
    } catch (const std::exception& e) {
      errors.push_back(file.string() + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = std::to_string(errors.size()) + " recording(s) could not be analyzed:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw AnalysisError(msg);
  }
  if (!sine.empty()) {
    std::stable_sort(sine.begin(), sine.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<SineConditionResult> results;
    for (auto& [order, r] : sine) results.push_back(std::move(r));
    outputs.sine = summarize_sine(std::move(results));
  }
  if (!vep.empty()) outputs.vep = assemble_vep(std::move(vep));
  return outputs;
}

void write_reports(const RunOutputs& outputs, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  if (outputs.sine) {
    write_text(out_dir / kSineReportFile, sine_report_csv(*outputs.sine));
    write_text(out_dir / kSineSummaryFile, sine_summary_text(*outputs.sine));
  }
  if (outputs.vep) {
    write_text(out_dir / kVepReportFile, vep_report_csv(*outputs.vep));
    write_text(out_dir / kVepSummaryFile, vep_summary_text(*outputs.vep));
  }
}

}  // namespace safe
