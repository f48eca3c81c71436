#include "safe/report.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "safe/errors.hpp"

namespace safe {

namespace {

std::string fixed(double v, int decimals = 6) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) {
    if (s.front() == '-') s.erase(0, 1);  // no negative zero in reports
  }
  return s;
}

std::string general(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> split_row(std::string_view line) {
  std::vector<std::string> cells;
  while (true) {
    const auto comma = line.find(',');
    cells.emplace_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line = line.substr(comma + 1);
  }
  return cells;
}

class RowReader {
 public:
  RowReader(std::string_view text, std::string_view tag, std::string_view header) {
    std::size_t pos = 0;
    int line_no = 0;
    bool saw_tag = false, saw_header = false;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      auto line = text.substr(pos, end - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      pos = end + 1;
      ++line_no;
      if (line.empty()) continue;
      if (!saw_tag) {
        if (line != tag) throw MalformedHeaderError("expected '" + std::string(tag) + "' on line 1");
        saw_tag = true;
        continue;
      }
      if (!saw_header) {
        if (line != header) throw MalformedHeaderError("unexpected report header on line " + std::to_string(line_no));
        columns_ = split_row(line).size();
        saw_header = true;
        continue;
      }
      auto cells = split_row(line);
      if (cells.size() != columns_) throw RaggedRowError("line " + std::to_string(line_no) + ": wrong number of cells", line_no);
      rows_.push_back({line_no, std::move(cells)});
    }
    if (!saw_header) throw MalformedHeaderError("report has no header row");
  }

  struct Row {
    int line = 0;
    std::vector<std::string> cells;

    double num(std::size_t i) const {
      if (cells.at(i) == "nan") return std::nan("");
      auto v = parse_double(cells.at(i));
      if (!v) throw FormatError("line " + std::to_string(line) + ": '" + cells.at(i) + "' is not a number");
      return *v;
    }
    std::int64_t integer(std::size_t i) const {
      auto v = parse_int(cells.at(i));
      if (!v) throw FormatError("line " + std::to_string(line) + ": '" + cells.at(i) + "' is not an integer");
      return *v;
    }
  };

  const std::vector<Row>& rows() const { return rows_; }

 private:
  std::size_t columns_ = 0;
  std::vector<Row> rows_;
};

constexpr std::string_view kSineTag = "# safe-report-1 sine-sweep";
constexpr std::string_view kSineHeader =
    "kind,preset,arm,freq_hz,amplitude_uv,channel,epochs,rmse_mean_uv,rmse_std_uv,packets_expected,"
    "packets_received,fraction_received,fraction_received_std,conditions";
constexpr std::string_view kVepTag = "# safe-report-1 vep";
constexpr std::string_view kVepHeader =
    "kind,session,preset,metric,channel,value,safe,reference,d,mean_d,std_d,t,p,df,triggers,clean_trials,"
    "skipped_at_edges,packets_expected,packets_received";

Metric metric_from_string(std::string_view s) {
  for (Metric m : {Metric::Amplitude, Metric::Snr, Metric::PeakTime})
    if (to_string(m) == s) return m;
  throw FormatError("unknown metric '" + std::string(s) + "'");
}

std::string pm(std::span<const double> v, int decimals) {
  if (v.empty()) return "-";
  for (double x : v)
    if (!std::isfinite(x)) return "undefined";
  const double sd = v.size() >= 2 ? sample_std(v) : 0.0;
  return fixed(mean_of(v), decimals) + "+-" + fixed(sd, decimals);
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string format_p(double p) {
  if (p < 0.001) return "<0.001";
  return fixed(p, 3);
}

}  // namespace

// ---- sine ------------------------------------------------------------------

std::string sine_report_csv(const SineReport& report) {
  std::ostringstream out;
  out << kSineTag << '\n' << kSineHeader << '\n';
  for (const auto& c : report.conditions) {
    const std::string head = c.preset + "," + c.arm + "," + format_double(c.freq_hz) + "," +
                             format_double(c.amplitude_uv) + ",";
    const std::string loss = std::to_string(c.loss.expected) + "," + std::to_string(c.loss.received) + "," +
                             fixed(c.loss.fraction_received) + ",,";
    for (const auto& ch : c.channels)
      out << "channel," << head << ch.channel << ',' << ch.epochs << ',' << fixed(ch.rmse_mean_uv) << ','
          << fixed(ch.rmse_std_uv) << ',' << loss << '\n';
    out << "condition," << head << "all," << c.epochs << ',' << fixed(c.rmse_mean_uv) << ',' << fixed(c.rmse_std_uv)
        << ',' << loss << '\n';
  }
  for (const auto& p : report.presets)
    out << "preset," << p.preset << ",,,,all," << p.epochs << ',' << fixed(p.rmse_mean_uv) << ','
        << fixed(p.rmse_std_uv) << ",,," << fixed(p.received_mean) << ',' << fixed(p.received_std) << ','
        << p.conditions << '\n';
  return out.str();
}

SineReport parse_sine_report_csv(std::string_view text) {
  RowReader reader(text, kSineTag, kSineHeader);
  SineReport report;
  SineConditionResult current;
  bool open = false;
  for (const auto& row : reader.rows()) {
    const auto& kind = row.cells[0];
    if (kind == "channel") {
      if (!open) {
        current = {};
        current.preset = row.cells[1];
        current.arm = row.cells[2];
        current.freq_hz = row.num(3);
        current.amplitude_uv = row.num(4);
        open = true;
      }
      ChannelRmse ch;
      ch.channel = static_cast<int>(row.integer(5));
      ch.epochs = row.integer(6);
      ch.rmse_mean_uv = row.num(7);
      ch.rmse_std_uv = row.num(8);
      current.channels.push_back(ch);
    } else if (kind == "condition") {
      if (!open) {
        current = {};
        current.preset = row.cells[1];
        current.arm = row.cells[2];
        current.freq_hz = row.num(3);
        current.amplitude_uv = row.num(4);
      }
      current.epochs = row.integer(6);
      current.rmse_mean_uv = row.num(7);
      current.rmse_std_uv = row.num(8);
      current.loss.expected = row.integer(9);
      current.loss.received = row.integer(10);
      current.loss.fraction_received = row.num(11);
      report.conditions.push_back(std::move(current));
      open = false;
    } else if (kind == "preset") {
      SinePresetSummary p;
      p.preset = row.cells[1];
      p.epochs = row.integer(6);
      p.rmse_mean_uv = row.num(7);
      p.rmse_std_uv = row.num(8);
      p.received_mean = row.num(11);
      p.received_std = row.num(12);
      p.conditions = row.integer(13);
      report.presets.push_back(p);
    } else {
      throw FormatError("line " + std::to_string(row.line) + ": unknown row kind '" + kind + "'");
    }
  }
  if (open) throw FormatError("sine report ends inside a condition");
  return report;
}

std::string sine_summary_text(const SineReport& report) {
  std::ostringstream out;
  out << "Sine sweep: per-epoch RMSE between filtered recording and phase-fitted reference sinusoid\n\n";
  out << pad("preset", 11) << pad("arm", 11) << pad("f (Hz)", 8) << pad("A (uV)", 8) << pad("epochs", 8)
      << pad("RMSE (uV)", 18) << "packets received\n";
  for (const auto& c : report.conditions) {
    out << pad(c.preset, 11) << pad(c.arm, 11) << pad(format_double(c.freq_hz), 8)
        << pad(format_double(c.amplitude_uv), 8) << pad(std::to_string(c.epochs), 8)
        << pad(fixed(c.rmse_mean_uv, 2) + " +- " + fixed(c.rmse_std_uv, 2), 18) << c.loss.received << "/"
        << c.loss.expected << " (" << fixed(100.0 * c.loss.fraction_received, 1) << " %)\n";
  }
  out << "\nPooled over all conditions\n";
  for (const auto& p : report.presets) {
    out << "  " << pad(p.preset, 10) << "RMSE " << fixed(p.rmse_mean_uv, 2) << " +- " << fixed(p.rmse_std_uv, 2)
        << " uV over " << p.epochs << " epochs in " << p.conditions << " conditions; packets received "
        << fixed(100.0 * p.received_mean, 2) << " +- " << fixed(100.0 * p.received_std, 2) << " %\n";
  }
  return out.str();
}

// ---- VEP ---------------------------------------------------------------------

std::string vep_report_csv(const VepReport& report) {
  constexpr std::size_t kColumns = 19;
  enum Col { kKind, kSession, kPreset, kMetric, kChannel, kValue, kSafe, kRef, kD, kMeanD, kStdD, kT, kP, kDf,
             kTriggers, kClean, kSkipped, kExpected, kReceived };
  std::ostringstream out;
  out << kVepTag << '\n' << kVepHeader << '\n';
  auto emit = [&out](std::initializer_list<std::pair<Col, std::string>> cells) {
    std::vector<std::string> row(kColumns);
    for (const auto& [col, text] : cells) row[col] = text;
    for (std::size_t i = 0; i < kColumns; ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  };
  for (const auto& s : report.sessions) {
    const auto session = std::to_string(s.session);
    for (const auto* arm : {&s.safe, &s.reference}) {
      if (!*arm) continue;
      const auto& a = **arm;
      emit({{kKind, "arm"}, {kSession, session}, {kPreset, a.preset}, {kTriggers, std::to_string(a.triggers)},
            {kClean, std::to_string(a.clean_trials)}, {kSkipped, std::to_string(a.skipped_at_edges)},
            {kExpected, std::to_string(a.loss.expected)}, {kReceived, std::to_string(a.loss.received)}});
      const std::pair<Metric, const std::vector<double>*> metrics[] = {
          {Metric::Amplitude, &a.amplitude_uv}, {Metric::Snr, &a.snr_db}, {Metric::PeakTime, &a.peak_time_ms}};
      for (const auto& [m, values] : metrics)
        for (std::size_t c = 0; c < values->size(); ++c)
          emit({{kKind, "value"}, {kSession, session}, {kPreset, a.preset}, {kMetric, std::string(to_string(m))},
                {kChannel, std::to_string(c + 1)}, {kValue, fixed((*values)[c])}});
    }
    for (const auto& cmp : s.comparisons) {
      const std::vector<double>* sv = nullptr;
      const std::vector<double>* rv = nullptr;
      switch (cmp.metric) {
        case Metric::Amplitude: sv = &s.safe->amplitude_uv; rv = &s.reference->amplitude_uv; break;
        case Metric::Snr: sv = &s.safe->snr_db; rv = &s.reference->snr_db; break;
        case Metric::PeakTime: sv = &s.safe->peak_time_ms; rv = &s.reference->peak_time_ms; break;
      }
      const std::string metric(to_string(cmp.metric));
      for (std::size_t c = 0; c < cmp.d.size(); ++c)
        emit({{kKind, "d"}, {kSession, session}, {kMetric, metric}, {kChannel, std::to_string(c + 1)},
              {kSafe, fixed((*sv)[c])}, {kRef, fixed((*rv)[c])}, {kD, fixed(cmp.d[c])}});
      if (cmp.ttest)
        emit({{kKind, "stats"}, {kSession, session}, {kMetric, metric}, {kChannel, "all"},
              {kMeanD, fixed(cmp.mean_d)}, {kStdD, fixed(cmp.std_d)}, {kT, general(cmp.ttest->t_statistic)},
              {kP, general(cmp.ttest->p_value)}, {kDf, std::to_string(cmp.ttest->df)}});
      else
        emit({{kKind, "stats"}, {kSession, session}, {kMetric, metric}, {kChannel, "all"},
              {kMeanD, fixed(cmp.mean_d)}, {kStdD, fixed(cmp.std_d)}});
    }
  }
  return out.str();
}

VepReport parse_vep_report_csv(std::string_view text) {
  RowReader reader(text, kVepTag, kVepHeader);
  std::map<int, VepSessionResult> sessions;
  auto arm_of = [](VepSessionResult& s, const std::string& preset) -> VepArmResult& {
    auto& slot = preset == "safe" ? s.safe : s.reference;
    if (!slot) {
      slot.emplace();
      slot->preset = preset;
      slot->session = s.session;
    }
    return *slot;
  };
  auto comparison_of = [](VepSessionResult& s, Metric m) -> ComparisonStats& {
    for (auto& c : s.comparisons)
      if (c.metric == m) return c;
    s.comparisons.emplace_back();
    s.comparisons.back().metric = m;
    return s.comparisons.back();
  };
  for (const auto& row : reader.rows()) {
    const auto& kind = row.cells[0];
    const int session = static_cast<int>(row.integer(1));
    auto& s = sessions[session];
    s.session = session;
    if (kind == "arm") {
      auto& a = arm_of(s, row.cells[2]);
      a.triggers = row.integer(14);
      a.clean_trials = row.integer(15);
      a.skipped_at_edges = row.integer(16);
      a.loss.expected = row.integer(17);
      a.loss.received = row.integer(18);
      a.loss.fraction_received =
          a.loss.expected > 0 ? static_cast<double>(a.loss.received) / static_cast<double>(a.loss.expected) : 0.0;
    } else if (kind == "value") {
      auto& a = arm_of(s, row.cells[2]);
      const auto m = metric_from_string(row.cells[3]);
      auto& v = m == Metric::Amplitude ? a.amplitude_uv : m == Metric::Snr ? a.snr_db : a.peak_time_ms;
      v.push_back(row.num(5));
    } else if (kind == "d") {
      comparison_of(s, metric_from_string(row.cells[3])).d.push_back(row.num(8));
    } else if (kind == "stats") {
      auto& c = comparison_of(s, metric_from_string(row.cells[3]));
      c.mean_d = row.num(9);
      c.std_d = row.num(10);
      if (!row.cells[11].empty()) {
        TTestResult t;
        t.t_statistic = row.num(11);
        t.p_value = row.num(12);
        t.df = static_cast<int>(row.integer(13));
        c.ttest = t;
      }
    } else {
      throw FormatError("line " + std::to_string(row.line) + ": unknown row kind '" + kind + "'");
    }
  }
  VepReport report;
  for (auto& [k, s] : sessions) report.sessions.push_back(std::move(s));
  return report;
}

std::string vep_summary_text(const VepReport& report) {
  constexpr std::size_t kLabel = 16, kRow = 12, kCell = 18;
  std::ostringstream out;
  out << "VEP comparison, SAFE vs reference amplifier (mean +- std across channels)\n\n";
  out << pad("", kLabel) << pad("", kRow);
  for (const auto& s : report.sessions) out << pad("Session " + std::to_string(s.session), kCell);
  out << '\n';

  struct Block {
    Metric metric;
    std::string label;
    int decimals;
  };
  const Block blocks[] = {{Metric::Amplitude, "Amplitude (uV)", 1},
                          {Metric::Snr, "SNR (dB)", 2},
                          {Metric::PeakTime, "Peak time (ms)", 1}};
  auto values = [](const std::optional<VepArmResult>& a, Metric m) -> std::vector<double> {
    if (!a) return {};
    return m == Metric::Amplitude ? a->amplitude_uv : m == Metric::Snr ? a->snr_db : a->peak_time_ms;
  };
  auto comparison = [](const VepSessionResult& s, Metric m) -> const ComparisonStats* {
    for (const auto& c : s.comparisons)
      if (c.metric == m) return &c;
    return nullptr;
  };

  for (const auto& b : blocks) {
    const std::pair<std::string, std::function<std::string(const VepSessionResult&)>> rows[] = {
        {"SAFE", [&](const VepSessionResult& s) { return pm(values(s.safe, b.metric), b.decimals); }},
        {"Reference", [&](const VepSessionResult& s) { return pm(values(s.reference, b.metric), b.decimals); }},
        {"d (%)",
         [&](const VepSessionResult& s) {
           const auto* c = comparison(s, b.metric);
           return c ? fixed(c->mean_d, 1) + "+-" + fixed(c->std_d, 1) : std::string("-");
         }},
        {"p-value",
         [&](const VepSessionResult& s) {
           const auto* c = comparison(s, b.metric);
           return c && c->ttest ? format_p(c->ttest->p_value) : std::string("-");
         }},
    };
    bool first = true;
    for (const auto& [name, cell] : rows) {
      out << pad(first ? b.label : "", kLabel) << pad(name, kRow);
      for (const auto& s : report.sessions) out << pad(cell(s), kCell);
      out << '\n';
      first = false;
    }
    out << '\n';
  }

  out << "Trials (clean/triggers) and packets received\n";
  for (const auto& s : report.sessions)
    for (const auto* arm : {&s.safe, &s.reference})
      if (*arm)
        out << "  session " << s.session << ' ' << pad((*arm)->preset, 10) << (*arm)->clean_trials << '/'
            << (*arm)->triggers << " trials, " << (*arm)->skipped_at_edges << " skipped at edges, "
            << (*arm)->loss.received << '/' << (*arm)->loss.expected << " packets\n";

  out << "\nd < 0 favours SAFE: amplitude and SNR use d = 100 (ref - safe) / mean, peak time uses\n"
         "d = 100 (safe - ref) / mean. p is a two-tailed one-sample t-test of d against 0 (df = channels - 1).\n"
         "SAFE epochs are anchored at the end of the packet carrying the trigger; reference triggers\n"
         "carry 0-40 ms of uniform jitter.\n";
  return out.str();
}

}  // namespace safe
