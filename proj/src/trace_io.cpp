#include "socialarm/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "socialarm/errors.hpp"

namespace socialarm {

std::string format_fixed(double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, value);
  std::string s = buf;
  // "-0.000000" -> "0.000000"
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

namespace {

void append_vec(std::string& out, const double* v, int n) {
  out += '[';
  for (int i = 0; i < n; ++i) {
    if (i) out += ',';
    out += format_fixed(v[i]);
  }
  out += ']';
}

void append_vec(std::string& out, const Vec3& v) { append_vec(out, v.data(), 3); }

}  // namespace

std::string trace_record_jsonl(const TraceRecord& r) {
  std::string s;
  s.reserve(512);
  s += "{\"tick\":" + std::to_string(r.tick);
  s += ",\"time\":" + format_fixed(r.time);
  s += ",\"q\":";
  append_vec(s, r.pose.q.data(), kJointCount);
  s += ",\"gaze\":{\"kind\":\"";
  s += to_string(r.gaze.priority);
  s += "\",\"id\":" + std::to_string(r.gaze.target_id) + ",\"pos\":";
  append_vec(s, r.gaze.target_pos);
  s += "}";
  s += ",\"attended\":" + (r.attended ? std::to_string(*r.attended) : std::string("null"));
  s += ",\"attention\":[";
  for (std::size_t i = 0; i < r.attention.size(); ++i) {
    const auto& a = r.attention[i];
    if (i) s += ',';
    s += "{\"person_id\":" + std::to_string(a.person_id);
    s += ",\"P\":" + format_fixed(a.P);
    s += ",\"V\":" + format_fixed(a.V);
    s += ",\"theta\":" + format_fixed(a.theta);
    s += ",\"phi\":" + format_fixed(a.phi);
    s += ",\"d\":" + format_fixed(a.d);
    s += ",\"h_left\":" + std::to_string(static_cast<int>(a.h_left));
    s += ",\"h_right\":" + std::to_string(static_cast<int>(a.h_right)) + "}";
  }
  s += "],\"drift\":[";
  for (std::size_t i = 0; i < r.drift_targets.size(); ++i) {
    const auto& v = r.drift_targets[i];
    if (i) s += ',';
    s += "{\"id\":" + std::to_string(v.target_id) + ",\"pos\":";
    append_vec(s, v.pos);
    s += ",\"born_at\":" + format_fixed(v.born_at) + ",\"lifespan\":" + format_fixed(v.lifespan) + "}";
  }
  s += "],\"saturated\":";
  s += r.saturated ? "true" : "false";
  s += ",\"gaze_error_deg\":" + format_fixed(r.gaze_error_deg);
  s += "}";
  return s;
}

std::string trace_record_csv(const TraceRecord& r) {
  std::string s = std::to_string(r.tick) + "," + format_fixed(r.time);
  for (int i = 0; i < kJointCount; ++i) s += "," + format_fixed(r.pose.q[i]);
  s += ",";
  s += to_string(r.gaze.priority);
  s += "," + std::to_string(r.gaze.target_id) + "," + format_fixed(r.gaze_error_deg);
  return s;
}

void write_trace_jsonl(std::ostream& out, std::span<const TraceRecord> trace) {
  for (const auto& r : trace) out << trace_record_jsonl(r) << '\n';
}

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace) out << trace_record_csv(r) << '\n';
}

nlohmann::json metrics_to_json(const RunMetrics& m) {
  return {{"person_gaze_fraction", m.person_gaze_fraction},
          {"switch_count", m.switch_count},
          {"mean_gaze_error_deg", m.mean_gaze_error_deg},
          {"mean_abs_joint_speed", m.mean_abs_joint_speed},
          {"drift_event_count", m.drift_event_count},
          {"duration", m.duration},
          {"peak_breath_excursion", m.peak_breath_excursion},
          {"saturated_ticks", m.saturated_ticks},
          {"ticks", m.ticks}};
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

void check(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw IoError("write failed for " + p.string());
}

}  // namespace

void write_run_outputs(const std::filesystem::path& dir, const RunResult& result, TraceFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  if (format != TraceFormat::csv) {
    const auto p = dir / "trace.jsonl";
    auto out = open_for_write(p);
    write_trace_jsonl(out, result.trace);
    check(out, p);
  }
  if (format != TraceFormat::jsonl) {
    const auto p = dir / "trace.csv";
    auto out = open_for_write(p);
    write_trace_csv(out, result.trace);
    check(out, p);
  }
  const auto p = dir / "metrics.json";
  auto out = open_for_write(p);
  out << metrics_to_json(result.metrics).dump(2) << '\n';
  check(out, p);
}

std::string suite_summary_csv(std::span<const SuiteEntry> entries) {
  std::ostringstream out;
  out << kSuiteCsvHeader << '\n';
  for (const auto& e : entries) {
    const auto& m = e.result.metrics;
    out << e.preset.name << ',' << format_fixed(e.preset.condition.arousal, 1) << ','
        << to_string(e.preset.condition.attention) << ',' << format_fixed(m.person_gaze_fraction) << ','
        << m.switch_count << ',' << format_fixed(m.mean_gaze_error_deg) << ',' << format_fixed(m.mean_abs_joint_speed)
        << ',' << m.drift_event_count << ',' << format_fixed(m.duration) << '\n';
  }
  return out.str();
}

}  // namespace socialarm
