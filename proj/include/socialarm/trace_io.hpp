#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>

#include "json.hpp"
#include "socialarm/harness.hpp"

namespace socialarm {

/// Every real number in trace output is printed with this many digits after
/// the decimal point ("%.*f", C locale, negative zero printed as zero), so
/// traces compare byte-for-byte across runs and machines.
inline constexpr int kTracePrecision = 6;

std::string format_fixed(double value, int precision = kTracePrecision);

/// One JSON object, no trailing newline.
std::string trace_record_jsonl(const TraceRecord& record);

/// tick,time,q1..q6,target_kind,target_id,gaze_error_deg
inline constexpr const char* kTraceCsvHeader = "tick,time,q1,q2,q3,q4,q5,q6,target_kind,target_id,gaze_error_deg";
std::string trace_record_csv(const TraceRecord& record);

void write_trace_jsonl(std::ostream& out, std::span<const TraceRecord> trace);
void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace);

nlohmann::json metrics_to_json(const RunMetrics& m);

enum class TraceFormat { jsonl, csv, both };

/// Writes trace.jsonl and/or trace.csv plus metrics.json into dir, creating
/// it if needed. Throws IoError.
void write_run_outputs(const std::filesystem::path& dir, const RunResult& result, TraceFormat format);

inline constexpr const char* kSuiteCsvHeader =
    "preset,arousal,attention,person_gaze_fraction,switch_count,mean_gaze_error_deg,mean_abs_joint_speed,"
    "drift_event_count,duration";
std::string suite_summary_csv(std::span<const SuiteEntry> entries);

}  // namespace socialarm
