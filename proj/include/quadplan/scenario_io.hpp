#pragma once

#include <string>
#include <vector>

#include "quadplan/simulator.hpp"

namespace quadplan {

/// Scenario documents are JSON with units spelled in the field names
/// (*_m, *_s, *_rad). Parse failures (malformed JSON, missing or mistyped
/// fields) are reported without validating scenario semantics; run
/// validate_scenario for those.
Result<Scenario> parse_scenario(const std::string& json_text);
Result<Scenario> load_scenario_file(const std::string& path);

/// Full-precision serialization; parse(serialize(s)) reproduces s exactly.
std::string serialize_scenario(const Scenario& s);

/// Comma-separated trace: one header row, one record per sim step, %.17g
/// numbers so reruns with the same seed are byte-identical.
std::string trace_to_csv(const std::vector<TraceRecord>& trace);

/// One structured record per line.
std::string events_to_jsonl(const std::vector<SimEvent>& events);

std::string summary_to_json(const SimSummary& summary);

/// Offline planning artifacts: waypoints before and after pruning, yaw
/// waypoints, segment times, and the spline coefficients per flat output.
std::string plan_to_json(const std::vector<Vec3>& pre_los, const std::vector<Vec3>& post_los,
                         const FlatPath& path, const FlatTrajectory& traj);

/// Sampled table of the four flat outputs and derivatives to order 2.
std::string trajectory_table_csv(const FlatTrajectory& traj, double dt);

const char* event_tag_name(EventTag tag);

}  // namespace quadplan
