#include "quadplan/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace quadplan {

using nlohmann::json;

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw json::other_error::create(501, "expected 3-vector", &j);
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json spline_to_json(const SplineConfig& c) {
  json j;
  j["order"] = c.order;
  j["continuity"] = c.continuity;
  j["weights"] = std::vector<double>(c.weights.data(), c.weights.data() + c.weights.size());
  j["avg_speed_mps"] = c.avg_speed;
  j["avg_yaw_rate_radps"] = c.avg_yaw_rate;
  j["min_segment_time_s"] = c.min_segment_time;
  return j;
}

SplineConfig spline_from_json(const json& j, const SplineConfig& defaults) {
  SplineConfig c = defaults;
  c.order = j.value("order", c.order);
  c.continuity = j.value("continuity", c.continuity);
  if (j.contains("weights")) {
    const auto w = j.at("weights").get<std::vector<double>>();
    c.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<long>(w.size()));
  }
  c.avg_speed = j.value("avg_speed_mps", c.avg_speed);
  c.avg_yaw_rate = j.value("avg_yaw_rate_radps", c.avg_yaw_rate);
  c.min_segment_time = j.value("min_segment_time_s", c.min_segment_time);
  return c;
}

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["seed_u64"] = s.seed;
  j["space"] = {{"min_m", vec3_to_json(s.space.bounds.min_corner)},
                {"max_m", vec3_to_json(s.space.bounds.max_corner)}};
  j["start"] = {{"position_m", vec3_to_json(s.start_position)}, {"yaw_rad", s.start_yaw}};
  j["target"] = {{"position_m", vec3_to_json(s.target_position)}, {"yaw_rad", s.target_yaw}};
  j["obstacles"] = json::array();
  for (const auto& o : s.obstacles)
    j["obstacles"].push_back({{"min_m", vec3_to_json(o.box.min_corner)},
                              {"max_m", vec3_to_json(o.box.max_corner)},
                              {"appears_at_s", o.appears_at}});
  j["camera"] = {{"fov_horizontal_rad", s.camera.fov_horizontal},
                 {"fov_vertical_rad", s.camera.fov_vertical},
                 {"max_range_m", s.camera.max_range},
                 {"rays_horizontal", s.camera.rays_horizontal},
                 {"rays_vertical", s.camera.rays_vertical},
                 {"noise_sigma_m", s.camera.noise_sigma},
                 {"mount_offset_m", vec3_to_json(s.camera.mount_offset)},
                 {"mount_yaw_rad", s.camera.mount_yaw}};
  j["planner"] = {{"rrt",
                   {{"max_nodes", s.planner.rrt.max_nodes},
                    {"steer_m", s.planner.rrt.steer_length},
                    {"neighbor_radius_m", s.planner.rrt.neighbor_radius}}},
                  {"position_spline", spline_to_json(s.planner.position_spline)},
                  {"yaw_spline", spline_to_json(s.planner.yaw_spline)},
                  {"inflation_margin_m", s.planner.inflation_margin}};
  j["detection"] = {{"cluster_radius_m", s.detection.cluster_radius},
                    {"min_cluster_pts", s.detection.min_cluster_pts},
                    {"delta_m", s.detection.delta},
                    {"knn", s.detection.knn}};
  std::vector<double> inertia(s.quad.inertia.data(), s.quad.inertia.data() + 9);
  j["quad"] = {{"mass_kg", s.quad.mass},
               {"inertia_kgm2", inertia},
               {"arm_length_m", s.quad.arm_length},
               {"gravity_mps2", s.quad.gravity},
               {"rotor_moment_coeff_m", s.quad.rotor_moment_coeff}};
  j["sensing_period_s"] = s.sensing_period;
  j["sim_step_s"] = s.sim_step;
  j["max_duration_s"] = s.max_duration;
  return j.dump(2) + "\n";
}

Result<Scenario> parse_scenario(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    Scenario s;
    s.name = j.value("name", std::string{});
    s.seed = j.value("seed_u64", std::uint64_t{0});
    s.space.bounds = Cuboid{vec3_from_json(j.at("space").at("min_m")),
                            vec3_from_json(j.at("space").at("max_m"))};
    s.start_position = vec3_from_json(j.at("start").at("position_m"));
    s.start_yaw = j.at("start").value("yaw_rad", 0.0);
    s.target_position = vec3_from_json(j.at("target").at("position_m"));
    s.target_yaw = j.at("target").value("yaw_rad", 0.0);
    for (const auto& o : j.value("obstacles", json::array()))
      s.obstacles.push_back(TimedObstacle{
          Cuboid{vec3_from_json(o.at("min_m")), vec3_from_json(o.at("max_m"))},
          o.value("appears_at_s", 0.0)});
    if (j.contains("camera")) {
      const auto& c = j.at("camera");
      s.camera.fov_horizontal = c.value("fov_horizontal_rad", s.camera.fov_horizontal);
      s.camera.fov_vertical = c.value("fov_vertical_rad", s.camera.fov_vertical);
      s.camera.max_range = c.value("max_range_m", s.camera.max_range);
      s.camera.rays_horizontal = c.value("rays_horizontal", s.camera.rays_horizontal);
      s.camera.rays_vertical = c.value("rays_vertical", s.camera.rays_vertical);
      s.camera.noise_sigma = c.value("noise_sigma_m", s.camera.noise_sigma);
      if (c.contains("mount_offset_m")) s.camera.mount_offset = vec3_from_json(c.at("mount_offset_m"));
      s.camera.mount_yaw = c.value("mount_yaw_rad", s.camera.mount_yaw);
    }
    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      if (p.contains("rrt")) {
        const auto& r = p.at("rrt");
        s.planner.rrt.max_nodes = r.value("max_nodes", s.planner.rrt.max_nodes);
        s.planner.rrt.steer_length = r.value("steer_m", s.planner.rrt.steer_length);
        s.planner.rrt.neighbor_radius = r.value("neighbor_radius_m", s.planner.rrt.neighbor_radius);
      }
      if (p.contains("position_spline"))
        s.planner.position_spline = spline_from_json(p.at("position_spline"),
                                                     SplineConfig::position_default());
      if (p.contains("yaw_spline"))
        s.planner.yaw_spline = spline_from_json(p.at("yaw_spline"), SplineConfig::yaw_default());
      s.planner.inflation_margin = p.value("inflation_margin_m", s.planner.inflation_margin);
    }
    if (j.contains("detection")) {
      const auto& d = j.at("detection");
      s.detection.cluster_radius = d.value("cluster_radius_m", s.detection.cluster_radius);
      s.detection.min_cluster_pts = d.value("min_cluster_pts", s.detection.min_cluster_pts);
      s.detection.delta = d.value("delta_m", s.detection.delta);
      s.detection.knn = d.value("knn", s.detection.knn);
    }
    if (j.contains("quad")) {
      const auto& q = j.at("quad");
      s.quad.mass = q.value("mass_kg", s.quad.mass);
      if (q.contains("inertia_kgm2")) {
        const auto v = q.at("inertia_kgm2").get<std::vector<double>>();
        if (v.size() != 9) throw json::other_error::create(501, "inertia needs 9 entries", &q);
        s.quad.inertia = Eigen::Map<const Eigen::Matrix3d>(v.data());
      }
      s.quad.arm_length = q.value("arm_length_m", s.quad.arm_length);
      s.quad.gravity = q.value("gravity_mps2", s.quad.gravity);
      s.quad.rotor_moment_coeff = q.value("rotor_moment_coeff_m", s.quad.rotor_moment_coeff);
    }
    s.sensing_period = j.value("sensing_period_s", s.sensing_period);
    s.sim_step = j.value("sim_step_s", s.sim_step);
    s.max_duration = j.value("max_duration_s", s.max_duration);
    return s;
  } catch (const json::exception& e) {
    return Error{ErrorCode::invalid_input, std::string("scenario parse: ") + e.what()};
  }
}

Result<Scenario> load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return Error{ErrorCode::invalid_input, "scenario parse: cannot open " + path};
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

const char* event_tag_name(EventTag tag) {
  switch (tag) {
    case EventTag::scan: return "scan";
    case EventTag::detection: return "detection";
    case EventTag::replan: return "replan";
    default: return "none";
  }
}

std::string trace_to_csv(const std::vector<TraceRecord>& trace) {
  std::ostringstream os;
  os << "t";
  for (const char* o : {"x", "y", "z", "yaw"})
    for (int k = 0; k <= 4; ++k) os << "," << o << (k ? "_d" + std::to_string(k) : "");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) os << ",R" << r << c;
  os << ",omega_x,omega_y,omega_z,u1,u2_x,u2_y,u2_z,F1,F2,F3,F4,event\n";

  for (const auto& rec : trace) {
    os << format_g17(rec.t);
    const Eigen::Vector4d* rows[5] = {&rec.flat.value, &rec.flat.d1, &rec.flat.d2, &rec.flat.d3,
                                      &rec.flat.d4};
    for (int axis = 0; axis < 4; ++axis)
      for (int k = 0; k <= 4; ++k) os << "," << format_g17((*rows[k])[axis]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) os << "," << format_g17(rec.state.rotation(r, c));
    for (int k = 0; k < 3; ++k) os << "," << format_g17(rec.state.angular_velocity[k]);
    os << "," << format_g17(rec.input.thrust);
    for (int k = 0; k < 3; ++k) os << "," << format_g17(rec.input.moment[k]);
    for (double f : rec.rotor_forces) os << "," << format_g17(f);
    os << "," << event_tag_name(rec.tag) << "\n";
  }
  return os.str();
}

std::string events_to_jsonl(const std::vector<SimEvent>& events) {
  std::ostringstream os;
  for (const auto& e : events) {
    json j;
    j["t_s"] = e.t;
    j["type"] = event_tag_name(e.type);
    j["new_obstacles"] = e.new_obstacle_count;
    j["known_obstacles"] = e.known_obstacle_count;
    if (e.type == EventTag::replan) j["wall_ms"] = e.wall_ms;
    if (!e.info.empty()) j["info"] = e.info;
    os << j.dump() << "\n";
  }
  return os.str();
}

std::string summary_to_json(const SimSummary& s) {
  json j;
  j["completed"] = s.completed;
  j["mission_duration_s"] = s.mission_duration;
  j["replan_count"] = s.replan_count;
  if (std::isinf(s.min_clearance))
    j["min_clearance_m"] = "inf";
  else
    j["min_clearance_m"] = s.min_clearance;
  j["peak_yaw_rate_post_replan_radps"] = s.peak_yaw_rate_post_replan;
  j["final_position_m"] = vec3_to_json(s.final_position);
  return j.dump(2) + "\n";
}

namespace {

json piecewise_to_json(const PiecewiseTrajectory& p) {
  json j;
  j["knots_s"] = p.knots();
  j["coefficients"] = json::array();
  for (const auto& c : p.coefficients())
    j["coefficients"].push_back(std::vector<double>(c.data(), c.data() + c.size()));
  return j;
}

}  // namespace

std::string plan_to_json(const std::vector<Vec3>& pre_los, const std::vector<Vec3>& post_los,
                         const FlatPath& path, const FlatTrajectory& traj) {
  json j;
  j["pre_los_waypoints_m"] = json::array();
  for (const auto& p : pre_los) j["pre_los_waypoints_m"].push_back(vec3_to_json(p));
  j["post_los_waypoints_m"] = json::array();
  for (const auto& p : post_los) j["post_los_waypoints_m"].push_back(vec3_to_json(p));
  j["path_waypoints_m"] = json::array();
  for (const auto& p : path.positions) j["path_waypoints_m"].push_back(vec3_to_json(p));
  j["yaw_waypoints_rad"] = path.yaws;
  j["segment_times_s"] = path.segment_times;
  j["outputs"] = {{"x", piecewise_to_json(traj.x)},
                  {"y", piecewise_to_json(traj.y)},
                  {"z", piecewise_to_json(traj.z)},
                  {"yaw", piecewise_to_json(traj.yaw)}};
  return j.dump(2) + "\n";
}

std::string trajectory_table_csv(const FlatTrajectory& traj, double dt) {
  std::ostringstream os;
  os << "t";
  for (const char* o : {"x", "y", "z", "yaw"})
    for (int k = 0; k <= 2; ++k) os << "," << o << (k ? "_d" + std::to_string(k) : "");
  os << "\n";
  const double t0 = traj.start_time(), t1 = traj.end_time();
  const long steps = static_cast<long>(std::floor((t1 - t0) / dt));
  for (long i = 0; i <= steps + 1; ++i) {
    const double t = std::min(t0 + static_cast<double>(i) * dt, t1);
    os << format_g17(t);
    const PiecewiseTrajectory* outputs[4] = {&traj.x, &traj.y, &traj.z, &traj.yaw};
    for (int axis = 0; axis < 4; ++axis)
      for (int k = 0; k <= 2; ++k) os << "," << format_g17(outputs[axis]->evaluate(t, k));
    os << "\n";
    if (t >= t1) break;
  }
  return os.str();
}

}  // namespace quadplan
