#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mrsafe/types.hpp"

namespace mrsafe {

using json = nlohmann::json;

namespace detail {

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) throw ParseError(where + "." + key + ": unknown field");
    }
}

inline double get_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ParseError(where + "." + key + ": missing required field");
    const json& v = obj.at(key);
    if (!v.is_number()) throw ParseError(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline double get_number_or(const json& obj, const std::string& key, const std::string& where, double fallback) {
    return obj.contains(key) ? get_number(obj, key, where) : fallback;
}

inline bool get_bool_or(const json& obj, const std::string& key, const std::string& where, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) throw ParseError(where + "." + key + ": expected true or false");
    return obj.at(key).get<bool>();
}

inline Vec2 get_vec2(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ParseError(where + ": expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

inline std::pair<double, double> get_pair(const json& v, const std::string& where) {
    const Vec2 p = get_vec2(v, where);
    return {p(0), p(1)};
}

inline json vec2_json(const Vec2& v) { return json::array({v(0), v(1)}); }

inline RobotParams parse_params(const json& obj, const std::string& where, RobotParams base) {
    check_keys(obj, where, {"body_radius", "wheel_radius", "axle_length", "offset"});
    base.body_radius = get_number_or(obj, "body_radius", where, base.body_radius);
    base.wheel_radius = get_number_or(obj, "wheel_radius", where, base.wheel_radius);
    base.axle_length = get_number_or(obj, "axle_length", where, base.axle_length);
    base.offset = get_number_or(obj, "offset", where, base.offset);
    return base;
}

inline ReferenceSpec parse_reference(const json& obj, const std::string& where, const Pose& start_pose) {
    check_keys(obj, where, {"kind", "start", "goal", "center", "waypoints", "duration"});
    ReferenceSpec ref;
    const std::string kind = obj.value("kind", std::string("line"));
    ref.start = obj.contains("start") ? get_vec2(obj.at("start"), where + ".start") : start_pose.position();
    ref.start_heading = start_pose.theta;
    ref.duration = get_number(obj, "duration", where);
    if (kind == "line") {
        ref.kind = ReferenceKind::Line;
        if (!obj.contains("goal")) throw ParseError(where + ".goal: missing required field");
        ref.goal = get_vec2(obj.at("goal"), where + ".goal");
    } else if (kind == "circle-antipodal") {
        ref.kind = ReferenceKind::CircleAntipodal;
        ref.center = obj.contains("center") ? get_vec2(obj.at("center"), where + ".center") : Vec2::Zero();
        ref.goal = 2.0 * ref.center - ref.start;
    } else if (kind == "waypoints") {
        ref.kind = ReferenceKind::Waypoints;
        if (!obj.contains("waypoints") || !obj.at("waypoints").is_array())
            throw ParseError(where + ".waypoints: expected a list of [x, y]");
        for (std::size_t k = 0; k < obj.at("waypoints").size(); ++k)
            ref.waypoints.push_back(get_vec2(obj.at("waypoints")[k], where + ".waypoints[" + std::to_string(k) + "]"));
        if (!obj.contains("goal")) throw ParseError(where + ".goal: missing required field");
        ref.goal = get_vec2(obj.at("goal"), where + ".goal");
    } else {
        throw ParseError(where + ".kind: unknown reference kind '" + kind + "'");
    }
    return ref;
}

inline const char* kind_name(ReferenceKind k) {
    switch (k) {
        case ReferenceKind::Line: return "line";
        case ReferenceKind::CircleAntipodal: return "circle-antipodal";
        case ReferenceKind::Waypoints: return "waypoints";
    }
    return "line";
}

inline const char* rule_name(EscapeRule r) {
    switch (r) {
        case EscapeRule::Bearing: return "bearing";
        case EscapeRule::Left: return "left";
        case EscapeRule::Right: return "right";
    }
    return "bearing";
}

}  // namespace detail

/// Checks every domain invariant of a scenario; throws ValidationError.
inline void validate(const ScenarioSpec& s) {
    auto fail = [](const std::string& msg) { throw ValidationError(msg); };
    if (s.robots.empty()) fail("scenario has no robots");
    const ControlGains& g = s.gains;
    if (!(g.kappa1 > 0 && g.kappa2 > 0 && g.kappa3 > 0 && g.kappa4 > 0)) fail("gains: every kappa must be positive");
    if (!(g.lambda > 0.0 && g.lambda <= 1.0)) fail("gains.lambda must lie in (0, 1]");
    if (!(g.zeta_gain >= 0.0)) fail("gains.zeta must be non-negative");
    if (!(g.theta_weight >= 0.0)) fail("gains.theta_weight must be non-negative");
    if (!(g.kappa4 > g.zeta_gain)) fail("gains: kappa4 must exceed zeta for tracking convergence");
    if (!(g.q >= 0.0 && g.q <= std::numbers::pi)) fail("gains.q_deg must lie in [0, 180]");
    if (!(s.dt > 0.0)) fail("sim.dt must be positive");
    if (!(s.t_end >= 0.0)) fail("sim.t_end must be non-negative");
    if (!(s.udot_bounds.first < s.udot_bounds.second)) fail("sim.udot_bounds: lower must be below upper");
    if (s.u_bounds && !(s.u_bounds->first < s.u_bounds->second)) fail("sim.u_bounds: lower must be below upper");
    if (!(s.sensing_radius > 0.0)) fail("sim.sensing_radius must be positive");
    if (!(s.noise.r_m >= 0.0)) fail("noise.r_m must be non-negative");
    if (!(s.safety.inflate_rho >= 0.0)) fail("safety.inflate_rho must be non-negative");

    for (std::size_t r = 0; r < s.robots.size(); ++r) {
        const RobotSpec& rs = s.robots[r];
        const std::string tag = "robot " + std::to_string(r);
        const RobotParams& p = rs.params;
        if (!(p.body_radius > 0 && p.wheel_radius > 0 && p.axle_length > 0 && p.offset > 0))
            fail(tag + ": body_radius, wheel_radius, axle_length and offset must be positive");
        const RobotState& st = rs.initial;
        if (!std::isfinite(st.pose.x) || !std::isfinite(st.pose.y) || !std::isfinite(st.pose.theta) ||
            !st.u.allFinite())
            fail(tag + ": initial state must be finite");
        if (!(st.pose.theta > -std::numbers::pi && st.pose.theta <= std::numbers::pi))
            fail(tag + ": heading must lie in (-180, 180] degrees");
        if (!(rs.reference.duration > 0.0)) fail(tag + ": reference duration must be positive");
    }
    for (std::size_t k = 0; k < s.obstacles.size(); ++k) {
        const Obstacle& o = s.obstacles[k];
        if (!(o.radius > 0.0)) fail("obstacle " + std::to_string(k) + ": radius must be positive");
        if (!o.position.allFinite() || !o.velocity.allFinite())
            fail("obstacle " + std::to_string(k) + ": position and velocity must be finite");
    }

    const double lam = g.lambda;
    for (std::size_t i = 0; i < s.robots.size(); ++i) {
        const Vec2 pi = s.robots[i].initial.pose.position();
        for (std::size_t j = i + 1; j < s.robots.size(); ++j) {
            const double rho = pair_rho(s, i, j);
            const double d2 = (pi - s.robots[j].initial.pose.position()).squaredNorm();
            if (lam * d2 < rho * rho) {
                std::ostringstream msg;
                msg << "initial safe-set violation: robots " << i << " and " << j << " (lambda*|p|^2 = " << lam * d2
                    << " < rho^2 = " << rho * rho << ")";
                fail(msg.str());
            }
        }
        for (std::size_t k = 0; k < s.obstacles.size(); ++k) {
            const double rho = obstacle_rho(s, i, k);
            const double d2 = (pi - s.obstacles[k].position).squaredNorm();
            if (lam * d2 < rho * rho) {
                std::ostringstream msg;
                msg << "initial safe-set violation: robot " << i << " and obstacle " << k << " (lambda*|p|^2 = "
                    << lam * d2 << " < rho^2 = " << rho * rho << ")";
                fail(msg.str());
            }
        }
    }
}

/// Builds a ScenarioSpec from a JSON document and validates it. Angles in
/// the document are in degrees.
inline ScenarioSpec scenario_from_json(const json& doc) {
    using namespace detail;
    check_keys(doc, "scenario", {"name", "robot_defaults", "robots", "obstacles", "gains", "safety", "sim", "noise"});
    ScenarioSpec s;
    s.name = doc.value("name", std::string());

    RobotParams defaults;
    if (doc.contains("robot_defaults")) {
        const json& rd = doc.at("robot_defaults");
        check_keys(rd, "robot_defaults", {"params"});
        if (rd.contains("params")) defaults = parse_params(rd.at("params"), "robot_defaults.params", defaults);
    }

    if (!doc.contains("robots") || !doc.at("robots").is_array()) throw ParseError("robots: expected a list");
    const json& robots = doc.at("robots");
    for (std::size_t r = 0; r < robots.size(); ++r) {
        const std::string where = "robots[" + std::to_string(r) + "]";
        const json& jr = robots[r];
        check_keys(jr, where, {"pose", "u", "params", "reference"});
        RobotSpec rs;
        if (!jr.contains("pose")) throw ParseError(where + ".pose: missing required field");
        const json& jp = jr.at("pose");
        check_keys(jp, where + ".pose", {"x", "y", "theta"});
        rs.initial.pose.x = get_number(jp, "x", where + ".pose");
        rs.initial.pose.y = get_number(jp, "y", where + ".pose");
        rs.initial.pose.theta = wrap_angle(deg2rad(get_number_or(jp, "theta", where + ".pose", 0.0)));
        if (jr.contains("u")) rs.initial.u = get_vec2(jr.at("u"), where + ".u");
        rs.params = jr.contains("params") ? parse_params(jr.at("params"), where + ".params", defaults) : defaults;
        if (!jr.contains("reference")) throw ParseError(where + ".reference: missing required field");
        rs.reference = parse_reference(jr.at("reference"), where + ".reference", rs.initial.pose);
        s.robots.push_back(std::move(rs));
    }

    if (doc.contains("obstacles")) {
        const json& obs = doc.at("obstacles");
        if (!obs.is_array()) throw ParseError("obstacles: expected a list");
        for (std::size_t k = 0; k < obs.size(); ++k) {
            const std::string where = "obstacles[" + std::to_string(k) + "]";
            check_keys(obs[k], where, {"position", "velocity", "radius"});
            Obstacle o;
            if (!obs[k].contains("position")) throw ParseError(where + ".position: missing required field");
            o.position = get_vec2(obs[k].at("position"), where + ".position");
            if (obs[k].contains("velocity")) o.velocity = get_vec2(obs[k].at("velocity"), where + ".velocity");
            o.radius = get_number(obs[k], "radius", where);
            s.obstacles.push_back(o);
        }
    }

    if (doc.contains("gains")) {
        const json& jg = doc.at("gains");
        check_keys(jg, "gains", {"kappa1", "kappa2", "kappa3", "kappa4", "lambda", "zeta", "q_deg", "theta_weight"});
        ControlGains& g = s.gains;
        g.kappa1 = get_number_or(jg, "kappa1", "gains", g.kappa1);
        g.kappa2 = get_number_or(jg, "kappa2", "gains", g.kappa2);
        g.kappa3 = get_number_or(jg, "kappa3", "gains", g.kappa3);
        g.kappa4 = get_number_or(jg, "kappa4", "gains", g.kappa4);
        g.lambda = get_number_or(jg, "lambda", "gains", g.lambda);
        g.zeta_gain = get_number_or(jg, "zeta", "gains", g.zeta_gain);
        g.q = deg2rad(get_number_or(jg, "q_deg", "gains", rad2deg(g.q)));
        g.theta_weight = get_number_or(jg, "theta_weight", "gains", g.theta_weight);
    }

    if (doc.contains("safety")) {
        const json& js = doc.at("safety");
        check_keys(js, "safety", {"inflate_rho", "noise_compensation"});
        s.safety.inflate_rho = get_number_or(js, "inflate_rho", "safety", 0.0);
        s.safety.noise_compensation = get_bool_or(js, "noise_compensation", "safety", false);
    }

    if (!doc.contains("sim")) throw ParseError("sim: missing required field");
    {
        const json& js = doc.at("sim");
        check_keys(js, "sim",
                   {"dt", "t_end", "seed", "udot_bounds", "u_bounds", "sensing_radius", "escape_rule",
                    "zeta_fixed_point"});
        s.dt = get_number_or(js, "dt", "sim", s.dt);
        s.t_end = get_number(js, "t_end", "sim");
        if (js.contains("seed")) {
            if (!js.at("seed").is_number_integer() || js.at("seed").get<long long>() < 0)
                throw ParseError("sim.seed: expected a non-negative integer");
            s.rng_seed = js.at("seed").get<std::uint64_t>();
        }
        if (js.contains("udot_bounds")) s.udot_bounds = get_pair(js.at("udot_bounds"), "sim.udot_bounds");
        if (js.contains("u_bounds") && !js.at("u_bounds").is_null())
            s.u_bounds = get_pair(js.at("u_bounds"), "sim.u_bounds");
        if (js.contains("sensing_radius") && !js.at("sensing_radius").is_null())
            s.sensing_radius = get_number(js, "sensing_radius", "sim");
        if (js.contains("escape_rule")) {
            const std::string rule = js.at("escape_rule").is_string() ? js.at("escape_rule").get<std::string>() : "";
            if (rule == "bearing") s.escape_rule = EscapeRule::Bearing;
            else if (rule == "left") s.escape_rule = EscapeRule::Left;
            else if (rule == "right") s.escape_rule = EscapeRule::Right;
            else throw ParseError("sim.escape_rule: expected \"bearing\", \"left\" or \"right\"");
        }
        s.zeta_fixed_point = get_bool_or(js, "zeta_fixed_point", "sim", false);
    }

    if (doc.contains("noise")) {
        const json& jn = doc.at("noise");
        check_keys(jn, "noise", {"enabled", "r_m"});
        s.noise.enabled = get_bool_or(jn, "enabled", "noise", false);
        s.noise.r_m = get_number_or(jn, "r_m", "noise", 0.0);
    }

    validate(s);
    return s;
}

inline ScenarioSpec parse_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
    }
    return scenario_from_json(doc);
}

inline json scenario_to_json(const ScenarioSpec& s) {
    using namespace detail;
    json doc;
    doc["name"] = s.name;
    doc["robots"] = json::array();
    for (const RobotSpec& rs : s.robots) {
        json jr;
        jr["pose"] = {{"x", rs.initial.pose.x}, {"y", rs.initial.pose.y}, {"theta", rad2deg(rs.initial.pose.theta)}};
        jr["u"] = vec2_json(rs.initial.u);
        jr["params"] = {{"body_radius", rs.params.body_radius},
                        {"wheel_radius", rs.params.wheel_radius},
                        {"axle_length", rs.params.axle_length},
                        {"offset", rs.params.offset}};
        json ref;
        ref["kind"] = kind_name(rs.reference.kind);
        ref["start"] = vec2_json(rs.reference.start);
        ref["duration"] = rs.reference.duration;
        if (rs.reference.kind == ReferenceKind::CircleAntipodal) {
            ref["center"] = vec2_json(rs.reference.center);
        } else {
            ref["goal"] = vec2_json(rs.reference.goal);
        }
        if (rs.reference.kind == ReferenceKind::Waypoints) {
            ref["waypoints"] = json::array();
            for (const Vec2& w : rs.reference.waypoints) ref["waypoints"].push_back(vec2_json(w));
        }
        jr["reference"] = ref;
        doc["robots"].push_back(jr);
    }
    doc["obstacles"] = json::array();
    for (const Obstacle& o : s.obstacles)
        doc["obstacles"].push_back(
            {{"position", vec2_json(o.position)}, {"velocity", vec2_json(o.velocity)}, {"radius", o.radius}});
    doc["gains"] = {{"kappa1", s.gains.kappa1}, {"kappa2", s.gains.kappa2}, {"kappa3", s.gains.kappa3},
                    {"kappa4", s.gains.kappa4}, {"lambda", s.gains.lambda}, {"zeta", s.gains.zeta_gain},
                    {"q_deg", rad2deg(s.gains.q)}, {"theta_weight", s.gains.theta_weight}};
    doc["safety"] = {{"inflate_rho", s.safety.inflate_rho}, {"noise_compensation", s.safety.noise_compensation}};
    json sim;
    sim["dt"] = s.dt;
    sim["t_end"] = s.t_end;
    sim["seed"] = s.rng_seed;
    sim["udot_bounds"] = json::array({s.udot_bounds.first, s.udot_bounds.second});
    sim["u_bounds"] = s.u_bounds ? json::array({s.u_bounds->first, s.u_bounds->second}) : json(nullptr);
    sim["sensing_radius"] = std::isfinite(s.sensing_radius) ? json(s.sensing_radius) : json(nullptr);
    sim["escape_rule"] = rule_name(s.escape_rule);
    sim["zeta_fixed_point"] = s.zeta_fixed_point;
    doc["sim"] = sim;
    doc["noise"] = {{"enabled", s.noise.enabled}, {"r_m", s.noise.r_m}};
    return doc;
}

inline std::string serialize_scenario(const ScenarioSpec& s) { return scenario_to_json(s).dump(2); }

/// Sets a dotted path ("gains.lambda", "robots.0.pose.x") inside a JSON
/// document. The value is read as JSON when possible, otherwise as a string.
inline void apply_override(json& doc, const std::string& path, const std::string& value) {
    if (path.empty()) throw ParseError("override: empty key");
    json* node = &doc;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const std::string& key = parts[k];
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(key);
            } catch (const std::exception&) {
                throw ParseError("override " + path + ": '" + key + "' is not a list index");
            }
            if (idx >= node->size()) throw ParseError("override " + path + ": index " + key + " out of range");
            node = &(*node)[idx];
        } else {
            if (node->is_null()) *node = json::object();
            if (!node->is_object()) throw ParseError("override " + path + ": '" + key + "' does not name a field");
            node = &(*node)[key];
        }
    }
    try {
        *node = json::parse(value);
    } catch (const json::parse_error&) {
        *node = value;
    }
}

/// Parses an override of the form KEY=VALUE.
inline void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ParseError("override '" + assignment + "': expected KEY=VALUE");
    apply_override(doc, assignment.substr(0, eq), assignment.substr(eq + 1));
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("scenario not found: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": not valid JSON: " + e.what());
    }
}

inline ScenarioSpec load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
    json doc = read_json_file(path);
    for (const auto& o : overrides) apply_override(doc, o);
    return scenario_from_json(doc);
}

}  // namespace mrsafe
