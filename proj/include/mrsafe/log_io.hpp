#pragma once

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mrsafe/sim.hpp"
#include "mrsafe/types.hpp"

namespace mrsafe {

inline constexpr const char* kLogHeader = "t,robot,x,y,theta,u1,u2,udot1,udot2,err_norm,h_min,active_count,zeta,g";

/// A log read back from CSV together with the geometry stored in its
/// comment preamble.
struct LoadedLog {
    SimLog log;
    double dt = 0.0;
    std::vector<RobotParams> params;
    std::vector<Obstacle> obstacles;
};

namespace detail {

inline std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw ParseError("log line " + std::to_string(line_no) + ": '" + s + "' is not a number");
    return v;
}

inline long parse_long(const std::string& s, std::size_t line_no) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size())
        throw ParseError("log line " + std::to_string(line_no) + ": '" + s + "' is not an integer");
    return v;
}

}  // namespace detail

/// One row per robot per step, 9 significant digits. The '#' preamble
/// records dt, robot geometry and obstacles so plots need only the log.
inline void write_log_csv(std::ostream& out, const SimLog& log, const ScenarioSpec& spec) {
    using detail::fmt9;
    out << "# mrsafe log v1\n";
    out << "# dt," << fmt9(spec.dt) << "\n";
    for (std::size_t r = 0; r < spec.robots.size(); ++r) {
        const RobotParams& p = spec.robots[r].params;
        out << "# robot," << r << "," << fmt9(p.body_radius) << "," << fmt9(p.wheel_radius) << ","
            << fmt9(p.axle_length) << "," << fmt9(p.offset) << "\n";
    }
    for (std::size_t k = 0; k < spec.obstacles.size(); ++k) {
        const Obstacle& o = spec.obstacles[k];
        out << "# obstacle," << k << "," << fmt9(o.position(0)) << "," << fmt9(o.position(1)) << ","
            << fmt9(o.velocity(0)) << "," << fmt9(o.velocity(1)) << "," << fmt9(o.radius) << "\n";
    }
    out << kLogHeader << "\n";
    std::string row;
    for (const auto& step : log.steps) {
        for (std::size_t r = 0; r < step.robots.size(); ++r) {
            const RobotRecord& rr = step.robots[r];
            row.clear();
            row += fmt9(step.t);
            row += ',' + std::to_string(r);
            for (double v : {rr.pose.x, rr.pose.y, rr.pose.theta, rr.u(0), rr.u(1), rr.u_dot(0), rr.u_dot(1),
                             rr.err_norm, rr.h_min})
                row += ',' + fmt9(v);
            row += ',' + std::to_string(rr.active_count);
            row += ',' + fmt9(rr.zeta);
            row += ',' + std::to_string(rr.g);
            out << row << '\n';
        }
    }
}

inline LoadedLog read_log_csv(std::istream& in) {
    using namespace detail;
    LoadedLog out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto start = line.find_first_not_of(' ', 1);
            const auto c = split_csv(start == std::string::npos ? std::string() : line.substr(start));
            if (c.empty()) continue;
            if (c[0] == "dt" && c.size() == 2) {
                out.dt = parse_double(c[1], line_no);
            } else if (c[0] == "robot" && c.size() == 6) {
                RobotParams p;
                p.body_radius = parse_double(c[2], line_no);
                p.wheel_radius = parse_double(c[3], line_no);
                p.axle_length = parse_double(c[4], line_no);
                p.offset = parse_double(c[5], line_no);
                out.params.push_back(p);
            } else if (c[0] == "obstacle" && c.size() == 7) {
                Obstacle o;
                o.position = {parse_double(c[2], line_no), parse_double(c[3], line_no)};
                o.velocity = {parse_double(c[4], line_no), parse_double(c[5], line_no)};
                o.radius = parse_double(c[6], line_no);
                out.obstacles.push_back(o);
            }
            continue;
        }
        if (!header_seen) {
            if (line != kLogHeader) throw ParseError("log line " + std::to_string(line_no) + ": unexpected header");
            header_seen = true;
            continue;
        }
        const auto c = split_csv(line);
        if (c.size() != 14)
            throw ParseError("log line " + std::to_string(line_no) + ": expected 14 fields, got " +
                             std::to_string(c.size()));
        const double t = parse_double(c[0], line_no);
        const long robot = parse_long(c[1], line_no);
        if (robot < 0) throw ParseError("log line " + std::to_string(line_no) + ": negative robot index");
        if (out.log.steps.empty() || out.log.steps.back().t != t) {
            if (!out.log.steps.empty() && t < out.log.steps.back().t)
                throw ParseError("log line " + std::to_string(line_no) + ": time goes backwards");
            StepRecord s;
            s.t = t;
            out.log.steps.push_back(std::move(s));
        }
        auto& robots = out.log.steps.back().robots;
        if (static_cast<std::size_t>(robot) != robots.size())
            throw ParseError("log line " + std::to_string(line_no) + ": robot rows out of order");
        RobotRecord rr;
        rr.pose = {parse_double(c[2], line_no), parse_double(c[3], line_no), parse_double(c[4], line_no)};
        rr.u = {parse_double(c[5], line_no), parse_double(c[6], line_no)};
        rr.u_dot = {parse_double(c[7], line_no), parse_double(c[8], line_no)};
        rr.err_norm = parse_double(c[9], line_no);
        rr.h_min = parse_double(c[10], line_no);
        rr.active_count = static_cast<int>(parse_long(c[11], line_no));
        rr.zeta = parse_double(c[12], line_no);
        rr.g = static_cast<int>(parse_long(c[13], line_no));
        robots.push_back(rr);
    }
    if (!header_seen) throw ParseError("log: missing header line");
    for (auto& s : out.log.steps) {
        s.obstacles.resize(out.obstacles.size());
        for (std::size_t k = 0; k < out.obstacles.size(); ++k) s.obstacles[k] = out.obstacles[k].position_at(s.t);
    }
    return out;
}

}  // namespace mrsafe
