#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "mrsafe/kinematics.hpp"
#include "mrsafe/log_io.hpp"

namespace mrsafe {

namespace detail {

inline constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

inline const char* color(std::size_t k) { return kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))]; }

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// Keeps at most ~max_points samples, always including the last one.
inline std::size_t stride_for(std::size_t count, std::size_t max_points = 1500) {
    return std::max<std::size_t>(1, (count + max_points - 1) / max_points);
}

}  // namespace detail

/// Trajectory map: robot paths, robot disks at their final poses, obstacle
/// disks shaded at their final positions (initial outline dashed).
inline std::string render_trajectory_svg(const LoadedLog& data) {
    using namespace detail;
    const auto& steps = data.log.steps;
    const std::size_t N = steps.empty() ? 0 : steps.front().robots.size();
    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
    double xmax = -xmin, ymax = -xmin;
    auto grow = [&](double x, double y, double r) {
        xmin = std::min(xmin, x - r);
        xmax = std::max(xmax, x + r);
        ymin = std::min(ymin, y - r);
        ymax = std::max(ymax, y + r);
    };
    for (const auto& s : steps)
        for (std::size_t r = 0; r < N; ++r) {
            const double rad = r < data.params.size() ? data.params[r].body_radius : 0.0;
            grow(s.robots[r].pose.x, s.robots[r].pose.y, rad);
        }
    const double t_last = steps.empty() ? 0.0 : steps.back().t;
    for (const auto& o : data.obstacles) {
        grow(o.position(0), o.position(1), o.radius);
        const Vec2 end = o.position_at(t_last);
        grow(end(0), end(1), o.radius);
    }
    if (!std::isfinite(xmin)) xmin = ymin = -1.0, xmax = ymax = 1.0;
    const double margin = 0.5;
    xmin -= margin, ymin -= margin, xmax += margin, ymax += margin;
    const double width = 800.0;
    const double scale = width / std::max(xmax - xmin, 1e-9);
    const double height = std::max((ymax - ymin) * scale, 1.0);
    auto X = [&](double x) { return num((x - xmin) * scale); };
    auto Y = [&](double y) { return num((ymax - y) * scale); };
    auto R = [&](double r) { return num(r * scale); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& o : data.obstacles) {
        const Vec2 end = o.position_at(t_last);
        svg += "<circle cx=\"" + X(o.position(0)) + "\" cy=\"" + Y(o.position(1)) + "\" r=\"" + R(o.radius) +
               "\" fill=\"none\" stroke=\"#555\" stroke-dasharray=\"4 3\"/>\n";
        svg += "<circle cx=\"" + X(end(0)) + "\" cy=\"" + Y(end(1)) + "\" r=\"" + R(o.radius) +
               "\" fill=\"#999\" fill-opacity=\"0.6\" stroke=\"#333\"/>\n";
    }
    const std::size_t stride = stride_for(steps.size());
    for (std::size_t r = 0; r < N; ++r) {
        svg += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(color(r)) + "\" points=\"";
        for (std::size_t k = 0; k < steps.size(); k += stride)
            svg += X(steps[k].robots[r].pose.x) + "," + Y(steps[k].robots[r].pose.y) + " ";
        if (!steps.empty() && (steps.size() - 1) % stride != 0)
            svg += X(steps.back().robots[r].pose.x) + "," + Y(steps.back().robots[r].pose.y);
        svg += "\"/>\n";
        if (!steps.empty()) {
            const Pose& p = steps.back().robots[r].pose;
            const double rad = r < data.params.size() ? data.params[r].body_radius : 0.1;
            svg += "<circle cx=\"" + X(p.x) + "\" cy=\"" + Y(p.y) + "\" r=\"" + R(rad) + "\" fill=\"" + color(r) +
                   "\" fill-opacity=\"0.35\" stroke=\"" + color(r) + "\"/>\n";
            svg += "<line x1=\"" + X(p.x) + "\" y1=\"" + Y(p.y) + "\" x2=\"" + X(p.x + rad * std::cos(p.theta)) +
                   "\" y2=\"" + Y(p.y + rad * std::sin(p.theta)) + "\" stroke=\"black\"/>\n";
            svg += "<text x=\"" + X(p.x) + "\" y=\"" + Y(p.y) +
                   "\" font-size=\"11\" text-anchor=\"middle\" dy=\"4\">" + std::to_string(r) + "</text>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

/// Control-point speed |A(theta) u| against time for every robot.
inline std::string render_speed_svg(const LoadedLog& data) {
    using namespace detail;
    const auto& steps = data.log.steps;
    const std::size_t N = steps.empty() ? 0 : steps.front().robots.size();
    auto speed = [&](std::size_t k, std::size_t r) {
        const RobotParams p = r < data.params.size() ? data.params[r] : RobotParams{};
        return (build_A(steps[k].robots[r].pose, p) * steps[k].robots[r].u).norm();
    };
    const double t_max = steps.empty() ? 1.0 : std::max(steps.back().t, 1e-9);
    double v_max = 0.0;
    for (std::size_t k = 0; k < steps.size(); ++k)
        for (std::size_t r = 0; r < N; ++r) v_max = std::max(v_max, speed(k, r));
    if (v_max <= 0.0) v_max = 1.0;
    v_max *= 1.1;

    const double W = 800.0, H = 400.0, left = 60.0, right = 20.0, top = 20.0, bottom = 40.0;
    const double pw = W - left - right, ph = H - top - bottom;
    auto X = [&](double t) { return num(left + t / t_max * pw); };
    auto Y = [&](double v) { return num(top + ph - v / v_max * ph); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800.00\" height=\"400.00\" viewBox=\"0 0 800.00 400.00\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(left + pw) + "\" y2=\"" +
           num(top + ph) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(top + ph) +
           "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double t = t_max * k / 4.0;
        const double v = v_max * k / 4.0;
        svg += "<text x=\"" + X(t) + "\" y=\"" + num(top + ph + 16) + "\" font-size=\"11\" text-anchor=\"middle\">" +
               num(t) + "</text>\n";
        svg += "<text x=\"" + num(left - 6) + "\" y=\"" + Y(v) + "\" font-size=\"11\" text-anchor=\"end\">" + num(v) +
               "</text>\n";
    }
    svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(H - 6) +
           "\" font-size=\"12\" text-anchor=\"middle\">t [s]</text>\n";
    svg += "<text x=\"14\" y=\"" + num(top + ph / 2) + "\" font-size=\"12\" transform=\"rotate(-90 14 " +
           num(top + ph / 2) + ")\" text-anchor=\"middle\">speed [m/s]</text>\n";
    const std::size_t stride = stride_for(steps.size());
    for (std::size_t r = 0; r < N; ++r) {
        svg += "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" + std::string(color(r)) + "\" points=\"";
        for (std::size_t k = 0; k < steps.size(); k += stride) svg += X(steps[k].t) + "," + Y(speed(k, r)) + " ";
        if (!steps.empty() && (steps.size() - 1) % stride != 0)
            svg += X(steps.back().t) + "," + Y(speed(steps.size() - 1, r));
        svg += "\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace mrsafe
