#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

#include "mrsafe/scenario.hpp"
#include "test_util.hpp"

using namespace mrsafe;
constexpr double kPi = std::numbers::pi;

namespace {

const char* kMinimal = R"({
  "robots": [{"pose": {"x": 0, "y": 0}, "reference": {"goal": [1, 0], "duration": 2}}],
  "sim": {"t_end": 1}
})";

std::string error_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Scenario, MinimalUsesDefaults) {
    const auto s = parse_scenario(kMinimal);
    ASSERT_EQ(s.robots.size(), 1u);
    EXPECT_EQ(s.robots[0].params, RobotParams{});
    EXPECT_EQ(s.gains, ControlGains{});
    EXPECT_EQ(s.dt, 1e-3);
    EXPECT_EQ(s.t_end, 1.0);
    EXPECT_EQ(s.robots[0].reference.kind, ReferenceKind::Line);
    EXPECT_EQ(s.robots[0].reference.start, Vec2(0, 0));
    EXPECT_EQ(s.udot_bounds, std::make_pair(-20.0, 20.0));
    EXPECT_FALSE(s.u_bounds.has_value());
    EXPECT_TRUE(std::isinf(s.sensing_radius));
    EXPECT_TRUE(s.obstacles.empty());
}

TEST(Scenario, BundledScenariosLoad) {
    for (const char* name : {"circle10", "example1_static", "swap2_deadlock", "example3_dynamic_a",
                             "example3_dynamic_b", "side_left", "side_right", "track_single"}) {
        SCOPED_TRACE(name);
        EXPECT_NO_THROW(testutil::load(name));
    }
    const auto c = testutil::load("circle10");
    EXPECT_EQ(c.robots.size(), 10u);
    for (const auto& r : c.robots) {
        EXPECT_NEAR(r.initial.pose.position().norm(), 6.0, 1e-5);
        EXPECT_LT((r.reference.goal + r.initial.pose.position()).norm(), 1e-12);
    }
}

TEST(Scenario, AnglesAreDegrees) {
    const auto s = parse_scenario(R"({
      "robots": [{"pose": {"x": 0, "y": 0, "theta": 90}, "reference": {"goal": [1, 0], "duration": 2}}],
      "gains": {"q_deg": 45},
      "sim": {"t_end": 1}
    })");
    EXPECT_NEAR(s.robots[0].initial.pose.theta, kPi / 2, 1e-15);
    EXPECT_NEAR(s.gains.q, kPi / 4, 1e-15);
    EXPECT_NEAR(parse_scenario(R"({
      "robots": [{"pose": {"x": 0, "y": 0, "theta": -180}, "reference": {"goal": [1, 0], "duration": 2}}],
      "sim": {"t_end": 1}})").robots[0].initial.pose.theta, kPi, 1e-15);
}

TEST(Scenario, RejectsInitialOverlap) {
    const std::string msg = error_of(R"({
      "robots": [{"pose": {"x": 0, "y": 0}, "reference": {"goal": [1, 0], "duration": 2}},
                 {"pose": {"x": 0.5, "y": 0}, "reference": {"goal": [2, 0], "duration": 2}}],
      "sim": {"t_end": 1}
    })");
    EXPECT_NE(msg.find("initial safe-set violation"), std::string::npos) << msg;
    // 0.4 / sqrt(0.5) = 0.566: just outside is accepted.
    EXPECT_EQ(error_of(R"({
      "robots": [{"pose": {"x": 0, "y": 0}, "reference": {"goal": [1, 0], "duration": 2}},
                 {"pose": {"x": 0.57, "y": 0}, "reference": {"goal": [2, 0], "duration": 2}}],
      "sim": {"t_end": 1}
    })"), "");
    const std::string obs = error_of(R"({
      "robots": [{"pose": {"x": 0, "y": 0}, "reference": {"goal": [1, 0], "duration": 2}}],
      "obstacles": [{"position": [0.3, 0], "radius": 0.1}],
      "sim": {"t_end": 1}
    })");
    EXPECT_NE(obs.find("initial safe-set violation"), std::string::npos) << obs;
}

TEST(Scenario, RejectsInvalidGains) {
    auto with_gains = [](const std::string& g) {
        return error_of(R"({"robots": [{"pose": {"x": 0, "y": 0}, "reference": {"goal": [1, 0], "duration": 2}}],
                           "gains": )" + g + R"(, "sim": {"t_end": 1}})");
    };
    EXPECT_NE(with_gains(R"({"kappa4": 2, "zeta": 2})").find("kappa4"), std::string::npos);
    EXPECT_NE(with_gains(R"({"kappa4": 1.5})").find("kappa4"), std::string::npos);
    EXPECT_NE(with_gains(R"({"lambda": 0})").find("lambda"), std::string::npos);
    EXPECT_NE(with_gains(R"({"lambda": 1.2})").find("lambda"), std::string::npos);
    EXPECT_NE(with_gains(R"({"kappa1": -1})").find("kappa"), std::string::npos);
    EXPECT_NE(with_gains(R"({"q_deg": 200})").find("q_deg"), std::string::npos);
    EXPECT_NE(with_gains(R"({"theta_weight": -1})").find("theta_weight"), std::string::npos);
    EXPECT_EQ(with_gains(R"({"lambda": 1, "zeta": 0})"), "");
}

TEST(Scenario, ErrorsNameTheField) {
    EXPECT_NE(error_of(R"({"robots": [{"pose": {"x": 0, "y": 0, "heading": 0},
                        "reference": {"goal": [1, 0], "duration": 2}}], "sim": {"t_end": 1}})")
                  .find("robots[0].pose.heading: unknown field"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"robots": [{"pose": {"x": 0, "y": 0}, "reference": {"goal": [1, 0], "duration": 2}}],
                        "sim": {"t_end": 1, "dtt": 0.1}})")
                  .find("sim.dtt"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"robots": [{"pose": {"x": 0, "y": 0}, "reference": {"goal": [1, 0], "duration": 2}}]})")
                  .find("sim"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"robots": [{"pose": {"x": "a", "y": 0}, "reference": {"goal": [1, 0], "duration": 2}}],
                        "sim": {"t_end": 1}})")
                  .find("robots[0].pose.x"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"robots": [{"pose": {"x": 0, "y": 0}, "reference": {"goal": [1], "duration": 2}}],
                        "sim": {"t_end": 1}})")
                  .find("robots[0].reference.goal"),
              std::string::npos);
    EXPECT_NE(error_of("{not json").find("JSON"), std::string::npos);
    EXPECT_NE(error_of(R"({"robots": [], "sim": {"t_end": 1}})").find("no robots"), std::string::npos);
    EXPECT_NE(error_of(R"({"robots": [{"pose": {"x": 0, "y": 0}, "reference": {"goal": [1, 0], "duration": 2}}],
                        "sim": {"t_end": 1, "dt": 0}})")
                  .find("dt"),
              std::string::npos);
}

TEST(Scenario, RoundTrip) {
    for (const char* name : {"circle10", "example3_dynamic_a", "swap2_deadlock", "track_single", "side_right"}) {
        SCOPED_TRACE(name);
        const auto a = testutil::load(name);
        const auto b = parse_scenario(serialize_scenario(a));
        ASSERT_EQ(a.robots.size(), b.robots.size());
        for (std::size_t r = 0; r < a.robots.size(); ++r) {
            EXPECT_EQ(a.robots[r].params, b.robots[r].params);
            EXPECT_EQ(a.robots[r].reference.kind, b.robots[r].reference.kind);
            EXPECT_LT((a.robots[r].reference.goal - b.robots[r].reference.goal).norm(), 1e-12);
            EXPECT_NEAR(a.robots[r].reference.duration, b.robots[r].reference.duration, 1e-12);
            EXPECT_EQ(a.robots[r].initial.pose.position(), b.robots[r].initial.pose.position());
            EXPECT_NEAR(wrap_angle(a.robots[r].initial.pose.theta - b.robots[r].initial.pose.theta), 0.0, 1e-12);
        }
        EXPECT_EQ(a.obstacles.size(), b.obstacles.size());
        for (std::size_t k = 0; k < a.obstacles.size(); ++k) {
            EXPECT_EQ(a.obstacles[k].position, b.obstacles[k].position);
            EXPECT_EQ(a.obstacles[k].velocity, b.obstacles[k].velocity);
            EXPECT_EQ(a.obstacles[k].radius, b.obstacles[k].radius);
        }
        EXPECT_NEAR(a.gains.q, b.gains.q, 1e-12);
        EXPECT_EQ(a.gains.lambda, b.gains.lambda);
        EXPECT_EQ(a.gains.kappa4, b.gains.kappa4);
        EXPECT_EQ(a.gains.theta_weight, b.gains.theta_weight);
        EXPECT_EQ(a.dt, b.dt);
        EXPECT_EQ(a.t_end, b.t_end);
        EXPECT_EQ(a.udot_bounds, b.udot_bounds);
        EXPECT_EQ(a.escape_rule, b.escape_rule);
        EXPECT_EQ(a.rng_seed, b.rng_seed);
        EXPECT_EQ(a.noise.enabled, b.noise.enabled);
        EXPECT_EQ(a.safety.inflate_rho, b.safety.inflate_rho);
        // Serialising twice gives the same text.
        EXPECT_EQ(serialize_scenario(b), serialize_scenario(parse_scenario(serialize_scenario(b))));
    }
}

TEST(Scenario, Overrides) {
    const auto s = testutil::load("circle10", {"gains.lambda=1.0", "sim.seed=9", "robots.0.pose.x=6.5",
                                              "sim.escape_rule=left", "noise.enabled=true", "noise.r_m=0.1"});
    EXPECT_EQ(s.gains.lambda, 1.0);
    EXPECT_EQ(s.rng_seed, 9u);
    EXPECT_EQ(s.robots[0].initial.pose.x, 6.5);
    EXPECT_EQ(s.escape_rule, EscapeRule::Left);
    EXPECT_TRUE(s.noise.enabled);
    EXPECT_EQ(s.noise.r_m, 0.1);

    EXPECT_THROW(testutil::load("circle10", {"gains.lambda"}), ParseError);
    EXPECT_THROW(testutil::load("circle10", {"robots.99.pose.x=1"}), ParseError);
    EXPECT_THROW(testutil::load("circle10", {"robots.a.pose.x=1"}), ParseError);
    EXPECT_THROW(testutil::load("circle10", {"gains.lamda=0.3"}), ParseError);
    EXPECT_THROW(testutil::load("circle10", {"gains.lambda=2"}), ValidationError);
}

TEST(Scenario, MissingFile) {
    try {
        load_scenario("/nonexistent/nowhere.json");
        FAIL() << "expected an error";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("scenario not found: /nonexistent/nowhere.json"), std::string::npos);
    }
}

TEST(Scenario, ReferenceKinds) {
    const auto s = parse_scenario(R"({
      "robots": [
        {"pose": {"x": 3, "y": 4}, "reference": {"kind": "circle-antipodal", "center": [1, 1], "duration": 5}},
        {"pose": {"x": 10, "y": 0}, "reference": {"kind": "waypoints", "waypoints": [[10, 3]], "goal": [14, 3],
                                                 "duration": 7}}],
      "sim": {"t_end": 1}
    })");
    EXPECT_EQ(s.robots[0].reference.goal, Vec2(-1, -2));
    EXPECT_EQ(s.robots[1].reference.waypoints.size(), 1u);
    EXPECT_NEAR(s.robots[1].reference.length(), 7.0, 1e-12);
    EXPECT_NE(error_of(R"({"robots": [{"pose": {"x": 0, "y": 0}, "reference": {"kind": "spiral", "duration": 2}}],
                        "sim": {"t_end": 1}})")
                  .find("spiral"),
              std::string::npos);
}
