#include "betop/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace betop {

namespace {

constexpr double kJerkLimit = 6.0;       // [m/s^3] accel slew rate in profiles
constexpr double kComfortJerk = 10.0;    // [m/s^3]
constexpr double kComfortYawRate = 1.2;  // [rad/s]
constexpr double kTtcGate = 0.95;        // [s]
constexpr double kTtcCap = 999.0;
constexpr double kHistorySeconds = 2.0;

// Deterministic uniform helpers on top of mt19937_64; avoids the
// implementation-defined std::uniform_real_distribution.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    std::uint64_t pick(std::uint64_t n) { return eng_() % n; }

  private:
    std::mt19937_64 eng_;
};

TrajState make_state(double t, const Vec2& p, const Vec2& v, double heading) {
    return TrajState{t, p.x, p.y, v.x, v.y, wrap_angle(heading)};
}

// Straight constant-velocity history ending at the pose at t = 0.
Trajectory cv_history(const Pose2& pose, const Vec2& vel, std::size_t steps, double dt) {
    Trajectory out;
    out.dt = dt;
    out.states.reserve(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = -static_cast<double>(steps - k) * dt;
        out.states.push_back(make_state(t, pose.position() + vel * t, vel, pose.heading));
    }
    return out;
}

Trajectory cv_future(const Pose2& pose, const Vec2& vel, std::size_t steps, double dt) {
    Trajectory out;
    out.dt = dt;
    out.states.reserve(steps);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        out.states.push_back(make_state(t, pose.position() + vel * t, vel, pose.heading));
    }
    return out;
}

// Constant-speed arc; yaw_rate 0 degenerates to a straight line.
Trajectory arc_future(const Pose2& pose, double speed, double yaw_rate, std::size_t steps, double dt) {
    Trajectory out;
    out.dt = dt;
    out.states.reserve(steps);
    Vec2 p = pose.position();
    double h = pose.heading;
    for (std::size_t k = 1; k <= steps; ++k) {
        h = wrap_angle(h + yaw_rate * dt);
        const Vec2 v{speed * std::cos(h), speed * std::sin(h)};
        p = p + v * dt;
        out.states.push_back(make_state(static_cast<double>(k) * dt, p, v, h));
    }
    return out;
}

// Integrates a longitudinal speed profile with slew-limited acceleration.
// Deceleration is capped by the stopping envelope |a| <= sqrt(2 j v) (the
// strongest braking that can still ramp to zero exactly at standstill with
// jerk j), so speeds hit 0 smoothly instead of clipping. target(t, v) is the
// requested acceleration.
std::vector<double> integrate_speed(double v0, double a0,
                                    const std::function<double(double, double)>& target,
                                    std::size_t steps, double dt) {
    constexpr double kEnvelopeJerk = 4.0;  // [m/s^3], margin below kJerkLimit
    std::vector<double> speeds(steps);
    double v = v0;
    double a = a0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        double want = target(t, v);
        if (want < 0.0) {
            want = std::max(want, -std::sqrt(2.0 * kEnvelopeJerk * std::max(v, 0.0)));
        }
        const double da = std::clamp(want - a, -kJerkLimit * dt, kJerkLimit * dt);
        a += da;
        double next = v + a * dt;
        if (next < 0.0) {
            a = -v / dt;
            next = 0.0;
        }
        v = next;
        speeds[k] = v;
    }
    return speeds;
}

// Quintic ease curve: 0 -> 1 with zero slope and curvature at both ends.
double quintic(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double quintic_rate(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return s * s * (30.0 + s * (-60.0 + 30.0 * s));
}

// Builds future states in a local frame from per-step longitudinal speeds and
// an absolute lateral profile, then maps them through the anchor pose.
Trajectory profile_future(const Pose2& anchor, const std::vector<double>& speeds,
                          const std::function<double(double)>& lateral,
                          const std::function<double(double)>& lateral_rate, double t_offset,
                          double s0, double dt) {
    Trajectory out;
    out.dt = dt;
    out.states.reserve(speeds.size());
    double s = s0;
    double prev_heading_local = 0.0;
    for (std::size_t k = 0; k < speeds.size(); ++k) {
        const double t = t_offset + static_cast<double>(k + 1) * dt;
        s += speeds[k] * dt;
        const double y = lateral(t);
        const Vec2 v_local{speeds[k], lateral_rate(t)};
        double h_local = prev_heading_local;
        if (v_local.norm() > 0.3) {
            h_local = std::atan2(v_local.y, v_local.x);
            prev_heading_local = h_local;
        }
        const Vec2 p = anchor.position() + rotate(Vec2{s, y}, anchor.heading);
        const Vec2 v = rotate(v_local, anchor.heading);
        out.states.push_back(make_state(t, p, v, anchor.heading + h_local));
    }
    return out;
}

AgentShape vehicle_shape(Rng& rng) {
    return AgentShape{rng.uniform(4.4, 5.0), rng.uniform(1.8, 2.1)};
}

AgentRecord make_agent(std::string id, AgentKind kind, const AgentShape& shape, const Pose2& pose,
                       const Vec2& vel, std::size_t hist_steps, double dt) {
    AgentRecord agent;
    agent.id = std::move(id);
    agent.kind = kind;
    agent.shape = shape;
    agent.history = cv_history(pose, vel, hist_steps, dt);
    return agent;
}

// Expert-style yield profile: cruise briefly, brake to a stop, pull away again
// once the conflict clears. Returns per-step speeds.
std::vector<double> yield_speeds(double v0, double brake_at, double a_brake, double resume_at,
                                 std::size_t steps, double dt) {
    auto target = [=](double t, double v) {
        if (t >= resume_at) return std::clamp(2.0 * (v0 - v), 0.0, 1.6);
        if (t >= brake_at) return -a_brake;
        return 0.0;
    };
    return integrate_speed(v0, 0.0, target, steps, dt);
}

double stop_distance(const std::vector<double>& speeds, double dt) {
    double x = 0.0;
    for (double v : speeds) {
        if (v <= 1e-3) break;
        x += v * dt;
    }
    return x;
}

Scenario crossing_scenario(const SimConfig& cfg, Rng& rng, std::size_t future_steps,
                           std::size_t hist_steps) {
    Scenario sc;
    const double dt = cfg.dt;
    const double v_av = rng.uniform(7.0, 10.0);
    const double t_c = rng.uniform(3.4, 4.6);
    const double x_c = v_av * t_c;

    // Crossing agent reaches (x_c, 0) exactly at t_c.
    const double side = rng.unit() < 0.5 ? 1.0 : -1.0;
    const bool rider = rng.unit() < 0.25;
    const double v_c = rider ? rng.uniform(4.0, 6.5) : rng.uniform(5.0, 9.0);
    const Pose2 crosser_pose{x_c, -side * v_c * t_c, side > 0.0 ? std::numbers::pi / 2.0
                                                                : -std::numbers::pi / 2.0};
    const Vec2 crosser_vel{0.0, side * v_c};

    // AV expert future: yield until the crosser clears, stopping well short.
    double a_brake = 2.4;
    const double resume_at = t_c + 3.4 / v_c + 0.4;
    std::vector<double> speeds;
    for (int attempt = 0; attempt < 12; ++attempt) {
        speeds = yield_speeds(v_av, 0.5, a_brake, resume_at, future_steps, dt);
        if (stop_distance(speeds, dt) <= x_c - 7.0) break;
        a_brake += 0.25;
    }
    const Pose2 av_pose{0.0, 0.0, 0.0};
    AgentRecord av = make_agent("av", AgentKind::vehicle, AgentShape{4.8, 2.0}, av_pose,
                                Vec2{v_av, 0.0}, hist_steps, dt);
    av.future = profile_future(av_pose, speeds, [](double) { return 0.0; },
                               [](double) { return 0.0; }, 0.0, 0.0, dt);
    sc.agents.push_back(std::move(av));

    AgentRecord crosser = make_agent("agent1", rider ? AgentKind::cyclist : AgentKind::vehicle,
                                     rider ? AgentShape{1.9, 0.7} : vehicle_shape(rng),
                                     crosser_pose, crosser_vel, hist_steps, dt);
    crosser.future = cv_future(crosser_pose, crosser_vel, future_steps, dt);
    sc.agents.push_back(std::move(crosser));

    // Remaining agents keep to adjacent lanes, clear of the AV corridor.
    for (std::size_t i = 2; i < cfg.n_agents; ++i) {
        const double lane = (i % 2 == 0 ? 3.5 : -3.5);
        const Pose2 pose{-10.0 - 7.0 * static_cast<double>(i) + rng.uniform(-2.0, 2.0), lane, 0.0};
        const Vec2 vel{rng.uniform(0.8, 1.0) * v_av, 0.0};
        AgentRecord filler = make_agent("agent" + std::to_string(i), AgentKind::vehicle,
                                        vehicle_shape(rng), pose, vel, hist_steps, dt);
        filler.future = cv_future(pose, vel, future_steps, dt);
        sc.agents.push_back(std::move(filler));
    }
    return sc;
}

Scenario merge_scenario(const SimConfig& cfg, Rng& rng, std::size_t future_steps,
                        std::size_t hist_steps) {
    Scenario sc;
    const double dt = cfg.dt;
    const double v_av = rng.uniform(8.0, 10.0);
    const double side = rng.unit() < 0.5 ? 1.0 : -1.0;
    const double x0 = rng.uniform(13.0, 17.0);
    const double v_m = 0.55 * v_av;

    const Pose2 merger_pose{x0, side * 3.5, 0.0};
    AgentRecord merger = make_agent("agent1", AgentKind::vehicle, vehicle_shape(rng), merger_pose,
                                    Vec2{v_m, 0.0}, hist_steps, dt);
    const double merge_start = 0.5;
    const double merge_span = 2.0;
    auto lateral = [=](double t) { return side * 3.5 * (1.0 - quintic((t - merge_start) / merge_span)); };
    auto lateral_rate = [=](double t) {
        return -side * 3.5 * quintic_rate((t - merge_start) / merge_span) / merge_span;
    };
    std::vector<double> merger_speeds(future_steps, v_m);
    merger.future = profile_future(Pose2{x0, 0.0, 0.0}, merger_speeds, lateral, lateral_rate, 0.0,
                                   0.0, dt);
    // profile_future anchors lateral around y = 0; shift handled via lateral().

    // AV expert: settle behind the merger at its speed.
    double a_brake = 2.2;
    std::vector<double> speeds;
    const Pose2 av_pose{0.0, 0.0, 0.0};
    for (int attempt = 0; attempt < 10; ++attempt) {
        auto target = [=](double t, double v) {
            if (t < 0.4) return 0.0;
            return v > v_m ? -a_brake : 0.0;
        };
        speeds = integrate_speed(v_av, 0.0, target, future_steps, dt);
        // Verify the expert stays behind the merger with a safe gap.
        double x = 0.0;
        bool ok = true;
        for (std::size_t k = 0; k < future_steps; ++k) {
            x += speeds[k] * dt;
            const double merger_x = x0 + v_m * static_cast<double>(k + 1) * dt;
            if (merger_x - x < 8.0) {
                ok = false;
                break;
            }
        }
        if (ok) break;
        a_brake += 0.3;
    }
    AgentRecord av = make_agent("av", AgentKind::vehicle, AgentShape{4.8, 2.0}, av_pose,
                                Vec2{v_av, 0.0}, hist_steps, dt);
    av.future = profile_future(av_pose, speeds, [](double) { return 0.0; },
                               [](double) { return 0.0; }, 0.0, 0.0, dt);
    sc.agents.insert(sc.agents.begin(), std::move(av));
    sc.agents.push_back(std::move(merger));

    for (std::size_t i = 2; i < cfg.n_agents; ++i) {
        const double lane = -side * 3.5 * (1.0 + static_cast<double>(i % 2));
        const Pose2 pose{-8.0 - 6.0 * static_cast<double>(i) + rng.uniform(-2.0, 2.0), lane, 0.0};
        const Vec2 vel{rng.uniform(0.7, 0.95) * v_av, 0.0};
        AgentRecord filler = make_agent("agent" + std::to_string(i), AgentKind::vehicle,
                                        vehicle_shape(rng), pose, vel, hist_steps, dt);
        filler.future = cv_future(pose, vel, future_steps, dt);
        sc.agents.push_back(std::move(filler));
    }
    return sc;
}

Scenario parallel_scenario(const SimConfig& cfg, Rng& rng, std::size_t future_steps,
                           std::size_t hist_steps) {
    Scenario sc;
    const double dt = cfg.dt;
    for (std::size_t i = 0; i < cfg.n_agents; ++i) {
        // Distinct lanes, shared heading: laterals stay constant in every
        // agent's frame, so the topology is all-zero by construction.
        const double lane = (i == 0) ? 0.0
                                     : 3.5 * static_cast<double>((i + 1) / 2) * (i % 2 == 1 ? 1.0 : -1.0);
        const Pose2 pose{i == 0 ? 0.0 : rng.uniform(-20.0, 25.0), lane, 0.0};
        const Vec2 vel{rng.uniform(5.0, 11.0), 0.0};
        AgentRecord agent = make_agent(i == 0 ? "av" : "agent" + std::to_string(i),
                                       AgentKind::vehicle, vehicle_shape(rng), pose, vel,
                                       hist_steps, dt);
        agent.future = cv_future(pose, vel, future_steps, dt);
        sc.agents.push_back(std::move(agent));
    }
    return sc;
}

Scenario dense_random_scenario(const SimConfig& cfg, Rng& rng, std::size_t future_steps,
                               std::size_t hist_steps) {
    Scenario sc;
    const double dt = cfg.dt;
    std::vector<Vec2> placed;
    for (std::size_t i = 0; i < cfg.n_agents; ++i) {
        Pose2 pose{0.0, 0.0, 0.0};
        if (i > 0) {
            for (int attempt = 0; attempt < 40; ++attempt) {
                pose = Pose2{rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0),
                             rng.uniform(-std::numbers::pi, std::numbers::pi)};
                bool clear = true;
                for (const Vec2& p : placed) {
                    if ((pose.position() - p).norm() < 6.0) {
                        clear = false;
                        break;
                    }
                }
                if (clear) break;
            }
        }
        placed.push_back(pose.position());
        const double speed = i == 0 ? rng.uniform(4.0, 10.0) : rng.uniform(2.0, 10.0);
        const double yaw_rate =
            rng.unit() < 0.4 ? (rng.unit() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.04, 0.18) : 0.0;
        const Vec2 vel{speed * std::cos(pose.heading), speed * std::sin(pose.heading)};
        AgentRecord agent = make_agent(i == 0 ? "av" : "agent" + std::to_string(i),
                                       AgentKind::vehicle, vehicle_shape(rng), pose, vel,
                                       hist_steps, dt);
        agent.future = arc_future(pose, speed, yaw_rate, future_steps, dt);
        sc.agents.push_back(std::move(agent));
    }
    return sc;
}

std::array<Vec2, 4> rect_corners(const Pose2& pose, const AgentShape& shape) {
    const Vec2 fwd = rotate(Vec2{shape.length / 2.0, 0.0}, pose.heading);
    const Vec2 left = rotate(Vec2{0.0, shape.width / 2.0}, pose.heading);
    const Vec2 c = pose.position();
    return {c + fwd + left, c + fwd - left, c - fwd - left, c - fwd + left};
}

bool separated_on_axis(const Vec2& axis, const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b) {
    double amin = std::numeric_limits<double>::infinity();
    double amax = -amin;
    double bmin = amin;
    double bmax = -amin;
    for (const Vec2& p : a) {
        const double v = p.dot(axis);
        amin = std::min(amin, v);
        amax = std::max(amax, v);
    }
    for (const Vec2& p : b) {
        const double v = p.dot(axis);
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
    }
    return amax < bmin || bmax < amin;
}

}  // namespace

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::crossing: return "crossing";
        case ScenarioKind::merge: return "merge";
        case ScenarioKind::parallel: return "parallel";
        case ScenarioKind::dense_random: return "dense_random";
    }
    throw std::invalid_argument("unknown scenario kind");
}

std::string to_string(Policy policy) {
    switch (policy) {
        case Policy::contingency: return "contingency";
        case Policy::naive_best_score: return "naive_best_score";
        case Policy::constant_velocity: return "constant_velocity";
        case Policy::expert_replay: return "expert_replay";
    }
    throw std::invalid_argument("unknown policy");
}

ScenarioKind parse_scenario_kind(const std::string& text) {
    if (text == "crossing") return ScenarioKind::crossing;
    if (text == "merge") return ScenarioKind::merge;
    if (text == "parallel") return ScenarioKind::parallel;
    if (text == "dense_random") return ScenarioKind::dense_random;
    throw std::invalid_argument("unknown scenario kind: " + text);
}

Policy parse_policy(const std::string& text) {
    if (text == "contingency") return Policy::contingency;
    if (text == "naive_best_score") return Policy::naive_best_score;
    if (text == "constant_velocity") return Policy::constant_velocity;
    if (text == "expert_replay") return Policy::expert_replay;
    throw std::invalid_argument("unknown policy: " + text);
}

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
    if (n_agents < 1) throw std::invalid_argument("need at least one agent");
    const double ratio = replan_period / dt;
    if (!(replan_period > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-6) {
        throw std::invalid_argument("replan_period must be a positive multiple of dt");
    }
}

Scenario generate_scenario(const SimConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(cfg.kind) + 1ULL);
    const auto future_steps =
        static_cast<std::size_t>(std::llround(std::max(cfg.horizon, cfg.duration) / cfg.dt));
    const auto hist_steps = static_cast<std::size_t>(std::llround(kHistorySeconds / cfg.dt));
    Scenario sc;
    switch (cfg.kind) {
        case ScenarioKind::crossing:
            sc = crossing_scenario(cfg, rng, future_steps, hist_steps);
            break;
        case ScenarioKind::merge:
            sc = merge_scenario(cfg, rng, future_steps, hist_steps);
            break;
        case ScenarioKind::parallel:
            sc = parallel_scenario(cfg, rng, future_steps, hist_steps);
            break;
        case ScenarioKind::dense_random:
            sc = dense_random_scenario(cfg, rng, future_steps, hist_steps);
            break;
    }
    sc.horizon_future = static_cast<double>(future_steps) * cfg.dt;
    sc.horizon_history = static_cast<double>(hist_steps) * cfg.dt;
    sc.validate();
    return sc;
}

GmmPrediction constant_velocity_gmm(const AgentRecord& agent, double horizon, std::size_t m) {
    if (m < 1) {
        throw std::invalid_argument("need at least one mode");
    }
    if (agent.history.size() < 2) {
        throw std::invalid_argument("history needs at least 2 states");
    }
    const double dt = agent.history.dt;
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    if (steps == 0) {
        throw std::invalid_argument("horizon shorter than one step");
    }
    const Vec2 p0 = agent.presence_pose().position();
    const Vec2 v0 = agent.presence_velocity();

    // Mode variations: heading offsets [deg] and speed scalings.
    static constexpr std::array<std::pair<double, double>, 10> kVariants{{{5.0, 1.0},
                                                                          {-5.0, 1.0},
                                                                          {10.0, 0.8},
                                                                          {-10.0, 0.8},
                                                                          {5.0, 1.2},
                                                                          {-5.0, 1.2},
                                                                          {10.0, 1.2},
                                                                          {-10.0, 1.2},
                                                                          {0.0, 0.8},
                                                                          {0.0, 1.2}}};
    GmmPrediction pred;
    pred.modes.resize(m);
    pred.scores.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        Vec2 v = v0;
        if (k > 0) {
            const auto& [deg, scale] = kVariants[(k - 1) % kVariants.size()];
            v = rotate(v0, deg * std::numbers::pi / 180.0) * scale;
        }
        auto& mode = pred.modes[k];
        mode.resize(steps);
        for (std::size_t s = 0; s < steps; ++s) {
            const double t = static_cast<double>(s + 1) * dt;
            mode[s].mu_x = p0.x + v.x * t;
            mode[s].mu_y = p0.y + v.y * t;
            const double sigma = 0.3 + 0.25 * t;
            mode[s].log_sigma_x = std::log(sigma);
            mode[s].log_sigma_y = std::log(sigma);
            mode[s].rho = 0.0;
        }
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        pred.scores[k] = std::pow(0.55, static_cast<double>(k));
        sum += pred.scores[k];
    }
    for (double& s : pred.scores) s /= sum;
    return pred;
}

PlanCandidateSet lattice_candidates(const AgentRecord& av, const SimConfig& cfg,
                                    const PlannerConfig& planner_cfg) {
    cfg.validate();
    planner_cfg.validate();
    const double dt = cfg.dt;
    const auto total_steps = static_cast<std::size_t>(std::llround(cfg.horizon / dt));
    const auto trunk_steps = static_cast<std::size_t>(std::llround(planner_cfg.t_b / dt));
    if (trunk_steps < 2 || trunk_steps >= total_steps) {
        throw std::invalid_argument("branching time must fall inside the horizon");
    }
    const Pose2 anchor = av.presence_pose();
    const double v0 = av.presence_velocity().norm();
    double a0 = 0.0;
    if (av.history.size() >= 2) {
        const std::size_t n = av.history.size();
        a0 = std::clamp((av.history.velocity(n - 1).norm() - av.history.velocity(n - 2).norm()) / dt,
                        -4.0, 2.0);
    }

    // Ordered action list: index 0 keeps course, so score order prefers it.
    struct Action {
        double accel;
        double offset;
    };
    static constexpr std::array<Action, 12> kActions{{{0.0, 0.0},
                                                      {-2.0, 0.0},
                                                      {-4.0, 0.0},
                                                      {0.0, -1.0},
                                                      {0.0, 1.0},
                                                      {1.5, 0.0},
                                                      {-2.0, -1.0},
                                                      {-2.0, 1.0},
                                                      {-4.0, -1.0},
                                                      {-4.0, 1.0},
                                                      {1.5, -1.0},
                                                      {1.5, 1.0}}};

    const double t_b = static_cast<double>(trunk_steps) * dt;
    const double horizon = static_cast<double>(total_steps) * dt;
    PlanCandidateSet set;
    const std::size_t n_trunks = std::min<std::size_t>(planner_cfg.m_modes, kActions.size());
    const std::size_t n_branches = std::min<std::size_t>(planner_cfg.m_branches, kActions.size());
    for (std::size_t m = 0; m < n_trunks; ++m) {
        const Action act = kActions[m];
        auto target = [=](double, double) { return act.accel; };
        const std::vector<double> speeds = integrate_speed(v0, a0, target, trunk_steps, dt);
        auto lateral = [=](double t) { return act.offset * quintic(t / t_b); };
        auto lateral_rate = [=](double t) { return act.offset * quintic_rate(t / t_b) / t_b; };
        Trajectory trunk = profile_future(anchor, speeds, lateral, lateral_rate, 0.0, 0.0, dt);
        const TrajState junction = trunk.states.back();

        // Branches continue from the junction with the same action set; each
        // starts with a copy of the junction state.
        std::vector<Trajectory> branch_set;
        branch_set.reserve(n_branches);
        const double v_j = std::hypot(junction.vx, junction.vy);
        const double a_j = speeds.size() >= 2
                               ? (speeds[speeds.size() - 1] - speeds[speeds.size() - 2]) / dt
                               : a0;
        const double span = horizon - t_b;
        for (std::size_t b = 0; b < n_branches; ++b) {
            const Action cont = kActions[b];
            auto btarget = [=](double, double) { return cont.accel; };
            const std::vector<double> bspeeds =
                integrate_speed(v_j, a_j, btarget, total_steps - trunk_steps, dt);
            const double off0 = act.offset;
            auto blateral = [=](double t) { return off0 + cont.offset * quintic((t - t_b) / span); };
            auto blateral_rate = [=](double t) {
                return cont.offset * quintic_rate((t - t_b) / span) / span;
            };
            const double s_junction =
                rotate(Vec2{junction.x - anchor.x, junction.y - anchor.y}, -anchor.heading).x;
            Trajectory tail =
                profile_future(anchor, bspeeds, blateral, blateral_rate, t_b, s_junction, dt);
            Trajectory branch;
            branch.dt = dt;
            branch.states.reserve(tail.size() + 1);
            branch.states.push_back(junction);
            branch.states.insert(branch.states.end(), tail.states.begin(), tail.states.end());
            branch_set.push_back(std::move(branch));
        }
        set.trunks.push_back(std::move(trunk));
        set.branches.push_back(std::move(branch_set));
    }
    set.trunk_scores.resize(set.trunks.size());
    double sum = 0.0;
    for (std::size_t m = 0; m < set.trunk_scores.size(); ++m) {
        set.trunk_scores[m] = std::pow(0.55, static_cast<double>(m));
        sum += set.trunk_scores[m];
    }
    for (double& s : set.trunk_scores) s /= sum;
    set.validate();
    return set;
}

bool rects_overlap(const Pose2& a, const AgentShape& sa, const Pose2& b, const AgentShape& sb) {
    const auto ca = rect_corners(a, sa);
    const auto cb = rect_corners(b, sb);
    const std::array<Vec2, 4> axes{rotate(Vec2{1.0, 0.0}, a.heading), rotate(Vec2{0.0, 1.0}, a.heading),
                                   rotate(Vec2{1.0, 0.0}, b.heading), rotate(Vec2{0.0, 1.0}, b.heading)};
    for (const Vec2& axis : axes) {
        if (separated_on_axis(axis, ca, cb)) return false;
    }
    return true;
}

double pdm_lite(const PdmSignals& signals) {
    if (signals.collided) return 0.0;
    const double ttc_gate = signals.min_ttc >= kTtcGate ? 1.0 : 0.0;
    const double comfort = signals.comfort_ok ? 1.0 : 0.0;
    const double progress = std::clamp(signals.progress_ratio, 0.0, 1.0);
    return (5.0 * ttc_gate + 2.0 * comfort + 5.0 * progress) / 12.0;
}

namespace {

// State the AV exposes to prediction and planning mid-rollout.
AgentRecord live_record(const AgentRecord& base, const std::vector<TrajState>& realized,
                        std::size_t k, double dt) {
    AgentRecord rec;
    rec.id = base.id;
    rec.kind = base.kind;
    rec.shape = base.shape;
    rec.history.dt = dt;
    const std::size_t first = k >= 2 ? k - 2 : 0;
    for (std::size_t i = first; i <= k; ++i) {
        TrajState s = realized[i];
        s.t = (static_cast<double>(i) - static_cast<double>(k)) * dt;
        rec.history.states.push_back(s);
    }
    if (rec.history.states.size() < 2) {
        TrajState s = rec.history.states.front();
        s.t -= dt;
        s.x -= s.vx * dt;
        s.y -= s.vy * dt;
        rec.history.states.insert(rec.history.states.begin(), s);
    }
    return rec;
}

// Time until the two safety discs (radius = width / 2) first touch under
// constant-velocity extrapolation; capped when the paths miss entirely.
double disc_ttc(const TrajState& av, const AgentShape& av_shape, const TrajState& other,
                const AgentShape& other_shape) {
    const Vec2 rel{other.x - av.x, other.y - av.y};
    const Vec2 vrel{other.vx - av.vx, other.vy - av.vy};
    const double r = av_shape.width / 2.0 + other_shape.width / 2.0;
    const double c = rel.dot(rel) - r * r;
    if (c <= 0.0) return 0.0;
    const double a = vrel.dot(vrel);
    const double b = rel.dot(vrel);
    if (b >= 0.0 || a <= 1e-12) return kTtcCap;
    const double disc = b * b - a * c;
    if (disc <= 0.0) return kTtcCap;
    const double t = (-b - std::sqrt(disc)) / a;
    return std::min(kTtcCap, std::max(0.0, t));
}

}  // namespace

SimReport rollout_scenario(const Scenario& scenario, const SimConfig& cfg,
                           const PlannerConfig& planner_cfg, Policy policy, Trace* trace) {
    scenario.validate();
    cfg.validate();
    planner_cfg.validate();
    const double dt = scenario.dt();
    for (const AgentRecord& a : scenario.agents) {
        if (!a.future) {
            throw std::invalid_argument("rollout needs a ground-truth future for every agent");
        }
        if (std::abs(a.future->states.front().t - dt) > 1e-9) {
            throw std::invalid_argument("futures must start one step after presence time");
        }
    }
    if (std::abs(cfg.dt - dt) > 1e-9) {
        throw std::invalid_argument("config dt must match the scenario sampling period");
    }
    const std::size_t future_len = scenario.agents.front().future->size();
    const auto want_steps = static_cast<std::size_t>(std::llround(cfg.duration / dt));
    const std::size_t steps = std::min(want_steps, future_len);
    const auto replan_steps = static_cast<std::size_t>(std::llround(cfg.replan_period / dt));
    const auto trunk_steps = static_cast<std::size_t>(std::llround(planner_cfg.t_b / dt));
    const bool planned = policy == Policy::contingency || policy == Policy::naive_best_score;
    if (planned && replan_steps > trunk_steps) {
        throw std::invalid_argument("replan_period exceeds the trunk horizon");
    }

    const AgentRecord& av_base = scenario.agents.front();
    auto agent_state = [&](std::size_t idx, std::size_t k) -> const TrajState& {
        const AgentRecord& a = scenario.agents[idx];
        return k == 0 ? a.history.states.back() : a.future->states[k - 1];
    };

    // AV realized states, index = world step.
    std::vector<TrajState> av(steps + 1);
    av[0] = av_base.history.states.back();

    if (policy == Policy::expert_replay) {
        for (std::size_t k = 1; k <= steps; ++k) av[k] = av_base.future->states[k - 1];
    } else if (policy == Policy::constant_velocity) {
        const Vec2 v = av_base.presence_velocity();
        for (std::size_t k = 1; k <= steps; ++k) {
            av[k] = av[0];
            av[k].t = static_cast<double>(k) * dt;
            av[k].x = av[0].x + v.x * av[k].t;
            av[k].y = av[0].y + v.y * av[k].t;
        }
    } else {
        Trajectory active;
        std::size_t anchor = 0;
        for (std::size_t k = 0; k < steps; ++k) {
            if (k % replan_steps == 0) {
                const AgentRecord av_now = live_record(av_base, av, k, dt);
                std::vector<GmmPrediction> marginals;
                marginals.reserve(scenario.agents.size() - 1);
                std::vector<Trajectory> topo_futures;
                topo_futures.reserve(scenario.agents.size());
                std::vector<Pose2> frames;
                frames.reserve(scenario.agents.size());

                const GmmPrediction av_pred = constant_velocity_gmm(av_now, cfg.horizon, 1);
                topo_futures.push_back(mode_mean(av_pred, 0, dt));
                frames.push_back(av_now.presence_pose());
                for (std::size_t idx = 1; idx < scenario.agents.size(); ++idx) {
                    AgentRecord rec = scenario.agents[idx];
                    rec.history.dt = dt;
                    rec.history.states.clear();
                    const TrajState& prev = agent_state(idx, k >= 1 ? k - 1 : 0);
                    TrajState cur = agent_state(idx, k);
                    TrajState before = k >= 1 ? prev : cur;
                    if (k == 0) {
                        before.x -= before.vx * dt;
                        before.y -= before.vy * dt;
                    }
                    before.t = -dt;
                    cur.t = 0.0;
                    rec.history.states = {before, cur};
                    rec.future.reset();
                    marginals.push_back(constant_velocity_gmm(rec, cfg.horizon, planner_cfg.m_modes));
                    topo_futures.push_back(mode_mean(marginals.back(), 0, dt));
                    frames.push_back(Pose2{cur.x, cur.y, cur.heading});
                }
                const EdgeTopology topo = extract_topology(topo_futures, frames);
                const PlanCandidateSet candidates = lattice_candidates(av_now, cfg, planner_cfg);
                std::size_t trunk_index = 0;
                if (policy == Policy::contingency) {
                    trunk_index =
                        select_plan(candidates, marginals, to_scored(topo), planner_cfg).trunk_index;
                } else {
                    std::size_t best = 0;
                    for (std::size_t m = 1; m < candidates.trunk_scores.size(); ++m) {
                        if (candidates.trunk_scores[m] > candidates.trunk_scores[best]) best = m;
                    }
                    trunk_index = best;
                }
                // Re-anchor plan states to absolute time.
                active = candidates.trunks[trunk_index];
                for (std::size_t s = 0; s < active.size(); ++s) {
                    active.states[s].t = static_cast<double>(k + 1 + s) * dt;
                }
                anchor = k;
                if (trace) {
                    const double t_now = static_cast<double>(k) * dt;
                    for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
                        for (std::size_t j = 0; j < scenario.agents.size(); ++j) {
                            if (i == j || topo.at(i, j) == 0) continue;
                            const TrajState& si = i == 0 ? av[k] : agent_state(i, k);
                            const TrajState& sj = j == 0 ? av[k] : agent_state(j, k);
                            trace->edges.push_back(TraceEdge{t_now, scenario.agents[i].id,
                                                             scenario.agents[j].id, si.x, si.y,
                                                             sj.x, sj.y});
                        }
                    }
                }
            }
            av[k + 1] = active.states[k - anchor];
        }
    }

    // Metrics over the realized rollout.
    SimReport report;
    std::vector<bool> hit(scenario.agents.size(), false);
    double min_ttc = kTtcCap;
    for (std::size_t k = 0; k <= steps; ++k) {
        const Pose2 av_pose{av[k].x, av[k].y, av[k].heading};
        for (std::size_t idx = 1; idx < scenario.agents.size(); ++idx) {
            const TrajState& s = agent_state(idx, k);
            const Pose2 pose{s.x, s.y, s.heading};
            if (!hit[idx] && rects_overlap(av_pose, av_base.shape, pose, scenario.agents[idx].shape)) {
                hit[idx] = true;
                ++report.collisions;
            }
            min_ttc = std::min(min_ttc, disc_ttc(av[k], av_base.shape, s, scenario.agents[idx].shape));
        }
        if (trace) {
            trace->states.push_back(TraceState{static_cast<double>(k) * dt, av_base.id, av[k].x,
                                               av[k].y, av[k].heading,
                                               std::hypot(av[k].vx, av[k].vy)});
            for (std::size_t idx = 1; idx < scenario.agents.size(); ++idx) {
                const TrajState& s = agent_state(idx, k);
                trace->states.push_back(TraceState{static_cast<double>(k) * dt,
                                                   scenario.agents[idx].id, s.x, s.y, s.heading,
                                                   std::hypot(s.vx, s.vy)});
            }
        }
    }
    report.min_ttc = min_ttc;

    bool comfort = true;
    for (std::size_t k = 0; k + 2 <= steps; ++k) {
        const double s0 = std::hypot(av[k].vx, av[k].vy);
        const double s1 = std::hypot(av[k + 1].vx, av[k + 1].vy);
        const double s2 = std::hypot(av[k + 2].vx, av[k + 2].vy);
        const double jerk = ((s2 - s1) - (s1 - s0)) / (dt * dt);
        if (std::abs(jerk) > kComfortJerk) comfort = false;
        const double yaw_rate = wrap_angle(av[k + 1].heading - av[k].heading) / dt;
        if (std::abs(yaw_rate) > kComfortYawRate) comfort = false;
    }
    report.comfort_ok = comfort;

    // Progress: realized displacement projected onto the reference (expert)
    // displacement, as a fraction of the latter.
    const TrajState& start = av_base.history.states.back();
    const TrajState& goal = av_base.future->states[steps - 1];
    const Vec2 expert_disp{goal.x - start.x, goal.y - start.y};
    const double expert_norm = expert_disp.norm();
    if (expert_norm < 0.5) {
        report.progress_ratio = 1.0;
    } else {
        const Vec2 realized{av[steps].x - av[0].x, av[steps].y - av[0].y};
        report.progress_ratio =
            std::clamp(realized.dot(expert_disp) / (expert_norm * expert_norm), 0.0, 1.0);
    }

    report.pdm_lite = pdm_lite(PdmSignals{report.collisions > 0, report.min_ttc, report.comfort_ok,
                                          report.progress_ratio});
    return report;
}

SimReport rollout(const SimConfig& cfg, const PlannerConfig& planner_cfg, Policy policy,
                  Trace* trace) {
    return rollout_scenario(generate_scenario(cfg), cfg, planner_cfg, policy, trace);
}

std::vector<std::size_t> mine_interactive(const std::vector<Scenario>& scenarios, double gamma,
                                          const SimConfig& cfg, const PlannerConfig& planner_cfg) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("gamma must lie in (0, 1)");
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        SimConfig local = cfg;
        local.dt = scenarios[i].dt();
        const SimReport cav =
            rollout_scenario(scenarios[i], local, planner_cfg, Policy::constant_velocity);
        const SimReport expert =
            rollout_scenario(scenarios[i], local, planner_cfg, Policy::expert_replay);
        if (cav.pdm_lite < gamma && expert.pdm_lite >= 1.0 - gamma) {
            kept.push_back(i);
        }
    }
    return kept;
}

}  // namespace betop
