#include "betop/scenario.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace betop {

namespace {
constexpr double kSpacingTol = 1e-9;
}

double Trajectory::duration() const {
    if (states.empty()) return 0.0;
    return states.back().t - states.front().t;
}

Trajectory Trajectory::slice(std::size_t first, std::size_t count) const {
    if (count < 2 || first + count > states.size()) {
        throw std::invalid_argument("invalid trajectory slice");
    }
    Trajectory out;
    out.dt = dt;
    out.states.assign(states.begin() + static_cast<std::ptrdiff_t>(first),
                      states.begin() + static_cast<std::ptrdiff_t>(first + count));
    return out;
}

void Trajectory::validate() const {
    if (states.size() < 2) {
        throw std::invalid_argument("trajectory needs at least 2 states");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("trajectory dt must be positive");
    }
    for (std::size_t i = 0; i + 1 < states.size(); ++i) {
        const double gap = states[i + 1].t - states[i].t;
        if (!(gap > 0.0) || std::abs(gap - dt) > kSpacingTol) {
            throw std::invalid_argument("trajectory timestamps must increase uniformly by dt");
        }
    }
}

Pose2 AgentRecord::presence_pose() const {
    const TrajState& s = history.states.back();
    return Pose2{s.x, s.y, s.heading};
}

Vec2 AgentRecord::presence_velocity() const {
    const TrajState& s = history.states.back();
    return {s.vx, s.vy};
}

double Scenario::dt() const {
    if (agents.empty()) {
        throw std::invalid_argument("scenario has no agents");
    }
    return agents.front().history.dt;
}

void Scenario::validate() const {
    if (agents.empty()) {
        throw std::invalid_argument("scenario needs at least one agent");
    }
    std::set<std::string> ids;
    std::size_t future_len = 0;
    for (const AgentRecord& agent : agents) {
        if (!ids.insert(agent.id).second) {
            throw std::invalid_argument("duplicate agent id: " + agent.id);
        }
        if (!(agent.shape.length > 0.0) || !(agent.shape.width > 0.0)) {
            throw std::invalid_argument("agent shape must be positive");
        }
        agent.history.validate();
        if (std::abs(agent.history.states.back().t) > kSpacingTol) {
            throw std::invalid_argument("history must end at t = 0");
        }
        if (std::abs(agent.history.dt - agents.front().history.dt) > kSpacingTol) {
            throw std::invalid_argument("agents disagree on dt");
        }
        if (agent.future) {
            agent.future->validate();
            if (std::abs(agent.future->dt - agent.history.dt) > kSpacingTol) {
                throw std::invalid_argument("future dt differs from history dt");
            }
            if (future_len == 0) {
                future_len = agent.future->size();
            } else if (agent.future->size() != future_len) {
                throw std::invalid_argument("futures disagree on horizon");
            }
        }
    }
}

Trajectory to_local_frame(const Trajectory& traj, const Pose2& frame) {
    const double c = std::cos(frame.heading);
    const double s = std::sin(frame.heading);
    Trajectory out = traj;
    for (TrajState& st : out.states) {
        const double dx = st.x - frame.x;
        const double dy = st.y - frame.y;
        st.x = c * dx + s * dy;
        st.y = -s * dx + c * dy;
        const double vx = c * st.vx + s * st.vy;
        const double vy = -s * st.vx + c * st.vy;
        st.vx = vx;
        st.vy = vy;
        st.heading = wrap_angle(st.heading - frame.heading);
    }
    return out;
}

Trajectory derive_headings(Trajectory traj) {
    if (traj.states.size() < 2) return traj;
    double prev = traj.states.front().heading;
    for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
        const Vec2 step = traj.position(i + 1) - traj.position(i);
        if (step.x != 0.0 || step.y != 0.0) {
            prev = std::atan2(step.y, step.x);
        }
        traj.states[i].heading = wrap_angle(prev);
    }
    traj.states.back().heading = wrap_angle(prev);
    return traj;
}

}  // namespace betop
