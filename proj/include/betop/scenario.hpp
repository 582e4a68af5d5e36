#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "betop/geometry.hpp"

namespace betop {

struct TrajState {
    double t{0.0};        // [s]
    double x{0.0};        // [m]
    double y{0.0};        // [m]
    double vx{0.0};       // [m/s]
    double vy{0.0};       // [m/s]
    double heading{0.0};  // [rad], in (-pi, pi]
};

// Uniformly sampled state sequence. Treated as immutable once validated;
// operations return fresh trajectories instead of mutating.
struct Trajectory {
    std::vector<TrajState> states;
    double dt{0.1};  // [s]

    std::size_t size() const { return states.size(); }
    Vec2 position(std::size_t i) const { return {states[i].x, states[i].y}; }
    Vec2 velocity(std::size_t i) const { return {states[i].vx, states[i].vy}; }
    double duration() const;

    /// Copy of states [first, first + count). count must be >= 2.
    Trajectory slice(std::size_t first, std::size_t count) const;

    /// Throws std::invalid_argument unless timestamps are strictly
    /// increasing with uniform spacing dt and there are at least 2 states.
    void validate() const;
};

enum class AgentKind { vehicle, pedestrian, cyclist };

struct AgentShape {
    double length{4.5};  // [m], > 0
    double width{2.0};   // [m], > 0
};

struct AgentRecord {
    std::string id;
    AgentKind kind{AgentKind::vehicle};
    AgentShape shape;
    Trajectory history;  // last state at t = 0 (the presence frame)
    std::optional<Trajectory> future;

    Pose2 presence_pose() const;
    Vec2 presence_velocity() const;
};

struct MapPolyline {
    std::string tag;
    std::vector<Vec2> points;
};

// Agent 0 is the AV.
struct Scenario {
    std::vector<AgentRecord> agents;
    std::vector<MapPolyline> map_polylines;
    double horizon_future{0.0};   // [s]
    double horizon_history{0.0};  // [s]

    double dt() const;
    void validate() const;
};

/// Expresses traj in the given frame: positions become rotate(p - b, -heading),
/// velocities are rotated the same way, headings are shifted by -frame.heading,
/// timestamps are unchanged.
Trajectory to_local_frame(const Trajectory& traj, const Pose2& frame);

/// Replaces each state's heading with its step direction. The last state keeps
/// the direction of the final step; zero-length steps reuse the prior heading.
Trajectory derive_headings(Trajectory traj);

}  // namespace betop
