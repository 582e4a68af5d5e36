#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "betop/planner.hpp"
#include "betop/prediction.hpp"
#include "betop/scenario.hpp"
#include "betop/topology.hpp"

namespace betop {

enum class ScenarioKind { crossing, merge, parallel, dense_random };
enum class Policy { contingency, naive_best_score, constant_velocity, expert_replay };

std::string to_string(ScenarioKind kind);
std::string to_string(Policy policy);
ScenarioKind parse_scenario_kind(const std::string& text);
Policy parse_policy(const std::string& text);

struct SimConfig {
    std::uint64_t seed{0};
    double dt{0.1};             // [s]
    double horizon{8.0};        // [s] prediction and planning horizon
    double replan_period{1.0};  // [s], must be a multiple of dt
    std::size_t n_agents{4};
    double duration{8.0};  // [s] closed-loop rollout length
    ScenarioKind kind{ScenarioKind::crossing};

    void validate() const;
};

struct SimReport {
    int collisions{0};          // distinct agents the AV ever overlapped
    double min_ttc{999.0};      // [s], capped at 999 when nothing closes in
    double progress_ratio{0.0};  // realized progress along the expert route, in [0, 1]
    bool comfort_ok{true};
    double pdm_lite{0.0};
};

struct TraceState {
    double t{0.0};
    std::string agent;
    double x{0.0};
    double y{0.0};
    double heading{0.0};
    double speed{0.0};
};

struct TraceEdge {
    double t{0.0};
    std::string from;
    std::string to;
    double x1{0.0};
    double y1{0.0};
    double x2{0.0};
    double y2{0.0};
};

struct Trace {
    std::vector<TraceState> states;
    std::vector<TraceEdge> edges;
};

/// Deterministic synthetic scenario for the given config. Identical configs
/// produce identical scenarios. Agent 0 is the AV and carries an expert-style
/// ground-truth future; `crossing` always contains at least one agent whose
/// path crosses the AV route, `parallel` never does.
Scenario generate_scenario(const SimConfig& cfg);

/// Constant-velocity GMM baseline: mode 0 extrapolates the presence velocity,
/// the other modes apply fixed heading offsets (+-5, +-10 degrees) and speed
/// scalings (0.8 / 1.2). Sigmas grow linearly with time, scores decay
/// geometrically and are normalized.
GmmPrediction constant_velocity_gmm(const AgentRecord& agent, double horizon, std::size_t m);

/// Trunk/branch lattice from the AV presence state: longitudinal accelerations
/// {keep, mild brake, hard brake, mild accel} crossed with lateral offsets
/// {-1, 0, +1} m shaped by a quintic profile, jerk-limited, truncated to
/// m_modes trunks and m_branches branches per trunk.
PlanCandidateSet lattice_candidates(const AgentRecord& av, const SimConfig& cfg,
                                    const PlannerConfig& planner_cfg);

/// Oriented rectangle overlap (separating axis test). Touching counts.
bool rects_overlap(const Pose2& a, const AgentShape& sa, const Pose2& b, const AgentShape& sb);

/// Closed-loop rollout of a generated scenario (see rollout_scenario).
SimReport rollout(const SimConfig& cfg, const PlannerConfig& planner_cfg, Policy policy,
                  Trace* trace = nullptr);

/// Closed-loop rollout: non-AV agents replay their ground-truth futures; the
/// AV follows the policy, replanning every replan_period. Deterministic for
/// identical inputs.
SimReport rollout_scenario(const Scenario& scenario, const SimConfig& cfg,
                           const PlannerConfig& planner_cfg, Policy policy,
                           Trace* trace = nullptr);

struct PdmSignals {
    bool collided{false};
    double min_ttc{999.0};
    bool comfort_ok{true};
    double progress_ratio{0.0};
};

/// Scalar closed-loop score: collision gate times a weighted mix of the
/// time-to-collision gate (>= 0.95 s), comfort gate and progress, with
/// weights 5 / 2 / 5. Any collision forces 0.
double pdm_lite(const PdmSignals& signals);

/// Indices of scenarios that are interactive under the mining rule: the
/// constant-velocity rollout scores below gamma while replaying the expert
/// future scores at least 1 - gamma.
std::vector<std::size_t> mine_interactive(const std::vector<Scenario>& scenarios, double gamma,
                                          const SimConfig& cfg, const PlannerConfig& planner_cfg);

}  // namespace betop
