#pragma once

#include <vector>

#include "betop/prediction.hpp"
#include "betop/scenario.hpp"
#include "betop/topology.hpp"

namespace betop {

struct PlannerConfig {
    double t_b{3.0};        // [s] branching time, inside (0, planning horizon)
    double lambda_1{50.0};  // topology loss weight (training-time constant)
    double lambda_2{5.0};   // contingency loss weight (training-time constant)
    double lambda_m{0.5};   // short-term cost weight in full-plan scoring
    std::size_t k_m{4};     // interactive agents kept for joint reasoning
    std::size_t m_modes{6};     // trunks and joint modes kept
    std::size_t m_branches{6};  // branches per trunk

    void validate() const;
};

// Candidate plan tree: M trunks over (0, t_b], each continued by a set of
// branches. A branch's first state sits at the junction and must coincide
// with its trunk's last state to within 1e-6 m.
struct PlanCandidateSet {
    std::vector<Trajectory> trunks;
    std::vector<std::vector<Trajectory>> branches;  // branches[m] continue trunks[m]
    std::vector<double> trunk_scores;

    void validate() const;
};

struct PlanSelection {
    std::size_t trunk_index{0};
    std::vector<std::size_t> branch_choice;  // winning branch per joint mode
    double total_cost{0.0};
};

/// Repulsive proximity potential 1/(1 + d_min) where d_min is the minimum
/// same-index distance between the two position sequences. 1.0 on contact,
/// falling toward 0 with clearance.
double potential_cost(const Trajectory& plan, const Trajectory& pred_means);

/// Worst-case potential of the trunk against every mode of every marginal,
/// evaluated over the trunk window. No obstacles cost 0.
double marginal_cost(const Trajectory& trunk, const std::vector<GmmPrediction>& marginals);

/// Cost of one joint mode against a branch set: the best branch is the one
/// minimizing the worst per-agent potential, evaluated over the branch window
/// (mode means are aligned to the tail of the prediction horizon).
double joint_branch_cost(const std::vector<Trajectory>& branches,
                         const std::vector<std::size_t>& joint_assignment,
                         const std::vector<GmmPrediction>& joint_marginals);

/// Contingency selection: picks the trunk minimizing
///   marginal_cost(trunk) + sum_q P(joint_q) * joint_branch_cost(branches)
/// where the joint modes come from recombining the marginals of the AV's
/// top-k_m interactive agents (row 0 of scored_topo; marginals[j-1] belongs to
/// agent j). Trunk ties resolve to the lowest index.
PlanSelection select_plan(const PlanCandidateSet& candidates,
                          const std::vector<GmmPrediction>& marginals,
                          const ScoredTopology& scored_topo, const PlannerConfig& cfg);

enum class ScoreSign {
    score_minus_cost,  // argmax(score - lambda_m * cost), default
    score_plus_cost    // argmax(score + lambda_m * cost)
};

/// Imitation-style scoring of full plans: the marginal cost of the first t_b
/// seconds of each plan tempers its score; ties resolve to the lowest index.
std::size_t score_full_plan(const std::vector<Trajectory>& full_plans,
                            const std::vector<double>& scores,
                            const std::vector<GmmPrediction>& marginals, const PlannerConfig& cfg,
                            ScoreSign sign = ScoreSign::score_minus_cost);

}  // namespace betop
