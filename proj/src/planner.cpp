#include "betop/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace betop {

namespace {

constexpr double kJunctionTol = 1e-6;

double min_distance_to_mode(const Trajectory& window, const std::vector<GmmStep>& mode,
                            std::size_t offset) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < window.size(); ++k) {
        const GmmStep& g = mode[offset + k];
        dmin = std::min(dmin, std::hypot(window.states[k].x - g.mu_x, window.states[k].y - g.mu_y));
    }
    return dmin;
}

double potential(double dmin) { return 1.0 / (1.0 + dmin); }

struct BranchPick {
    std::size_t index{0};
    double cost{0.0};
};

BranchPick best_branch(const std::vector<Trajectory>& branches,
                       const std::vector<std::size_t>& joint_assignment,
                       const std::vector<GmmPrediction>& joint_marginals) {
    if (branches.empty()) {
        throw std::invalid_argument("joint cost needs at least one branch");
    }
    if (joint_assignment.size() != joint_marginals.size()) {
        throw std::invalid_argument("joint assignment and marginals disagree in count");
    }
    const std::size_t len = branches.front().size();
    for (const Trajectory& b : branches) {
        if (b.size() != len) {
            throw std::invalid_argument("branches disagree on length");
        }
    }
    // Branch windows align with the tail of the prediction horizon.
    std::vector<std::size_t> offsets(joint_marginals.size());
    for (std::size_t n = 0; n < joint_marginals.size(); ++n) {
        const GmmPrediction& m = joint_marginals[n];
        if (joint_assignment[n] >= m.n_modes()) {
            throw std::out_of_range("joint assignment mode out of range");
        }
        if (m.horizon_steps() < len) {
            throw std::invalid_argument("prediction horizon shorter than branch");
        }
        offsets[n] = m.horizon_steps() - len;
    }
    BranchPick best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t b = 0; b < branches.size(); ++b) {
        double worst = 0.0;
        for (std::size_t n = 0; n < joint_marginals.size(); ++n) {
            const auto& mode = joint_marginals[n].modes[joint_assignment[n]];
            worst = std::max(worst, potential(min_distance_to_mode(branches[b], mode, offsets[n])));
        }
        if (worst < best.cost) {
            best = {b, worst};
        }
    }
    return best;
}

}  // namespace

void PlannerConfig::validate() const {
    if (!(t_b > 0.0)) throw std::invalid_argument("t_b must be positive");
    if (!(lambda_m >= 0.0)) throw std::invalid_argument("lambda_m must be nonnegative");
    if (k_m < 1) throw std::invalid_argument("k_m must be at least 1");
    if (m_modes < 1) throw std::invalid_argument("m_modes must be at least 1");
    if (m_branches < 1) throw std::invalid_argument("m_branches must be at least 1");
}

void PlanCandidateSet::validate() const {
    if (trunks.empty()) {
        throw std::invalid_argument("candidate set has no trunks");
    }
    if (branches.size() != trunks.size()) {
        throw std::invalid_argument("branch sets and trunks disagree in count");
    }
    if (trunk_scores.size() != trunks.size()) {
        throw std::invalid_argument("trunk scores and trunks disagree in count");
    }
    for (std::size_t m = 0; m < trunks.size(); ++m) {
        trunks[m].validate();
        for (const Trajectory& b : branches[m]) {
            b.validate();
            const Vec2 gap = b.position(0) - trunks[m].position(trunks[m].size() - 1);
            if (gap.norm() > kJunctionTol) {
                throw std::invalid_argument("branch does not continue its trunk");
            }
        }
    }
}

double potential_cost(const Trajectory& plan, const Trajectory& pred_means) {
    if (plan.size() != pred_means.size()) {
        throw std::invalid_argument("trajectory length mismatch");
    }
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < plan.size(); ++k) {
        dmin = std::min(dmin, (plan.position(k) - pred_means.position(k)).norm());
    }
    return potential(dmin);
}

double marginal_cost(const Trajectory& trunk, const std::vector<GmmPrediction>& marginals) {
    double worst = 0.0;
    for (const GmmPrediction& m : marginals) {
        if (m.horizon_steps() < trunk.size()) {
            throw std::invalid_argument("prediction horizon shorter than trunk");
        }
        for (const auto& mode : m.modes) {
            worst = std::max(worst, potential(min_distance_to_mode(trunk, mode, 0)));
        }
    }
    return worst;
}

double joint_branch_cost(const std::vector<Trajectory>& branches,
                         const std::vector<std::size_t>& joint_assignment,
                         const std::vector<GmmPrediction>& joint_marginals) {
    return best_branch(branches, joint_assignment, joint_marginals).cost;
}

PlanSelection select_plan(const PlanCandidateSet& candidates,
                          const std::vector<GmmPrediction>& marginals,
                          const ScoredTopology& scored_topo, const PlannerConfig& cfg) {
    cfg.validate();
    candidates.validate();
    if (scored_topo.n_agents != marginals.size() + 1) {
        throw std::invalid_argument("scored topology must cover the AV plus every marginal");
    }

    std::vector<std::size_t> subset;
    std::vector<GmmPrediction> joint_marginals;
    JointPrediction joint;
    if (!marginals.empty()) {
        subset = interactive_subset_for_av(scored_topo, cfg.k_m);
        joint_marginals.reserve(subset.size());
        for (std::size_t j : subset) {
            joint_marginals.push_back(marginals[j - 1]);
        }
        if (!joint_marginals.empty()) {
            joint = recombine_joint(joint_marginals, cfg.m_modes);
            joint.agent_indices = subset;
        }
    }

    PlanSelection best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < candidates.trunks.size(); ++m) {
        double cost = marginal_cost(candidates.trunks[m], marginals);
        std::vector<std::size_t> choice(joint.combos.size(), 0);
        for (std::size_t q = 0; q < joint.combos.size(); ++q) {
            const BranchPick pick = best_branch(candidates.branches[m], joint.combos[q], joint_marginals);
            cost += joint.joint_scores[q] * pick.cost;
            choice[q] = pick.index;
        }
        if (cost < best_cost) {
            best_cost = cost;
            best.trunk_index = m;
            best.branch_choice = std::move(choice);
            best.total_cost = cost;
        }
    }
    return best;
}

std::size_t score_full_plan(const std::vector<Trajectory>& full_plans,
                            const std::vector<double>& scores,
                            const std::vector<GmmPrediction>& marginals, const PlannerConfig& cfg,
                            ScoreSign sign) {
    cfg.validate();
    if (full_plans.empty()) {
        throw std::invalid_argument("no plans to score");
    }
    if (scores.size() != full_plans.size()) {
        throw std::invalid_argument("scores and plans disagree in count");
    }
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < full_plans.size(); ++m) {
        const Trajectory& plan = full_plans[m];
        plan.validate();
        const auto steps = static_cast<std::size_t>(std::llround(cfg.t_b / plan.dt));
        const std::size_t trunk_steps = std::clamp<std::size_t>(steps, 2, plan.size());
        const double cost = marginal_cost(plan.slice(0, trunk_steps), marginals);
        const double value =
            sign == ScoreSign::score_minus_cost ? scores[m] - cfg.lambda_m * cost
                                                : scores[m] + cfg.lambda_m * cost;
        if (value > best_value) {
            best_value = value;
            best = m;
        }
    }
    return best;
}

}  // namespace betop
