#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "betop/scenario.hpp"

// Behavioral topology over a set of future trajectories.
//
// Each ordered pair (i, j) gets a binary edge: transform both futures into
// agent i's presence frame, project them to the (lateral, time) plane, and
// mark the edge when the resulting polylines cross. The matrix is directed
// and generally not symmetric because every row uses its own frame.

namespace betop {

struct EdgeTopology {
    std::size_t n_agents{0};
    std::vector<int> entries;  // row-major, values in {0, 1}, zero diagonal

    static EdgeTopology zeros(std::size_t n);
    int at(std::size_t i, std::size_t j) const { return entries[i * n_agents + j]; }
    void set(std::size_t i, std::size_t j, int v) { entries[i * n_agents + j] = v; }
    void validate() const;
};

struct ScoredTopology {
    std::size_t n_agents{0};
    std::vector<double> scores;  // row-major, values in [0, 1], zero diagonal

    static ScoredTopology zeros(std::size_t n);
    double at(std::size_t i, std::size_t j) const { return scores[i * n_agents + j]; }
    void set(std::size_t i, std::size_t j, double v) { scores[i * n_agents + j] = v; }
    void validate() const;
};

/// Copies binary edges into scores of 0.0 / 1.0.
ScoredTopology to_scored(const EdgeTopology& edges);

// Constant per-step arc lengths used by the monotone winding transform.
struct WindingParams {
    double eta_i{1.0};  // > 0
    double eta_j{1.0};  // > 0
};

// Counts every (lateral, time) interval pair tested. extract_topology performs
// exactly |sources| * (n_agents - 1) * (steps - 1) checks: the scan never exits
// early, which keeps the count and the runtime independent of the data.
struct IntertwineStats {
    std::uint64_t interval_checks{0};
};

/// 1 when the two futures, seen from frame_i and projected to (lateral, t),
/// cross anywhere; 0 otherwise. Both trajectories must share length and dt.
int edge_intertwine(const Trajectory& traj_i, const Trajectory& traj_j, const Pose2& frame_i,
                    IntertwineStats* stats = nullptr);

/// Full directed matrix. Rows outside `sources` stay all-zero; by default all
/// rows are computed. Rows are independent of each other.
EdgeTopology extract_topology(const std::vector<Trajectory>& futures,
                              const std::vector<Pose2>& frames,
                              const std::optional<std::vector<std::size_t>>& sources = std::nullopt,
                              IntertwineStats* stats = nullptr);

/// Net signed turns of the relative vector p_j - p_i: the sum of per-step
/// angle increments, each wrapped into (-pi, pi], divided by 2*pi.
/// Throws on a zero relative vector ("degenerate relative vector").
double winding_number(const Trajectory& traj_i, const Trajectory& traj_j);

/// Lateral-gap form of the winding sum: sum over steps of
///   eta_j * sin(dtheta_ij) - eta_i * sin(theta_i)
/// where theta_i is i's step direction and dtheta_ij is j's step direction,
/// both measured against the axis of i's first step (falling back to the first
/// stored heading when that step has zero length). With constant step lengths
/// eta this telescopes to the change of the lateral gap between the two curves,
/// so its running sign tracks which side of i's path agent j is on. Every step
/// direction must lie in [-pi/2, pi/2]; outside that range sin() is no longer
/// monotone in the angle and the call throws "outside monotone sine domain".
double transformed_winding(const Trajectory& traj_i, const Trajectory& traj_j,
                           const WindingParams& params);

/// Indices of the top-k scores in `row` (descending score, ties by ascending
/// index), clipped to the n_agents - 1 available columns.
std::vector<std::size_t> select_interactive(const ScoredTopology& scored, std::size_t row,
                                            std::size_t k);

/// Binary cross entropy of one predicted row against truth, summed over the
/// off-diagonal columns. Scores are clamped to [1e-7, 1 - 1e-7].
double topology_bce(const ScoredTopology& predicted, const EdgeTopology& truth, std::size_t row);

struct LabelSimilarity {
    double accuracy{0.0};
    double auc{0.0};
};

/// Accuracy (threshold 0.5) and rank-statistic AUC of predicted edges against
/// a reference set of ordered interactive pairs. The pair universe is every
/// ordered off-diagonal pair; ties in score contribute mid-ranks so a constant
/// predictor scores AUC 0.5.
LabelSimilarity label_similarity(const ScoredTopology& predicted,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& reference_pairs);
LabelSimilarity label_similarity(const EdgeTopology& predicted,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& reference_pairs);

/// Distance baseline: row i marks the k agents with the smallest
/// minimum same-timestep distance to agent i over the futures.
ScoredTopology gt_topk_baseline(const std::vector<Trajectory>& futures, std::size_t k);

}  // namespace betop
