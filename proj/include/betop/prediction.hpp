#pragma once

#include <cstdint>
#include <vector>

#include "betop/scenario.hpp"
#include "betop/topology.hpp"

namespace betop {

// One step of a bivariate Gaussian mode.
struct GmmStep {
    double mu_x{0.0};
    double mu_y{0.0};
    double log_sigma_x{0.0};
    double log_sigma_y{0.0};
    double rho{0.0};  // |rho| < 1 - 1e-6
};

// Multi-modal prediction for one agent: m modes over a shared horizon,
// mode scores summing to 1 within 1e-6.
struct GmmPrediction {
    std::vector<std::vector<GmmStep>> modes;
    std::vector<double> scores;

    std::size_t n_modes() const { return modes.size(); }
    std::size_t horizon_steps() const { return modes.empty() ? 0 : modes.front().size(); }
    void validate() const;
};

// Top joint modes over a subset of agents. combos[q][n] is the mode picked
// for agent agent_indices[n]; joint_scores are the raw products of the
// constituent mode scores, sorted descending.
struct JointPrediction {
    std::vector<std::size_t> agent_indices;
    std::vector<std::vector<std::size_t>> combos;
    std::vector<double> joint_scores;
};

struct RecombineStats {
    std::uint64_t products{0};
};

/// Negative log likelihood of the ground truth under one mode, without the
/// 2*pi normalization constant: per step
///   log(sx) + log(sy) + log(1 - rho^2)/2
///   + (dx^2/sx^2 + dy^2/sy^2 - 2 rho dx dy / (sx sy)) / (2 (1 - rho^2))
/// summed over steps, minus log(score) once. score must be positive and is
/// clamped to at least 1e-7 inside the log.
double gmm_nll(const std::vector<GmmStep>& mode, double score, const Trajectory& truth);

/// Winner-takes-all mode: the index minimizing mean Euclidean distance of the
/// mode means to the truth positions. Ties pick the lowest index.
std::size_t select_mode_wta(const GmmPrediction& pred, const Trajectory& truth);

/// Exact top-m_out joint modes by product score. Marginals are combined one
/// agent at a time; after each stage only the best m_out partial products are
/// kept, which is exact because every score is nonnegative. Ordering is by
/// descending score, ties broken by lexicographically smaller combo.
/// agent_indices of the result are positional (0 .. marginals.size()-1).
JointPrediction recombine_joint(const std::vector<GmmPrediction>& marginals, std::size_t m_out,
                                RecombineStats* stats = nullptr);

/// Top-k_m interactive agents for the AV (row 0 of the scored topology).
std::vector<std::size_t> interactive_subset_for_av(const ScoredTopology& scored, std::size_t k_m = 4);

/// Mode means as a trajectory: timestamps (k+1)*dt, velocities by finite
/// difference, headings from step directions.
Trajectory mode_mean(const GmmPrediction& pred, std::size_t mode_index, double dt);

}  // namespace betop
