#include "betop/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace betop {

namespace {
constexpr double kScoreClamp = 1e-7;
constexpr double kRhoMargin = 1e-6;
constexpr double kScoreSumTol = 1e-6;
}  // namespace

void GmmPrediction::validate() const {
    if (modes.empty()) {
        throw std::invalid_argument("prediction needs at least one mode");
    }
    if (scores.size() != modes.size()) {
        throw std::invalid_argument("mode scores and modes disagree in count");
    }
    const std::size_t steps = modes.front().size();
    if (steps == 0) {
        throw std::invalid_argument("prediction horizon is empty");
    }
    double sum = 0.0;
    for (double s : scores) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw std::invalid_argument("mode scores must be finite and nonnegative");
        }
        sum += s;
    }
    if (std::abs(sum - 1.0) > kScoreSumTol) {
        throw std::invalid_argument("mode scores must sum to 1");
    }
    for (const auto& mode : modes) {
        if (mode.size() != steps) {
            throw std::invalid_argument("modes disagree on horizon");
        }
        for (const GmmStep& g : mode) {
            if (std::abs(g.rho) >= 1.0 - kRhoMargin) {
                throw std::invalid_argument("correlation too close to singular");
            }
        }
    }
}

double gmm_nll(const std::vector<GmmStep>& mode, double score, const Trajectory& truth) {
    if (!(score > 0.0)) {
        throw std::invalid_argument("mode score must be positive");
    }
    if (mode.size() != truth.size()) {
        throw std::invalid_argument("trajectory length mismatch");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < mode.size(); ++k) {
        const GmmStep& g = mode[k];
        const double sx = std::exp(g.log_sigma_x);
        const double sy = std::exp(g.log_sigma_y);
        const double one_m = 1.0 - g.rho * g.rho;
        const double dx = truth.states[k].x - g.mu_x;
        const double dy = truth.states[k].y - g.mu_y;
        total += g.log_sigma_x + g.log_sigma_y + 0.5 * std::log(one_m) +
                 (dx * dx / (sx * sx) + dy * dy / (sy * sy) - 2.0 * g.rho * dx * dy / (sx * sy)) /
                     (2.0 * one_m);
    }
    total -= std::log(std::max(score, kScoreClamp));
    return total;
}

std::size_t select_mode_wta(const GmmPrediction& pred, const Trajectory& truth) {
    pred.validate();
    if (pred.horizon_steps() != truth.size()) {
        throw std::invalid_argument("trajectory length mismatch");
    }
    std::size_t best = 0;
    double best_ade = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < pred.n_modes(); ++m) {
        double acc = 0.0;
        for (std::size_t k = 0; k < truth.size(); ++k) {
            const GmmStep& g = pred.modes[m][k];
            acc += std::hypot(truth.states[k].x - g.mu_x, truth.states[k].y - g.mu_y);
        }
        const double ade = acc / static_cast<double>(truth.size());
        if (ade < best_ade) {
            best_ade = ade;
            best = m;
        }
    }
    return best;
}

JointPrediction recombine_joint(const std::vector<GmmPrediction>& marginals, std::size_t m_out,
                                RecombineStats* stats) {
    if (marginals.empty()) {
        throw std::invalid_argument("recombination needs at least one marginal");
    }
    if (m_out < 1) {
        throw std::invalid_argument("m_out must be at least 1");
    }
    for (const GmmPrediction& m : marginals) {
        m.validate();
    }
    struct Partial {
        double score;
        std::vector<std::size_t> combo;
    };
    auto better = [](const Partial& a, const Partial& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.combo < b.combo;
    };
    std::vector<Partial> front{{1.0, {}}};
    for (const GmmPrediction& marg : marginals) {
        std::vector<Partial> next;
        next.reserve(front.size() * marg.scores.size());
        for (const Partial& p : front) {
            for (std::size_t m = 0; m < marg.scores.size(); ++m) {
                if (stats) ++stats->products;
                Partial q{p.score * marg.scores[m], p.combo};
                q.combo.push_back(m);
                next.push_back(std::move(q));
            }
        }
        std::sort(next.begin(), next.end(), better);
        if (next.size() > m_out) next.resize(m_out);
        front = std::move(next);
    }
    JointPrediction out;
    out.agent_indices.resize(marginals.size());
    for (std::size_t n = 0; n < marginals.size(); ++n) out.agent_indices[n] = n;
    out.combos.reserve(front.size());
    out.joint_scores.reserve(front.size());
    for (Partial& p : front) {
        out.combos.push_back(std::move(p.combo));
        out.joint_scores.push_back(p.score);
    }
    return out;
}

std::vector<std::size_t> interactive_subset_for_av(const ScoredTopology& scored, std::size_t k_m) {
    return select_interactive(scored, 0, k_m);
}

Trajectory mode_mean(const GmmPrediction& pred, std::size_t mode_index, double dt) {
    pred.validate();
    if (mode_index >= pred.n_modes()) {
        throw std::out_of_range("mode index out of range");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("dt must be positive");
    }
    const auto& mode = pred.modes[mode_index];
    Trajectory out;
    out.dt = dt;
    out.states.resize(mode.size());
    for (std::size_t k = 0; k < mode.size(); ++k) {
        out.states[k].t = static_cast<double>(k + 1) * dt;
        out.states[k].x = mode[k].mu_x;
        out.states[k].y = mode[k].mu_y;
        if (k > 0) {
            out.states[k].vx = (mode[k].mu_x - mode[k - 1].mu_x) / dt;
            out.states[k].vy = (mode[k].mu_y - mode[k - 1].mu_y) / dt;
        }
    }
    if (out.states.size() > 1) {
        out.states[0].vx = out.states[1].vx;
        out.states[0].vy = out.states[1].vy;
    }
    return derive_headings(std::move(out));
}

}  // namespace betop
