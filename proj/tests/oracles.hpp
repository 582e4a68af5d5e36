#pragma once

// Reference implementations the test suites compare the library against.
// Everything here is recomputed from first principles with its own
// arithmetic: transforms carry their own trig, searches enumerate the full
// space, and no betop algorithm is called on the oracle side of a comparison.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "betop/planner.hpp"
#include "betop/prediction.hpp"
#include "betop/scenario.hpp"
#include "betop/topology.hpp"

namespace oracle {

// --- deterministic random helpers -----------------------------------------
//
// Drawn straight from the engine's bits so the sampled values do not depend
// on the standard library's distribution implementations.

inline double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * unit(rng);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

inline double wrap_pi(double a) {
    a = std::fmod(a, 2.0 * std::numbers::pi);
    if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
    if (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    return a;
}

// --- geometry ---------------------------------------------------------------

// Parametric solution of a0 + s*(a1 - a0) == b0 + u*(b1 - b0). Empty when the
// directions are near parallel and the 2x2 system is ill-conditioned.
inline std::optional<std::pair<double, double>> segment_params(const betop::Vec2& a0,
                                                               const betop::Vec2& a1,
                                                               const betop::Vec2& b0,
                                                               const betop::Vec2& b1) {
    const double dax = a1.x - a0.x, day = a1.y - a0.y;
    const double dbx = b1.x - b0.x, dby = b1.y - b0.y;
    const double det = dbx * day - dax * dby;
    const double scale =
        std::max({std::abs(dax), std::abs(day), std::abs(dbx), std::abs(dby), 1e-30});
    if (std::abs(det) < 1e-12 * scale * scale) return std::nullopt;
    const double rx = b0.x - a0.x, ry = b0.y - a0.y;
    return std::make_pair((dbx * ry - dby * rx) / det, (dax * ry - day * rx) / det);
}

// --- lateral-difference crossing scan ----------------------------------------

// Lateral offset of each trajectory position as seen from the frame.
inline std::vector<double> lateral_in_frame(const betop::Trajectory& traj,
                                            const betop::Pose2& frame) {
    const double c = std::cos(frame.heading);
    const double s = std::sin(frame.heading);
    std::vector<double> lat(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        lat[k] = -s * (traj.states[k].x - frame.x) + c * (traj.states[k].y - frame.y);
    }
    return lat;
}

// Two same-interval curve segments intersect exactly when the lateral
// difference has a zero on the interval; the difference is linear there, so a
// sign change (or a touch of zero) at the endpoints decides it.
inline int crossing_by_sign_change(const betop::Trajectory& traj_i,
                                   const betop::Trajectory& traj_j,
                                   const betop::Pose2& frame_i) {
    const std::vector<double> li = lateral_in_frame(traj_i, frame_i);
    const std::vector<double> lj = lateral_in_frame(traj_j, frame_i);
    for (std::size_t k = 0; k + 1 < li.size(); ++k) {
        const double d0 = lj[k] - li[k];
        const double d1 = lj[k + 1] - li[k + 1];
        if (d0 == 0.0 || d1 == 0.0 || (d0 < 0.0) != (d1 < 0.0)) return 1;
    }
    return 0;
}

// First interval index whose lateral difference changes sign, or npos.
inline std::size_t first_crossing_interval(const betop::Trajectory& traj_i,
                                           const betop::Trajectory& traj_j,
                                           const betop::Pose2& frame_i) {
    const std::vector<double> li = lateral_in_frame(traj_i, frame_i);
    const std::vector<double> lj = lateral_in_frame(traj_j, frame_i);
    for (std::size_t k = 0; k + 1 < li.size(); ++k) {
        const double d0 = lj[k] - li[k];
        const double d1 = lj[k + 1] - li[k + 1];
        if (d0 == 0.0 || d1 == 0.0 || (d0 < 0.0) != (d1 < 0.0)) return k;
    }
    return static_cast<std::size_t>(-1);
}

inline betop::EdgeTopology topology_by_sign_change(const std::vector<betop::Trajectory>& futures,
                                                   const std::vector<betop::Pose2>& frames) {
    betop::EdgeTopology out = betop::EdgeTopology::zeros(futures.size());
    for (std::size_t i = 0; i < futures.size(); ++i) {
        for (std::size_t j = 0; j < futures.size(); ++j) {
            if (j == i) continue;
            out.set(i, j, crossing_by_sign_change(futures[i], futures[j], frames[i]));
        }
    }
    return out;
}

// Smallest |lateral_j - lateral_i| over every ordered pair and step: the
// scenario's distance from a tangency. Crossings with both interval endpoints
// beyond this margin are decided identically by the library's segment test
// and by the sign-change scan, so equivalence checks filter on it.
inline double crossing_margin(const std::vector<betop::Trajectory>& futures,
                              const std::vector<betop::Pose2>& frames) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < futures.size(); ++i) {
        const std::vector<double> li = lateral_in_frame(futures[i], frames[i]);
        for (std::size_t j = 0; j < futures.size(); ++j) {
            if (j == i) continue;
            const std::vector<double> lj = lateral_in_frame(futures[j], frames[i]);
            for (std::size_t k = 0; k < li.size(); ++k) {
                margin = std::min(margin, std::abs(lj[k] - li[k]));
            }
        }
    }
    return margin;
}

// --- random scenarios and rigid transforms -----------------------------------

struct ScenarioSample {
    std::vector<betop::Trajectory> futures;
    std::vector<betop::Pose2> frames;
};

// Constant-speed agents on straight lines or gentle arcs, frames anchored at
// each agent's first position and initial heading.
inline ScenarioSample random_scenario(std::mt19937_64& rng, std::size_t n_agents,
                                      std::size_t steps, double dt = 0.1) {
    ScenarioSample out;
    out.futures.reserve(n_agents);
    out.frames.reserve(n_agents);
    for (std::size_t a = 0; a < n_agents; ++a) {
        double x = uniform(rng, -25.0, 25.0);
        double y = uniform(rng, -25.0, 25.0);
        double h = uniform(rng, -std::numbers::pi, std::numbers::pi);
        const double speed = uniform(rng, 1.0, 12.0);
        const double turn = pick(rng, 2) == 0 ? 0.0 : uniform(rng, -0.04, 0.04);
        out.frames.emplace_back(x, y, h);
        betop::Trajectory traj;
        traj.dt = dt;
        traj.states.resize(steps);
        for (std::size_t k = 0; k < steps; ++k) {
            betop::TrajState& s = traj.states[k];
            s.t = static_cast<double>(k + 1) * dt;
            s.x = x;
            s.y = y;
            s.vx = speed * std::cos(h);
            s.vy = speed * std::sin(h);
            s.heading = wrap_pi(h);
            x += speed * dt * std::cos(h);
            y += speed * dt * std::sin(h);
            h += turn;
        }
        out.futures.push_back(std::move(traj));
    }
    return out;
}

// Resamples until every pair keeps the given margin from tangency.
inline ScenarioSample nondegenerate_scenario(std::mt19937_64& rng, double margin = 1e-3,
                                             std::size_t max_agents = 6) {
    for (;;) {
        const std::size_t n = 2 + pick(rng, max_agents - 1);
        const std::size_t steps = 20 + pick(rng, 21);
        ScenarioSample s = random_scenario(rng, n, steps);
        if (crossing_margin(s.futures, s.frames) >= margin) return s;
    }
}

inline betop::Trajectory rigid_transform(const betop::Trajectory& traj, double angle, double tx,
                                         double ty) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    betop::Trajectory out = traj;
    for (betop::TrajState& st : out.states) {
        const double x = st.x, y = st.y, vx = st.vx, vy = st.vy;
        st.x = c * x - s * y + tx;
        st.y = s * x + c * y + ty;
        st.vx = c * vx - s * vy;
        st.vy = s * vx + c * vy;
        st.heading = wrap_pi(st.heading + angle);
    }
    return out;
}

inline betop::Pose2 rigid_transform(const betop::Pose2& pose, double angle, double tx,
                                    double ty) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return betop::Pose2(c * pose.x - s * pose.y + tx, s * pose.x + c * pose.y + ty,
                        pose.heading + angle);
}

// --- winding -----------------------------------------------------------------

// Winding by explicit unwrap: relative-vector angles tracked with atan2 and
// folded into [-pi, pi] through remainder().
inline double winding_by_unwrap(const betop::Trajectory& traj_i, const betop::Trajectory& traj_j) {
    double total = 0.0;
    double prev = std::atan2(traj_j.states[0].y - traj_i.states[0].y,
                             traj_j.states[0].x - traj_i.states[0].x);
    for (std::size_t k = 1; k < traj_i.size(); ++k) {
        const double cur = std::atan2(traj_j.states[k].y - traj_i.states[k].y,
                                      traj_j.states[k].x - traj_i.states[k].x);
        total += std::remainder(cur - prev, 2.0 * std::numbers::pi);
        prev = cur;
    }
    return total / (2.0 * std::numbers::pi);
}

// --- joint-mode recombination --------------------------------------------------

struct ScoredCombo {
    std::vector<std::size_t> combo;
    double score{0.0};
};

// Every combination in the product grid, multiplied left-to-right like the
// library does, sorted by (score desc, combo lex asc) and cut to m_out.
inline std::vector<ScoredCombo> exhaustive_recombine(
    const std::vector<std::vector<double>>& scores, std::size_t m_out) {
    std::size_t total = 1;
    for (const auto& s : scores) total *= s.size();
    std::vector<ScoredCombo> all;
    all.reserve(total);
    std::vector<std::size_t> combo(scores.size(), 0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        for (std::size_t n = scores.size(); n-- > 0;) {
            combo[n] = rem % scores[n].size();
            rem /= scores[n].size();
        }
        double p = 1.0;
        for (std::size_t n = 0; n < scores.size(); ++n) p *= scores[n][combo[n]];
        all.push_back({combo, p});
    }
    std::sort(all.begin(), all.end(), [](const ScoredCombo& a, const ScoredCombo& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.combo < b.combo;
    });
    if (all.size() > m_out) all.resize(m_out);
    return all;
}

// --- Gaussian NLL ----------------------------------------------------------------

// Bivariate normal NLL through the covariance matrix: determinant and inverse
// formed numerically, the 2*pi constant dropped to match the library's
// convention, the score clamped at the same 1e-7 floor.
inline double nll_by_density(const std::vector<betop::GmmStep>& mode, double score,
                             const betop::Trajectory& truth) {
    double total = 0.0;
    for (std::size_t k = 0; k < mode.size(); ++k) {
        const betop::GmmStep& g = mode[k];
        const double sx = std::exp(g.log_sigma_x);
        const double sy = std::exp(g.log_sigma_y);
        const double c11 = sx * sx;
        const double c22 = sy * sy;
        const double c12 = g.rho * sx * sy;
        const double det = c11 * c22 - c12 * c12;
        const double dx = truth.states[k].x - g.mu_x;
        const double dy = truth.states[k].y - g.mu_y;
        const double quad = (c22 * dx * dx - 2.0 * c12 * dx * dy + c11 * dy * dy) / det;
        total += 0.5 * std::log(det) + 0.5 * quad;
    }
    total -= std::log(std::max(score, 1e-7));
    return total;
}

// --- planner -----------------------------------------------------------------------

inline double window_min_distance(const betop::Trajectory& window,
                                  const std::vector<betop::GmmStep>& mode, std::size_t offset) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < window.size(); ++k) {
        const double dx = window.states[k].x - mode[offset + k].mu_x;
        const double dy = window.states[k].y - mode[offset + k].mu_y;
        dmin = std::min(dmin, std::sqrt(dx * dx + dy * dy));
    }
    return dmin;
}

inline double repulsion(double d) { return 1.0 / (1.0 + d); }

inline double exhaustive_marginal_cost(const betop::Trajectory& trunk,
                                       const std::vector<betop::GmmPrediction>& marginals) {
    double worst = 0.0;
    for (const betop::GmmPrediction& m : marginals) {
        for (const auto& mode : m.modes) {
            worst = std::max(worst, repulsion(window_min_distance(trunk, mode, 0)));
        }
    }
    return worst;
}

struct PlanChoice {
    std::size_t trunk_index{0};
    std::vector<std::size_t> branch_choice;
    double total_cost{0.0};
};

// Full enumeration of the contingency selection: the AV row's top-k subset by
// its own sort, the exhaustive joint grid over that subset, then plain
// min-over-branches / max-over-agents scans with tail-aligned windows.
inline PlanChoice exhaustive_select_plan(const betop::PlanCandidateSet& candidates,
                                         const std::vector<betop::GmmPrediction>& marginals,
                                         const betop::ScoredTopology& scored,
                                         const betop::PlannerConfig& cfg) {
    std::vector<std::size_t> subset;
    for (std::size_t j = 1; j < scored.n_agents; ++j) subset.push_back(j);
    std::sort(subset.begin(), subset.end(), [&](std::size_t a, std::size_t b) {
        const double sa = scored.at(0, a);
        const double sb = scored.at(0, b);
        if (sa != sb) return sa > sb;
        return a < b;
    });
    if (subset.size() > cfg.k_m) subset.resize(cfg.k_m);

    std::vector<ScoredCombo> joints;
    if (!marginals.empty() && !subset.empty()) {
        std::vector<std::vector<double>> subset_scores;
        subset_scores.reserve(subset.size());
        for (std::size_t j : subset) subset_scores.push_back(marginals[j - 1].scores);
        joints = exhaustive_recombine(subset_scores, cfg.m_modes);
    }

    PlanChoice best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < candidates.trunks.size(); ++m) {
        double cost = exhaustive_marginal_cost(candidates.trunks[m], marginals);
        std::vector<std::size_t> choice(joints.size(), 0);
        for (std::size_t q = 0; q < joints.size(); ++q) {
            double best_branch = std::numeric_limits<double>::infinity();
            std::size_t best_index = 0;
            for (std::size_t b = 0; b < candidates.branches[m].size(); ++b) {
                const betop::Trajectory& branch = candidates.branches[m][b];
                double worst = 0.0;
                for (std::size_t n = 0; n < subset.size(); ++n) {
                    const betop::GmmPrediction& marg = marginals[subset[n] - 1];
                    const auto& mode = marg.modes[joints[q].combo[n]];
                    const std::size_t offset = marg.horizon_steps() - branch.size();
                    worst = std::max(worst, repulsion(window_min_distance(branch, mode, offset)));
                }
                if (worst < best_branch) {
                    best_branch = worst;
                    best_index = b;
                }
            }
            cost += joints[q].score * best_branch;
            choice[q] = best_index;
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

// --- rectangles ----------------------------------------------------------------------

// Dense grid over each rectangle; overlap is declared when any sampled point
// of one falls inside the other (checked through the inverse transform).
inline bool rect_overlap_by_sampling(const betop::Pose2& a, const betop::AgentShape& sa,
                                     const betop::Pose2& b, const betop::AgentShape& sb,
                                     std::size_t nu = 64, std::size_t nv = 32) {
    const auto inside = [](const betop::Pose2& p, const betop::AgentShape& s, double wx,
                           double wy) {
        const double c = std::cos(p.heading);
        const double sn = std::sin(p.heading);
        const double dx = wx - p.x;
        const double dy = wy - p.y;
        const double u = c * dx + sn * dy;
        const double v = -sn * dx + c * dy;
        return std::abs(u) <= s.length / 2.0 && std::abs(v) <= s.width / 2.0;
    };
    const auto sweep = [&](const betop::Pose2& src, const betop::AgentShape& ss,
                           const betop::Pose2& dst, const betop::AgentShape& ds) {
        const double c = std::cos(src.heading);
        const double sn = std::sin(src.heading);
        for (std::size_t iu = 0; iu < nu; ++iu) {
            const double u =
                -ss.length / 2.0 + ss.length * static_cast<double>(iu) / static_cast<double>(nu - 1);
            for (std::size_t iv = 0; iv < nv; ++iv) {
                const double v =
                    -ss.width / 2.0 + ss.width * static_cast<double>(iv) / static_cast<double>(nv - 1);
                const double wx = src.x + c * u - sn * v;
                const double wy = src.y + sn * u + c * v;
                if (inside(dst, ds, wx, wy)) return true;
            }
        }
        return false;
    };
    return sweep(a, sa, b, sb) || sweep(b, sb, a, sa);
}

// --- XML ---------------------------------------------------------------------------------

// Minimal well-formedness scan: tags balance, attribute quotes close, exactly
// one root element, no stray '<' inside tags.
inline bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    bool root_done = false;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        if (text.compare(i, 2, "<?") == 0) {
            const std::size_t end = text.find("?>", i);
            if (end == std::string::npos) return false;
            i = end + 2;
            continue;
        }
        if (text.compare(i, 4, "<!--") == 0) {
            const std::size_t end = text.find("-->", i);
            if (end == std::string::npos) return false;
            i = end + 3;
            continue;
        }
        if (i + 1 < text.size() && text[i + 1] == '/') {
            const std::size_t end = text.find('>', i);
            if (end == std::string::npos) return false;
            const std::string name = text.substr(i + 2, end - i - 2);
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
            if (stack.empty()) root_done = true;
            i = end + 1;
            continue;
        }
        std::size_t j = i + 1;
        while (j < text.size() && text[j] != ' ' && text[j] != '\t' && text[j] != '\n' &&
               text[j] != '>' && text[j] != '/') {
            ++j;
        }
        const std::string name = text.substr(i + 1, j - i - 1);
        if (name.empty()) return false;
        bool self_closing = false;
        while (j < text.size() && text[j] != '>') {
            if (text[j] == '"') {
                const std::size_t close = text.find('"', j + 1);
                if (close == std::string::npos) return false;
                j = close + 1;
                continue;
            }
            if (text[j] == '<') return false;
            self_closing = text[j] == '/';
            ++j;
        }
        if (j >= text.size()) return false;
        if (stack.empty() && root_done) return false;
        if (!self_closing) stack.push_back(name);
        else if (stack.empty()) root_done = true;
        i = j + 1;
    }
    return stack.empty() && root_done;
}

}  // namespace oracle
