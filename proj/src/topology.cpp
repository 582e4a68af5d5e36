#include "betop/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace betop {

namespace {

constexpr double kScoreClamp = 1e-7;
constexpr double kDomainTol = 1e-9;

void check_pair(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("trajectory length mismatch");
    }
    if (a.size() < 2) {
        throw std::invalid_argument("trajectory needs at least 2 states");
    }
    if (std::abs(a.dt - b.dt) > 1e-9) {
        throw std::invalid_argument("trajectory dt mismatch");
    }
}

void check_square(std::size_t n, std::size_t count, const char* what) {
    if (count != n * n) {
        throw std::invalid_argument(std::string(what) + " storage does not match n_agents");
    }
}

}  // namespace

EdgeTopology EdgeTopology::zeros(std::size_t n) {
    return EdgeTopology{n, std::vector<int>(n * n, 0)};
}

void EdgeTopology::validate() const {
    check_square(n_agents, entries.size(), "edge topology");
    for (std::size_t i = 0; i < n_agents; ++i) {
        for (std::size_t j = 0; j < n_agents; ++j) {
            const int v = at(i, j);
            if (v != 0 && v != 1) {
                throw std::invalid_argument("edge topology entries must be 0 or 1");
            }
            if (i == j && v != 0) {
                throw std::invalid_argument("edge topology diagonal must be zero");
            }
        }
    }
}

ScoredTopology ScoredTopology::zeros(std::size_t n) {
    return ScoredTopology{n, std::vector<double>(n * n, 0.0)};
}

void ScoredTopology::validate() const {
    check_square(n_agents, scores.size(), "scored topology");
    for (std::size_t i = 0; i < n_agents; ++i) {
        for (std::size_t j = 0; j < n_agents; ++j) {
            const double v = at(i, j);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw std::invalid_argument("scored topology entries must lie in [0, 1]");
            }
            if (i == j && v != 0.0) {
                throw std::invalid_argument("scored topology diagonal must be zero");
            }
        }
    }
}

ScoredTopology to_scored(const EdgeTopology& edges) {
    ScoredTopology out = ScoredTopology::zeros(edges.n_agents);
    for (std::size_t i = 0; i < edges.entries.size(); ++i) {
        out.scores[i] = static_cast<double>(edges.entries[i]);
    }
    return out;
}

int edge_intertwine(const Trajectory& traj_i, const Trajectory& traj_j, const Pose2& frame_i,
                    IntertwineStats* stats) {
    check_pair(traj_i, traj_j);
    const Trajectory li = to_local_frame(traj_i, frame_i);
    const Trajectory lj = to_local_frame(traj_j, frame_i);
    int hit = 0;
    for (std::size_t k = 0; k + 1 < li.size(); ++k) {
        // Time coordinates come from traj_i so both curves share one axis.
        const Vec2 a0{li.states[k].y, li.states[k].t};
        const Vec2 a1{li.states[k + 1].y, li.states[k + 1].t};
        const Vec2 b0{lj.states[k].y, li.states[k].t};
        const Vec2 b1{lj.states[k + 1].y, li.states[k + 1].t};
        if (stats) ++stats->interval_checks;
        if (segments_intersect(a0, a1, b0, b1)) hit = 1;
    }
    return hit;
}

EdgeTopology extract_topology(const std::vector<Trajectory>& futures,
                              const std::vector<Pose2>& frames,
                              const std::optional<std::vector<std::size_t>>& sources,
                              IntertwineStats* stats) {
    const std::size_t n = futures.size();
    if (frames.size() != n) {
        throw std::invalid_argument("frames count must match futures count");
    }
    std::vector<std::size_t> rows;
    if (sources) {
        rows = *sources;
        for (std::size_t r : rows) {
            if (r >= n) throw std::out_of_range("source row out of range");
        }
    } else {
        rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    }
    EdgeTopology out = EdgeTopology::zeros(n);
    for (std::size_t i : rows) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            out.set(i, j, edge_intertwine(futures[i], futures[j], frames[i], stats));
        }
    }
    return out;
}

double winding_number(const Trajectory& traj_i, const Trajectory& traj_j) {
    check_pair(traj_i, traj_j);
    const std::size_t n = traj_i.size();
    std::vector<Vec2> rel(n);
    for (std::size_t k = 0; k < n; ++k) {
        rel[k] = traj_j.position(k) - traj_i.position(k);
        if (rel[k].x == 0.0 && rel[k].y == 0.0) {
            throw std::invalid_argument("degenerate relative vector");
        }
    }
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        // Signed angle between consecutive relative vectors, in (-pi, pi].
        double d = std::atan2(rel[k].cross(rel[k + 1]), rel[k].dot(rel[k + 1]));
        if (d == -std::numbers::pi) d = std::numbers::pi;
        total += d;
    }
    return total / (2.0 * std::numbers::pi);
}

double transformed_winding(const Trajectory& traj_i, const Trajectory& traj_j,
                           const WindingParams& params) {
    check_pair(traj_i, traj_j);
    if (!(params.eta_i > 0.0) || !(params.eta_j > 0.0)) {
        throw std::invalid_argument("winding step lengths must be positive");
    }
    const Vec2 first = traj_i.position(1) - traj_i.position(0);
    const double axis = (first.x == 0.0 && first.y == 0.0)
                            ? traj_i.states.front().heading
                            : std::atan2(first.y, first.x);
    auto step_angle = [&](const Trajectory& traj, std::size_t k) {
        const Vec2 step = traj.position(k + 1) - traj.position(k);
        if (step.x == 0.0 && step.y == 0.0) {
            return 0.0;  // no motion, no lateral contribution
        }
        const double a = wrap_angle(std::atan2(step.y, step.x) - axis);
        if (std::abs(a) > std::numbers::pi / 2.0 + kDomainTol) {
            throw std::invalid_argument("outside monotone sine domain");
        }
        return a;
    };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < traj_i.size(); ++k) {
        const double theta_i = step_angle(traj_i, k);
        const double dtheta_ij = step_angle(traj_j, k);
        total += params.eta_j * std::sin(dtheta_ij) - params.eta_i * std::sin(theta_i);
    }
    return total;
}

std::vector<std::size_t> select_interactive(const ScoredTopology& scored, std::size_t row,
                                            std::size_t k) {
    scored.validate();
    if (row >= scored.n_agents) {
        throw std::out_of_range("row out of range");
    }
    if (k < 1) {
        throw std::invalid_argument("k must be at least 1");
    }
    std::vector<std::size_t> idx;
    idx.reserve(scored.n_agents - 1);
    for (std::size_t j = 0; j < scored.n_agents; ++j) {
        if (j != row) idx.push_back(j);
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double sa = scored.at(row, a);
        const double sb = scored.at(row, b);
        if (sa != sb) return sa > sb;
        return a < b;
    });
    idx.resize(std::min(k, idx.size()));
    return idx;
}

double topology_bce(const ScoredTopology& predicted, const EdgeTopology& truth, std::size_t row) {
    if (predicted.n_agents != truth.n_agents) {
        throw std::invalid_argument("topology dimension mismatch");
    }
    if (row >= predicted.n_agents) {
        throw std::out_of_range("row out of range");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < predicted.n_agents; ++j) {
        if (j == row) continue;
        const double p = std::clamp(predicted.at(row, j), kScoreClamp, 1.0 - kScoreClamp);
        const double e = static_cast<double>(truth.at(row, j));
        total += -(e * std::log(p) + (1.0 - e) * std::log(1.0 - p));
    }
    return total;
}

namespace {

LabelSimilarity similarity_impl(const ScoredTopology& predicted,
                                const std::vector<std::pair<std::size_t, std::size_t>>& reference_pairs) {
    const std::size_t n = predicted.n_agents;
    if (n < 2) {
        throw std::invalid_argument("pair universe is empty");
    }
    EdgeTopology truth = EdgeTopology::zeros(n);
    for (const auto& [i, j] : reference_pairs) {
        if (i >= n || j >= n || i == j) {
            throw std::invalid_argument("reference pair out of range");
        }
        truth.set(i, j, 1);
    }
    struct Item {
        double score;
        int label;
    };
    std::vector<Item> items;
    items.reserve(n * (n - 1));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double s = predicted.at(i, j);
            const int label = truth.at(i, j);
            items.push_back({s, label});
            if ((s > 0.5 ? 1 : 0) == label) ++correct;
        }
    }
    LabelSimilarity out;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(items.size());

    // Mann-Whitney AUC with mid-ranks for tied scores.
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    std::size_t k = 0;
    while (k < items.size()) {
        std::size_t e = k;
        while (e < items.size() && items[e].score == items[k].score) ++e;
        const double mid_rank = 0.5 * (static_cast<double>(k + 1) + static_cast<double>(e));
        for (std::size_t q = k; q < e; ++q) {
            if (items[q].label == 1) {
                pos_rank_sum += mid_rank;
                ++n_pos;
            }
        }
        k = e;
    }
    const std::size_t n_neg = items.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        out.auc = 0.5;  // no ranking information either way
    } else {
        out.auc = (pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
                  (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    }
    return out;
}

}  // namespace

LabelSimilarity label_similarity(const ScoredTopology& predicted,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& reference_pairs) {
    return similarity_impl(predicted, reference_pairs);
}

LabelSimilarity label_similarity(const EdgeTopology& predicted,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& reference_pairs) {
    return similarity_impl(to_scored(predicted), reference_pairs);
}

ScoredTopology gt_topk_baseline(const std::vector<Trajectory>& futures, std::size_t k) {
    const std::size_t n = futures.size();
    if (k < 1) {
        throw std::invalid_argument("k must be at least 1");
    }
    ScoredTopology out = ScoredTopology::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const std::size_t len = std::min(futures[i].size(), futures[j].size());
            double dmin = std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < len; ++t) {
                dmin = std::min(dmin, (futures[i].position(t) - futures[j].position(t)).norm());
            }
            dist.emplace_back(dmin, j);
        }
        std::sort(dist.begin(), dist.end());
        for (std::size_t q = 0; q < std::min(k, dist.size()); ++q) {
            out.set(i, dist[q].second, 1.0);
        }
    }
    return out;
}

}  // namespace betop
