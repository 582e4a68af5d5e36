#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "betop/prediction.hpp"
#include "oracles.hpp"

using namespace betop;

namespace {

Trajectory truth_line(double x0, double y0, double step_x, double step_y, std::size_t steps) {
    Trajectory traj;
    traj.dt = 0.1;
    traj.states.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        traj.states[k].t = 0.1 * static_cast<double>(k + 1);
        traj.states[k].x = x0 + step_x * static_cast<double>(k);
        traj.states[k].y = y0 + step_y * static_cast<double>(k);
    }
    return traj;
}

std::vector<GmmStep> mode_on(const Trajectory& truth) {
    std::vector<GmmStep> mode(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        mode[k].mu_x = truth.states[k].x;
        mode[k].mu_y = truth.states[k].y;
    }
    return mode;
}

std::vector<GmmStep> random_mode(std::mt19937_64& rng, std::size_t steps) {
    std::vector<GmmStep> mode(steps);
    for (GmmStep& g : mode) {
        g.mu_x = oracle::uniform(rng, -20.0, 20.0);
        g.mu_y = oracle::uniform(rng, -20.0, 20.0);
        g.log_sigma_x = oracle::uniform(rng, -0.7, 0.7);
        g.log_sigma_y = oracle::uniform(rng, -0.7, 0.7);
        g.rho = oracle::uniform(rng, -0.8, 0.8);
    }
    return mode;
}

GmmPrediction random_prediction(std::mt19937_64& rng, std::size_t n_modes, std::size_t steps) {
    GmmPrediction pred;
    pred.modes.reserve(n_modes);
    double sum = 0.0;
    for (std::size_t m = 0; m < n_modes; ++m) {
        pred.modes.push_back(random_mode(rng, steps));
        pred.scores.push_back(0.05 + oracle::unit(rng));
        sum += pred.scores.back();
    }
    for (double& s : pred.scores) s /= sum;
    return pred;
}

}  // namespace

TEST_CASE("gmm_nll pinned values") {
    SUBCASE("perfect unit-variance fit is exactly zero") {
        const Trajectory truth = truth_line(3.0, -2.0, 0.8, 0.1, 12);
        CHECK(gmm_nll(mode_on(truth), 1.0, truth) == 0.0);
    }
    SUBCASE("single step one meter off in x is one half") {
        Trajectory truth;
        truth.dt = 0.1;
        truth.states.resize(1);
        truth.states[0].t = 0.1;
        truth.states[0].x = 1.0;
        truth.states[0].y = 0.0;
        const std::vector<GmmStep> mode(1);  // zero mean, unit sigma, no correlation
        CHECK(gmm_nll(mode, 1.0, truth) == 0.5);
    }
    SUBCASE("the mode score enters once") {
        const Trajectory truth = truth_line(0.0, 0.0, 1.0, 0.0, 4);
        const double nll = gmm_nll(mode_on(truth), 0.25, truth);
        CHECK(nll == doctest::Approx(-std::log(0.25)).epsilon(1e-12));
    }
    SUBCASE("scores are clamped at the 1e-7 floor") {
        const Trajectory truth = truth_line(0.0, 0.0, 1.0, 0.0, 4);
        const double nll = gmm_nll(mode_on(truth), 1e-12, truth);
        CHECK(nll == doctest::Approx(-std::log(1e-7)).epsilon(1e-12));
    }
    SUBCASE("nonpositive scores are rejected") {
        const Trajectory truth = truth_line(0.0, 0.0, 1.0, 0.0, 4);
        CHECK_THROWS_AS(gmm_nll(mode_on(truth), 0.0, truth), std::invalid_argument);
    }
    SUBCASE("length mismatch is rejected") {
        const Trajectory truth = truth_line(0.0, 0.0, 1.0, 0.0, 4);
        CHECK_THROWS_AS(gmm_nll(std::vector<GmmStep>(3), 1.0, truth), std::invalid_argument);
    }
}

TEST_CASE("gmm_nll matches the density oracle") {
    std::mt19937_64 rng(61);
    for (int n = 0; n < 200; ++n) {
        const std::size_t steps = 1 + oracle::pick(rng, 80);
        const std::vector<GmmStep> mode = random_mode(rng, steps);
        Trajectory truth = truth_line(0.0, 0.0, 0.0, 0.0, steps);
        for (TrajState& s : truth.states) {
            s.x = oracle::uniform(rng, -20.0, 20.0);
            s.y = oracle::uniform(rng, -20.0, 20.0);
        }
        const double score = 0.01 + 0.99 * oracle::unit(rng);
        const double got = gmm_nll(mode, score, truth);
        const double expected = oracle::nll_by_density(mode, score, truth);
        CHECK(got == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("gmm_nll is minimized when means sit on the truth") {
    std::mt19937_64 rng(67);
    for (int n = 0; n < 50; ++n) {
        const std::size_t steps = 2 + oracle::pick(rng, 10);
        Trajectory truth = truth_line(0.0, 0.0, 0.5, 0.2, steps);
        std::vector<GmmStep> mode = mode_on(truth);
        for (GmmStep& g : mode) {
            g.log_sigma_x = oracle::uniform(rng, -0.5, 0.5);
            g.log_sigma_y = oracle::uniform(rng, -0.5, 0.5);
            g.rho = oracle::uniform(rng, -0.7, 0.7);
        }
        const double at_truth = gmm_nll(mode, 1.0, truth);
        std::vector<GmmStep> shifted = mode;
        const std::size_t k = oracle::pick(rng, steps);
        const double eps = oracle::uniform(rng, 0.05, 0.3) * (oracle::pick(rng, 2) ? 1.0 : -1.0);
        if (oracle::pick(rng, 2)) {
            shifted[k].mu_x += eps;
        } else {
            shifted[k].mu_y += eps;
        }
        CHECK(gmm_nll(shifted, 1.0, truth) > at_truth);
    }
}

TEST_CASE("select_mode_wta picks the smallest mean displacement") {
    const Trajectory truth = truth_line(0.0, 0.0, 1.0, 0.0, 10);

    SUBCASE("exact mode wins") {
        std::mt19937_64 rng(71);
        GmmPrediction pred;
        pred.modes = {random_mode(rng, 10), mode_on(truth)};
        pred.scores = {0.5, 0.5};
        CHECK(select_mode_wta(pred, truth) == 1);
    }
    SUBCASE("ties break to the lower index") {
        GmmPrediction pred;
        pred.modes = {mode_on(truth), mode_on(truth)};
        pred.scores = {0.3, 0.7};
        CHECK(select_mode_wta(pred, truth) == 0);
    }
    SUBCASE("random instances match the exhaustive scan") {
        std::mt19937_64 rng(73);
        for (int n = 0; n < 50; ++n) {
            const std::size_t steps = 5 + oracle::pick(rng, 20);
            const GmmPrediction pred = random_prediction(rng, 6, steps);
            Trajectory t = truth_line(0.0, 0.0, 0.0, 0.0, steps);
            for (TrajState& s : t.states) {
                s.x = oracle::uniform(rng, -20.0, 20.0);
                s.y = oracle::uniform(rng, -20.0, 20.0);
            }
            std::size_t best = 0;
            double best_ade = std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < pred.n_modes(); ++m) {
                double acc = 0.0;
                for (std::size_t k = 0; k < steps; ++k) {
                    const double dx = t.states[k].x - pred.modes[m][k].mu_x;
                    const double dy = t.states[k].y - pred.modes[m][k].mu_y;
                    acc += std::sqrt(dx * dx + dy * dy);
                }
                if (acc / static_cast<double>(steps) < best_ade) {
                    best_ade = acc / static_cast<double>(steps);
                    best = m;
                }
            }
            CHECK(select_mode_wta(pred, t) == best);
        }
    }
    SUBCASE("rigid transforms do not change the winner") {
        std::mt19937_64 rng(79);
        for (int n = 0; n < 20; ++n) {
            const std::size_t steps = 8;
            GmmPrediction pred = random_prediction(rng, 4, steps);
            Trajectory t = truth_line(0.0, 0.0, 0.4, -0.2, steps);
            const std::size_t before = select_mode_wta(pred, t);

            const double angle = oracle::uniform(rng, -std::numbers::pi, std::numbers::pi);
            const double tx = oracle::uniform(rng, -50.0, 50.0);
            const double ty = oracle::uniform(rng, -50.0, 50.0);
            const double c = std::cos(angle), s = std::sin(angle);
            for (auto& mode : pred.modes) {
                for (GmmStep& g : mode) {
                    const double x = g.mu_x, y = g.mu_y;
                    g.mu_x = c * x - s * y + tx;
                    g.mu_y = s * x + c * y + ty;
                }
            }
            t = oracle::rigid_transform(t, angle, tx, ty);
            CHECK(select_mode_wta(pred, t) == before);
        }
    }
    SUBCASE("length mismatch is rejected") {
        GmmPrediction pred;
        pred.modes = {mode_on(truth)};
        pred.scores = {1.0};
        CHECK_THROWS_AS(select_mode_wta(pred, truth_line(0, 0, 1, 0, 5)), std::invalid_argument);
    }
}

TEST_CASE("recombine_joint pinned examples") {
    auto prediction_with_scores = [](std::vector<double> scores) {
        GmmPrediction pred;
        pred.scores = std::move(scores);
        pred.modes.assign(pred.scores.size(), std::vector<GmmStep>(2));
        return pred;
    };

    SUBCASE("single marginal degenerates to its own top modes") {
        const GmmPrediction pred = prediction_with_scores({0.2, 0.5, 0.3});
        const JointPrediction joint = recombine_joint({pred}, 2);
        REQUIRE(joint.combos.size() == 2);
        CHECK(joint.combos[0] == std::vector<std::size_t>{1});
        CHECK(joint.combos[1] == std::vector<std::size_t>{2});
        CHECK(joint.joint_scores[0] == 0.5);
        CHECK(joint.joint_scores[1] == 0.3);
    }
    SUBCASE("exact ties resolve lexicographically") {
        const GmmPrediction p1 = prediction_with_scores({0.5, 0.5});
        const GmmPrediction p2 = prediction_with_scores({0.6, 0.4});
        const JointPrediction joint = recombine_joint({p1, p2}, 1);
        REQUIRE(joint.combos.size() == 1);
        CHECK(joint.combos[0] == std::vector<std::size_t>{0, 0});
        CHECK(joint.joint_scores[0] == doctest::Approx(0.3).epsilon(1e-15));
    }
    SUBCASE("empty input is rejected") {
        CHECK_THROWS_AS(recombine_joint({}, 1), std::invalid_argument);
        CHECK_THROWS_AS(recombine_joint({prediction_with_scores({1.0})}, 0),
                        std::invalid_argument);
    }
}

TEST_CASE("recombine_joint equals the exhaustive grid") {
    std::mt19937_64 rng(83);
    for (int n = 0; n < 100; ++n) {
        const std::size_t agents = 1 + oracle::pick(rng, 4);
        std::vector<GmmPrediction> marginals;
        std::vector<std::vector<double>> raw;
        for (std::size_t a = 0; a < agents; ++a) {
            GmmPrediction pred;
            const std::size_t m = 2 + oracle::pick(rng, 5);
            double sum = 0.0;
            for (std::size_t q = 0; q < m; ++q) {
                pred.scores.push_back(0.05 + oracle::unit(rng));
                sum += pred.scores.back();
            }
            for (double& s : pred.scores) s /= sum;
            pred.modes.assign(m, std::vector<GmmStep>(2));
            raw.push_back(pred.scores);
            marginals.push_back(std::move(pred));
        }
        const std::size_t m_out = 1 + oracle::pick(rng, 8);

        RecombineStats stats;
        const JointPrediction got = recombine_joint(marginals, m_out, &stats);
        const std::vector<oracle::ScoredCombo> expected = oracle::exhaustive_recombine(raw, m_out);

        REQUIRE(got.combos.size() == expected.size());
        double sum = 0.0;
        for (std::size_t q = 0; q < expected.size(); ++q) {
            CHECK(got.combos[q] == expected[q].combo);
            CHECK(got.joint_scores[q] == expected[q].score);
            if (q > 0) CHECK(got.joint_scores[q] <= got.joint_scores[q - 1]);
            double product = 1.0;
            for (std::size_t a = 0; a < agents; ++a) {
                product *= marginals[a].scores[got.combos[q][a]];
            }
            CHECK(got.joint_scores[q] == doctest::Approx(product).epsilon(1e-9));
            sum += got.joint_scores[q];
        }
        CHECK(sum <= 1.0 + 1e-9);

        // Staged broadcasting touches at most agents * modes * m_out products.
        std::size_t max_modes = 0;
        for (const auto& m : marginals) max_modes = std::max(max_modes, m.n_modes());
        CHECK(stats.products <= static_cast<std::uint64_t>(agents * max_modes * m_out));
    }
}

TEST_CASE("interactive_subset_for_av reads row zero") {
    ScoredTopology scored = ScoredTopology::zeros(4);
    scored.set(0, 1, 0.2);
    scored.set(0, 2, 0.9);
    scored.set(0, 3, 0.1);
    CHECK(interactive_subset_for_av(scored, 2) == std::vector<std::size_t>{2, 1});
    CHECK(interactive_subset_for_av(scored) == std::vector<std::size_t>{2, 1, 3});

    ScoredTopology even = ScoredTopology::zeros(5);
    for (std::size_t j = 1; j < 5; ++j) even.set(0, j, 0.5);
    CHECK(interactive_subset_for_av(even, 3) == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("mode_mean lays the mode out as a trajectory") {
    GmmPrediction pred;
    pred.scores = {1.0};
    pred.modes.resize(1);
    for (int k = 0; k < 5; ++k) {
        GmmStep g;
        g.mu_x = 2.0 * k;
        g.mu_y = 1.0;
        pred.modes[0].push_back(g);
    }
    const Trajectory traj = mode_mean(pred, 0, 0.1);
    REQUIRE(traj.size() == 5);
    CHECK(traj.states[0].t == doctest::Approx(0.1));
    CHECK(traj.states[4].t == doctest::Approx(0.5));
    CHECK(traj.states[2].x == doctest::Approx(4.0));
    CHECK(traj.states[2].vx == doctest::Approx(20.0));
    CHECK(traj.states[0].vx == doctest::Approx(20.0));  // copied from the first step
    CHECK(traj.states[1].heading == doctest::Approx(0.0));
    CHECK_NOTHROW(traj.validate());

    CHECK_THROWS_AS(mode_mean(pred, 7, 0.1), std::out_of_range);
    CHECK_THROWS_AS(mode_mean(pred, 0, 0.0), std::invalid_argument);
}

TEST_CASE("GmmPrediction validate rejects malformed mixtures") {
    GmmPrediction good;
    good.modes = {std::vector<GmmStep>(3), std::vector<GmmStep>(3)};
    good.scores = {0.6, 0.4};
    CHECK_NOTHROW(good.validate());

    GmmPrediction bad_sum = good;
    bad_sum.scores = {0.6, 0.6};
    CHECK_THROWS_AS(bad_sum.validate(), std::invalid_argument);

    GmmPrediction negative = good;
    negative.scores = {1.4, -0.4};
    CHECK_THROWS_AS(negative.validate(), std::invalid_argument);

    GmmPrediction ragged = good;
    ragged.modes[1].resize(2);
    CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);

    GmmPrediction singular = good;
    singular.modes[0][1].rho = 1.0;
    CHECK_THROWS_AS(singular.validate(), std::invalid_argument);

    GmmPrediction empty;
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}
