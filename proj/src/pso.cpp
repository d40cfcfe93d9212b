#include "flakeseg/pso.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace flakeseg {

namespace {

void check_config(const SwarmConfig& cfg) {
    if (cfg.n_agents < 2) throw Error("swarm needs at least 2 agents");
    if (cfg.n_iters < 1) throw Error("swarm needs at least 1 iteration");
    if (cfg.n_runs < 1) throw Error("swarm needs at least 1 run");
    if (cfg.bounds.empty()) throw Error("swarm bounds are empty");
    for (const auto& b : cfg.bounds)
        if (!(b[0] < b[1]))
            throw Error("invalid bound [" + std::to_string(b[0]) + ", " + std::to_string(b[1]) + "]");
    if (cfg.c1 < 0.0 || cfg.c2 < 0.0) throw Error("acceleration coefficients must be non-negative");
    if (cfg.omega_min > cfg.omega_max) throw Error("omega_min must not exceed omega_max");
}

constexpr double kWorst = -std::numeric_limits<double>::infinity();

// Evaluates the objective in maximize orientation, demoting non-finite
// results to the worst possible value so a failed evaluation can never
// become a best.
double evaluate(const Objective& objective, const std::vector<double>& position, bool maximize) {
    double v = objective(position);
    if (!std::isfinite(v)) return kWorst;
    return maximize ? v : -v;
}

// Objective evaluation for a whole swarm, optionally in parallel. The
// result vector is indexed by agent, so scheduling cannot affect values.
std::vector<double> evaluate_all(const Objective& objective,
                                 const std::vector<std::vector<double>>& positions, bool maximize,
                                 int jobs) {
    std::vector<double> values(positions.size());
    parallel_for(positions.size(), jobs,
                 [&](std::size_t i) { values[i] = evaluate(objective, positions[i], maximize); });
    return values;
}

} // namespace

double inertia_weight(int iter, int itermax, double omega_max, double omega_min) {
    if (itermax < 1) throw Error("itermax must be at least 1");
    if (iter < 1 || iter > itermax)
        throw Error("iteration " + std::to_string(iter) + " outside 1.." + std::to_string(itermax));
    if (itermax == 1) return omega_min;
    return (static_cast<double>(itermax - iter) / (itermax - 1)) * (omega_max - omega_min) +
           omega_min;
}

SwarmState init_swarm(const SwarmConfig& cfg, int run, const Objective& objective) {
    check_config(cfg);
    const std::size_t dims = cfg.bounds.size();

    SwarmState state;
    state.agent_rngs.reserve(cfg.n_agents);
    state.positions.resize(cfg.n_agents, std::vector<double>(dims));
    state.velocities.resize(cfg.n_agents, std::vector<double>(dims, 0.0));
    for (int a = 0; a < cfg.n_agents; ++a) {
        state.agent_rngs.emplace_back(
            mix_seed(cfg.seed, {static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(a)}));
        for (std::size_t d = 0; d < dims; ++d)
            state.positions[a][d] = state.agent_rngs[a].uniform(cfg.bounds[d][0], cfg.bounds[d][1]);
    }

    state.pbest_positions = state.positions;
    state.pbest_values = evaluate_all(objective, state.positions, cfg.maximize, cfg.jobs);
    state.gbest_value = kWorst;
    state.gbest_position = state.positions[0];
    for (int a = 0; a < cfg.n_agents; ++a) {
        if (state.pbest_values[a] > state.gbest_value) {
            state.gbest_value = state.pbest_values[a];
            state.gbest_position = state.pbest_positions[a];
        }
    }
    return state;
}

void swarm_step(SwarmState& state, const SwarmConfig& cfg, double omega,
                const Objective& objective) {
    const std::size_t dims = cfg.bounds.size();

    // Move every agent against the previous iteration's bests.
    for (std::size_t a = 0; a < state.positions.size(); ++a) {
        Rng& rng = state.agent_rngs[a];
        for (std::size_t d = 0; d < dims; ++d) {
            const double r1 = rng.uniform();
            const double r2 = rng.uniform();
            double v = omega * state.velocities[a][d] +
                       cfg.c1 * r1 * (state.pbest_positions[a][d] - state.positions[a][d]) +
                       cfg.c2 * r2 * (state.gbest_position[d] - state.positions[a][d]);
            double x = state.positions[a][d] + v;
            if (x < cfg.bounds[d][0]) {
                x = cfg.bounds[d][0];
                v = 0.0;
            } else if (x > cfg.bounds[d][1]) {
                x = cfg.bounds[d][1];
                v = 0.0;
            }
            state.velocities[a][d] = v;
            state.positions[a][d] = x;
        }
    }

    const std::vector<double> values =
        evaluate_all(objective, state.positions, cfg.maximize, cfg.jobs);
    for (std::size_t a = 0; a < state.positions.size(); ++a) {
        if (values[a] > state.pbest_values[a]) {
            state.pbest_values[a] = values[a];
            state.pbest_positions[a] = state.positions[a];
        }
        if (values[a] > state.gbest_value) {
            state.gbest_value = values[a];
            state.gbest_position = state.positions[a];
        }
    }
}

SwarmResult optimize(const Objective& objective, const SwarmConfig& cfg) {
    check_config(cfg);
    const double sign = cfg.maximize ? 1.0 : -1.0;

    SwarmResult result;
    result.run_histories.resize(cfg.n_runs);
    result.run_best_positions.resize(cfg.n_runs);
    result.run_best_values.resize(cfg.n_runs);

    double best_internal = kWorst;
    for (int run = 0; run < cfg.n_runs; ++run) {
        SwarmState state = init_swarm(cfg, run, objective);
        auto& history = result.run_histories[run];
        history.reserve(static_cast<std::size_t>(cfg.n_iters) + 1);
        history.push_back(sign * state.gbest_value);
        for (int iter = 1; iter <= cfg.n_iters; ++iter) {
            const double omega = inertia_weight(iter, cfg.n_iters, cfg.omega_max, cfg.omega_min);
            swarm_step(state, cfg, omega, objective);
            history.push_back(sign * state.gbest_value);
        }
        result.run_best_positions[run] = state.gbest_position;
        result.run_best_values[run] = sign * state.gbest_value;
        if (state.gbest_value > best_internal) {
            best_internal = state.gbest_value;
            result.best_position = state.gbest_position;
            result.best_value = sign * state.gbest_value;
            result.best_run = run;
        }
    }
    return result;
}

} // namespace flakeseg
