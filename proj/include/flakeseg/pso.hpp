// Particle swarm optimizer over box-bounded real vectors. Velocity
// updates blend inertia with attraction toward each agent's personal best
// and the swarm's global best; inertia decays linearly across iterations.
// Used to tune the enhancement parameter alpha and the loss adjustment
// factor beta.
//
// Determinism contract: every agent draws from its own RNG stream derived
// from (seed, run, agent), and the position update is synchronous (all
// agents move against the previous iteration's global best), so results
// are bit-identical regardless of how objective evaluations are
// scheduled.
#pragma once

#include "flakeseg/common.hpp"

#include <array>
#include <functional>
#include <vector>

namespace flakeseg {

using Objective = std::function<double(const std::vector<double>&)>;

struct SwarmConfig {
    int n_agents = 20;
    int n_iters = 30;
    int n_runs = 5;
    std::vector<std::array<double, 2>> bounds; // per-dimension [lo, hi]
    double c1 = 2.0;            // cognitive acceleration
    double c2 = 2.0;            // social acceleration
    double omega_max = 0.9;     // inertia at the first iteration
    double omega_min = 0.4;     // inertia at the last iteration
    std::uint64_t seed = 0;
    bool maximize = true;       // false: minimize the objective
    int jobs = 1;               // parallel objective evaluations per iteration
};

/// One in-progress run. Values are kept in maximize orientation
/// internally; `optimize` handles the minimize switch at the boundary.
struct SwarmState {
    std::vector<std::vector<double>> positions;
    std::vector<std::vector<double>> velocities;
    std::vector<std::vector<double>> pbest_positions;
    std::vector<double> pbest_values;
    std::vector<double> gbest_position;
    double gbest_value = 0.0;
    std::vector<Rng> agent_rngs;
};

struct SwarmResult {
    std::vector<double> best_position;
    double best_value = 0.0;   // objective value in the caller's orientation
    int best_run = 0;
    // Per run: best-so-far objective value after initialization (entry 0)
    // and after each iteration (entries 1..n_iters), caller's orientation.
    std::vector<std::vector<double>> run_histories;
    std::vector<std::vector<double>> run_best_positions;
    std::vector<double> run_best_values;
};

/// Linearly decaying inertia: iter = 1 gives omega_max, iter = itermax
/// gives omega_min; a single-iteration schedule collapses to omega_min.
/// `iter` is 1-based.
double inertia_weight(int iter, int itermax, double omega_max, double omega_min);

/// Creates agents for one run: positions uniform over the bounds (drawn
/// from each agent's own stream), velocities zero, bests taken from the
/// initial evaluations. Non-finite objective values are treated as worst
/// possible.
SwarmState init_swarm(const SwarmConfig& cfg, int run, const Objective& objective);

/// One synchronous update with the given inertia: all velocities and
/// positions move against the current gbest, positions clamp to the
/// bounds (zeroing the clamped velocity component), then bests update.
void swarm_step(SwarmState& state, const SwarmConfig& cfg, double omega,
                const Objective& objective);

/// Runs n_runs independent swarms and returns the best result across
/// them. Ties keep the earlier run.
SwarmResult optimize(const Objective& objective, const SwarmConfig& cfg);

} // namespace flakeseg
