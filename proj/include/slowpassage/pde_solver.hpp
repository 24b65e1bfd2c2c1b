#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "slowpassage/errors.hpp"
#include "slowpassage/grid.hpp"

namespace sp {

// Two scalar unknowns evolving alongside the profile: (mu, eps), (r1, eps1), (r2, mu2) or (r3, eps3).
using ScalarBlock = std::array<double, 2>;
using ScalarFn = std::function<double(const ScalarBlock&, double)>;

// u_t = u_xx + lin*u + sum_a c_a u^a + source + transport * x * u_x, scalars' = drift.
struct EvolutionSpec {
    ScalarFn linear_coeff;
    std::function<std::array<double, 5>(const ScalarBlock&, double)> reaction;
    ScalarFn source;
    ScalarFn transport_coeff;
    std::function<ScalarBlock(const ScalarBlock&, double)> scalar_drift;
    // Exact flow of the drift over [t, t+dt]; when set it replaces the Runge-Kutta
    // update of the scalar block so stage coefficients see exact scalar values.
    std::function<ScalarBlock(const ScalarBlock&, double, double)> scalar_flow;

    // Right-hand side (without diffusion and transport) for a spatially constant value.
    double local_rhs(double u, const ScalarBlock& s, double t) const;
};

enum class TransportScheme { upwind_first, central_second };

struct SolverConfig {
    double dt = 0.0;  // 0 selects default_dt
    double cfl_guard = 1.0;
    TransportScheme transport = TransportScheme::upwind_first;
    long max_steps = 50'000'000;
    double event_tol = 1e-11;
    double escape_ceiling = std::numeric_limits<double>::infinity();
};

struct SolverState {
    GridFunction u;
    ScalarBlock scalars{0.0, 0.0};
    double t = 0.0;
};

struct TimeoutError : Error {
    SolverState last;
    TimeoutError(const std::string& msg, SolverState s) : Error(msg), last(std::move(s)) {}
};

// min(4 h^2, CFL limit) / 2 for a given bound on |transport coefficient|.
double default_dt(const GridFunction& grid, double max_transport, double cfl_guard = 1.0);

// One Strang step: half Crank-Nicolson diffusion, Heun (SSP RK2) for
// reaction + source + transport + scalar drift, half diffusion.
SolverState step(const SolverState& state, const EvolutionSpec& spec, const SolverConfig& cfg);
SolverState step(const SolverState& state, const EvolutionSpec& spec, const SolverConfig& cfg, double dt);

struct Trajectory {
    std::vector<SolverState> samples;  // includes the initial and the final state
    long steps = 0;
    bool stopped = false;  // stop predicate reached
};

using StopPredicate = std::function<bool(const SolverState&)>;
using StepObserver = std::function<void(const SolverState&)>;

// Steps until `stop` holds; the crossing inside the final step is located by
// bisection on the step fraction to min(dt^2, cfg.event_tol).
Trajectory run_until(const SolverState& state, const EvolutionSpec& spec, const SolverConfig& cfg,
                     const StopPredicate& stop, int sample_every, const StepObserver& observer = {});

// Runs to the fixed time t_end, adjusting the step so that t_end is hit exactly.
SolverState run_to_time(const SolverState& state, const EvolutionSpec& spec, const SolverConfig& cfg,
                        double t_end, const StepObserver& observer = {});

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::vector<std::string>& scalar_names);

}  // namespace sp
