#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "slowpassage/charts.hpp"
#include "slowpassage/grid.hpp"
#include "slowpassage/manifolds.hpp"
#include "slowpassage/normal_form.hpp"
#include "slowpassage/pde_solver.hpp"
#include "slowpassage/stats.hpp"

namespace sp {

enum class ProfileKind { bump, gaussian, wiggle };
enum class RunMode { direct, charts, both };

std::string to_string(ProfileKind k);
std::string to_string(RunMode m);

// Section constants; NaN selects the default derived from rho and eps_list.
struct Sections {
    double nu = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double beta = 0.1;
    double Omega = std::numeric_limits<double>::quiet_NaN();
    double varrho = std::numeric_limits<double>::quiet_NaN();
};

struct ScenarioConfig {
    NormalFormModel model{2, 1.0, {}};
    double rho = 0.4;
    double chi = 0.05;
    std::vector<double> eps_list{0.02, 0.01, 0.005, 0.0025};
    double half_width = 40.0;
    int n = 2049;
    SolverConfig solver{};   // dt = 0 selects default_dt; escape ceiling defaults to 10
    double dt_k2 = 0.0;      // K2 step in chart runs; 0 selects solver.dt / 10
    Sections sections{};
    ProfileKind profile = ProfileKind::bump;
    RunMode mode = RunMode::direct;
    std::uint64_t seed = 0;  // nonzero randomises the profile centre and width
    int jobs = 1;
    int series_order = 6;
    // pi-map verification inputs
    std::vector<double> eps1_list{0.019, 0.017, 0.015, 0.013};
    std::vector<double> r3_list{};
    double pi2_eps = 1e-4;
    std::vector<double> perturbations{1e-3, 5e-4};
    std::vector<double> omegas{1, 10, 100, 1000};
};

ScenarioConfig default_config();

// Parses TOML with sections [model], [grid], [solver], [sections], [experiment].
// Unknown or ill-typed keys raise UsageError listing the offending keys.
ScenarioConfig parse_config(const std::string& toml_text);
ScenarioConfig load_config(const std::string& path);

// Section constants with defaults filled in: nu = rho^{1/(s-1)} (the K1 entry radius),
// delta = max(eps)/rho^2, Omega = 1/sqrt(delta), varrho = delta^{1/4} nu.
Sections resolved_sections(const ScenarioConfig& cfg);

// Named profile scaled so that its Z-norm equals chi (bump: compactly supported C-infinity,
// gaussian, wiggle: mixed-sign Gaussian-modulated cosine).
GridFunction initial_profile(ProfileKind kind, double half_width, int n, double chi, std::uint64_t seed = 0);

// Attracting branch selected by s and sign(lambda) at mu > 0.
SlowBranch exit_branch(const NormalFormModel& model);

struct PassageResult {
    double eps = 0;
    GridFunction exit_profile;
    double slow_manifold_value = 0;
    double z_distance = 0;
    double sup_distance = 0;
    double spatial_variance = 0;
    double physical_T = 0;
    long steps = 0;
};

PassageResult run_direct_passage(const ScenarioConfig& cfg, double eps);

struct ItineraryRecord {
    ChartId chart = ChartId::K1;
    double chart_time = 0;
    double physical_t_start = 0, physical_t_end = 0;
    double radial_in = 0, radial_out = 0;
    double slow_in = 0, slow_out = 0;
    long steps = 0;
};

struct PipelineResult {
    PassageResult result;
    std::vector<ItineraryRecord> itinerary;
};

// K1 from Sigma_1^in to eps1 = delta, kappa_12, K2 for t2 in [0, 2 Omega], kappa_23, K3 until
// r3 = nu, then blow-down at mu = rho.
PipelineResult run_chart_pipeline(const ScenarioConfig& cfg, double eps);

// sup |a - b| after interpolating b onto a's grid when the grids differ.
double sup_difference(const GridFunction& a, const GridFunction& b);

struct PiRecord {
    double start = 0;  // eps1(0) or r3(0)
    double T_formula = 0, T_measured = 0;
    double exit_formula = 0, exit_measured = 0;  // exit radial (K1) or exit eps3 (K3)
    double exit_distance = 0;                    // sup |u - Psi(exit)|
};

struct PiReport {
    std::vector<PiRecord> records;
    double max_T_rel_error = 0;
    double max_exit_rel_error = 0;
    std::optional<LinearFit> decay_fit;  // log(exit_distance) against 1/eps1 (K1) or T3 (K3)
};

// on_manifold: start from the series value instead of the configured profile.
PiReport verify_pi1(const ScenarioConfig& cfg, const std::vector<double>& eps1_list, bool on_manifold = false);
PiReport verify_pi3(const ScenarioConfig& cfg, const std::vector<double>& r3_list, bool on_manifold = false);

struct Pi2Run {
    double size = 0;          // |E(0)|_Z
    double final_norm = 0;    // |E(2 Omega)|_Z
    double final_response = 0;  // |u(2 Omega) - u_ref(2 Omega)|_Z against the unperturbed discrete run
    double max_norm = 0;      // max over t2 of |E|_Z
    double gronwall_margin = 0;  // max over t2 of |E(t)|/|E(0)| / e^{C1 t}
    double max_variance = 0;  // spatial variance of E over the run
};

struct Pi2Report {
    double r2 = 0, Omega = 0, C1 = 0, C0 = 1;
    double zero_drift = 0;             // max |E| for E(0) = 0
    std::vector<Pi2Run> runs;          // Gaussian perturbations of the requested sizes
    double linear_response_change = 0; // max relative change of final_response/|E(0)| under halving
    bool gronwall_ok = true;
    bool tube_ok = true;
    double constant_oracle_error = 0;  // constant E(0): max |E - E_oracle|
    double constant_size = 0;
};

Pi2Report verify_pi2(const ScenarioConfig& cfg, double eps, const std::vector<double>& sizes);

struct GammaFit {
    double slope = 0, intercept = 0, r_squared = 0;
    double gamma = std::numeric_limits<double>::quiet_NaN();  // NaN unless r^2 >= 0.9
    bool in_range = false;  // (0, 1] for s = 2, (0, 2] for s = 3
    int used = 0, excluded = 0;
    std::vector<std::string> warnings;
};

enum class DistanceMetric { z, sup };

GammaFit fit_gamma(const std::vector<PassageResult>& results, double rho, int s,
                   DistanceMetric metric = DistanceMetric::z);

// True when the chosen distance does not increase as eps decreases.
bool monotone_in_eps(const std::vector<PassageResult>& results, DistanceMetric metric = DistanceMetric::z);

}  // namespace sp
