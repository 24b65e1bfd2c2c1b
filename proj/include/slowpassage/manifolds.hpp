#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "slowpassage/charts.hpp"
#include "slowpassage/normal_form.hpp"

namespace sp {

enum class Branch { minus, plus, single };
std::string to_string(Branch b);

// Truncated series Psi(r, e) = sum p_ij r^i e^j over i + j <= order.
struct CenterManifoldSeries {
    ChartId chart = ChartId::K1;
    Branch branch = Branch::single;
    int order = 0;
    std::map<std::pair<int, int>, double> coefficients;

    double coeff(int i, int j) const;
    double evaluate(double r, double e) const;
    std::string to_json() const;  // {"i,j": coefficient}
};

// Invariance-equation matching in K1 (reduced dynamics of spatially constant states).
CenterManifoldSeries psi1_series(const NormalFormModel& model, int order);
// Same in K3; branch plus/minus for s = 3, single for s = 2.
CenterManifoldSeries psi3_series(const NormalFormModel& model, Branch branch, int order);

// |LHS - RHS| of the invariance equation for the order-N series at (r, e), evaluated
// with 50 significant digits so that truncation, not rounding, is measured.
double series_invariance_residual(const NormalFormModel& model, ChartId chart, Branch branch, int order,
                                  double r, double e);

// Options for the implicit-midpoint integrator with step doubling.
struct StiffOptions {
    double tol = 1e-10;
    double initial_step = 1e-3;
    double min_step = 1e-14;
    double escape = 1e4;
    long max_steps = 20'000'000;
};

// y' = f(t, y) integrated from t0 to the (increasing) output times. `dfdy` is the
// Jacobian. Optional `on_accept` sees every accepted step (t, y).
std::vector<double> integrate_scalar(const std::function<double(double, double)>& f,
                                     const std::function<double(double, double)>& dfdy, double t0, double y0,
                                     const std::vector<double>& out_times, const StiffOptions& opt = {},
                                     const std::function<void(double, double)>& on_accept = {});

// Uniformly sampled function with linear interpolation between nodes.
struct SampledFunction {
    std::vector<double> x;
    std::vector<double> y;
    double operator()(double xq) const;
};

// Psi2' = mu2 Psi2 - Psi2^s + r2^{s-2} lambda + rescaled remainder, mu2' = 1.
SampledFunction psi2_flow(const NormalFormModel& model, double r2, double mu_start, double mu_end, double initial,
                          int samples = 2001, const StiffOptions& opt = {});

// Branch of attracting steady states: zero (mu < 0), plus / minus (mu > 0).
enum class SlowBranch { zero, plus, minus };
std::string branch_name(SlowBranch b, int s);

struct SlowManifoldBranch {
    int s = 3;
    SlowBranch id = SlowBranch::plus;
    double eps = 0;
    int order = -1;
    std::function<double(double)> sampler;  // mu -> phi(mu, eps)

    double operator()(double mu) const { return sampler(mu); }
    // |eps phi'(mu) - rhs(phi, mu, eps)| with phi' by central differences.
    double residual(const NormalFormModel& model, double mu) const;
};

// Slow manifold from the iteration f(phi_{k+1}, mu, eps) = eps phi_k'(mu), started at the
// steady state; each iteration adds one order in eps (order 1 is the first-order correction).
// Derivatives in mu are exact (Taylor-jet arithmetic). order < 0 iterates until the
// corrections stop decreasing, i.e. optimal truncation of the asymptotic expansion.
SlowManifoldBranch slow_manifold(const NormalFormModel& model, SlowBranch branch, double eps, int order = -1);

struct HomogeneousTrajectory {
    std::vector<double> t, mu, phi;
    double phi_at_mu(double m) const;
};

HomogeneousTrajectory integrate_homogeneous(const NormalFormModel& model, double eps, double phi0, double mu0,
                                            double mu_end, const StiffOptions& opt = {});

}  // namespace sp
