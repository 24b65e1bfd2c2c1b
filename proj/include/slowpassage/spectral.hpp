#pragma once

#include <complex>
#include <string>
#include <vector>

#include "slowpassage/grid.hpp"

namespace sp {

// d_xx + constant_shift, optionally with the two trivial rows of the (r, eps) block.
struct OperatorSpec {
    double constant_shift = -1.0;
    bool include_scalar_block = false;
};

// zeta(k) = constant_shift - k^2.
std::vector<double> dispersion(const OperatorSpec& spec, const std::vector<double>& k_values);

struct SpectrumReport {
    std::vector<double> diffusion_eigenvalues;  // ascending
    double max_diffusion_eigenvalue = 0;
    int zero_multiplicity = 0;  // eigenvalues of the full operator with |lambda| <= zero_tol
    // largest diffusion-block component among the zero-eigenvalue eigenvectors; 0 means
    // the center directions are supported on the scalar block only
    double center_diffusion_component = 0;
    bool center_on_scalar_block = true;
};

// Eigenvalues of the Neumann finite-difference operator on [-L, L] with n nodes.
SpectrumReport discrete_spectrum(const OperatorSpec& spec, double half_width, int n, double zero_tol = 1e-9);

struct ComplexGrid {
    double half_width = 0;
    int n = 0;
    std::vector<std::complex<double>> v;
};

struct ResolventSolution {
    ComplexGrid a, da, d2a;  // a and its first two derivatives
    double residual = 0;     // sup |a'' - (1 + i omega) a + b|
};

// Solves a'' - (1 + i omega) a = -b through the variation-of-constants formula with
// eta = sqrt(1 + i omega), Re eta > 0. b is taken piecewise linear between nodes and the
// exponential weights are integrated exactly per cell; b is continued by its end values
// outside [-L, L] (analytic tails). Throws QuadratureFailure when the residual exceeds
// tol * sup|b|, PreconditionError when b is not flat in the outer 10% of the domain.
ResolventSolution resolvent_apply(double omega, const GridFunction& b, double tol = 1e-6);

struct BatteryMember {
    std::string id;
    GridFunction b;
};

// {constant, gaussian, sech, sech_sin3, tent} on [-L, L] with n nodes.
std::vector<BatteryMember> default_battery(double half_width = 32.0, int n = 32769);

struct BoundRow {
    double omega = 0;
    std::string id;
    double x_ratio = 0;     // max(|a|_inf / |b|_inf, 1/|omega|)
    double zy_ratio = 0;    // |a|_Z / |b|_Y
    double appc_ratio = 0;  // |(1+x^2) a''|_inf / |(1+|x|) b'|_inf
    double residual_rel = 0;
};

struct BoundReport {
    std::vector<BoundRow> rows;
    bool x_ok = true;              // x_ratio * |omega| <= 2 everywhere
    bool residual_ok = true;       // residual_rel <= 1e-6 everywhere
    double zy_slope = 0;           // log-log slope of the battery supremum of zy_ratio vs |omega|
    double zy_scaled_sup = 0;      // sup of zy_ratio * |omega|^{1/2}
    double appc_scaled_sup = 0;    // sup of appc_ratio * |omega|^{1/2}
    std::vector<std::string> violations;  // witnesses "(omega, id): reason"
};

BoundReport verify_resolvent_bounds(const std::vector<double>& omegas, const std::vector<BatteryMember>& battery);

// bounds.csv (long format) and the omega x battery matrix of zy ratios.
void write_bounds_csv(const std::string& path, const BoundReport& report);
void write_bounds_matrix_csv(const std::string& path, const BoundReport& report);

}  // namespace sp
