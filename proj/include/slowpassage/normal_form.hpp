#pragma once

#include <functional>
#include <string>
#include <vector>

namespace sp {

struct TranscriticalCoefficients {
    double alpha = 0;        // half of f_uu at the singular point
    double beta = 0;         // half of f_umu
    double coeff_gamma = 0;  // half of f_mumu
    double delta = 0;        // f_eps
};

struct PitchforkCoefficients {
    double alpha_t = 0;  // f_umu
    double beta_t = 0;   // half of f_mumu
    double gamma_t = 0;  // half of f_uuu
    double delta_t = 0;  // f_eps
};

// coefficient * u^a mu^b eps^c
struct Monomial {
    int a = 0, b = 0, c = 0;
    double coeff = 0;
};

using RemainderPolynomial = std::vector<Monomial>;

// du/dt = u_xx + mu u - u^s + eps lambda + R(u, mu, eps), mu' = eps.
struct NormalFormModel {
    int s = 3;
    double lambda = 0;
    RemainderPolynomial remainder;

    double reaction(double u, double mu, double eps) const;  // full rhs without diffusion
    double reaction_du(double u, double mu, double eps) const;
    double remainder_value(double u, double mu, double eps) const;
};

// Weight of u^a mu^b eps^c under u ~ r, mu ~ r^{s-1}, eps ~ r^{2(s-1)}.
int blowup_weight(const Monomial& m, int s);

// True when the monomial lies in the ideal admitted for the given s.
bool in_remainder_ideal(const Monomial& m, int s);

// Throws ConditionViolation naming the first offending monomial.
void validate_model(const NormalFormModel& model);

double compute_lambda_transcritical(const TranscriticalCoefficients& c);
double compute_lambda_pitchfork(const PitchforkCoefficients& c);

struct RectifyResult {
    std::vector<double> v;
    double worst_residual = 0;
    // |v*(mu)|/mu^2 at the two smallest nonzero |mu| grid points (NaN if unavailable)
    double quadratic_ratio_first = 0, quadratic_ratio_second = 0;
    bool quadratic_ok = true;
};

// Solves f(v - kappa mu, mu) = 0 for v at each grid point by damped Newton seeded at 0.
RectifyResult rectify_branch(const std::function<double(double, double)>& f, double kappa,
                             const std::vector<double>& mu_grid);

// Derivatives of f at the singular point Q = (0,0,0).
struct TaylorData {
    double f = 0, f_u = 0, f_mu = 0;
    double f_uu = 0, f_umu = 0, f_mumu = 0;
    double f_uuu = 0;
    double f_eps = 0;
};

TaylorData taylor_from(const TranscriticalCoefficients& c);
TaylorData taylor_from(const PitchforkCoefficients& c);

enum class SingularityKind { transcritical, pitchfork };

struct ConditionCheck {
    std::string name;
    double value;
    bool pass;
};

struct ConditionReport {
    SingularityKind kind;
    std::vector<ConditionCheck> checks;
    bool all_pass() const;
};

ConditionReport validate_conditions(SingularityKind kind, const TaylorData& d);

}  // namespace sp
