#include "slowpassage/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slowpassage/errors.hpp"

namespace sp {

namespace {
double ipow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}
}  // namespace

double NormalFormModel::remainder_value(double u, double mu, double eps) const {
    double r = 0;
    for (const auto& m : remainder) r += m.coeff * ipow(u, m.a) * ipow(mu, m.b) * ipow(eps, m.c);
    return r;
}

double NormalFormModel::reaction(double u, double mu, double eps) const {
    return mu * u - ipow(u, s) + eps * lambda + remainder_value(u, mu, eps);
}

double NormalFormModel::reaction_du(double u, double mu, double eps) const {
    double d = mu - s * ipow(u, s - 1);
    for (const auto& m : remainder)
        if (m.a > 0) d += m.coeff * m.a * ipow(u, m.a - 1) * ipow(mu, m.b) * ipow(eps, m.c);
    return d;
}

int blowup_weight(const Monomial& m, int s) { return m.a + (s - 1) * m.b + 2 * (s - 1) * m.c; }

bool in_remainder_ideal(const Monomial& m, int s) {
    // generators {u^s+1, u^2 mu, u mu^2, u eps, mu eps, eps^2}
    const int top = s + 1;
    struct G { int a, b, c; };
    const G gens[] = {{top, 0, 0}, {2, 1, 0}, {1, 2, 0}, {1, 0, 1}, {0, 1, 1}, {0, 0, 2}};
    for (const auto& g : gens)
        if (m.a >= g.a && m.b >= g.b && m.c >= g.c) return true;
    return false;
}

void validate_model(const NormalFormModel& model) {
    if (model.s != 2 && model.s != 3)
        throw ConditionViolation("s in {2,3}", "normal form exponent s must be 2 or 3");
    if (!std::isfinite(model.lambda)) throw ConditionViolation("lambda finite", "lambda must be finite");
    for (const auto& m : model.remainder) {
        if (m.a < 0 || m.b < 0 || m.c < 0)
            throw ConditionViolation("nonnegative exponents", "remainder monomial has a negative exponent");
        if (m.a > 4)
            throw ConditionViolation("u-degree <= 4", "remainder monomial exceeds u-degree 4");
        if (!in_remainder_ideal(m, model.s))
            throw ConditionViolation("remainder ideal",
                                     "remainder monomial u^" + std::to_string(m.a) + " mu^" + std::to_string(m.b) +
                                         " eps^" + std::to_string(m.c) + " is not of admissible order for s=" +
                                         std::to_string(model.s));
    }
}

double compute_lambda_transcritical(const TranscriticalCoefficients& c) {
    if (!(c.alpha > 0)) throw ConditionViolation("alpha > 0", "transcritical: alpha must be positive");
    const double d2 = c.beta * c.beta - c.alpha * c.coeff_gamma;
    if (!(d2 > 0))
        throw ConditionViolation("beta^2 - alpha*gamma > 0",
                                 "transcritical: discriminant beta^2 - alpha*gamma = " + std::to_string(d2) +
                                     " is not positive");
    const double D = std::sqrt(d2);
    return (c.alpha * c.delta + c.beta - D) / (2 * c.alpha * D);
}

double compute_lambda_pitchfork(const PitchforkCoefficients& c) {
    if (!(c.alpha_t > 0)) throw ConditionViolation("alpha_t > 0", "pitchfork: alpha_t must be positive");
    if (!(c.gamma_t < 0)) throw ConditionViolation("gamma_t < 0", "pitchfork: gamma_t must be negative");
    return (c.alpha_t * c.delta_t - c.beta_t) * std::sqrt(-c.gamma_t) / (c.alpha_t * c.alpha_t);
}

RectifyResult rectify_branch(const std::function<double(double, double)>& f, double kappa,
                             const std::vector<double>& mu_grid) {
    constexpr int max_iter = 100;
    constexpr double tol = 1e-12;
    RectifyResult out;
    out.v.resize(mu_grid.size());
    double worst_failed = 0;
    bool failed = false;
    for (std::size_t k = 0; k < mu_grid.size(); ++k) {
        const double mu = mu_grid[k];
        auto F = [&](double v) { return f(v - kappa * mu, mu); };
        double v = 0, Fv = F(v);
        int it = 0;
        while (std::abs(Fv) > tol && it < max_iter) {
            const double hv = 1e-7 * std::max(1.0, std::abs(v));
            const double dF = (F(v + hv) - F(v - hv)) / (2 * hv);
            if (dF == 0 || !std::isfinite(dF)) break;
            const double step = -Fv / dF;
            double damp = 1.0, vn = v + step, Fn = F(vn);
            while (!(std::abs(Fn) < std::abs(Fv)) && damp > 1e-6) {
                damp *= 0.5;
                vn = v + damp * step;
                Fn = F(vn);
            }
            v = vn;
            Fv = Fn;
            ++it;
        }
        out.v[k] = v;
        out.worst_residual = std::max(out.worst_residual, std::abs(Fv));
        if (!(std::abs(Fv) <= tol)) {
            failed = true;
            worst_failed = std::max(worst_failed, std::isfinite(Fv) ? std::abs(Fv) : 1e300);
        }
    }
    if (failed) throw SolverFailure("rectify_branch: Newton did not converge", worst_failed);

    // O(mu^2) behaviour at the two smallest nonzero |mu|
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < mu_grid.size(); ++k)
        if (mu_grid[k] != 0) idx.push_back(k);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t i, std::size_t j) { return std::abs(mu_grid[i]) < std::abs(mu_grid[j]); });
    if (idx.size() >= 2) {
        auto ratio = [&](std::size_t k) { return std::abs(out.v[k]) / (mu_grid[k] * mu_grid[k]); };
        out.quadratic_ratio_first = ratio(idx[0]);
        out.quadratic_ratio_second = ratio(idx[1]);
        const double a = out.quadratic_ratio_first, b = out.quadratic_ratio_second;
        out.quadratic_ok = (a <= 2 * b + 1e-6) && (b <= 2 * a + 1e-6);
    } else {
        out.quadratic_ratio_first = out.quadratic_ratio_second = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

TaylorData taylor_from(const TranscriticalCoefficients& c) {
    TaylorData d;
    d.f_uu = 2 * c.alpha;
    d.f_umu = 2 * c.beta;
    d.f_mumu = 2 * c.coeff_gamma;
    d.f_eps = c.delta;
    return d;
}

TaylorData taylor_from(const PitchforkCoefficients& c) {
    TaylorData d;
    d.f_umu = c.alpha_t;
    d.f_mumu = 2 * c.beta_t;
    d.f_uuu = 2 * c.gamma_t;
    d.f_eps = c.delta_t;
    return d;
}

bool ConditionReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.pass; });
}

ConditionReport validate_conditions(SingularityKind kind, const TaylorData& d) {
    constexpr double zero_tol = 1e-12;
    auto is_zero = [](double v) { return std::abs(v) <= zero_tol; };
    ConditionReport rep{kind, {}};
    rep.checks.push_back({"f(Q) = 0", d.f, is_zero(d.f)});
    rep.checks.push_back({"d_u f(Q) = 0", d.f_u, is_zero(d.f_u)});
    rep.checks.push_back({"d_mu f(Q) = 0", d.f_mu, is_zero(d.f_mu)});
    if (kind == SingularityKind::transcritical) {
        // det [[f_uu, f_umu], [f_umu, f_mumu]] / 4 = alpha*gamma - beta^2
        const double det = (d.f_uu * d.f_mumu - d.f_umu * d.f_umu) / 4;
        rep.checks.push_back({"det Hessian / 4 = alpha*gamma - beta^2 < 0", det, det < 0});
        rep.checks.push_back({"d_uu f(Q) != 0", d.f_uu, !is_zero(d.f_uu)});
    } else {
        rep.checks.push_back({"d_uu f(Q) = 0", d.f_uu, is_zero(d.f_uu)});
        rep.checks.push_back({"d_uuu f(Q) != 0", d.f_uuu, !is_zero(d.f_uuu)});
        rep.checks.push_back({"d_umu f(Q) != 0", d.f_umu, !is_zero(d.f_umu)});
    }
    return rep;
}

}  // namespace sp
