#include "slowpassage/manifolds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "slowpassage/errors.hpp"

namespace sp {

std::string to_string(Branch b) {
    switch (b) {
        case Branch::minus: return "minus";
        case Branch::plus: return "plus";
        case Branch::single: return "single";
    }
    return "?";
}

double CenterManifoldSeries::coeff(int i, int j) const {
    auto it = coefficients.find({i, j});
    return it == coefficients.end() ? 0.0 : it->second;
}

double CenterManifoldSeries::evaluate(double r, double e) const {
    double v = 0;
    for (const auto& [ij, c] : coefficients) v += c * std::pow(r, ij.first) * std::pow(e, ij.second);
    return v;
}

std::string CenterManifoldSeries::to_json() const {
    std::ostringstream os;
    os << std::setprecision(17) << "{";
    bool first = true;
    for (const auto& [ij, c] : coefficients) {
        if (!first) os << ", ";
        first = false;
        os << "\"" << ij.first << "," << ij.second << "\": " << c;
    }
    os << "}";
    return os.str();
}

namespace {

// Dense bivariate polynomial in (r, e) truncated at total degree D.
template <class Real>
struct Poly {
    int D = 0;
    std::vector<Real> c;
    explicit Poly(int d = 0) : D(d), c(static_cast<std::size_t>((d + 1) * (d + 1)), Real(0)) {}
    Real& at(int i, int j) { return c[static_cast<std::size_t>(i * (D + 1) + j)]; }
    const Real& at(int i, int j) const { return c[static_cast<std::size_t>(i * (D + 1) + j)]; }
};

template <class Real>
Poly<Real> add(const Poly<Real>& a, const Poly<Real>& b) {
    Poly<Real> r(a.D);
    for (std::size_t k = 0; k < r.c.size(); ++k) r.c[k] = a.c[k] + b.c[k];
    return r;
}

template <class Real>
Poly<Real> mul(const Poly<Real>& a, const Poly<Real>& b) {
    const int D = a.D;
    Poly<Real> r(D);
    for (int i1 = 0; i1 <= D; ++i1)
        for (int j1 = 0; i1 + j1 <= D; ++j1) {
            const Real& x = a.at(i1, j1);
            if (x == 0) continue;
            for (int i2 = 0; i1 + i2 + j1 <= D; ++i2)
                for (int j2 = 0; i1 + i2 + j1 + j2 <= D; ++j2) r.at(i1 + i2, j1 + j2) += x * b.at(i2, j2);
        }
    return r;
}

// Reduced dynamics of spatially constant states in K1 / K3:
// (r, e)' = (ar r e, ae e^2), Psi' = lin Psi + sum_a c_a Psi^a + src.
template <class Real>
struct ChartPolys {
    Poly<Real> lin;
    std::array<Poly<Real>, 5> c;
    Poly<Real> src;
    Real ar, ae;
};

template <class Real>
ChartPolys<Real> chart_polys(const NormalFormModel& model, ChartId chart, int D) {
    const int s = model.s;
    const Real q = Real(1) / Real(s - 1);
    const bool k1 = chart == ChartId::K1;
    ChartPolys<Real> p{Poly<Real>(D), {Poly<Real>(D), Poly<Real>(D), Poly<Real>(D), Poly<Real>(D), Poly<Real>(D)},
                       Poly<Real>(D), k1 ? -q : q, Real(k1 ? 2 : -2)};
    p.lin.at(0, 0) = Real(k1 ? -1 : 1);
    if (D >= 1) p.lin.at(0, 1) = k1 ? q : -q;
    p.c[s].at(0, 0) = Real(-1);
    const int mubar = k1 ? -1 : 1;
    for (const auto& m : model.remainder) {
        const int k = blowup_weight(m, s) - s;
        if (k + m.c > D) continue;
        const Real sign = (m.b % 2 == 1) ? Real(mubar) : Real(1);
        p.c[m.a].at(k, m.c) += Real(m.coeff) * sign;
    }
    if (s - 2 + 1 <= D) p.src.at(s - 2, 1) += Real(model.lambda);
    return p;
}

template <class Real>
Poly<Real> eval_rhs(const ChartPolys<Real>& cp, const Poly<Real>& psi) {
    Poly<Real> out = add(mul(cp.lin, psi), cp.src);
    Poly<Real> pw(psi.D);
    pw.at(0, 0) = Real(1);
    for (int a = 0; a <= 4; ++a) {
        if (a > 0) pw = mul(pw, psi);
        bool nz = false;
        for (const auto& x : cp.c[a].c) nz = nz || x != 0;
        if (nz) out = add(out, mul(cp.c[a], pw));
    }
    return out;
}

template <class Real>
Real psi0_for(const NormalFormModel& model, ChartId chart, Branch branch) {
    if (chart == ChartId::K1) return Real(0);
    if (model.s == 2) {
        if (branch == Branch::minus) throw PreconditionError("psi3_series: s = 2 has a single K3 branch");
        return Real(1);
    }
    if (branch == Branch::single) throw PreconditionError("psi3_series: s = 3 needs branch plus or minus");
    return Real(branch == Branch::plus ? 1 : -1);
}

template <class Real>
Poly<Real> match_series(const NormalFormModel& model, ChartId chart, Branch branch, int order) {
    validate_model(model);
    if (order < 0 || order > 8) throw PreconditionError("series order must lie in [0, 8]");
    const auto cp = chart_polys<Real>(model, chart, order);
    Poly<Real> psi(order);
    const Real p0 = psi0_for<Real>(model, chart, branch);
    psi.at(0, 0) = p0;
    // linearisation at (psi0, 0, 0)
    Real L = cp.lin.at(0, 0);
    Real pw(1);
    for (int a = 1; a <= 4; ++a) {
        L += Real(a) * cp.c[a].at(0, 0) * pw;
        pw *= p0;
    }
    using std::abs;
    if (abs(L) < Real(1e-14)) throw SeriesFailure("series matching is resonant (zero linearisation)", 1);
    for (int n = 1; n <= order; ++n) {
        const Poly<Real> F = eval_rhs(cp, psi);
        for (int i = 0; i <= n; ++i) {
            const int j = n - i;
            Real lhs(0);
            if (j >= 1) lhs = (cp.ar * Real(i) + cp.ae * Real(j - 1)) * psi.at(i, j - 1);
            psi.at(i, j) = (lhs - F.at(i, j)) / L;
        }
    }
    return psi;
}

CenterManifoldSeries to_series(const Poly<double>& p, ChartId chart, Branch branch, int order) {
    CenterManifoldSeries s;
    s.chart = chart;
    s.branch = branch;
    s.order = order;
    for (int i = 0; i <= order; ++i)
        for (int j = 0; i + j <= order; ++j) s.coefficients[{i, j}] = p.at(i, j);
    return s;
}

}  // namespace

CenterManifoldSeries psi1_series(const NormalFormModel& model, int order) {
    return to_series(match_series<double>(model, ChartId::K1, Branch::single, order), ChartId::K1, Branch::single,
                     order);
}

CenterManifoldSeries psi3_series(const NormalFormModel& model, Branch branch, int order) {
    return to_series(match_series<double>(model, ChartId::K3, branch, order), ChartId::K3, branch, order);
}

double series_invariance_residual(const NormalFormModel& model, ChartId chart, Branch branch, int order, double r,
                                  double e) {
    using Real = boost::multiprecision::cpp_bin_float_50;
    if (chart == ChartId::K2) throw PreconditionError("invariance residual is defined for K1 and K3");
    const Poly<Real> psi = match_series<Real>(model, chart, branch, order);
    const auto cp = chart_polys<Real>(model, chart, 48);
    const Real R(r), E(e);
    auto ev = [&](const Poly<Real>& p) {
        Real v(0);
        for (int i = 0; i <= p.D; ++i)
            for (int j = 0; i + j <= p.D; ++j)
                if (p.at(i, j) != 0) v += p.at(i, j) * pow(R, i) * pow(E, j);
        return v;
    };
    Real P(0), Pr(0), Pe(0);
    for (int i = 0; i <= order; ++i)
        for (int j = 0; i + j <= order; ++j) {
            const Real c = psi.at(i, j);
            P += c * pow(R, i) * pow(E, j);
            if (i > 0) Pr += c * Real(i) * pow(R, i - 1) * pow(E, j);
            if (j > 0) Pe += c * Real(j) * pow(R, i) * pow(E, j - 1);
        }
    const Real lhs = cp.ar * R * E * Pr + cp.ae * E * E * Pe;
    Real rhs = ev(cp.lin) * P + ev(cp.src);
    Real pw(1);
    for (int a = 0; a <= 4; ++a) {
        rhs += ev(cp.c[a]) * pw;
        pw *= P;
    }
    return static_cast<double>(abs(lhs - rhs));
}

// ---------------------------------------------------------------------------
// implicit midpoint with step doubling

namespace {

bool midpoint_step(const std::function<double(double, double)>& f, const std::function<double(double, double)>& df,
                   double t, double y, double h, double& out) {
    const double tm = t + 0.5 * h;
    double y1 = y + h * f(t, y);
    if (!std::isfinite(y1)) y1 = y;
    for (int it = 0; it < 60; ++it) {
        const double ym = 0.5 * (y + y1);
        const double g = y1 - y - h * f(tm, ym);
        const double dg = 1.0 - 0.5 * h * df(tm, ym);
        if (!std::isfinite(g) || !std::isfinite(dg) || dg == 0) return false;
        const double d = g / dg;
        y1 -= d;
        if (std::abs(d) <= 1e-15 * std::max(1.0, std::abs(y1))) {
            out = y1;
            return std::isfinite(y1);
        }
    }
    return false;
}

}  // namespace

std::vector<double> integrate_scalar(const std::function<double(double, double)>& f,
                                     const std::function<double(double, double)>& dfdy, double t0, double y0,
                                     const std::vector<double>& out_times, const StiffOptions& opt,
                                     const std::function<void(double, double)>& on_accept) {
    std::vector<double> out;
    out.reserve(out_times.size());
    double t = t0, y = y0, h = opt.initial_step;
    long steps = 0;
    for (double target : out_times) {
        if (target < t - 1e-14 * std::max(1.0, std::abs(t)))
            throw PreconditionError("integrate_scalar: output times must be nondecreasing");
        while (target - t > 1e-14 * std::max(1.0, std::abs(target))) {
            if (++steps > opt.max_steps) throw TimeoutError("integrate_scalar: too many steps", SolverState{});
            const bool last = h >= target - t;
            const double hh = last ? target - t : h;
            double big = 0, half1 = 0, half2 = 0;
            const bool ok = midpoint_step(f, dfdy, t, y, hh, big) && midpoint_step(f, dfdy, t, y, 0.5 * hh, half1) &&
                            midpoint_step(f, dfdy, t + 0.5 * hh, half1, 0.5 * hh, half2);
            const double err = ok ? std::abs(half2 - big) / 3.0 : INFINITY;
            const double allowed = opt.tol * std::max(std::abs(y), 1e-2);
            if (err <= allowed) {
                t = last ? target : t + hh;
                y = half2 + (half2 - big) / 3.0;
                if (!std::isfinite(y) || std::abs(y) > opt.escape) {
                    std::ostringstream os;
                    os << "escape: |y| exceeded " << opt.escape << " at t = " << t;
                    throw EscapeError(os.str(), t);
                }
                if (on_accept) on_accept(t, y);
                const double grow = err > 0 ? 0.9 * std::cbrt(allowed / err) : 2.0;
                if (!last || hh >= h) h = hh * std::clamp(grow, 0.5, 2.0);
            } else {
                h = 0.5 * hh;
                if (h < opt.min_step) {
                    // the solution is running away faster than any resolvable step
                    std::ostringstream os;
                    os << "step size underflow at t = " << t << " (y = " << y << ")";
                    throw EscapeError(os.str(), t);
                }
            }
        }
        out.push_back(y);
    }
    return out;
}

double SampledFunction::operator()(double xq) const {
    if (x.empty()) return 0;
    if (xq <= x.front()) return y.front();
    if (xq >= x.back()) return y.back();
    const double h = (x.back() - x.front()) / (x.size() - 1);
    std::size_t i = static_cast<std::size_t>((xq - x.front()) / h);
    i = std::min(i, x.size() - 2);
    const double t = (xq - x[i]) / (x[i + 1] - x[i]);
    return (1 - t) * y[i] + t * y[i + 1];
}

SampledFunction psi2_flow(const NormalFormModel& model, double r2, double mu_start, double mu_end, double initial,
                          int samples, const StiffOptions& opt) {
    validate_model(model);
    if (!(mu_start < mu_end)) throw PreconditionError("psi2_flow: mu_start must be below mu_end");
    if (samples < 2) throw PreconditionError("psi2_flow: need at least two samples");
    const EvolutionSpec k2 = chart_spec(ChartId::K2, model);
    auto f = [&](double mu, double psi) { return k2.local_rhs(psi, {r2, mu}, 0.0); };
    auto df = [&](double mu, double psi) {
        const auto c = chart_reaction(ChartId::K2, model, {r2, mu});
        return mu + c[1] + psi * (2 * c[2] + psi * (3 * c[3] + psi * 4 * c[4]));
    };
    SampledFunction out;
    out.x.resize(samples);
    for (int i = 0; i < samples; ++i) out.x[i] = mu_start + (mu_end - mu_start) * i / (samples - 1);
    out.x.back() = mu_end;
    std::vector<double> times(out.x.begin() + 1, out.x.end());
    auto ys = integrate_scalar(f, df, mu_start, initial, times, opt);
    out.y.reserve(samples);
    out.y.push_back(initial);
    out.y.insert(out.y.end(), ys.begin(), ys.end());
    return out;
}

// ---------------------------------------------------------------------------
// slow manifolds

std::string branch_name(SlowBranch b, int s) {
    switch (b) {
        case SlowBranch::zero: return s == 2 ? "S_a^-" : "S_a";
        case SlowBranch::plus: return "S_a^+";
        case SlowBranch::minus: return s == 2 ? "S_a^-(invalid)" : "S_a^-";
    }
    return "?";
}

double SlowManifoldBranch::residual(const NormalFormModel& model, double mu) const {
    const double h = 1e-4;
    const double d = (sampler(mu + h) - sampler(mu - h)) / (2 * h);
    return std::abs(eps * d - model.reaction(sampler(mu), mu, eps));
}

namespace {

double branch_root(const NormalFormModel& model, double mu, double eps, double seed) {
    double phi = seed;
    const double cap = 0.25 * std::max({std::abs(seed), std::sqrt(std::abs(mu)), 1e-3});
    for (int it = 0; it < 200; ++it) {
        const double g = model.reaction(phi, mu, eps);
        const double dg = model.reaction_du(phi, mu, eps);
        if (dg == 0 || !std::isfinite(dg)) break;
        // keep Newton on the chosen branch
        const double d = std::clamp(g / dg, -cap, cap);
        phi -= d;
        if (std::abs(d) <= 1e-15 * std::max(1.0, std::abs(phi))) {
            if (model.reaction_du(phi, mu, eps) >= 0)
                throw DomainError("slow_manifold: branch is not attracting at mu = " + std::to_string(mu));
            return phi;
        }
    }
    throw DomainError("slow_manifold: Newton failed at mu = " + std::to_string(mu) +
                      " (branch not normally hyperbolic there)");
}

double branch_seed(SlowBranch branch, int s, double mu) {
    switch (branch) {
        case SlowBranch::zero:
            if (!(mu < 0)) throw DomainError("slow_manifold: zero branch requires mu < 0");
            return 0.0;
        case SlowBranch::plus:
            if (!(mu > 0)) throw DomainError("slow_manifold: positive branch requires mu > 0");
            return s == 2 ? mu : std::sqrt(mu);
        case SlowBranch::minus:
            if (!(mu > 0)) throw DomainError("slow_manifold: negative branch requires mu > 0");
            return -std::sqrt(mu);
    }
    return 0.0;
}

// Truncated Taylor jets in t = (mu - mu0) / sigma.
constexpr int kJetDegree = 48;
constexpr int kMaxSlowOrder = 40;
using Jet = std::array<double, kJetDegree + 1>;

Jet jet_const(double c) {
    Jet j{};
    j[0] = c;
    return j;
}

Jet jet_mul(const Jet& a, const Jet& b) {
    Jet r{};
    for (int i = 0; i <= kJetDegree; ++i) {
        if (a[i] == 0) continue;
        for (int k = 0; i + k <= kJetDegree; ++k) r[i + k] += a[i] * b[k];
    }
    return r;
}

Jet jet_div(const Jet& a, const Jet& b) {
    Jet q{};
    for (int i = 0; i <= kJetDegree; ++i) {
        double v = a[i];
        for (int k = 1; k <= i; ++k) v -= b[k] * q[i - k];
        q[i] = v / b[0];
    }
    return q;
}

Jet jet_pow(const Jet& a, int n) {
    Jet r = jet_const(1.0);
    for (int i = 0; i < n; ++i) r = jet_mul(r, a);
    return r;
}

// d/dmu of a jet; the top coefficient is lost
Jet jet_derivative(const Jet& a, double sigma) {
    Jet r{};
    for (int i = 0; i < kJetDegree; ++i) r[i] = (i + 1) * a[i + 1] / sigma;
    return r;
}

struct JetModel {
    const NormalFormModel& model;
    Jet mu;
    double eps;

    Jet rhs(const Jet& phi) const {
        Jet r = jet_mul(mu, phi);
        const Jet ps = jet_pow(phi, model.s);
        for (int i = 0; i <= kJetDegree; ++i) r[i] -= ps[i];
        r[0] += eps * model.lambda;
        for (const auto& m : model.remainder) {
            const Jet t = jet_mul(jet_pow(phi, m.a), jet_pow(mu, m.b));
            const double c = m.coeff * std::pow(eps, m.c);
            for (int i = 0; i <= kJetDegree; ++i) r[i] += c * t[i];
        }
        return r;
    }

    Jet rhs_du(const Jet& phi) const {
        Jet r = mu;
        const Jet ps = jet_pow(phi, model.s - 1);
        for (int i = 0; i <= kJetDegree; ++i) r[i] -= model.s * ps[i];
        for (const auto& m : model.remainder) {
            if (m.a == 0) continue;
            const Jet t = jet_mul(jet_pow(phi, m.a - 1), jet_pow(mu, m.b));
            const double c = m.a * m.coeff * std::pow(eps, m.c);
            for (int i = 0; i <= kJetDegree; ++i) r[i] += c * t[i];
        }
        return r;
    }

    // Solves rhs(phi) = target in jet arithmetic, starting from `phi`.
    // Converged once the correction is at rounding level, or small and no longer shrinking.
    Jet solve(Jet phi, const Jet& target) const {
        double prev = INFINITY;
        for (int it = 0; it < 80; ++it) {
            Jet g = rhs(phi);
            for (int i = 0; i <= kJetDegree; ++i) g[i] -= target[i];
            const Jet dg = rhs_du(phi);
            if (!(dg[0] < 0)) throw DomainError("slow_manifold: branch is not attracting");
            const Jet d = jet_div(g, dg);
            double worst = 0, scale = 1;
            for (int i = 0; i <= kJetDegree; ++i) {
                phi[i] -= d[i];
                worst = std::max(worst, std::abs(d[i]));
                scale = std::max(scale, std::abs(phi[i]));
            }
            if (!std::isfinite(worst)) break;
            if (worst <= 1e-15 * scale) return phi;
            if (worst <= 1e-11 * scale && worst >= 0.5 * prev) return phi;
            prev = worst;
        }
        throw DomainError("slow_manifold: jet Newton iteration failed (branch not normally hyperbolic)");
    }
};

// phi_0 solves rhs(phi_0) = 0; phi_{k+1} solves rhs(phi_{k+1}) = eps phi_k'. With order < 0 the
// iteration stops at the smallest correction (optimal truncation of the asymptotic series).
double slow_value(const NormalFormModel& model, SlowBranch branch, double eps, double mu0, int order) {
    const double root = branch_root(model, mu0, eps, branch_seed(branch, model.s, mu0));
    if (order == 0 || eps == 0) return root;
    const double sigma = 0.5 * std::max(std::abs(mu0), std::sqrt(eps));
    Jet mu{};
    mu[0] = mu0;
    mu[1] = sigma;
    const JetModel jm{model, mu, eps};
    Jet phi = jm.solve(jet_const(root), jet_const(0.0));
    const int kmax = order < 0 ? kMaxSlowOrder : std::min(order, kMaxSlowOrder);
    double last_corr = INFINITY;
    for (int k = 1; k <= kmax; ++k) {
        Jet target = jet_derivative(phi, sigma);
        for (double& v : target) v *= eps;
        const Jet next = jm.solve(phi, target);
        const double corr = std::abs(next[0] - phi[0]);
        if (order < 0) {
            if (corr > last_corr) break;
            phi = next;
            if (corr <= 1e-17 * std::max(1.0, std::abs(phi[0]))) break;
            last_corr = corr;
        } else {
            phi = next;
        }
    }
    return phi[0];
}

}  // namespace

SlowManifoldBranch slow_manifold(const NormalFormModel& model, SlowBranch branch, double eps, int order) {
    validate_model(model);
    if (model.s == 2 && branch == SlowBranch::minus)
        throw PreconditionError("slow_manifold: s = 2 has no negative attracting branch");
    if (eps < 0) throw PreconditionError("slow_manifold: eps must be nonnegative");
    SlowManifoldBranch out;
    out.s = model.s;
    out.id = branch;
    out.eps = eps;
    out.order = order;
    out.sampler = [model, branch, eps, order](double mu) { return slow_value(model, branch, eps, mu, order); };
    return out;
}

double HomogeneousTrajectory::phi_at_mu(double m) const {
    if (mu.empty()) return 0;
    if (m <= mu.front()) return phi.front();
    if (m >= mu.back()) return phi.back();
    const auto it = std::lower_bound(mu.begin(), mu.end(), m);
    const std::size_t i = static_cast<std::size_t>(it - mu.begin());
    const double t = (m - mu[i - 1]) / (mu[i] - mu[i - 1]);
    return (1 - t) * phi[i - 1] + t * phi[i];
}

HomogeneousTrajectory integrate_homogeneous(const NormalFormModel& model, double eps, double phi0, double mu0,
                                            double mu_end, const StiffOptions& opt) {
    validate_model(model);
    if (!(eps > 0)) throw PreconditionError("integrate_homogeneous: eps must be positive");
    if (!(mu_end > mu0)) throw PreconditionError("integrate_homogeneous: mu_end must exceed mu0");
    HomogeneousTrajectory tr;
    tr.t.push_back(0);
    tr.mu.push_back(mu0);
    tr.phi.push_back(phi0);
    auto f = [&](double t, double y) { return model.reaction(y, mu0 + eps * t, eps); };
    auto df = [&](double t, double y) { return model.reaction_du(y, mu0 + eps * t, eps); };
    const double T = (mu_end - mu0) / eps;
    integrate_scalar(f, df, 0.0, phi0, {T}, opt, [&](double t, double y) {
        tr.t.push_back(t);
        tr.mu.push_back(mu0 + eps * t);
        tr.phi.push_back(y);
    });
    tr.mu.back() = mu_end;
    return tr;
}

}  // namespace sp
