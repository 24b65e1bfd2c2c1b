#include "slowpassage/charts.hpp"

#include <cmath>

#include "slowpassage/errors.hpp"

namespace sp {

namespace {

double ipow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

// x_i = r^{(s-1)/2} x
double space_factor(double r, int s) { return s == 3 ? r : std::sqrt(r); }

GridFunction scaled(const GridFunction& g, double factor) { return factor * g; }

}  // namespace

std::string to_string(ChartId c) {
    switch (c) {
        case ChartId::K1: return "K1";
        case ChartId::K2: return "K2";
        case ChartId::K3: return "K3";
    }
    return "?";
}

BlownDownState blow_down(const ChartState& cs, int s) {
    const double r = cs.radial;
    if (r < 0) throw DomainError("blow_down: radial variable must be nonnegative");
    const double rs1 = ipow(r, s - 1);
    BlownDownState out;
    switch (cs.chart) {
        case ChartId::K1:
            out.mu = -rs1;
            out.eps = rs1 * rs1 * cs.slow;
            break;
        case ChartId::K2:
            out.mu = rs1 * cs.slow;
            out.eps = rs1 * rs1;
            break;
        case ChartId::K3:
            out.mu = rs1;
            out.eps = rs1 * rs1 * cs.slow;
            break;
    }
    if (r == 0) {
        if (cs.u.sup() != 0)
            throw DomainError("blow_down: degenerate map at r = 0 for a nonzero profile");
        out.u = cs.u;
        return out;
    }
    // same nodes, physical half width L_i / r^{(s-1)/2}
    const double a = space_factor(r, s);
    std::vector<double> v(cs.u.values());
    for (double& x : v) x *= r;
    out.u = GridFunction(cs.u.half_width() / a, cs.u.n(), std::move(v));
    return out;
}

ChartState blow_up(const BlownDownState& bd, ChartId chart, int s) {
    ChartState cs;
    cs.chart = chart;
    double r = 0;
    switch (chart) {
        case ChartId::K1:
            if (!(bd.mu < 0)) throw DomainError("blow_up: chart K1 requires mu < 0");
            r = std::pow(-bd.mu, 1.0 / (s - 1));
            cs.slow = bd.eps / (bd.mu * bd.mu);
            break;
        case ChartId::K2:
            if (!(bd.eps > 0)) throw DomainError("blow_up: chart K2 requires eps > 0");
            r = std::pow(bd.eps, 1.0 / (2 * (s - 1)));
            cs.slow = bd.mu / ipow(r, s - 1);
            break;
        case ChartId::K3:
            if (!(bd.mu > 0)) throw DomainError("blow_up: chart K3 requires mu > 0");
            r = std::pow(bd.mu, 1.0 / (s - 1));
            cs.slow = bd.eps / (bd.mu * bd.mu);
            break;
    }
    cs.radial = r;
    const double a = space_factor(r, s);
    std::vector<double> v(bd.u.values());
    for (double& x : v) x /= r;
    cs.u = GridFunction(bd.u.half_width() * a, bd.u.n(), std::move(v));
    return cs;
}

ChartState change_chart(const ChartState& cs, ChartId target, int s) {
    if (cs.chart == target) return cs;
    const double p = 1.0 / (s - 1);
    ChartState out;
    out.chart = target;
    out.chart_time = 0;
    if (cs.chart == ChartId::K2 && target == ChartId::K1) {
        const double m = cs.slow;
        if (!(m < 0)) throw DomainError("change_chart K2->K1: overlap requires mu2 < 0");
        out.radial = std::pow(-m, p) * cs.radial;
        out.slow = 1.0 / (m * m);
        // x1 = (-mu2)^{1/2} x2
        out.u = scaled(rescale_space(cs.u, 1.0 / std::sqrt(-m)), std::pow(-m, -p));
        return out;
    }
    if (cs.chart == ChartId::K1 && target == ChartId::K2) {
        const double e = cs.slow;
        if (!(e > 0)) throw DomainError("change_chart K1->K2: overlap requires eps1 > 0");
        const double mneg = 1.0 / std::sqrt(e);  // -mu2
        out.slow = -mneg;
        out.radial = cs.radial * std::pow(mneg, -p);
        out.u = scaled(rescale_space(cs.u, std::sqrt(mneg)), std::pow(mneg, p));
        return out;
    }
    if (cs.chart == ChartId::K2 && target == ChartId::K3) {
        const double m = cs.slow;
        if (!(m > 0)) throw DomainError("change_chart K2->K3: overlap requires mu2 > 0");
        out.radial = std::pow(m, p) * cs.radial;
        out.slow = 1.0 / (m * m);
        out.u = scaled(rescale_space(cs.u, 1.0 / std::sqrt(m)), std::pow(m, -p));
        return out;
    }
    if (cs.chart == ChartId::K3 && target == ChartId::K2) {
        const double e = cs.slow;
        if (!(e > 0)) throw DomainError("change_chart K3->K2: overlap requires eps3 > 0");
        const double m = 1.0 / std::sqrt(e);
        out.slow = m;
        out.radial = cs.radial * std::pow(m, -p);
        out.u = scaled(rescale_space(cs.u, std::sqrt(m)), std::pow(m, p));
        return out;
    }
    // K1 <-> K3 through K2
    return change_chart(change_chart(cs, ChartId::K2, s), target, s);
}

std::array<double, 5> chart_reaction(ChartId chart, const NormalFormModel& model, const ScalarBlock& sc) {
    const int s = model.s;
    std::array<double, 5> c{};
    c[s] -= 1.0;
    const double r = sc[0];
    for (const auto& m : model.remainder) {
        // r^{-s} R(r u, r^{s-1} mu_bar, r^{2(s-1)} eps_bar) term by term
        const int k = blowup_weight(m, s) - s;
        double coef = m.coeff * ipow(r, k);
        switch (chart) {
            case ChartId::K1: coef *= ipow(-1.0, m.b) * ipow(sc[1], m.c); break;
            case ChartId::K2: coef *= ipow(sc[1], m.b); break;
            case ChartId::K3: coef *= ipow(sc[1], m.c); break;
        }
        c[m.a] += coef;
    }
    return c;
}

EvolutionSpec chart_spec(ChartId chart, const NormalFormModel& model) {
    validate_model(model);
    const int s = model.s;
    const double lam = model.lambda;
    const double q = 1.0 / (s - 1);
    EvolutionSpec sp;
    sp.reaction = [chart, model](const ScalarBlock& sc, double) { return chart_reaction(chart, model, sc); };
    switch (chart) {
        case ChartId::K1:
            sp.linear_coeff = [q](const ScalarBlock& sc, double) { return -1.0 + q * sc[1]; };
            sp.source = [lam, s](const ScalarBlock& sc, double) { return lam * ipow(sc[0], s - 2) * sc[1]; };
            sp.transport_coeff = [](const ScalarBlock& sc, double) { return 0.5 * sc[1]; };
            sp.scalar_drift = [q](const ScalarBlock& sc, double) {
                return ScalarBlock{-q * sc[0] * sc[1], 2 * sc[1] * sc[1]};
            };
            sp.scalar_flow = [q](const ScalarBlock& sc, double t, double dt) {
                const double g = 1.0 - 2.0 * sc[1] * dt;
                if (!(g > 0)) throw BlowUpError("K1 drift reaches eps1 = infinity within the step", t + dt);
                return ScalarBlock{sc[0] * std::pow(g, 0.5 * q), sc[1] / g};
            };
            break;
        case ChartId::K2:
            sp.linear_coeff = [](const ScalarBlock& sc, double) { return sc[1]; };
            sp.source = [lam, s](const ScalarBlock& sc, double) { return lam * ipow(sc[0], s - 2); };
            sp.transport_coeff = [](const ScalarBlock&, double) { return 0.0; };
            sp.scalar_drift = [](const ScalarBlock&, double) { return ScalarBlock{0.0, 1.0}; };
            sp.scalar_flow = [](const ScalarBlock& sc, double, double dt) { return ScalarBlock{sc[0], sc[1] + dt}; };
            break;
        case ChartId::K3:
            sp.linear_coeff = [q](const ScalarBlock& sc, double) { return 1.0 - q * sc[1]; };
            sp.source = [lam, s](const ScalarBlock& sc, double) { return lam * ipow(sc[0], s - 2) * sc[1]; };
            sp.transport_coeff = [](const ScalarBlock& sc, double) { return -0.5 * sc[1]; };
            sp.scalar_drift = [q](const ScalarBlock& sc, double) {
                return ScalarBlock{q * sc[0] * sc[1], -2 * sc[1] * sc[1]};
            };
            sp.scalar_flow = [q](const ScalarBlock& sc, double, double dt) {
                const double g = 1.0 + 2.0 * sc[1] * dt;
                return ScalarBlock{sc[0] * std::pow(g, 0.5 * q), sc[1] / g};
            };
            break;
    }
    return sp;
}

EvolutionSpec blown_down_spec(const NormalFormModel& model) {
    validate_model(model);
    const int s = model.s;
    const double lam = model.lambda;
    EvolutionSpec sp;
    sp.linear_coeff = [](const ScalarBlock& sc, double) { return sc[0]; };
    sp.reaction = [model, s](const ScalarBlock& sc, double) {
        std::array<double, 5> c{};
        c[s] -= 1.0;
        for (const auto& m : model.remainder) c[m.a] += m.coeff * ipow(sc[0], m.b) * ipow(sc[1], m.c);
        return c;
    };
    sp.source = [lam](const ScalarBlock& sc, double) { return lam * sc[1]; };
    sp.scalar_drift = [](const ScalarBlock& sc, double) { return ScalarBlock{sc[1], 0.0}; };
    sp.scalar_flow = [](const ScalarBlock& sc, double, double dt) { return ScalarBlock{sc[0] + sc[1] * dt, sc[1]}; };
    return sp;
}

double desingularized_time_ratio(ChartId, double radial, int s) {
    if (radial < 0) throw DomainError("desingularized_time_ratio: radial must be nonnegative");
    return ipow(radial, s - 1);
}

}  // namespace sp
