#include "slowpassage/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "slowpassage/errors.hpp"

namespace sp {

GridFunction initial_profile(ProfileKind kind, double half_width, int n, double chi, std::uint64_t seed) {
    if (!(chi > 0)) throw PreconditionError("initial_profile: chi must be positive");
    double centre = 0, stretch = 1;
    if (seed != 0) {
        std::mt19937_64 rng(seed);
        centre = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
        stretch = std::uniform_real_distribution<double>(0.8, 1.25)(rng);
    }
    std::function<double(double)> f;
    switch (kind) {
        case ProfileKind::bump: {
            const double w = 4.0 * stretch;
            f = [=](double x) {
                const double z = (x - centre) / w;
                return std::abs(z) < 1 ? std::exp(1.0 - 1.0 / (1.0 - z * z)) : 0.0;
            };
            break;
        }
        case ProfileKind::gaussian: {
            const double w = 2.0 * stretch;
            f = [=](double x) { return std::exp(-std::pow((x - centre) / w, 2)); };
            break;
        }
        case ProfileKind::wiggle: {
            const double w = 3.0 * stretch;
            f = [=](double x) { return std::exp(-std::pow((x - centre) / w, 2)) * std::cos(2 * (x - centre)); };
            break;
        }
    }
    const GridFunction g = GridFunction::sample(half_width, n, f);
    const double z = weighted_norms(g).z_norm;
    if (z == 0) throw PreconditionError("initial_profile: profile vanishes on this grid");
    return (chi / z) * g;
}

SlowBranch exit_branch(const NormalFormModel& model) {
    if (model.s == 3 && model.lambda < 0) return SlowBranch::minus;
    return SlowBranch::plus;
}

namespace {

SolverConfig effective_solver(const ScenarioConfig& cfg, const GridFunction& grid, double max_transport) {
    SolverConfig sc = cfg.solver;
    if (!(sc.dt > 0)) sc.dt = default_dt(grid, max_transport, sc.cfl_guard);
    return sc;
}

void fill_distances(PassageResult& res, const NormalFormModel& model, double rho) {
    res.slow_manifold_value = slow_manifold(model, exit_branch(model), res.eps)(rho);
    std::vector<double> d(res.exit_profile.values());
    for (double& v : d) v -= res.slow_manifold_value;
    const GridFunction diff = res.exit_profile.with_values(std::move(d));
    const auto nr = weighted_norms(diff);
    res.z_distance = nr.z_norm;
    res.sup_distance = nr.sup_norm;
    res.spatial_variance = res.exit_profile.variance();
}

}  // namespace

PassageResult run_direct_passage(const ScenarioConfig& cfg, double eps) {
    if (!(eps > 0)) throw PreconditionError("run_direct_passage: eps must be positive");
    const GridFunction u0 = initial_profile(cfg.profile, cfg.half_width, cfg.n, cfg.chi, cfg.seed);
    const SolverConfig sc = effective_solver(cfg, u0, 0.0);
    const EvolutionSpec spec = blown_down_spec(cfg.model);
    const double T = 2 * cfg.rho / eps;
    PassageResult res;
    res.eps = eps;
    SolverState st{u0, {-cfg.rho, eps}, 0.0};
    long steps = 0;
    st = run_to_time(st, spec, sc, T, [&](const SolverState&) { ++steps; });
    res.exit_profile = st.u;
    res.physical_T = st.t;
    res.steps = steps;
    fill_distances(res, cfg.model, cfg.rho);
    return res;
}

double sup_difference(const GridFunction& a, const GridFunction& b) {
    double m = 0;
    if (a.same_grid(b)) {
        for (int i = 0; i < a.n(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
        return m;
    }
    for (int i = 0; i < a.n(); ++i) m = std::max(m, std::abs(a[i] - interpolate(b, a.x(i))));
    return m;
}

namespace {

// Runs one chart segment, accumulating physical time dt = dt_i / r^{s-1} (trapezoidal).
struct Segment {
    SolverState end;
    double physical = 0;
    long steps = 0;
};

Segment run_segment(const ChartState& cs, const NormalFormModel& model, const SolverConfig& sc,
                    const StopPredicate& stop, double t_end) {
    const EvolutionSpec spec = chart_spec(cs.chart, model);
    const int s = model.s;
    Segment seg;
    SolverState prev{cs.u, cs.scalars(), 0.0};
    auto observer = [&](const SolverState& cur) {
        const double a = 1.0 / desingularized_time_ratio(cs.chart, prev.scalars[0], s);
        const double b = 1.0 / desingularized_time_ratio(cs.chart, cur.scalars[0], s);
        seg.physical += 0.5 * (a + b) * (cur.t - prev.t);
        prev.scalars = cur.scalars;
        prev.t = cur.t;
        ++seg.steps;
    };
    const SolverState start{cs.u, cs.scalars(), 0.0};
    if (stop) {
        auto tr = run_until(start, spec, sc, stop, 1 << 30, observer);
        seg.end = tr.samples.back();
    } else {
        seg.end = run_to_time(start, spec, sc, t_end, observer);
    }
    return seg;
}

ChartState as_chart(ChartId id, const SolverState& st) {
    ChartState cs;
    cs.chart = id;
    cs.u = st.u;
    cs.radial = st.scalars[0];
    cs.slow = st.scalars[1];
    cs.chart_time = st.t;
    return cs;
}

}  // namespace

PipelineResult run_chart_pipeline(const ScenarioConfig& cfg, double eps) {
    const Sections sec = resolved_sections(cfg);
    const int s = cfg.model.s;
    if (std::abs(sec.Omega * std::sqrt(sec.delta) - 1) > 1e-9)
        throw ItineraryError("Sigma2", "section constants must satisfy Omega * sqrt(delta) = 1");
    if (eps == 0)
        throw ItineraryError("Sigma1_out", "non-terminating: eps1 = 0 is invariant, K1 is never left");
    if (!(eps > 0)) throw PreconditionError("run_chart_pipeline: eps must be positive");

    PipelineResult out;
    const GridFunction u0 = initial_profile(cfg.profile, cfg.half_width, cfg.n, cfg.chi, cfg.seed);
    BlownDownState bd{u0, -cfg.rho, eps};
    ChartState cs = blow_up(bd, ChartId::K1, s);
    if (std::abs(cs.radial - sec.nu) > 1e-12 * sec.nu)
        throw ItineraryError("Sigma1_in", "entry radius r1 = rho^{1/(s-1)} differs from nu");
    if (cs.slow > sec.delta)
        throw ItineraryError("Sigma1_in", "eps1(0) = eps/rho^2 already exceeds delta");

    const SolverConfig sc13 = effective_solver(cfg, cs.u, 0.5 * sec.delta);
    SolverConfig sc2 = sc13;
    sc2.dt = cfg.dt_k2 > 0 ? cfg.dt_k2 : sc13.dt / 10;
    double physical = 0;

    auto record = [&](ChartId id, const ChartState& in, const Segment& seg) {
        ItineraryRecord r;
        r.chart = id;
        r.chart_time = seg.end.t;
        r.physical_t_start = physical;
        physical += seg.physical;
        r.physical_t_end = physical;
        r.radial_in = in.radial;
        r.slow_in = in.slow;
        r.radial_out = seg.end.scalars[0];
        r.slow_out = seg.end.scalars[1];
        r.steps = seg.steps;
        out.itinerary.push_back(r);
    };

    // K1: Sigma_1^in -> Sigma_1^out (eps1 = delta)
    const double delta = sec.delta;
    Segment k1 = run_segment(cs, cfg.model, sc13, [delta](const SolverState& st) { return st.scalars[1] >= delta; },
                             0.0);
    record(ChartId::K1, cs, k1);

    // K2: mu2 from -Omega to +Omega
    ChartState c2 = change_chart(as_chart(ChartId::K1, k1.end), ChartId::K2, s);
    const double mu2_end = sec.Omega;
    Segment k2 = run_segment(c2, cfg.model, sc2, {}, mu2_end - c2.slow);
    record(ChartId::K2, c2, k2);

    // K3: eps3 = delta -> r3 = nu
    ChartState c3 = change_chart(as_chart(ChartId::K2, k2.end), ChartId::K3, s);
    if (!(c3.radial < sec.nu))
        throw ItineraryError("Sigma3_in", "K3 entry radius already exceeds nu; reduce delta or eps");
    const double nu = sec.nu;
    Segment k3 = run_segment(c3, cfg.model, sc13, [nu](const SolverState& st) { return st.scalars[0] >= nu; }, 0.0);
    record(ChartId::K3, c3, k3);

    const BlownDownState exit = blow_down(as_chart(ChartId::K3, k3.end), s);
    PassageResult& res = out.result;
    res.eps = eps;
    res.exit_profile = exit.u;
    res.physical_T = physical;
    res.steps = k1.steps + k2.steps + k3.steps;
    fill_distances(res, cfg.model, cfg.rho);
    return out;
}

// ---------------------------------------------------------------------------
// transition maps

namespace {

double sup_minus_constant(const GridFunction& u, double c) {
    double m = 0;
    for (double v : u.values()) m = std::max(m, std::abs(v - c));
    return m;
}

void finish_report(PiReport& rep, const std::vector<double>& abscissa) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
        const auto& r = rep.records[i];
        rep.max_T_rel_error =
            std::max(rep.max_T_rel_error, std::abs(r.T_measured - r.T_formula) / std::max(r.T_formula, 1e-300));
        rep.max_exit_rel_error = std::max(rep.max_exit_rel_error,
                                          std::abs(r.exit_measured - r.exit_formula) / std::abs(r.exit_formula));
        if (r.exit_distance > 1e-14) {
            x.push_back(abscissa[i]);
            y.push_back(std::log(r.exit_distance));
        }
    }
    if (x.size() >= 2) rep.decay_fit = linear_fit(x, y);
}

}  // namespace

PiReport verify_pi1(const ScenarioConfig& cfg, const std::vector<double>& eps1_list, bool on_manifold) {
    const Sections sec = resolved_sections(cfg);
    const int s = cfg.model.s;
    const double delta = sec.delta, nu = sec.nu;
    const auto psi = psi1_series(cfg.model, cfg.series_order);
    const GridFunction shape = initial_profile(cfg.profile, cfg.half_width, cfg.n, cfg.chi, cfg.seed);
    const SolverConfig sc = effective_solver(cfg, shape, 0.5 * delta);
    PiReport rep;
    std::vector<double> inv;
    for (double e1 : eps1_list) {
        if (!(e1 > 0 && e1 < delta)) throw PreconditionError("verify_pi1: each eps1 must lie in (0, delta)");
        ChartState cs;
        cs.chart = ChartId::K1;
        cs.radial = nu;
        cs.slow = e1;
        const double base = psi.evaluate(nu, e1);
        cs.u = on_manifold ? GridFunction(cfg.half_width, cfg.n, base) : base * GridFunction(cfg.half_width, cfg.n, 1.0) + shape;
        Segment seg =
            run_segment(cs, cfg.model, sc, [delta](const SolverState& st) { return st.scalars[1] >= delta; }, 0.0);
        PiRecord r;
        r.start = e1;
        r.T_formula = 1 / (2 * e1) - 1 / (2 * delta);
        r.T_measured = seg.end.t;
        r.exit_formula = nu * std::pow(e1 / delta, 1.0 / (2 * (s - 1)));
        r.exit_measured = seg.end.scalars[0];
        r.exit_distance = sup_minus_constant(seg.end.u, psi.evaluate(seg.end.scalars[0], delta));
        rep.records.push_back(r);
        inv.push_back(1 / e1);
    }
    finish_report(rep, inv);
    return rep;
}

PiReport verify_pi3(const ScenarioConfig& cfg, const std::vector<double>& r3_list, bool on_manifold) {
    const Sections sec = resolved_sections(cfg);
    const int s = cfg.model.s;
    const double delta = sec.delta, nu = sec.nu;
    const Branch br = s == 2 ? Branch::single : (cfg.model.lambda < 0 ? Branch::minus : Branch::plus);
    const auto psi = psi3_series(cfg.model, br, cfg.series_order);
    const GridFunction shape = initial_profile(cfg.profile, cfg.half_width, cfg.n, cfg.chi, cfg.seed);
    const SolverConfig sc = effective_solver(cfg, shape, 0.5 * delta);
    std::vector<double> list = r3_list;
    if (list.empty())
        for (double f : {0.5, 0.6, 0.7, 0.8}) list.push_back(f * nu);
    PiReport rep;
    std::vector<double> times;
    for (double r0 : list) {
        if (!(r0 > 0 && r0 < nu)) throw PreconditionError("verify_pi3: each r3 must lie in (0, nu)");
        ChartState cs;
        cs.chart = ChartId::K3;
        cs.radial = r0;
        cs.slow = delta;
        const double base = psi.evaluate(r0, delta);
        cs.u = on_manifold ? GridFunction(cfg.half_width, cfg.n, base) : base * GridFunction(cfg.half_width, cfg.n, 1.0) + shape;
        Segment seg = run_segment(cs, cfg.model, sc, [nu](const SolverState& st) { return st.scalars[0] >= nu; }, 0.0);
        PiRecord r;
        r.start = r0;
        const double k = 2.0 * (s - 1);
        r.T_formula = (std::pow(nu / r0, k) - 1) / (2 * delta);
        r.T_measured = seg.end.t;
        r.exit_formula = delta * std::pow(r0 / nu, k);
        r.exit_measured = seg.end.scalars[1];
        r.exit_distance = sup_minus_constant(seg.end.u, psi.evaluate(seg.end.scalars[0], seg.end.scalars[1]));
        rep.records.push_back(r);
        times.push_back(r.T_formula);
    }
    finish_report(rep, times);
    return rep;
}

Pi2Report verify_pi2(const ScenarioConfig& cfg, double eps, const std::vector<double>& sizes) {
    const Sections sec = resolved_sections(cfg);
    const int s = cfg.model.s;
    const double p = 1.0 / (s - 1);
    if (!(eps > 0)) throw PreconditionError("verify_pi2: eps must be positive");
    if (std::abs(sec.Omega * std::sqrt(sec.delta) - 1) > 1e-9)
        throw PreconditionError("verify_pi2: section constants must satisfy Omega * sqrt(delta) = 1");
    for (double a : sizes)
        if (!(a > 0 && a <= sec.beta))
            throw PreconditionError("verify_pi2: perturbation sizes must lie in (0, beta]");

    Pi2Report rep;
    rep.r2 = std::pow(eps, 0.5 * p);
    rep.Omega = sec.Omega;
    const double Om = sec.Omega;
    // Psi_2 starts at the kappa_12 image of Psi_1 on Sigma_1^out: r1 = Omega^p r2, eps1 = delta.
    const auto psi1 = psi1_series(cfg.model, cfg.series_order);
    const double init = std::pow(Om, p) * psi1.evaluate(std::pow(Om, p) * rep.r2, sec.delta);
    StiffOptions so;
    so.tol = 1e-12;
    const int samples = 2001;
    const SampledFunction psi2 = psi2_flow(cfg.model, rep.r2, -Om, Om, init, samples, so);

    const EvolutionSpec spec = chart_spec(ChartId::K2, cfg.model);
    double lin_max = 0;
    for (double mu : psi2.x) {
        const double v = psi2(mu);
        const auto c = chart_reaction(ChartId::K2, cfg.model, {rep.r2, mu});
        lin_max = std::max(lin_max, std::abs(mu + c[1] + v * (2 * c[2] + v * (3 * c[3] + v * 4 * c[4]))));
    }
    rep.C1 = 3 * lin_max;

    const GridFunction grid(cfg.half_width, cfg.n, 0.0);
    const double spacing = 2 * Om / (samples - 1);
    double base = cfg.dt_k2 > 0 ? cfg.dt_k2 : (cfg.solver.dt > 0 ? cfg.solver.dt : default_dt(grid, 0.0));
    const long per = std::max<long>(1, static_cast<long>(std::ceil(spacing / base - 1e-9)));
    SolverConfig sc = cfg.solver;
    sc.dt = spacing / per;

    // Evolves u2 = Psi2(-Omega) + E0 and calls `at_sample(i, u)` at every Psi2 sample.
    auto evolve = [&](const GridFunction& E0, const std::function<void(int, const GridFunction&)>& at_sample) {
        std::vector<double> v(E0.values());
        for (double& x : v) x += psi2.y[0];
        SolverState st{E0.with_values(std::move(v)), {rep.r2, -Om}, 0.0};
        at_sample(0, st.u);
        for (int i = 1; i < samples; ++i) {
            for (long k = 0; k < per; ++k) st = step(st, spec, sc);
            st.scalars[1] = -Om + i * spacing;  // remove accumulated rounding in mu2
            at_sample(i, st.u);
        }
    };
    auto error_of = [&](int i, const GridFunction& u) {
        std::vector<double> d(u.values());
        for (double& x : d) x -= psi2.y[i];
        return u.with_values(std::move(d));
    };

    // The unperturbed discrete run doubles as the reference for the linear response, so that
    // the time-discretisation drift of the solver cancels from E(T).
    GridFunction reference_end = grid;
    evolve(grid, [&](int i, const GridFunction& u) {
        rep.zero_drift = std::max(rep.zero_drift, error_of(i, u).sup());
        if (i == samples - 1) reference_end = u;
    });

    const GridFunction shape = GridFunction::sample(cfg.half_width, cfg.n, [](double x) { return std::exp(-x * x); });
    const double shape_z = weighted_norms(shape).z_norm;
    for (double a : sizes) {
        Pi2Run run;
        run.size = a;
        const GridFunction E0 = (a / shape_z) * shape;
        evolve(E0, [&](int i, const GridFunction& u) {
            const GridFunction E = error_of(i, u);
            const double z = weighted_norms(E).z_norm;
            const double t = i * spacing;
            run.max_norm = std::max(run.max_norm, z);
            run.gronwall_margin = std::max(run.gronwall_margin, z / a / std::exp(rep.C1 * t));
            run.max_variance = std::max(run.max_variance, E.variance());
            if (i == samples - 1) {
                run.final_norm = z;
                run.final_response = weighted_norms(u - reference_end).z_norm;
            }
        });
        if (run.gronwall_margin > 1 + 1e-9) rep.gronwall_ok = false;
        if (run.max_norm > rep.C0) rep.tube_ok = false;
        rep.runs.push_back(run);
    }
    for (std::size_t k = 1; k < rep.runs.size(); ++k) {
        const double g0 = rep.runs[k - 1].final_response / rep.runs[k - 1].size;
        const double g1 = rep.runs[k].final_response / rep.runs[k].size;
        rep.linear_response_change = std::max(rep.linear_response_change, std::abs(g0 - g1) / g1);
    }

    // spatially constant E0 = c against the scalar ODE started at Psi2(-Omega) + c
    if (!sizes.empty()) {
        const double c = sizes.front();
        rep.constant_size = c;
        auto f = [&](double mu, double y) { return spec.local_rhs(y, {rep.r2, mu}, 0.0); };
        auto df = [&](double mu, double y) {
            const auto cc = chart_reaction(ChartId::K2, cfg.model, {rep.r2, mu});
            return mu + cc[1] + y * (2 * cc[2] + y * (3 * cc[3] + y * 4 * cc[4]));
        };
        std::vector<double> times(psi2.x.begin() + 1, psi2.x.end());
        std::vector<double> oracle = integrate_scalar(f, df, -Om, psi2.y[0] + c, times, so);
        oracle.insert(oracle.begin(), psi2.y[0] + c);
        evolve(GridFunction(cfg.half_width, cfg.n, c), [&](int i, const GridFunction& u) {
            for (double v : u.values())
                rep.constant_oracle_error = std::max(rep.constant_oracle_error, std::abs(v - oracle[i]));
        });
    }
    return rep;
}

// ---------------------------------------------------------------------------

GammaFit fit_gamma(const std::vector<PassageResult>& results, double rho, int s, DistanceMetric metric) {
    std::vector<double> eps;
    for (const auto& r : results) {
        if (std::find(eps.begin(), eps.end(), r.eps) == eps.end()) eps.push_back(r.eps);
    }
    if (eps.size() < 3) throw PreconditionError("fit_gamma: needs at least three results with distinct eps");
    GammaFit fit;
    std::vector<double> x, y;
    for (const auto& r : results) {
        const double d = metric == DistanceMetric::z ? r.z_distance : r.sup_distance;
        if (!(d >= 1e-12)) {
            ++fit.excluded;
            std::ostringstream os;
            os << "eps = " << r.eps << ": distance " << d << " below the 1e-12 floor, excluded";
            fit.warnings.push_back(os.str());
            continue;
        }
        x.push_back(1 / r.eps);
        y.push_back(std::log(d));
    }
    fit.used = static_cast<int>(x.size());
    if (x.size() < 2) throw PreconditionError("fit_gamma: fewer than two points above the floor");
    const LinearFit lf = linear_fit(x, y);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.r_squared = lf.r_squared;
    if (fit.r_squared >= 0.9) {
        fit.gamma = -2 * fit.slope / (rho * rho);
        fit.in_range = fit.gamma > 0 && fit.gamma <= (s == 2 ? 1.0 : 2.0);
    } else {
        fit.warnings.push_back("r^2 below 0.9: gamma not reported");
    }
    return fit;
}

bool monotone_in_eps(const std::vector<PassageResult>& results, DistanceMetric metric) {
    std::vector<const PassageResult*> v;
    for (const auto& r : results) v.push_back(&r);
    std::sort(v.begin(), v.end(), [](auto a, auto b) { return a->eps > b->eps; });
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double a = metric == DistanceMetric::z ? v[i - 1]->z_distance : v[i - 1]->sup_distance;
        const double b = metric == DistanceMetric::z ? v[i]->z_distance : v[i]->sup_distance;
        if (b > a) return false;
    }
    return true;
}

}  // namespace sp
