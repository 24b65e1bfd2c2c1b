#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "slowpassage/errors.hpp"
#include "slowpassage/experiments.hpp"
#include "support.hpp"

using namespace sp;

namespace {

// Small grid so that full passages stay cheap in the unit tests.
ScenarioConfig coarse(int s, double lambda) {
    ScenarioConfig c = default_config();
    c.model = {s, lambda, {}};
    c.half_width = 20.0;
    c.n = 201;
    return c;
}

PassageResult synthetic(double eps, double d) {
    PassageResult r;
    r.eps = eps;
    r.z_distance = d;
    r.sup_distance = d;
    return r;
}

}  // namespace

TEST_SUITE("passage_experiments") {
    TEST_CASE("default configuration") {
        const auto c = default_config();
        CHECK(c.model.s == 2);
        CHECK(c.model.lambda == 1.0);
        CHECK(c.rho == 0.4);
        CHECK(c.chi == 0.05);
        CHECK(c.eps_list == std::vector<double>{0.02, 0.01, 0.005, 0.0025});
        CHECK(c.half_width == 40.0);
        CHECK(c.n == 2049);
        CHECK(c.sections.beta == 0.1);

        const auto sec = resolved_sections(c);
        CHECK(sec.nu == doctest::Approx(0.4));
        CHECK(sec.delta == doctest::Approx(0.02 / 0.16));
        CHECK(sec.Omega * std::sqrt(sec.delta) == doctest::Approx(1.0));
        CHECK(sec.varrho == doctest::Approx(std::pow(sec.delta, 0.25) * 0.4));

        ScenarioConfig p = c;
        p.model.s = 3;
        CHECK(resolved_sections(p).nu == doctest::Approx(std::sqrt(0.4)));
    }

    TEST_CASE("config parsing") {
        const auto c = parse_config(R"(
[model]
s = 3
lambda = -0.5
remainder = [[2, 1, 0, 0.25]]
[grid]
n = 401
[experiment]
eps_list = [0.01, 0.005]
mode = "both"
profile = "wiggle"
)");
        CHECK(c.model.s == 3);
        CHECK(c.model.lambda == -0.5);
        REQUIRE(c.model.remainder.size() == 1);
        CHECK(c.model.remainder[0].a == 2);
        CHECK(c.model.remainder[0].coeff == 0.25);
        CHECK(c.n == 401);
        CHECK(c.half_width == 40.0);
        CHECK(c.mode == RunMode::both);
        CHECK(c.profile == ProfileKind::wiggle);

        try {
            parse_config("[model]\nsigma = 2\n[grid]\nn = \"many\"\n[extra]\nx = 1\n");
            FAIL("expected a usage error");
        } catch (const UsageError& e) {
            auto has = [&](const std::string& k) { return std::find(e.keys.begin(), e.keys.end(), k) != e.keys.end(); };
            CHECK(has("model.sigma"));
            CHECK(has("grid.n"));
            CHECK(e.keys.size() >= 3);
        }
        CHECK_THROWS_AS(parse_config("[model]\ns = 4\n"), UsageError);
        CHECK_THROWS_AS(parse_config("[experiment]\nrho = -1.0\n"), UsageError);
        CHECK_THROWS_AS(parse_config("[experiment]\nmode = \"charts\"\n[sections]\ndelta = 0.1\nOmega = 2.0\n"),
                        UsageError);
        CHECK_NOTHROW(parse_config("[experiment]\nmode = \"direct\"\n[sections]\ndelta = 0.1\nOmega = 2.0\n"));
        CHECK_THROWS_AS(parse_config("this is = = not toml"), UsageError);
        CHECK_THROWS_AS(load_config("/nonexistent/scenario.toml"), UsageError);
    }

    TEST_CASE("shipped scenario files parse") {
        int count = 0;
        for (const auto& e : std::filesystem::directory_iterator(SP_CONFIG_DIR)) {
            if (e.path().extension() != ".toml") continue;
            INFO(e.path().string());
            CHECK_NOTHROW(load_config(e.path().string()));
            ++count;
        }
        CHECK(count >= 6);
        const auto t = load_config(std::string(SP_CONFIG_DIR) + "/transcritical.toml");
        const auto d = default_config();
        CHECK(t.eps_list == d.eps_list);
        CHECK(t.n == d.n);
        CHECK(t.rho == d.rho);
    }

    TEST_CASE("initial profiles are scaled to chi") {
        sptest::Gen gen(81);
        for (ProfileKind k : {ProfileKind::bump, ProfileKind::gaussian, ProfileKind::wiggle}) {
            for (int i = 0; i < 5; ++i) {
                const double chi = gen.log_uniform(1e-3, 0.5);
                const std::uint64_t seed = i == 0 ? 0 : static_cast<std::uint64_t>(gen.integer(1, 1 << 30));
                const GridFunction g = initial_profile(k, 40.0, 2049, chi, seed);
                CHECK(weighted_norms(g).z_norm == doctest::Approx(chi).epsilon(1e-12));
                for (int j = 0; j < g.n(); ++j)
                    if (std::abs(g.x(j)) >= 36.0) CHECK(std::abs(g[j]) <= 1e-12);
            }
        }
        CHECK_THROWS_AS(initial_profile(ProfileKind::bump, 40.0, 2049, 0.0), PreconditionError);
    }

    TEST_CASE("exit branch selection") {
        CHECK(exit_branch({2, 1.0, {}}) == SlowBranch::plus);
        CHECK(exit_branch({3, 0.5, {}}) == SlowBranch::plus);
        CHECK(exit_branch({3, -0.5, {}}) == SlowBranch::minus);
    }

    TEST_CASE("fit_gamma examples") {
        const double rho = 0.4;
        std::vector<PassageResult> exact;
        for (double e : {0.02, 0.01, 0.005, 0.0025}) exact.push_back(synthetic(e, std::exp(-0.5 * rho * rho / (2 * e))));
        const auto f = fit_gamma(exact, rho, 2);
        CHECK(f.gamma == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.in_range);

        sptest::Gen gen(91);
        for (int k = 0; k < 20; ++k) {
            const double g = gen.uniform(0.2, 1.8);
            std::vector<PassageResult> noisy;
            for (double e : {0.02, 0.01, 0.005, 0.0025})
                noisy.push_back(synthetic(e, std::exp(-g * rho * rho / (2 * e)) * gen.uniform(0.95, 1.05)));
            const auto fit = fit_gamma(noisy, rho, 3);
            CHECK(std::abs(fit.gamma - g) <= 0.1 * g);
        }

        CHECK_THROWS_AS(fit_gamma({synthetic(0.01, 1e-3), synthetic(0.005, 1e-5)}, rho, 2), PreconditionError);

        std::vector<PassageResult> floor = exact;
        floor.push_back(synthetic(0.001, 0.0));
        const auto ff = fit_gamma(floor, rho, 2);
        CHECK(ff.excluded == 1);
        CHECK(ff.used == 4);
        CHECK_FALSE(ff.warnings.empty());
        CHECK(ff.gamma == doctest::Approx(0.5).epsilon(1e-10));

        // planted gamma = 1.5: outside (0, 1] for s = 2, inside (0, 2] for s = 3
        std::vector<PassageResult> steep;
        for (double e : {0.02, 0.01, 0.005}) steep.push_back(synthetic(e, std::exp(-1.5 * rho * rho / (2 * e))));
        CHECK_FALSE(fit_gamma(steep, rho, 2).in_range);
        CHECK(fit_gamma(steep, rho, 3).in_range);
    }

    TEST_CASE("monotone_in_eps") {
        CHECK(monotone_in_eps({synthetic(0.005, 1e-4), synthetic(0.02, 1e-2), synthetic(0.01, 1e-3)}));
        CHECK_FALSE(monotone_in_eps({synthetic(0.02, 1e-2), synthetic(0.01, 1e-1)}));
    }

    TEST_CASE("pi1 examples") {
        ScenarioConfig c = coarse(3, 1.0);
        c.n = 33;
        c.sections.delta = 0.1;
        c.sections.nu = 0.5;
        c.solver.dt = 0.01;
        const auto r = verify_pi1(c, {0.01});
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].T_formula == doctest::Approx(45.0));
        CHECK(std::abs(r.records[0].T_measured - 45.0) <= 1e-6 * 45);
        CHECK(r.records[0].exit_formula == doctest::Approx(0.5 * std::pow(0.1, 0.25)));
        CHECK(std::abs(r.records[0].exit_measured - 0.28117066259517454) <= 1e-8);
        CHECK_THROWS_AS(verify_pi1(c, {0.2}), PreconditionError);

        // started on the centre manifold: no transient
        ScenarioConfig m = c;
        m.sections.nu = 0.1;
        m.sections.delta = 0.02;
        m.series_order = 8;
        m.solver.dt = 0.005;
        const auto on = verify_pi1(m, {0.01}, true);
        MESSAGE("pi1 on-manifold exit distance " << on.records[0].exit_distance);
        CHECK(on.records[0].exit_distance <= 1e-6);
    }

    TEST_CASE("pi3 examples") {
        ScenarioConfig c = coarse(3, 1.0);
        c.n = 33;
        c.sections.delta = 0.1;
        c.sections.nu = 0.5;
        c.solver.dt = 0.01;
        const auto r = verify_pi3(c, {0.25});
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].T_formula == doctest::Approx(75.0));
        CHECK(std::abs(r.records[0].T_measured - 75.0) <= 1e-6 * 75);
        CHECK(r.records[0].exit_formula == doctest::Approx(0.00625));
        CHECK(std::abs(r.records[0].exit_measured - 0.00625) <= 1e-8 * 0.00625);
        CHECK_THROWS_AS(verify_pi3(c, {0.6}), PreconditionError);

        ScenarioConfig m = c;
        m.sections.nu = 0.1;
        m.sections.delta = 0.02;
        m.series_order = 8;
        m.solver.dt = 0.005;
        for (double lam : {1.0, -1.0}) {
            m.model.lambda = lam;
            const auto on = verify_pi3(m, {0.05}, true);
            MESSAGE("pi3 on-manifold exit distance " << on.records[0].exit_distance);
            CHECK(on.records[0].exit_distance <= 1e-6);
        }
    }

    TEST_CASE("pi2 examples") {
        ScenarioConfig c = coarse(3, 1.0);
        c.n = 101;
        c.sections.delta = 0.1;
        c.sections.Omega = 1 / std::sqrt(0.1);
        c.dt_k2 = 1e-3;
        const auto r = verify_pi2(c, 1e-4, {1e-3, 5e-4});
        MESSAGE("pi2 zero drift " << r.zero_drift << ", response change " << r.linear_response_change
                                  << ", constant oracle " << r.constant_oracle_error);
        CHECK(r.r2 == doctest::Approx(0.1));
        CHECK(r.zero_drift <= 1e-6);
        CHECK(r.linear_response_change <= 0.2);
        CHECK(r.constant_oracle_error <= 1e-6);
        CHECK(r.tube_ok);
        CHECK(r.gronwall_ok);
        for (const auto& run : r.runs) CHECK(std::isfinite(run.final_norm));

        CHECK_THROWS_AS(verify_pi2(c, 1e-4, {0.5}), PreconditionError);
        ScenarioConfig bad = c;
        bad.sections.Omega = 2.0;
        CHECK_THROWS_AS(verify_pi2(bad, 1e-4, {1e-3}), PreconditionError);
    }

    TEST_CASE("direct passage examples") {
        ScenarioConfig c = coarse(2, 1.0);
        const auto r = run_direct_passage(c, 0.005);
        MESSAGE("s=2 sup distance " << r.sup_distance << ", variance " << r.spatial_variance);
        CHECK(r.sup_distance <= 0.01);
        CHECK(r.spatial_variance <= 1e-6);
        const double dt = default_dt(GridFunction(c.half_width, c.n, 0.0), 0.0);
        CHECK(std::abs(r.physical_T * 0.005 - 2 * c.rho) <= 2 * dt * 0.005);

        ScenarioConfig p = coarse(3, -0.5);
        const auto m = run_direct_passage(p, 0.005);
        CHECK(std::abs(m.exit_profile.mean() + std::sqrt(0.4)) <= 0.05);
        CHECK(m.spatial_variance <= 1e-6);

        ScenarioConfig t = coarse(2, 1.0);
        t.solver.max_steps = 100;
        CHECK_THROWS_AS(run_direct_passage(t, 0.005), TimeoutError);
        CHECK_THROWS_AS(run_direct_passage(c, 0.0), PreconditionError);
    }

    TEST_CASE("exit-time identity over random eps") {
        sptest::Gen gen(111);
        for (int k = 0; k < 4; ++k) {
            ScenarioConfig c = coarse(gen.integer(2, 3), gen.uniform(0.2, 1.0));
            c.n = 81;
            c.solver.dt = gen.uniform(0.01, 0.05);
            const double eps = gen.log_uniform(0.01, 0.05);
            const auto r = run_direct_passage(c, eps);
            CHECK(std::abs(r.physical_T * eps - 2 * c.rho) <= 2 * c.solver.dt * eps);
        }
    }

    TEST_CASE("chart pipeline itinerary") {
        ScenarioConfig c = coarse(2, 1.0);
        c.mode = RunMode::charts;
        c.n = 101;
        c.eps_list = {0.01};
        c.solver.dt = 0.02;
        const auto p = run_chart_pipeline(c, 0.01);
        REQUIRE(p.itinerary.size() == 3);
        CHECK(p.itinerary[0].chart == ChartId::K1);
        CHECK(p.itinerary[1].chart == ChartId::K2);
        CHECK(p.itinerary[2].chart == ChartId::K3);
        for (std::size_t i = 1; i < 3; ++i)
            CHECK(p.itinerary[i].physical_t_start == doctest::Approx(p.itinerary[i - 1].physical_t_end));
        CHECK(p.result.physical_T * 0.01 == doctest::Approx(2 * c.rho).epsilon(1e-2));

        try {
            run_chart_pipeline(c, 0.0);
            FAIL("expected an itinerary error");
        } catch (const ItineraryError& e) {
            CHECK(e.section == "Sigma1_out");
        }
    }

    TEST_CASE("sup_difference across grids") {
        const GridFunction a = GridFunction::sample(5.0, 101, [](double x) { return x; });
        const GridFunction b = GridFunction::sample(5.0, 51, [](double x) { return x; });
        CHECK(sup_difference(a, b) <= 1e-12);
        CHECK(sup_difference(a, GridFunction(5.0, 101, 0.0)) == doctest::Approx(5.0));
    }
}
