#include <doctest.h>

#include <cmath>

#include "slowpassage/errors.hpp"
#include "slowpassage/manifolds.hpp"
#include "support.hpp"

using namespace sp;

namespace {

RemainderPolynomial remainder_from(const nlohmann::json& j) {
    RemainderPolynomial r;
    for (const auto& t : j) r.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>(), t[3].get<double>()});
    return r;
}

double residual_slope(const NormalFormModel& m, ChartId c, Branch b, int order) {
    std::vector<double> x, y;
    for (double t : {1e-2, 1e-3, 1e-4}) {
        x.push_back(std::log(t));
        y.push_back(std::log(series_invariance_residual(m, c, b, order, t, t)));
    }
    const double xm = (x[0] + x[1] + x[2]) / 3, ym = (y[0] + y[1] + y[2]) / 3;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 3; ++i) {
        sxy += (x[i] - xm) * (y[i] - ym);
        sxx += (x[i] - xm) * (x[i] - xm);
    }
    return sxy / sxx;
}

}  // namespace

TEST_SUITE("manifolds") {
    TEST_CASE("psi1_series examples") {
        const auto a = psi1_series({3, 2.0, {}}, 2);
        CHECK(a.coeff(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
        for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {0, 2}})
            CHECK(std::abs(a.coeff(i, j)) <= 1e-14);

        const auto b = psi1_series({2, 1.0, {}}, 1);
        CHECK(b.coeff(0, 1) == doctest::Approx(1.0).epsilon(1e-14));

        for (int s : {2, 3}) {
            const auto z = psi1_series({s, 0.0, {}}, 6);
            for (const auto& [k, v] : z.coefficients) CHECK(v == 0.0);
        }
        CHECK_THROWS_AS(psi1_series({3, 1.0, {}}, 9), PreconditionError);
    }

    TEST_CASE("psi3_series examples") {
        const auto p = psi3_series({3, 1.0, {}}, Branch::plus, 1);
        CHECK(p.coeff(0, 0) == doctest::Approx(1.0));
        CHECK(p.coeff(0, 1) == doctest::Approx(-0.25).epsilon(1e-14));
        CHECK(std::abs(p.coeff(1, 0)) <= 1e-14);

        const auto t = psi3_series({2, 1.0, {}}, Branch::single, 1);
        CHECK(t.coeff(0, 0) == doctest::Approx(1.0));
        CHECK(std::abs(t.coeff(0, 1)) <= 1e-14);
        CHECK(std::abs(t.coeff(1, 0)) <= 1e-14);

        for (double lam : {0.3, 1.0, 1.7}) {
            const auto q = psi3_series({2, lam, {}}, Branch::single, 3);
            CHECK(q.coeff(0, 1) == doctest::Approx(-(1 - lam)).epsilon(1e-10));
        }

        // odd symmetry of the pure pitchfork on the eps3 = 0 slice
        const auto plus = psi3_series({3, 0.5, {}}, Branch::plus, 5);
        const auto minus = psi3_series({3, 0.5, {}}, Branch::minus, 5);
        for (int i = 0; i <= 5; ++i) CHECK(minus.coeff(i, 0) == doctest::Approx(-plus.coeff(i, 0)).epsilon(1e-14));
        for (double r : {0.05, 0.1}) CHECK(minus.evaluate(r, 0) == doctest::Approx(-plus.evaluate(r, 0)));

        CHECK_THROWS_AS(psi3_series({2, 1.0, {}}, Branch::minus, 2), PreconditionError);
        CHECK_THROWS_AS(psi3_series({3, 1.0, {}}, Branch::single, 2), PreconditionError);
    }

    TEST_CASE("series coefficients against the symbolic oracle") {
        for (const auto& c : sptest::oracles()["series"]) {
            const std::string name = c["name"];
            INFO(name);
            const NormalFormModel m{c["s"].get<int>(), c["lambda"].get<double>(), remainder_from(c["remainder"])};
            const int order = c["order"];
            const bool k1 = c["chart"] == "K1";
            Branch b = Branch::single;
            if (!k1 && m.s == 3) b = c["coefficients"]["0,0"].get<double>() > 0 ? Branch::plus : Branch::minus;
            const auto series = k1 ? psi1_series(m, order) : psi3_series(m, b, order);
            for (const auto& [key, val] : c["coefficients"].items()) {
                const auto comma = key.find(',');
                const int i = std::stoi(key.substr(0, comma)), j = std::stoi(key.substr(comma + 1));
                const double ref = val.get<double>();
                INFO("coefficient " << key);
                CHECK(std::abs(series.coeff(i, j) - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
            }
        }
    }

    TEST_CASE("series invariance residual scales like t^(N+1)") {
        const std::vector<NormalFormModel> models{
            {2, 1.0, {}}, {2, 0.5, {{3, 0, 0, 0.5}, {1, 0, 1, -0.3}}}, {3, 1.0, {}}, {3, -0.5, {{2, 1, 0, 0.7}}}};
        for (const auto& m : models) {
            for (int N : {2, 4, 6}) {
                CHECK(residual_slope(m, ChartId::K1, Branch::single, N) >= N + 0.8);
                if (m.s == 3) {
                    CHECK(residual_slope(m, ChartId::K3, Branch::plus, N) >= N + 0.8);
                    CHECK(residual_slope(m, ChartId::K3, Branch::minus, N) >= N + 0.8);
                } else if (m.lambda != 1.0 || !m.remainder.empty()) {
                    CHECK(residual_slope(m, ChartId::K3, Branch::single, N) >= N + 0.8);
                }
            }
        }
        // s = 2, lambda = 1, no remainder: Psi3 = 1 is exactly invariant
        CHECK(series_invariance_residual({2, 1.0, {}}, ChartId::K3, Branch::single, 3, 1e-2, 1e-2) == 0.0);
    }

    TEST_CASE("series JSON dump") {
        const auto s = psi1_series({3, 2.0, {}}, 2);
        const auto j = nlohmann::json::parse(s.to_json());
        CHECK(j["1,1"].get<double>() == doctest::Approx(2.0));
        CHECK(j.size() == 6);
    }

    TEST_CASE("psi2_flow examples") {
        const auto z = psi2_flow({3, 1.0, {}}, 0.0, -5.0, 5.0, 0.0, 201);
        for (double v : z.y) CHECK(v == 0.0);

        const auto f = psi2_flow({2, 1.0, {}}, 0.1, -10.0, 10.0, 0.1, 2001);
        const double end = f.y.back();
        MESSAGE("psi2 endpoint " << end);
        CHECK(std::abs(end - sptest::oracle_scalar("psi2_s2_lam1_end")) <= 1e-6);
        CHECK(std::abs(end - 10.00998) <= 0.05);

        try {
            psi2_flow({2, -1.0, {}}, 0.1, -10.0, 10.0, -0.1, 2001);
            FAIL("expected an escape");
        } catch (const EscapeError& e) {
            CHECK(std::abs(e.where - sptest::oracle_scalar("psi2_s2_lam_minus1_escape_mu")) <= 0.05);
        }
    }

    TEST_CASE("psi2_flow tracks the root families of mu2 Psi - Psi^3") {
        for (double sign : {1.0, -1.0}) {
            const auto f = psi2_flow({3, 0.0, {}}, 0.0, 1.0, 10.0, sign * 1.0, 901);
            CHECK(std::abs(f.y.back() - sign * std::sqrt(10.0)) <= 1.0 / 100);
        }
        // zero family for mu2 < 0 from a perturbed start
        const auto g = psi2_flow({3, 0.0, {}}, 0.0, -10.0, -1.0, 0.5, 901);
        CHECK(std::abs(g.y.back()) <= 1e-2);
    }

    TEST_CASE("slow_manifold examples") {
        const auto s2 = slow_manifold({2, 1.0, {}}, SlowBranch::plus, 0.0);
        for (double mu : {0.1, 0.3, 0.7}) CHECK(s2(mu) == mu);
        const auto s3 = slow_manifold({3, 1.0, {}}, SlowBranch::plus, 0.0);
        for (double mu : {0.1, 0.3, 0.7}) CHECK(s3(mu) == doctest::Approx(std::sqrt(mu)).epsilon(1e-15));
        const auto s3m = slow_manifold({3, 1.0, {}}, SlowBranch::minus, 0.0);
        CHECK(s3m(0.3) == doctest::Approx(-std::sqrt(0.3)).epsilon(1e-15));

        CHECK(std::abs(slow_manifold({2, 1.0, {}}, SlowBranch::plus, 0.01)(0.5) -
                       sptest::oracle_scalar("slow_s2_lam1_eps0.01_mu0.5")) <= 1e-3);
        CHECK(std::abs(slow_manifold({2, 0.5, {}}, SlowBranch::plus, 0.01)(0.5) -
                       sptest::oracle_scalar("slow_s2_lam0.5_eps0.01_mu0.5")) <= 1e-6);
        CHECK(std::abs(slow_manifold({3, 1.0, {}}, SlowBranch::plus, 0.005)(0.5) -
                       sptest::oracle_scalar("slow_s3_lam1_eps0.005_mu0.5")) <= 1e-6);
        CHECK(std::abs(slow_manifold({2, 1.0, {}}, SlowBranch::zero, 0.01)(-0.5) -
                       sptest::oracle_scalar("slow_s2_lam1_eps0.01_mu-0.5")) <= 1e-6);

        CHECK_THROWS_AS(slow_manifold({2, 1.0, {}}, SlowBranch::minus, 0.01), PreconditionError);
        CHECK_THROWS_AS(slow_manifold({2, 1.0, {}}, SlowBranch::plus, 0.01)(-0.3), DomainError);
        CHECK_THROWS_AS(slow_manifold({3, 1.0, {}}, SlowBranch::plus, 0.01)(0.0), DomainError);
    }

    TEST_CASE("slow manifold residual on the branch intervals") {
        // The optimally truncated expansion is accurate to ~exp(-mu^2 / (2 eps)); the residual
        // bound is asserted where mu^2 >= 40 eps.
        sptest::Gen gen(41);
        for (int k = 0; k < 12; ++k) {
            const int s = gen.integer(2, 3);
            const NormalFormModel m{s, gen.uniform(-1, 1), {}};
            const double eps = gen.log_uniform(1e-3, 2e-3);
            std::vector<SlowBranch> branches{SlowBranch::zero, SlowBranch::plus};
            if (s == 3) branches.push_back(SlowBranch::minus);
            for (SlowBranch b : branches) {
                const auto sm = slow_manifold(m, b, eps);
                for (int i = 0; i <= 10; ++i) {
                    const double mu = (b == SlowBranch::zero ? -1 : 1) * (0.3 + 0.02 * i);
                    REQUIRE(mu * mu >= 40 * eps);
                    CHECK(sm.residual(m, mu) <= 1e-6);
                }
            }
        }
    }

    TEST_CASE("integrate_homogeneous examples") {
        const auto z = integrate_homogeneous({3, 0.0, {}}, 0.01, 0.0, -0.4, 0.4);
        for (double v : z.phi) CHECK(v == 0.0);

        const auto a = integrate_homogeneous({2, 1.0, {}}, 0.01, 0.0, -0.4, 0.4);
        const double ref_a = sptest::oracle_scalar("homog_s2_lam1_eps0.01");
        CHECK(std::abs(a.phi.back() - 0.4) <= 2e-2);
        CHECK(std::abs(a.phi.back() - ref_a) <= 1e-8 * std::abs(ref_a));
        CHECK(a.mu.back() == doctest::Approx(0.4).epsilon(1e-14));

        const auto b = integrate_homogeneous({3, -0.5, {}}, 0.01, 0.0, -0.4, 0.4);
        const double ref_b = sptest::oracle_scalar("homog_s3_lam-0.5_eps0.01");
        CHECK(b.phi.back() < 0);
        CHECK(std::abs(b.phi.back() + std::sqrt(0.4)) <= 5e-2);
        CHECK(std::abs(b.phi.back() - ref_b) <= 1e-8 * std::abs(ref_b));

        for (std::size_t i = 1; i < a.mu.size(); ++i) {
            CHECK(a.mu[i] > a.mu[i - 1]);
            CHECK(a.mu[i] == doctest::Approx(-0.4 + 0.01 * a.t[i]).epsilon(1e-12));
        }
        CHECK(a.phi_at_mu(0.4) == doctest::Approx(a.phi.back()));

        CHECK_THROWS_AS(integrate_homogeneous({2, -1.0, {}}, 0.01, 0.0, -0.4, 0.4), EscapeError);
        CHECK_THROWS_AS(integrate_homogeneous({2, 1.0, {}}, 0.0, 0.0, -0.4, 0.4), PreconditionError);
    }

    TEST_CASE("integrate_scalar against the logistic oracle") {
        const auto y = integrate_scalar([](double, double u) { return u - u * u; }, [](double, double u) { return 1 - 2 * u; },
                                        0.0, 0.1, {0.5, 1.0});
        CHECK(std::abs(y[1] - sptest::oracle_scalar("logistic_t1")) <= 1e-9);
    }
}
