#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <toml++/toml.hpp>

#include "slowpassage/errors.hpp"
#include "slowpassage/experiments.hpp"

namespace sp {

std::string to_string(ProfileKind k) {
    switch (k) {
        case ProfileKind::bump: return "bump";
        case ProfileKind::gaussian: return "gaussian";
        case ProfileKind::wiggle: return "wiggle";
    }
    return "?";
}

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::direct: return "direct";
        case RunMode::charts: return "charts";
        case RunMode::both: return "both";
    }
    return "?";
}

ScenarioConfig default_config() {
    ScenarioConfig c;
    c.solver.escape_ceiling = 10.0;
    return c;
}

namespace {

// Collects offending keys instead of failing on the first one.
class Reader {
public:
    explicit Reader(const toml::table& root) : root_(root) {}

    void check_tables(const std::set<std::string>& allowed) {
        for (const auto& [k, v] : root_) {
            const std::string key(k.str());
            if (!allowed.count(key) || !v.is_table()) bad_.push_back(key);
        }
    }

    void check_keys(const std::string& table, const std::set<std::string>& allowed) {
        const auto* t = root_[table].as_table();
        if (!t) return;
        for (const auto& [k, v] : *t) {
            (void)v;
            const std::string key(k.str());
            if (!allowed.count(key)) bad_.push_back(table + "." + key);
        }
    }

    void real(const std::string& table, const std::string& key, double& out) {
        const auto node = root_[table][key];
        if (!node) return;
        if (auto v = node.value<double>())
            out = *v;
        else
            bad_.push_back(table + "." + key);
    }

    template <class Int>
    void integer(const std::string& table, const std::string& key, Int& out) {
        const auto node = root_[table][key];
        if (!node) return;
        if (auto v = node.as_integer())
            out = static_cast<Int>(v->get());
        else
            bad_.push_back(table + "." + key);
    }

    void string(const std::string& table, const std::string& key, std::string& out) {
        const auto node = root_[table][key];
        if (!node) return;
        if (auto v = node.value<std::string>())
            out = *v;
        else
            bad_.push_back(table + "." + key);
    }

    void real_list(const std::string& table, const std::string& key, std::vector<double>& out) {
        const auto node = root_[table][key];
        if (!node) return;
        const auto* arr = node.as_array();
        if (!arr) {
            bad_.push_back(table + "." + key);
            return;
        }
        std::vector<double> v;
        for (const auto& e : *arr) {
            auto d = e.value<double>();
            if (!d) {
                bad_.push_back(table + "." + key);
                return;
            }
            v.push_back(*d);
        }
        out = std::move(v);
    }

    void remainder(RemainderPolynomial& out) {
        const auto node = root_["model"]["remainder"];
        if (!node) return;
        const auto* arr = node.as_array();
        if (!arr) {
            bad_.push_back("model.remainder");
            return;
        }
        RemainderPolynomial r;
        for (const auto& e : *arr) {
            const auto* term = e.as_array();
            if (!term || term->size() != 4) {
                bad_.push_back("model.remainder");
                return;
            }
            Monomial m;
            auto a = (*term)[0].as_integer(), b = (*term)[1].as_integer(), c = (*term)[2].as_integer();
            auto coeff = (*term)[3].value<double>();
            if (!a || !b || !c || !coeff) {
                bad_.push_back("model.remainder");
                return;
            }
            m.a = static_cast<int>(a->get());
            m.b = static_cast<int>(b->get());
            m.c = static_cast<int>(c->get());
            m.coeff = *coeff;
            r.push_back(m);
        }
        out = std::move(r);
    }

    void fail(const std::string& key) { bad_.push_back(key); }
    const std::vector<std::string>& bad() const { return bad_; }

private:
    const toml::table& root_;
    std::vector<std::string> bad_;
};

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& k : v) s += (s.empty() ? "" : ", ") + k;
    return s;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "config is not valid TOML: " << e.description() << " (line " << e.source().begin.line << ")";
        throw UsageError(os.str());
    }
    ScenarioConfig c = default_config();
    Reader rd(root);
    rd.check_tables({"model", "grid", "solver", "sections", "experiment"});
    rd.check_keys("model", {"s", "lambda", "remainder"});
    rd.check_keys("grid", {"half_width", "n"});
    rd.check_keys("solver",
                  {"dt", "dt_k2", "cfl_guard", "transport", "max_steps", "event_tol", "escape_ceiling"});
    rd.check_keys("sections", {"nu", "delta", "beta", "Omega", "varrho"});
    rd.check_keys("experiment", {"rho", "chi", "eps_list", "profile", "mode", "seed", "jobs", "series_order",
                                 "eps1_list", "r3_list", "pi2_eps", "perturbations", "omegas"});

    rd.integer("model", "s", c.model.s);
    rd.real("model", "lambda", c.model.lambda);
    rd.remainder(c.model.remainder);
    rd.real("grid", "half_width", c.half_width);
    rd.integer("grid", "n", c.n);
    rd.real("solver", "dt", c.solver.dt);
    rd.real("solver", "dt_k2", c.dt_k2);
    rd.real("solver", "cfl_guard", c.solver.cfl_guard);
    std::string transport = "upwind_first";
    rd.string("solver", "transport", transport);
    rd.integer("solver", "max_steps", c.solver.max_steps);
    rd.real("solver", "event_tol", c.solver.event_tol);
    rd.real("solver", "escape_ceiling", c.solver.escape_ceiling);
    rd.real("sections", "nu", c.sections.nu);
    rd.real("sections", "delta", c.sections.delta);
    rd.real("sections", "beta", c.sections.beta);
    rd.real("sections", "Omega", c.sections.Omega);
    rd.real("sections", "varrho", c.sections.varrho);
    rd.real("experiment", "rho", c.rho);
    rd.real("experiment", "chi", c.chi);
    rd.real_list("experiment", "eps_list", c.eps_list);
    std::string profile = to_string(c.profile), mode = to_string(c.mode);
    rd.string("experiment", "profile", profile);
    rd.string("experiment", "mode", mode);
    rd.integer("experiment", "seed", c.seed);
    rd.integer("experiment", "jobs", c.jobs);
    rd.integer("experiment", "series_order", c.series_order);
    rd.real_list("experiment", "eps1_list", c.eps1_list);
    rd.real_list("experiment", "r3_list", c.r3_list);
    rd.real("experiment", "pi2_eps", c.pi2_eps);
    rd.real_list("experiment", "perturbations", c.perturbations);
    rd.real_list("experiment", "omegas", c.omegas);

    if (transport == "upwind_first")
        c.solver.transport = TransportScheme::upwind_first;
    else if (transport == "central_second")
        c.solver.transport = TransportScheme::central_second;
    else
        rd.fail("solver.transport");
    if (profile == "bump")
        c.profile = ProfileKind::bump;
    else if (profile == "gaussian")
        c.profile = ProfileKind::gaussian;
    else if (profile == "wiggle")
        c.profile = ProfileKind::wiggle;
    else
        rd.fail("experiment.profile");
    if (mode == "direct")
        c.mode = RunMode::direct;
    else if (mode == "charts")
        c.mode = RunMode::charts;
    else if (mode == "both")
        c.mode = RunMode::both;
    else
        rd.fail("experiment.mode");

    // value constraints
    if (c.model.s != 2 && c.model.s != 3) rd.fail("model.s");
    try {
        if (c.model.s == 2 || c.model.s == 3) validate_model(c.model);
    } catch (const ConditionViolation&) {
        rd.fail("model.remainder");
    }
    if (!(c.half_width > 0)) rd.fail("grid.half_width");
    if (c.n < 8 || c.n % 2 == 0) rd.fail("grid.n");
    if (!(c.solver.dt >= 0)) rd.fail("solver.dt");
    if (!(c.dt_k2 >= 0)) rd.fail("solver.dt_k2");
    if (!(c.solver.cfl_guard > 0 && c.solver.cfl_guard <= 1)) rd.fail("solver.cfl_guard");
    if (c.solver.max_steps <= 0) rd.fail("solver.max_steps");
    if (!(c.rho > 0)) rd.fail("experiment.rho");
    if (!(c.chi > 0)) rd.fail("experiment.chi");
    if (c.eps_list.empty()) rd.fail("experiment.eps_list");
    for (double e : c.eps_list)
        if (!(e > 0)) {
            rd.fail("experiment.eps_list");
            break;
        }
    if (c.jobs < 1) rd.fail("experiment.jobs");
    if (c.series_order < 0 || c.series_order > 8) rd.fail("experiment.series_order");
    if (c.mode != RunMode::direct && std::isfinite(c.sections.Omega) && std::isfinite(c.sections.delta) &&
        std::abs(c.sections.Omega * std::sqrt(c.sections.delta) - 1) > 1e-9) {
        rd.fail("sections.Omega");
        rd.fail("sections.delta");
    }
    if (!rd.bad().empty()) throw UsageError("invalid or unknown config keys: " + join(rd.bad()), rd.bad());
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read config file " + path, {"--config"});
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

Sections resolved_sections(const ScenarioConfig& cfg) {
    Sections s = cfg.sections;
    const int p = cfg.model.s - 1;
    if (!std::isfinite(s.nu)) s.nu = std::pow(cfg.rho, 1.0 / p);
    if (!std::isfinite(s.delta)) {
        if (std::isfinite(s.Omega))
            s.delta = 1.0 / (s.Omega * s.Omega);
        else {
            double emax = 0;
            for (double e : cfg.eps_list) emax = std::max(emax, e);
            s.delta = emax / (cfg.rho * cfg.rho);
        }
    }
    if (!std::isfinite(s.Omega)) s.Omega = 1.0 / std::sqrt(s.delta);
    if (!std::isfinite(s.varrho)) s.varrho = std::pow(s.delta, 0.25) * s.nu;
    return s;
}

}  // namespace sp
