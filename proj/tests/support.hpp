#pragma once

// Shared helpers for the unit tests: the frozen oracle file and small hand-rolled
// random generators for property tests.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "slowpassage/grid.hpp"

#ifndef SP_ORACLE_FILE
#error "SP_ORACLE_FILE must point at tests/oracles/frozen.json"
#endif

namespace sptest {

inline const nlohmann::json& oracles() {
    static const nlohmann::json data = [] {
        std::ifstream f(SP_ORACLE_FILE);
        if (!f) throw std::runtime_error("cannot open oracle file " + std::string(SP_ORACLE_FILE));
        return nlohmann::json::parse(f);
    }();
    return data;
}

inline double oracle_scalar(const std::string& key) { return oracles().at("scalar").at(key).get<double>(); }

// Deterministic generator with the few distributions the properties need.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

    // Odd grid size in [lo, hi].
    int odd(int lo, int hi) {
        int n = integer(lo, hi);
        return n % 2 == 0 ? n + 1 : n;
    }

    // Smooth localized function: a constant plus up to four Gaussian / sech bumps with
    // random centres, widths and amplitudes; flat in the outer part of [-L, L].
    sp::GridFunction smooth(double half_width, int n, double amplitude = 1.0) {
        const double c0 = uniform(-amplitude, amplitude);
        const int k = integer(1, 4);
        std::vector<double> a(k), c(k), w(k);
        std::vector<int> kind(k);
        for (int i = 0; i < k; ++i) {
            a[i] = uniform(-amplitude, amplitude);
            c[i] = uniform(-0.3, 0.3) * half_width;
            w[i] = uniform(0.5, 0.1 * half_width + 0.5);
            kind[i] = integer(0, 1);
        }
        return sp::GridFunction::sample(half_width, n, [&](double x) {
            double v = c0;
            for (int i = 0; i < k; ++i) {
                const double z = (x - c[i]) / w[i];
                v += a[i] * (kind[i] == 0 ? std::exp(-z * z) : 1.0 / std::cosh(z));
            }
            return v;
        });
    }

    // Independent uniform values in [lo, hi] at every node (rough data).
    sp::GridFunction rough(double half_width, int n, double lo, double hi) {
        std::vector<double> v(n);
        for (double& x : v) x = uniform(lo, hi);
        return sp::GridFunction(half_width, n, std::move(v));
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace sptest
