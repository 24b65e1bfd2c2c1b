#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct PreconditionError : Error {
    using Error::Error;
};

// A defining inequality of a singularity class or coefficient formula failed.
struct ConditionViolation : Error {
    std::string condition;
    ConditionViolation(const std::string& cond, const std::string& msg)
        : Error(msg), condition(cond) {}
};

struct SolverFailure : Error {
    double worst_residual;
    SolverFailure(const std::string& msg, double res) : Error(msg), worst_residual(res) {}
};

struct SteppingError : Error {
    using Error::Error;
};

struct BlowUpError : Error {
    double time;
    BlowUpError(const std::string& msg, double t) : Error(msg), time(t) {}
};

// Trajectory left the admissible region (|u| above the escape ceiling).
struct EscapeError : Error {
    double where;  // time or mu at which the escape was detected
    EscapeError(const std::string& msg, double w) : Error(msg), where(w) {}
};

struct SeriesFailure : Error {
    int order;
    SeriesFailure(const std::string& msg, int o) : Error(msg), order(o) {}
};

struct QuadratureFailure : Error {
    double residual;
    QuadratureFailure(const std::string& msg, double r) : Error(msg), residual(r) {}
};

struct ItineraryError : Error {
    std::string section;
    ItineraryError(const std::string& sec, const std::string& msg) : Error(msg), section(sec) {}
};

struct UsageError : Error {
    std::vector<std::string> keys;
    UsageError(const std::string& msg, std::vector<std::string> k = {})
        : Error(msg), keys(std::move(k)) {}
};

}  // namespace sp
