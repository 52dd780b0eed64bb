#pragma once

#include <stdexcept>
#include <string>

namespace xorchain {

enum class ErrorKind {
    Config,
    InvalidScenario,
    Topology,
    ModelDomain,
    Stability,
    Convergence,
    Calibration,
    Simulation,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class ScenarioError : public Error {
public:
    explicit ScenarioError(const std::string& what) : Error(ErrorKind::InvalidScenario, what) {}
};

class TopologyError : public Error {
public:
    explicit TopologyError(const std::string& what) : Error(ErrorKind::Topology, what) {}
};

// Collision window saturated, a zero success probability on a retransmitting
// link, or a numerically negative rate outside tolerance.
class ModelDomainError : public Error {
public:
    explicit ModelDomainError(const std::string& what) : Error(ErrorKind::ModelDomain, what) {}
};

class StabilityError : public Error {
public:
    StabilityError(int node, double utilization);
    int node() const noexcept { return node_; }
    double utilization() const noexcept { return utilization_; }

private:
    int node_;
    double utilization_;
};

class CalibrationError : public Error {
public:
    explicit CalibrationError(const std::string& what) : Error(ErrorKind::Calibration, what) {}
};

class SimulationError : public Error {
public:
    explicit SimulationError(const std::string& what) : Error(ErrorKind::Simulation, what) {}
};

// Process exit code for an error category (0 is reserved for success).
int exit_code(ErrorKind kind) noexcept;

const char* to_string(ErrorKind kind) noexcept;

}  // namespace xorchain
