#include "xorchain/errors.hpp"

#include <sstream>

namespace xorchain {

namespace {

std::string stability_message(int node, double utilization) {
    std::ostringstream os;
    os << "unstable queue at N" << node << ": utilization " << utilization << " >= 1";
    return os.str();
}

}  // namespace

StabilityError::StabilityError(int node, double utilization)
    : Error(ErrorKind::Stability, stability_message(node, utilization)), node_(node), utilization_(utilization) {}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::InvalidScenario:
        case ErrorKind::Topology:
            return 1;
        case ErrorKind::ModelDomain:
        case ErrorKind::Stability:
        case ErrorKind::Calibration:
            return 2;
        case ErrorKind::Convergence:
            return 3;
        case ErrorKind::Simulation:
            return 4;
    }
    return 1;
}

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config: return "config";
        case ErrorKind::InvalidScenario: return "invalid-scenario";
        case ErrorKind::Topology: return "topology";
        case ErrorKind::ModelDomain: return "model-domain";
        case ErrorKind::Stability: return "stability";
        case ErrorKind::Convergence: return "convergence";
        case ErrorKind::Calibration: return "calibration";
        case ErrorKind::Simulation: return "simulation";
    }
    return "unknown";
}

}  // namespace xorchain
