#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xorchain/errors.hpp"
#include "xorchain/rate_ledger.hpp"
#include "xorchain/topology.hpp"

namespace xorchain {

using LinkProbMap = std::map<Link, double>;

// Which of a node's transmit rates occupies the channel.
enum class RateSelector {
    Total,      // every packet the node forwards (relays)
    FlowOne,    // N_1 only ever sends flow-1 packets
    FlowTwo,    // N_k only ever sends flow-2 packets
};

struct Interferer {
    NodeId node = 0;
    RateSelector rate = RateSelector::Total;

    bool operator==(const Interferer&) const = default;
};

// What a coding relay's interference rate counts.
enum class InterferenceRate { Total, NativeOnly };

std::string to_string(InterferenceRate mode);
InterferenceRate parse_interference_rate(const std::string& text);

struct SolverOptions {
    double damping = 0.5;
    double tolerance = 1e-10;
    int max_iterations = 10000;
    InterferenceRate interference = InterferenceRate::Total;
};

struct SolverDiagnostics {
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, SolverDiagnostics diagnostics)
        : Error(ErrorKind::Convergence, what), diagnostics_(diagnostics) {}
    const SolverDiagnostics& diagnostics() const noexcept { return diagnostics_; }

private:
    SolverDiagnostics diagnostics_;
};

void check(const SolverOptions& opts);

// Nodes whose transmissions can collide with reception on i -> j: j itself and
// j's neighbours other than i. Silent nodes (N_k with one flow) are omitted.
std::vector<Interferer> interferer_set(const ChainTopology& topo, NodeId i, NodeId j, const Scenario& scenario);

// Channel-occupying rate of one interferer under the given ledger.
double interferer_rate(const Interferer& who, const RateLedger& ledger, const Scenario& scenario,
                       InterferenceRate mode = InterferenceRate::Total);

// Product of (1 - 2*delta*rate). Throws ModelDomainError when a factor would be <= 0.
double success_probability(std::span<const double> rates, double delta);
double success_probability(std::span<const Interferer> interferers, double delta, const RateLedger& ledger,
                           const Scenario& scenario, InterferenceRate mode = InterferenceRate::Total);

// F(lambda): success probability of every active link.
LinkProbMap evaluate_success(const ChainTopology& topo, const Scenario& scenario, double delta,
                             const RateLedger& ledger, InterferenceRate mode = InterferenceRate::Total);

using RateModel = std::function<RateLedger(const LinkProbMap&)>;

struct JointSolution {
    LinkProbMap p;
    RateLedger ledger;
    SolverDiagnostics diagnostics;
};

// Damped fixed point of p = F(rate_model(p)), started from p = 1.
JointSolution solve_joint(const ChainTopology& topo, const Scenario& scenario, const ModelParams& params,
                          const RateModel& rate_model, const SolverOptions& opts = {});

}  // namespace xorchain
