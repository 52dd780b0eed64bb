#include <cmath>
#include <vector>

#include "doctest.h"
#include "xorchain/analytic.hpp"

using namespace xorchain;

namespace {

LinkProbMap uniform_p(const ChainTopology& t, const Scenario& s, double value) {
    LinkProbMap p;
    for (const Link& l : active_links(t, s)) p[l] = value;
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

const std::vector<Scenario> coding_scenarios{
    {2, false, true, 1, 0.5}, {2, true, true, 7, 0.5}, {2, false, true, 1, 1.0}, {2, true, true, 3, 0.25}};

}  // namespace

TEST_SUITE("analytic") {

TEST_CASE("single flow without retransmission follows the link products") {
    const auto t = build_chain(5);
    const Scenario s{1, false, false, 1, 0};
    const LinkProbMap p{{{1, 2}, 0.9}, {{2, 3}, 0.8}, {{3, 4}, 1.0}, {{4, 5}, 1.0}};
    const auto ledger = rates_no_coding(t, s, p, ModelParams{0, 250, 10, 0});
    const std::vector<double> expected{10, 9, 7.2, 7.2, 7.2};
    for (NodeId i = 1; i <= 5; ++i) CHECK(ledger.at(i).total == doctest::Approx(expected[i - 1]).epsilon(1e-14));
    CHECK(throughput(ledger, s) == doctest::Approx(7.2).epsilon(1e-14));
}

TEST_CASE("single flow with retransmission telescopes") {
    const auto t = build_chain(5);
    const Scenario s{1, true, false, 7, 0};
    const auto ledger = rates_no_coding(t, s, uniform_p(t, s, 0.8), ModelParams{0, 250, 10, 0});
    for (NodeId i = 1; i <= 4; ++i) CHECK(ledger.at(i).total == doctest::Approx(12.5).epsilon(1e-14));
    CHECK(ledger.at(5).total == doctest::Approx(10).epsilon(1e-14));

    LinkProbMap zero = uniform_p(t, s, 0.8);
    zero[{2, 3}] = 0.0;
    CHECK_THROWS_AS(rates_no_coding(t, s, zero, ModelParams{0, 250, 10, 0}), ModelDomainError);
}

TEST_CASE("two-flow throughput sums the two destinations") {
    RateLedger ledger(5);
    ledger.at(1).flow[1] = 3;
    ledger.at(5).flow[0] = 4;
    CHECK(throughput(ledger, Scenario{2, false, false, 1, 0}) == 7);
}

TEST_CASE("encoder split") {
    const auto t = build_chain(5);
    const Scenario s{2, false, true, 1, 0.5};
    const auto ledger = rates_coding(t, s, uniform_p(t, s, 1.0), ModelParams{0, 250, 4, 10});
    for (NodeId i = 2; i <= 4; ++i) {
        const auto& n = ledger.at(i);
        CHECK(n.flow[0] == doctest::Approx(4));
        CHECK(n.flow[1] == doctest::Approx(10));
        CHECK(n.coded_queue == doctest::Approx(2));
        CHECK(n.native_queue[0] == doctest::Approx(2));
        CHECK(n.native_queue[1] == doctest::Approx(8));
    }
}

TEST_CASE("retransmission identity for steps 3 and 4") {
    const auto t = build_chain(5);
    for (double g : {10.0, 14.286, 20.0, 25.0}) {
        for (double d : {0.0, 1e-4, 3e-4, 6e-4}) {
            for (int flows : {1, 2}) {
                const Scenario s{flows, true, false, 7, 0};
                const ModelParams p{d, 250, g, flows == 2 ? g : 0.0};
                const auto r = analyze(t, s, p);
                CHECK(rel(r.theta, p.gamma_1 + p.gamma_k) <= 1e-9);
            }
        }
    }
}

TEST_CASE("coding with retransmission approaches the offered load") {
    const auto t = build_chain(5);
    const Scenario s{2, true, true, 7, 0.5};
    for (double g : {10.0, 14.286, 20.0}) {
        const auto r = analyze(t, s, ModelParams{2e-4, 250, g, g});
        CHECK(rel(r.theta, 2 * g) <= 5e-3);
    }
}

TEST_CASE("conservation identity at every coding node") {
    for (int k : {3, 5, 7}) {
        const auto t = build_chain(k);
        for (const Scenario& s : coding_scenarios) {
            for (double d : {0.0, 2e-4, 5e-4}) {
                const auto r = analyze(t, s, ModelParams{d, 250, 12, 9});
                for (NodeId i = 1; i <= k; ++i) {
                    const auto& n = r.ledger.at(i);
                    const double lhs = n.native_queue[0] + n.native_queue[1] + 2 * n.coded_queue;
                    const double rhs = n.flow[0] + n.flow[1];
                    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, rhs));
                }
            }
        }
    }
}

TEST_CASE("boundary zeros hold exactly") {
    for (int k : {3, 5, 8}) {
        const auto t = build_chain(k);
        for (const Scenario& s : coding_scenarios) {
            const ModelParams p{3e-4, 250, 11, 13};
            const auto r = analyze(t, s, p);
            const auto& first = r.ledger.at(1);
            const auto& last = r.ledger.at(k);
            CHECK(first.native_out[1] == 0.0);
            CHECK(last.native_out[0] == 0.0);
            CHECK(first.coded_out == 0.0);
            CHECK(last.coded_out == 0.0);
            CHECK(first.coded_queue == 0.0);
            CHECK(last.coded_queue == 0.0);
            CHECK(r.ledger.at(1).coded_in[0] == 0.0);
            CHECK(r.ledger.at(2).coded_in[0] == 0.0);
            CHECK(r.ledger.at(k - 1).coded_in[1] == 0.0);
            CHECK(r.ledger.at(k).coded_in[1] == 0.0);
            if (!s.retransmission) {
                CHECK(first.native_out[0] == p.gamma_1);
                CHECK(last.native_out[1] == p.gamma_k);
            }
        }
    }
}

TEST_CASE("zero mixing probability reproduces the no-coding ledger") {
    const auto t = build_chain(5);
    for (bool retx : {false, true}) {
        const Scenario coded{2, retx, true, 7, 0.0};
        const Scenario plain{2, retx, false, 7, 0.0};
        const ModelParams p{4e-4, 250, 14, 9};
        const auto a = analyze(t, coded, p);
        const auto b = analyze(t, plain, p);
        CHECK(std::abs(a.theta - b.theta) <= 1e-8);
        for (NodeId i = 1; i <= 5; ++i) {
            CHECK(a.ledger.at(i).coded_queue == 0.0);
            CHECK(std::abs(a.ledger.at(i).total - b.ledger.at(i).total) <= 1e-8);
        }
    }
}

TEST_CASE("throughput is bounded, lossless at zero delta and non-increasing in delta") {
    const auto t = build_chain(5);
    const std::vector<Scenario> all{{1, false, false, 1, 0}, {2, false, false, 1, 0}, {1, true, false, 7, 0},
                                    {2, true, false, 7, 0}, {2, false, true, 1, 0.5}, {2, true, true, 7, 0.5}};
    for (const Scenario& s : all) {
        const double g = 15;
        const double offered = s.flows == 2 ? 2 * g : g;
        double prev = offered;
        for (double d : {0.0, 1e-5, 1e-4, 1e-3}) {
            const auto r = analyze(t, s, ModelParams{d, 250, g, s.flows == 2 ? g : 0.0});
            if (d == 0.0) CHECK(r.theta == offered);
            CHECK(r.theta <= offered * (1 + 1e-12));
            CHECK(r.theta <= prev * (1 + 1e-12));
            prev = r.theta;
        }
    }
}

TEST_CASE("utilization and stability") {
    const auto t = build_chain(5);
    const Scenario s{1, false, false, 1, 0};
    const auto r = analyze(t, s, ModelParams{0.0, 250, 10, 0});
    CHECK(r.theta == 10);
    REQUIRE(r.utilization.size() == 5);
    for (double rho : r.utilization) CHECK(rho == doctest::Approx(0.04));

    try {
        analyze(t, s, ModelParams{0.0, 250, 300, 0});
        FAIL("expected a stability error");
    } catch (const StabilityError& e) {
        CHECK(e.node() == 1);
        CHECK(e.utilization() >= 1.0);
    }
}

TEST_CASE("single flow ledger reproduces the product recursion") {
    const auto t = build_chain(6);
    const Scenario s{1, false, false, 1, 0};
    const auto r = analyze(t, s, ModelParams{5e-4, 250, 20, 0});
    double lambda = 20;
    for (NodeId i = 1; i <= 6; ++i) {
        CHECK(std::abs(r.ledger.at(i).total - lambda) <= 1e-12 * lambda);
        if (i < 6) lambda *= r.p.at({i, i + 1});
    }
}

TEST_CASE("saturated window is a model-domain error") {
    const auto t = build_chain(5);
    CHECK_THROWS_AS(analyze(t, Scenario{2, true, false, 7, 0}, ModelParams{2e-2, 250, 40, 40}), Error);
    CHECK_THROWS_AS(success_probability(std::vector<double>{30.0}, 2e-2), ModelDomainError);
}

}
