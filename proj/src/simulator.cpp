#include "xorchain/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <exception>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

namespace xorchain {

InstabilityError::InstabilityError(NodeId node, std::size_t length)
    : SimulationError("unstable: queue at N" + std::to_string(node) + " reached " + std::to_string(length) +
                      " packets"),
      node_(node) {}

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += kGoldenGamma;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Same-time events run in this order.
enum class EventType : int {
    TxEnd = 0,  // ACK outcome is resolved inside the transmission-end handler
    Arrival = 2,
    ServiceStart = 3,
};

struct Event {
    double time;
    EventType type;
    NodeId node;
    std::uint64_t seq;
    std::uint64_t ref;

    bool operator>(const Event& o) const noexcept {
        if (time != o.time) return time > o.time;
        if (type != o.type) return type > o.type;
        if (node != o.node) return node > o.node;
        return seq > o.seq;
    }
};

// Ids of packets a node has held, oldest evicted first.
class DecodeHistory {
public:
    explicit DecodeHistory(std::size_t capacity) : capacity_(capacity) {}

    void insert(std::uint64_t id) {
        if (!ids_.insert(id).second) return;
        order_.push_back(id);
        if (order_.size() > capacity_) {
            ids_.erase(order_.front());
            order_.pop_front();
        }
    }
    bool contains(std::uint64_t id) const { return ids_.count(id) != 0; }

private:
    std::size_t capacity_;
    std::deque<std::uint64_t> order_;
    std::unordered_set<std::uint64_t> ids_;
};

struct Transmission {
    std::uint64_t id = 0;
    NodeId tx = 0;
    double start = 0.0;
    double end = 0.0;
    Packet packet;
    // rx[0] is the next hop of packet.flow; rx[1] (coded only) of the partner.
    std::array<NodeId, 2> rx{};
    int receivers = 0;
    std::array<bool, 2> corrupted{};
    bool ended = false;
};

struct NodeState {
    std::deque<Packet> native;
    std::deque<Packet> coded;
    bool transmitting = false;
    bool start_pending = false;
    std::array<DecodeHistory, 2> history;
    double queue_area = 0.0;
    double last_touch = 0.0;
    std::uint64_t departures_measured = 0;

    explicit NodeState(std::size_t capacity) : history{DecodeHistory(capacity), DecodeHistory(capacity)} {}
    std::size_t length() const noexcept { return native.size() + coded.size(); }
};

void check_options(const SimOptions& opts) {
    if (!(opts.warmup_s >= 0.0)) throw ConfigError("warmup must be >= 0");
    if (!(opts.horizon_s > opts.warmup_s)) throw ConfigError("horizon must exceed warmup");
    if (opts.queue_cap < 1) throw ConfigError("queue_cap must be >= 1");
    if (opts.history_capacity < 1) throw ConfigError("history_capacity must be >= 1");
    if (opts.sense_hops < 1) throw ConfigError("sense_hops must be >= 1");
    if (opts.batches < 2) throw ConfigError("batches must be >= 2");
    if (!std::isfinite(opts.defer_jitter_s)) throw ConfigError("defer_jitter must be finite");
}

class Engine {
public:
    Engine(const ChainTopology& topo, const Scenario& scenario, const ModelParams& params, const SimOptions& opts)
        : topo_(topo),
          scenario_(scenario),
          params_(params),
          opts_(opts),
          beta_(scenario.retransmission ? scenario.beta : 1),
          jitter_(opts.defer_jitter_s > 0.0 ? opts.defer_jitter_s : 2.0 / params.mu),
          rng_(opts.seed),
          batch_counts_(static_cast<std::size_t>(opts.batches), 0) {
        nodes_.reserve(static_cast<std::size_t>(topo.size()));
        for (int i = 0; i < topo.size(); ++i) nodes_.emplace_back(opts.history_capacity);
        for (const Link& link : active_links(topo, scenario)) result_.links[link] = {};
    }

    SimResult run() {
        if (params_.gamma_1 > 0.0) schedule(exponential(params_.gamma_1), EventType::Arrival, 1);
        if (scenario_.flows == 2 && params_.gamma_k > 0.0) {
            schedule(exponential(params_.gamma_k), EventType::Arrival, topo_.size());
        }

        while (!events_.empty() && events_.top().time <= opts_.horizon_s) {
            const Event ev = events_.top();
            events_.pop();
            now_ = ev.time;
            ++result_.events;
            switch (ev.type) {
                case EventType::TxEnd: on_tx_end(ev.ref); break;
                case EventType::Arrival: on_source(ev.node); break;
                case EventType::ServiceStart: on_service_start(ev.node); break;
            }
        }
        now_ = opts_.horizon_s;
        return finish();
    }

private:
    NodeState& node(NodeId i) { return nodes_[static_cast<std::size_t>(i - 1)]; }
    FlowAccount& account(int flow) { return result_.flows[static_cast<std::size_t>(flow - 1)]; }

    double exponential(double rate) { return std::exponential_distribution<double>(rate)(rng_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

    void schedule(double time, EventType type, NodeId at, std::uint64_t ref = 0) {
        events_.push(Event{time, type, at, next_seq_++, ref});
    }

    void trace(const char* event, NodeId at, const Packet& pkt, const std::string& outcome) {
        if (opts_.trace == nullptr) return;
        char head[64];
        std::snprintf(head, sizeof head, "%.9f", now_);
        *opts_.trace << head << ' ' << event << ' ' << at << ' ' << pkt.id << ' ' << pkt.flow << ' '
                     << (pkt.kind == PacketKind::Coded ? "coded" : "native") << ' ' << pkt.attempts << ' '
                     << outcome << '\n';
    }

    // Accumulates post-warm-up queue occupancy up to now.
    void touch(NodeId i) {
        NodeState& n = node(i);
        const double from = std::max(n.last_touch, opts_.warmup_s);
        if (now_ > from) n.queue_area += static_cast<double>(n.length()) * (now_ - from);
        n.last_touch = now_;
    }

    void on_source(NodeId at) {
        const int flow = at == 1 ? 1 : 2;
        Packet pkt;
        pkt.id = next_packet_id_++;
        pkt.flow = flow;
        ++account(flow).generated;
        receive(at, pkt, "source");
        schedule(now_ + exponential(flow == 1 ? params_.gamma_1 : params_.gamma_k), EventType::Arrival, at);
    }

    // A native packet enters a node, either generated there or received from the previous hop.
    void receive(NodeId at, Packet pkt, const char* how) {
        pkt.kind = PacketKind::Native;
        pkt.partner_id = 0;
        pkt.attempts = 0;
        if (at == flow_destination(topo_, pkt.flow)) {
            FlowAccount& acc = account(pkt.flow);
            ++acc.delivered;
            if (now_ >= opts_.warmup_s) {
                ++acc.delivered_measured;
                const double window = opts_.horizon_s - opts_.warmup_s;
                auto b = static_cast<std::size_t>((now_ - opts_.warmup_s) / window * opts_.batches);
                ++batch_counts_[std::min(b, batch_counts_.size() - 1)];
            }
            trace("deliver", at, pkt, "-");
            return;
        }

        NodeState& n = node(at);
        n.history[static_cast<std::size_t>(pkt.flow - 1)].insert(pkt.id);
        trace("arrival", at, pkt, how);
        touch(at);

        bool coded = false;
        if (scenario_.coding && !topo_.is_endpoint(at)) {
            const auto partner = std::find_if(n.native.begin(), n.native.end(),
                                              [&](const Packet& q) { return q.flow != pkt.flow; });
            if (partner != n.native.end() && uniform() < scenario_.p_mix) {
                Packet mix = pkt;
                mix.kind = PacketKind::Coded;
                mix.partner_id = partner->id;
                mix.attempts = std::max(pkt.attempts, partner->attempts);
                n.native.erase(partner);
                n.coded.push_back(mix);
                trace("encode", at, mix, "partner=" + std::to_string(mix.partner_id));
                coded = true;
            }
        }
        if (!coded) n.native.push_back(pkt);

        if (n.length() > opts_.queue_cap) throw InstabilityError(at, n.length());
        request_service(at);
    }

    void request_service(NodeId at) {
        NodeState& n = node(at);
        if (n.transmitting || n.start_pending || n.length() == 0) return;
        n.start_pending = true;
        schedule(now_, EventType::ServiceStart, at);
    }

    // End of the latest sensed transmission if the node currently senses the channel busy.
    std::optional<double> sensed_busy_until(NodeId at) const {
        std::optional<double> until;
        for (const Transmission& t : air_) {
            if (t.tx == at || topo_.hops(at, t.tx) > opts_.sense_hops) continue;
            const double from = t.start + params_.delta;
            const double to = t.end + params_.delta;
            if (from <= now_ && now_ < to) until = std::max(until.value_or(to), to);
        }
        return until;
    }

    void prune_air() {
        std::erase_if(air_, [&](const Transmission& t) { return t.ended && t.end + params_.delta <= now_; });
    }

    void on_service_start(NodeId at) {
        NodeState& n = node(at);
        n.start_pending = false;
        if (n.transmitting || n.length() == 0) return;
        prune_air();
        if (const auto busy = sensed_busy_until(at)) {
            n.start_pending = true;
            schedule(*busy + jitter_ * uniform(), EventType::ServiceStart, at);
            return;
        }
        start_transmission(at);
    }

    // Does `who`, transmitting over [s, e], overlap reception at `rx` of a
    // transmission by `sender` over [s_rx, e_rx]?
    bool corrupts(NodeId who, double s, double e, NodeId sender, NodeId rx, double s_rx, double e_rx) const {
        if (who == sender) return false;
        if (who == rx) {
            // Half duplex: its own transmission against the signal arriving at it.
            return s < e_rx + params_.delta && e > s_rx + params_.delta;
        }
        if (!topo_.adjacent(who, rx)) return false;  // capture effect
        return s < e_rx && e > s_rx;
    }

    void start_transmission(NodeId at) {
        NodeState& n = node(at);
        touch(at);
        Transmission t;
        if (!n.coded.empty()) {
            t.packet = n.coded.front();
            n.coded.pop_front();
        } else {
            t.packet = n.native.front();
            n.native.pop_front();
        }
        ++t.packet.attempts;
        t.id = next_tx_id_++;
        t.tx = at;
        t.start = now_;
        t.end = now_ + exponential(params_.mu);
        t.rx[0] = next_hop(at, t.packet.flow);
        t.receivers = 1;
        if (t.packet.kind == PacketKind::Coded) {
            t.rx[1] = next_hop(at, t.packet.partner_flow());
            t.receivers = 2;
        }

        for (Transmission& other : air_) {
            for (int a = 0; a < other.receivers; ++a) {
                if (corrupts(at, t.start, t.end, other.tx, other.rx[a], other.start, other.end)) {
                    other.corrupted[a] = true;
                }
            }
            for (int b = 0; b < t.receivers; ++b) {
                if (corrupts(other.tx, other.start, other.end, at, t.rx[b], t.start, t.end)) {
                    t.corrupted[b] = true;
                }
            }
        }

        if (now_ >= opts_.warmup_s) ++n.departures_measured;
        n.transmitting = true;
        std::string to = "to=" + std::to_string(t.rx[0]);
        if (t.receivers == 2) to += "," + std::to_string(t.rx[1]);
        trace("tx_start", at, t.packet, to);
        schedule(t.end, EventType::TxEnd, at, t.id);
        air_.push_back(t);
    }

    void retry_or_drop(NodeId at, Packet pkt, bool coded) {
        NodeState& n = node(at);
        if (pkt.attempts >= beta_) {
            ++account(pkt.flow).dropped;
            if (coded) ++account(pkt.partner_flow()).dropped;
            trace("drop", at, pkt, "beta");
            return;
        }
        touch(at);
        if (coded) {
            n.coded.push_front(pkt);
        } else {
            n.native.push_front(pkt);
        }
        trace("requeue", at, pkt, "head");
    }

    void on_tx_end(std::uint64_t id) {
        const auto it = std::find_if(air_.begin(), air_.end(), [&](const Transmission& t) { return t.id == id; });
        it->ended = true;
        const Transmission t = *it;
        NodeState& sender = node(t.tx);
        sender.transmitting = false;
        trace("tx_end", t.tx, t.packet, "-");

        std::array<bool, 2> ok{};
        for (int b = 0; b < t.receivers; ++b) {
            ok[static_cast<std::size_t>(b)] = !t.corrupted[static_cast<std::size_t>(b)];
            LinkCounters& c = result_.links[Link{t.tx, t.rx[static_cast<std::size_t>(b)]}];
            ++c.attempts;
            if (ok[static_cast<std::size_t>(b)]) {
                ++c.successes;
            } else {
                ++c.collisions;
            }
            trace("ack", t.rx[static_cast<std::size_t>(b)], t.packet, ok[static_cast<std::size_t>(b)] ? "ok" : "fail");
        }

        if (t.packet.kind == PacketKind::Native) {
            if (ok[0]) {
                receive(t.rx[0], t.packet, "relay");
            } else {
                retry_or_drop(t.tx, t.packet, false);
            }
        } else {
            Packet first = t.packet;
            first.kind = PacketKind::Native;
            first.partner_id = 0;
            Packet second = t.packet;
            second.kind = PacketKind::Native;
            second.id = t.packet.partner_id;
            second.flow = t.packet.partner_flow();
            second.partner_id = 0;
            const std::array<Packet, 2> parts{first, second};

            for (std::size_t b = 0; b < 2; ++b) {
                if (!ok[b]) continue;
                const Packet& mine = parts[b];
                const Packet& other = parts[1 - b];
                const NodeId rx = t.rx[b];
                if (node(rx).history[static_cast<std::size_t>(other.flow - 1)].contains(other.id)) {
                    receive(rx, mine, "relay");
                } else {
                    ++account(mine.flow).discarded_undecodable;
                    trace("discard", rx, mine, "undecodable");
                }
            }
            if (!ok[0] && !ok[1]) {
                retry_or_drop(t.tx, t.packet, true);
            } else if (!ok[0] || !ok[1]) {
                retry_or_drop(t.tx, parts[ok[0] ? 1 : 0], false);
            }
        }
        request_service(t.tx);
    }

    SimResult finish() {
        const double window = opts_.horizon_s - opts_.warmup_s;
        for (NodeId i = 1; i <= topo_.size(); ++i) {
            touch(i);
            NodeState& n = node(i);
            result_.mean_queue.push_back(n.queue_area / window);
            result_.departure_rate.push_back(static_cast<double>(n.departures_measured) / window);
            for (const Packet& q : n.native) ++account(q.flow).queued;
            for (const Packet& q : n.coded) {
                ++account(q.flow).queued;
                ++account(q.partner_flow()).queued;
            }
        }
        for (const Transmission& t : air_) {
            if (t.ended) continue;
            ++account(t.packet.flow).in_flight;
            if (t.packet.kind == PacketKind::Coded) ++account(t.packet.partner_flow()).in_flight;
        }

        const auto delivered = result_.flows[0].delivered_measured + result_.flows[1].delivered_measured;
        result_.theta = static_cast<double>(delivered) / window;

        const double width = window / opts_.batches;
        double mean = 0.0;
        for (auto c : batch_counts_) mean += static_cast<double>(c) / width;
        mean /= opts_.batches;
        double ss = 0.0;
        for (auto c : batch_counts_) ss += std::pow(static_cast<double>(c) / width - mean, 2);
        const double sd = std::sqrt(ss / (opts_.batches - 1));
        result_.std_error = sd / std::sqrt(static_cast<double>(opts_.batches));
        result_.ci_half_width = student_t95(opts_.batches - 1) * result_.std_error;
        result_.replications = 1;
        result_.seeds = {opts_.seed};
        return std::move(result_);
    }

    const ChainTopology& topo_;
    const Scenario scenario_;
    const ModelParams params_;
    const SimOptions opts_;
    const int beta_;
    const double jitter_;

    std::mt19937_64 rng_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::vector<NodeState> nodes_;
    std::vector<Transmission> air_;  // in progress or still audible somewhere
    std::vector<std::uint64_t> batch_counts_;
    SimResult result_;
    double now_ = 0.0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_packet_id_ = 1;
    std::uint64_t next_tx_id_ = 1;
};

}  // namespace

double student_t95(int dof) {
    if (dof < 1) return 0.0;
    const boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 0.975);
}

std::uint64_t replication_seed(std::uint64_t master, int index) noexcept {
    if (index == 0) return master;
    return splitmix64(master + static_cast<std::uint64_t>(index) * kGoldenGamma);
}

SimResult simulate(const ChainTopology& topo, const Scenario& scenario, const ModelParams& params,
                   const SimOptions& opts) {
    validate(scenario, params, topo);
    check_options(opts);
    Engine engine(topo, scenario, params, opts);
    return engine.run();
}

SimResult run_replications(const ChainTopology& topo, const Scenario& scenario, const ModelParams& params,
                           const SimOptions& opts, int n_reps, unsigned threads) {
    if (n_reps < 1) throw ConfigError("replications must be >= 1");
    if (n_reps == 1) return simulate(topo, scenario, params, opts);

    validate(scenario, params, topo);
    check_options(opts);

    const auto n = static_cast<std::size_t>(n_reps);
    std::vector<std::optional<SimResult>> runs(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            SimOptions o = opts;
            o.seed = replication_seed(opts.seed, static_cast<int>(i));
            if (i != 0) o.trace = nullptr;
            try {
                runs[i] = simulate(topo, scenario, params, o);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n));
    if (opts.trace != nullptr || workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::ostringstream failed;
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i]) continue;
        std::string why;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            why = e.what();
        }
        failed << (failed.tellp() > 0 ? "; " : "") << "seed " << replication_seed(opts.seed, static_cast<int>(i))
               << ": " << why;
    }
    if (failed.tellp() > 0) throw SimulationError("replications failed: " + failed.str());

    SimResult agg;
    agg.replications = n_reps;
    agg.mean_queue.assign(static_cast<std::size_t>(topo.size()), 0.0);
    agg.departure_rate.assign(static_cast<std::size_t>(topo.size()), 0.0);
    double sum = 0.0;
    for (const auto& r : runs) sum += r->theta;
    agg.theta = sum / n_reps;
    double ss = 0.0;
    for (const auto& r : runs) {
        ss += (r->theta - agg.theta) * (r->theta - agg.theta);
        agg.seeds.push_back(r->seeds.front());
        agg.events += r->events;
        for (const auto& [link, c] : r->links) {
            LinkCounters& a = agg.links[link];
            a.attempts += c.attempts;
            a.successes += c.successes;
            a.collisions += c.collisions;
        }
        for (std::size_t i = 0; i < agg.mean_queue.size(); ++i) {
            agg.mean_queue[i] += r->mean_queue[i] / n_reps;
            agg.departure_rate[i] += r->departure_rate[i] / n_reps;
        }
        for (std::size_t f = 0; f < 2; ++f) {
            FlowAccount& a = agg.flows[f];
            const FlowAccount& b = r->flows[f];
            a.generated += b.generated;
            a.delivered += b.delivered;
            a.delivered_measured += b.delivered_measured;
            a.dropped += b.dropped;
            a.queued += b.queued;
            a.in_flight += b.in_flight;
            a.discarded_undecodable += b.discarded_undecodable;
        }
    }
    agg.std_error = std::sqrt(ss / (n_reps - 1)) / std::sqrt(static_cast<double>(n_reps));
    agg.ci_half_width = student_t95(n_reps - 1) * agg.std_error;
    return agg;
}

}  // namespace xorchain
