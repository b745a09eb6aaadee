// Deterministic in-process network simulation.
//
// Nodes exchange Packets over implicit point-to-point links with a fixed
// per-hop latency. A single event queue ordered by (time, event sequence)
// drives deliveries and timers, so two runs with the same seed and the same
// call order produce identical wire traffic. Passive taps copy traffic into
// capture files; at most one MITM hook per link can observe, drop or rewrite
// packets in flight. A node may be put behind a transit node (the gateway
// topology): its traffic then hops through the transit node's handler in
// both directions.
#ifndef TAPSIM_NETSIM_HPP
#define TAPSIM_NETSIM_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tapsim/capture.hpp"
#include "tapsim/util.hpp"

namespace tapsim {

class Simulation;

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DuplicateNode : SimError {
    using SimError::SimError;
};
struct UnknownNode : SimError {
    using SimError::SimError;
};
struct UnknownLocation : SimError {
    using SimError::SimError;
};
struct ClockRegression : SimError {
    using SimError::SimError;
};
struct HookConflict : SimError {
    using SimError::SimError;
};

// Directed link between two nodes, identified by the hop it carries.
struct LinkRef {
    NodeId from = 0;
    NodeId to = 0;
    auto operator<=>(const LinkRef&) const = default;
};

// Tap location: a directed link or a single node (either direction).
using TapLocation = std::variant<LinkRef, NodeId>;

struct Tap {
    std::string name;
    TapLocation location;
    std::function<bool(const Packet&)> filter;  // empty = match everything
};

enum class HookAction { OBSERVE, DROP, MODIFY };

struct MitmHook {
    LinkRef link;
    std::function<bool(const Packet&)> match;
    HookAction action = HookAction::OBSERVE;
    std::function<Packet(Packet)> transform;  // MODIFY only
};

using TapHandle = int;
using HookHandle = int;
using PacketHandler = std::function<void(const Packet&)>;

struct DeliveryReceipt {
    std::uint64_t seq = 0;
    VirtualTime deliver_at = 0;
};

class Simulation {
public:
    explicit Simulation(std::uint64_t seed, VirtualTime link_latency_ms = 1);

    // --- topology ---
    NodeId register_node(const std::string& name);
    NodeId node_id(const std::string& name) const;              // throws UnknownNode
    const std::string& node_name(NodeId id) const;              // throws UnknownNode
    Endpoint endpoint(const std::string& name, int port) const;
    std::string endpoint_str(const Endpoint& e) const;
    void set_handler(NodeId node, PacketHandler handler);
    // Route all traffic originating at or destined to `node` through `via`.
    void set_transit(NodeId node, NodeId via);

    // --- traffic ---
    // Send as the packet's source node. seq and ts are assigned here.
    DeliveryReceipt send(Packet p);
    // Re-send from an on-path node (transit forwarding); headers untouched.
    DeliveryReceipt send_from(NodeId location, Packet p);
    void schedule(VirtualTime at, std::function<void()> fn);

    // Deliver everything due up to `until`, advance the clock to `until`.
    // Returns the packets that reached their final destination.
    std::vector<Packet> step(VirtualTime until);
    // Process events in order until pred() holds or the clock hits deadline.
    bool run_until(const std::function<bool()>& pred, VirtualTime deadline);
    VirtualTime now() const { return clock_; }

    // --- observation ---
    TapHandle attach_tap(Tap tap);
    const CaptureFile& tap_capture(TapHandle h) const;
    const std::string& tap_name(TapHandle h) const;
    std::vector<TapHandle> taps() const;

    HookHandle attach_hook(MitmHook hook);  // throws HookConflict
    void remove_hook(HookHandle h);
    std::uint64_t hook_drop_count(HookHandle h) const;
    std::uint64_t hook_observe_count(HookHandle h) const;

    // --- accounting ---
    enum class Fate { DELIVERED, TRANSIT, HOOK_DROPPED };
    struct LogEntry {
        Packet packet;
        LinkRef hop;
        VirtualTime at = 0;
        Fate fate = Fate::DELIVERED;
    };
    const std::vector<LogEntry>& delivery_log() const { return log_; }
    const std::vector<Packet>& inbox(NodeId node) const;
    std::uint64_t sent_count(NodeId node) const;      // packets originated by node
    std::uint64_t received_count(NodeId node) const;  // final deliveries to node
    std::size_t node_count() const { return nodes_.size(); }

    DetRng& rng() { return rng_; }

private:
    struct Node {
        std::string name;
        PacketHandler handler;
        std::vector<Packet> inbox;
        std::uint64_t sent = 0;
        std::uint64_t received = 0;
    };
    struct PendingPacket {
        Packet packet;
        LinkRef hop;
    };
    struct Event {
        VirtualTime at = 0;
        std::uint64_t order = 0;  // global tie-break, assigned at enqueue
        std::variant<PendingPacket, std::function<void()>> what;
    };
    struct EventAfter {
        bool operator()(const Event& a, const Event& b) const {
            return std::tie(a.at, a.order) > std::tie(b.at, b.order);
        }
    };
    struct HookState {
        MitmHook hook;
        bool active = true;
        std::uint64_t drops = 0;
        std::uint64_t observes = 0;
    };
    struct TapState {
        Tap tap;
        CaptureFile capture;
    };

    Node& node_at(NodeId id);
    const Node& node_at(NodeId id) const;
    NodeId next_hop(NodeId location, const Packet& p) const;
    void dispatch(Event& ev, std::vector<Packet>* delivered);
    void deliver(PendingPacket& pp, std::vector<Packet>* delivered);

    std::vector<Node> nodes_;
    std::map<std::string, NodeId> names_;
    std::map<NodeId, NodeId> transit_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::vector<TapState> taps_;
    std::vector<HookState> hooks_;
    std::vector<LogEntry> log_;
    VirtualTime clock_ = 0;
    VirtualTime latency_;
    std::uint64_t next_seq_ = 1;
    std::uint64_t next_order_ = 1;
    DetRng rng_;
    bool dispatching_ = false;
};

}  // namespace tapsim

#endif
