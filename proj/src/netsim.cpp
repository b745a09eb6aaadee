#include "tapsim/netsim.hpp"

#include <algorithm>

namespace tapsim {

Simulation::Simulation(std::uint64_t seed, VirtualTime link_latency_ms)
    : latency_(link_latency_ms), rng_(splitmix64(seed)) {}

NodeId Simulation::register_node(const std::string& name) {
    if (names_.contains(name)) throw DuplicateNode("node already registered: " + name);
    nodes_.push_back(Node{name, {}, {}, 0, 0});
    const NodeId id = static_cast<NodeId>(nodes_.size());
    names_[name] = id;
    return id;
}

Simulation::Node& Simulation::node_at(NodeId id) {
    if (id < 1 || static_cast<std::size_t>(id) > nodes_.size())
        throw UnknownNode("unknown node id " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id) - 1];
}

const Simulation::Node& Simulation::node_at(NodeId id) const {
    return const_cast<Simulation*>(this)->node_at(id);
}

NodeId Simulation::node_id(const std::string& name) const {
    auto it = names_.find(name);
    if (it == names_.end()) throw UnknownNode("unknown node: " + name);
    return it->second;
}

const std::string& Simulation::node_name(NodeId id) const { return node_at(id).name; }

Endpoint Simulation::endpoint(const std::string& name, int port) const {
    return Endpoint{node_id(name), port};
}

std::string Simulation::endpoint_str(const Endpoint& e) const {
    return node_name(e.node) + ":" + std::to_string(e.port);
}

void Simulation::set_handler(NodeId node, PacketHandler handler) {
    node_at(node).handler = std::move(handler);
}

void Simulation::set_transit(NodeId node, NodeId via) {
    node_at(node);
    node_at(via);
    transit_[node] = via;
}

NodeId Simulation::next_hop(NodeId location, const Packet& p) const {
    // Inbound leg: destination sits behind a transit node we are not at yet.
    if (auto it = transit_.find(p.dst.node); it != transit_.end()) {
        if (location != it->second && location != p.dst.node) return it->second;
    }
    // Outbound leg: the originating node itself sits behind a transit node.
    if (auto it = transit_.find(p.src.node); it != transit_.end()) {
        if (location == p.src.node && p.dst.node != it->second) return it->second;
    }
    return p.dst.node;
}

DeliveryReceipt Simulation::send(Packet p) { return send_from(p.src.node, std::move(p)); }

DeliveryReceipt Simulation::send_from(NodeId location, Packet p) {
    node_at(location);
    node_at(p.src.node);
    node_at(p.dst.node);
    if (p.src.port < 1 || p.src.port > 65535 || p.dst.port < 1 || p.dst.port > 65535)
        throw SimError("port out of range");

    p.seq = next_seq_++;
    p.ts = clock_;
    const NodeId hop_to = next_hop(location, p);
    if (location == p.src.node) ++node_at(location).sent;

    Event ev;
    ev.at = clock_ + latency_;
    ev.order = next_order_++;
    ev.what = PendingPacket{std::move(p), LinkRef{location, hop_to}};
    const DeliveryReceipt receipt{std::get<PendingPacket>(ev.what).packet.seq, ev.at};
    queue_.push(std::move(ev));
    return receipt;
}

void Simulation::schedule(VirtualTime at, std::function<void()> fn) {
    if (at < clock_) throw ClockRegression("cannot schedule in the past");
    Event ev;
    ev.at = at;
    ev.order = next_order_++;
    ev.what = std::move(fn);
    queue_.push(std::move(ev));
}

void Simulation::deliver(PendingPacket& pp, std::vector<Packet>* delivered) {
    Packet& p = pp.packet;

    // MITM hook on this hop acts before the packet crosses the tap point.
    for (auto& hs : hooks_) {
        if (!hs.active || hs.hook.link != pp.hop) continue;
        if (hs.hook.match && !hs.hook.match(p)) continue;
        switch (hs.hook.action) {
            case HookAction::DROP:
                ++hs.drops;
                log_.push_back(LogEntry{p, pp.hop, clock_, Fate::HOOK_DROPPED});
                return;
            case HookAction::OBSERVE:
                ++hs.observes;
                break;
            case HookAction::MODIFY:
                if (hs.hook.transform) p = hs.hook.transform(std::move(p));
                break;
        }
        break;  // at most one hook per link
    }

    for (auto& ts : taps_) {
        const bool here = std::visit(
            [&](auto&& loc) {
                using T = std::decay_t<decltype(loc)>;
                if constexpr (std::is_same_v<T, LinkRef>) return loc == pp.hop;
                else return loc == pp.hop.from || loc == pp.hop.to;
            },
            ts.tap.location);
        if (!here) continue;
        if (ts.tap.filter && !ts.tap.filter(p)) continue;
        CaptureRecord rec;
        rec.ts = clock_;
        rec.seq = p.seq;
        rec.src = endpoint_str(p.src);
        rec.dst = endpoint_str(p.dst);
        rec.transport = p.transport;
        rec.channel = p.channel;
        rec.fragmented = p.fragmented;
        rec.payload = p.payload;
        ts.capture.append(std::move(rec));
    }

    Node& dest = node_at(pp.hop.to);
    const bool final_hop = pp.hop.to == p.dst.node;
    log_.push_back(LogEntry{p, pp.hop, clock_, final_hop ? Fate::DELIVERED : Fate::TRANSIT});
    if (final_hop) {
        ++dest.received;
        dest.inbox.push_back(p);
        if (delivered) delivered->push_back(p);
    }
    if (dest.handler) dest.handler(p);
}

void Simulation::dispatch(Event& ev, std::vector<Packet>* delivered) {
    clock_ = ev.at;
    if (auto* pp = std::get_if<PendingPacket>(&ev.what)) {
        deliver(*pp, delivered);
    } else {
        std::get<std::function<void()>>(ev.what)();
    }
}

std::vector<Packet> Simulation::step(VirtualTime until) {
    if (until < clock_) throw ClockRegression("step target precedes current clock");
    if (dispatching_) throw SimError("step called re-entrantly from a handler");
    dispatching_ = true;
    std::vector<Packet> delivered;
    while (!queue_.empty() && queue_.top().at <= until) {
        Event ev = queue_.top();
        queue_.pop();
        dispatch(ev, &delivered);
    }
    clock_ = until;
    dispatching_ = false;
    return delivered;
}

bool Simulation::run_until(const std::function<bool()>& pred, VirtualTime deadline) {
    if (deadline < clock_) throw ClockRegression("deadline precedes current clock");
    if (dispatching_) throw SimError("run_until called re-entrantly from a handler");
    dispatching_ = true;
    while (true) {
        if (pred()) {
            dispatching_ = false;
            return true;
        }
        if (queue_.empty() || queue_.top().at > deadline) {
            clock_ = deadline;
            dispatching_ = false;
            return pred();
        }
        Event ev = queue_.top();
        queue_.pop();
        dispatch(ev, nullptr);
    }
}

TapHandle Simulation::attach_tap(Tap tap) {
    const auto known = [this](NodeId id) {
        return id >= 1 && static_cast<std::size_t>(id) <= nodes_.size();
    };
    const bool ok = std::visit(
        [&](auto&& loc) {
            using T = std::decay_t<decltype(loc)>;
            if constexpr (std::is_same_v<T, LinkRef>) return known(loc.from) && known(loc.to);
            else return known(loc);
        },
        tap.location);
    if (!ok) throw UnknownLocation("tap location references an unknown node");
    taps_.push_back(TapState{std::move(tap), {}});
    return static_cast<TapHandle>(taps_.size()) - 1;
}

const CaptureFile& Simulation::tap_capture(TapHandle h) const {
    if (h < 0 || static_cast<std::size_t>(h) >= taps_.size())
        throw UnknownLocation("bad tap handle");
    return taps_[static_cast<std::size_t>(h)].capture;
}

const std::string& Simulation::tap_name(TapHandle h) const {
    if (h < 0 || static_cast<std::size_t>(h) >= taps_.size())
        throw UnknownLocation("bad tap handle");
    return taps_[static_cast<std::size_t>(h)].tap.name;
}

std::vector<TapHandle> Simulation::taps() const {
    std::vector<TapHandle> out(taps_.size());
    for (std::size_t i = 0; i < taps_.size(); ++i) out[i] = static_cast<TapHandle>(i);
    return out;
}

HookHandle Simulation::attach_hook(MitmHook hook) {
    node_at(hook.link.from);
    node_at(hook.link.to);
    for (const auto& hs : hooks_)
        if (hs.active && hs.hook.link == hook.link)
            throw HookConflict("hook already installed on link");
    hooks_.push_back(HookState{std::move(hook), true, 0, 0});
    return static_cast<HookHandle>(hooks_.size()) - 1;
}

void Simulation::remove_hook(HookHandle h) {
    if (h < 0 || static_cast<std::size_t>(h) >= hooks_.size())
        throw UnknownLocation("bad hook handle");
    hooks_[static_cast<std::size_t>(h)].active = false;
}

std::uint64_t Simulation::hook_drop_count(HookHandle h) const {
    if (h < 0 || static_cast<std::size_t>(h) >= hooks_.size())
        throw UnknownLocation("bad hook handle");
    return hooks_[static_cast<std::size_t>(h)].drops;
}

std::uint64_t Simulation::hook_observe_count(HookHandle h) const {
    if (h < 0 || static_cast<std::size_t>(h) >= hooks_.size())
        throw UnknownLocation("bad hook handle");
    return hooks_[static_cast<std::size_t>(h)].observes;
}

const std::vector<Packet>& Simulation::inbox(NodeId node) const { return node_at(node).inbox; }

std::uint64_t Simulation::sent_count(NodeId node) const { return node_at(node).sent; }

std::uint64_t Simulation::received_count(NodeId node) const { return node_at(node).received; }

}  // namespace tapsim
