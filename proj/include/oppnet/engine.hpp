#pragma once

#include "core.hpp"
#include "protocols.hpp"
#include "social.hpp"
#include "trace.hpp"
#include "workload.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace oppnet
{
    enum class LogKind
    {
        Create,
        // Completed transmission from -> to.
        Transfer,
        // Transmission cut by the end of its contact.
        Abort,
        Deliver,
        // Copy placed in the buffer of `to`.
        Store,
        // Copy dropped from `to` to make room (drop-oldest).
        Evict,
        // Incoming copy larger than the whole buffer of `to`.
        Reject,
        // Carrier discards its copy after handing it to the destination.
        Remove,
        Expire
    };

    inline const char *to_string(LogKind k)
    {
        switch (k)
        {
        case LogKind::Create:
            return "create";
        case LogKind::Transfer:
            return "transfer";
        case LogKind::Abort:
            return "abort";
        case LogKind::Deliver:
            return "deliver";
        case LogKind::Store:
            return "store";
        case LogKind::Evict:
            return "evict";
        case LogKind::Reject:
            return "reject";
        case LogKind::Remove:
            return "remove";
        case LogKind::Expire:
            return "expire";
        }
        return "?";
    }

    struct LogRecord
    {
        SimTime time = 0;
        LogKind kind = LogKind::Create;
        MessageId msg = 0;
        NodeId from = 0;
        NodeId to = 0;
        std::size_t size = 0;

        bool operator==(const LogRecord &) const = default;
    };

    inline void write_event_log(std::ostream &out, const std::vector<LogRecord> &log)
    {
        for (const auto &r : log)
        {
            nlohmann::json j{{"time", r.time}, {"kind", to_string(r.kind)}, {"msg", r.msg},
                             {"from", r.from}, {"to", r.to},            {"size", r.size}};
            out << j.dump() << '\n';
        }
    }

    struct BufferedCopy
    {
        MessageId id = 0;
        SimTime received = 0;
        std::size_t size = 0;
    };

    class NodeRuntime
    {
    public:
        NodeRuntime() = default;
        NodeRuntime(NodeId id, std::optional<std::size_t> capacity, InterestSet interests)
            : id_(id), capacity_(capacity), interests_(std::move(interests))
        {
        }

        NodeId id() const noexcept { return id_; }
        std::optional<std::size_t> capacity() const noexcept { return capacity_; }
        std::size_t used() const noexcept { return used_; }
        std::size_t peak() const noexcept { return peak_; }
        const InterestSet &interests() const noexcept { return interests_; }

        bool holds(MessageId m) const { return held_.count(m) != 0; }
        bool was_delivered(MessageId m) const { return delivered_.count(m) != 0; }
        const std::unordered_set<MessageId> &held() const noexcept { return held_; }
        const std::unordered_set<MessageId> &delivered() const noexcept { return delivered_; }

        void mark_delivered(MessageId m) { delivered_.insert(m); }

        // Copies oldest-received first.
        std::vector<BufferedCopy> copies() const
        {
            std::vector<BufferedCopy> out;
            out.reserve(order_.size());
            for (const auto &[seq, c] : order_)
            {
                out.push_back(c);
            }
            return out;
        }

        void insert(const BufferedCopy &c)
        {
            const auto seq = next_seq_++;
            order_.emplace(seq, c);
            seq_of_.emplace(c.id, seq);
            held_.insert(c.id);
            used_ += c.size;
            peak_ = std::max(peak_, used_);
        }

        bool erase(MessageId m)
        {
            const auto it = seq_of_.find(m);
            if (it == seq_of_.end())
            {
                return false;
            }
            used_ -= order_.at(it->second).size;
            order_.erase(it->second);
            seq_of_.erase(it);
            held_.erase(m);
            return true;
        }

        std::optional<BufferedCopy> oldest() const
        {
            if (order_.empty())
            {
                return std::nullopt;
            }
            return order_.begin()->second;
        }

    private:
        NodeId id_ = 0;
        std::optional<std::size_t> capacity_;
        InterestSet interests_;
        std::size_t used_ = 0;
        std::size_t peak_ = 0;
        std::uint64_t next_seq_ = 0;
        std::map<std::uint64_t, BufferedCopy> order_;
        std::unordered_map<MessageId, std::uint64_t> seq_of_;
        std::unordered_set<MessageId> held_;
        std::unordered_set<MessageId> delivered_;
    };

    struct AdmitResult
    {
        bool admitted = false;
        std::vector<MessageId> evicted;
    };

    // Drop-oldest admission. The incoming copy is never evicted; a copy
    // larger than the whole buffer is rejected without touching the buffer.
    inline AdmitResult buffer_admit(NodeRuntime &node, const Message &msg, SimTime now)
    {
        AdmitResult r;
        if (node.holds(msg.id))
        {
            return r;
        }
        if (const auto cap = node.capacity())
        {
            if (msg.size > *cap)
            {
                return r;
            }
            while (node.used() + msg.size > *cap)
            {
                const auto victim = node.oldest();
                r.evicted.push_back(victim->id);
                node.erase(victim->id);
            }
        }
        node.insert(BufferedCopy{msg.id, now, msg.size});
        r.admitted = true;
        return r;
    }

    enum class TransferOutcome
    {
        Completed,
        AbortedByContactEnd
    };

    struct Transfer
    {
        MessageId message = 0;
        NodeId from = 0;
        NodeId to = 0;
        SimTime start = 0;
        SimTime finish = 0;
        TransferOutcome outcome = TransferOutcome::Completed;
    };

    inline double transfer_seconds(std::size_t bytes, double link_rate_bps)
    {
        if (std::isinf(link_rate_bps))
        {
            return 0.0;
        }
        return static_cast<double>(bytes) * 8.0 / link_rate_bps;
    }

    // Static schedule of one direction of a contact: the forwarded messages
    // go back to back in (creation time, id) order starting at contact
    // start; anything that would finish after the contact ends is aborted.
    inline std::vector<Transfer> schedule_transfers(const ContactEvent &contact, NodeId from,
                                                    const std::vector<ForwardingDecision> &decisions,
                                                    const std::vector<Message> &messages, double link_rate_bps)
    {
        std::vector<const Message *> queue;
        for (const auto &d : decisions)
        {
            if (d.action == Action::Skip)
            {
                continue;
            }
            const auto it = std::find_if(messages.begin(), messages.end(), [&](const Message &m) { return m.id == d.message; });
            if (it == messages.end())
            {
                throw std::invalid_argument("decision for unknown message");
            }
            queue.push_back(&*it);
        }
        std::sort(queue.begin(), queue.end(), [](const Message *x, const Message *y) { return CreationOrder{}(*x, *y); });
        const NodeId to = from == contact.a ? contact.b : contact.a;
        std::vector<Transfer> out;
        SimTime t = contact.start;
        for (const Message *m : queue)
        {
            Transfer tr{m->id, from, to, t, t + transfer_seconds(m->size, link_rate_bps), TransferOutcome::Completed};
            if (tr.finish > contact.end)
            {
                tr.outcome = TransferOutcome::AbortedByContactEnd;
                tr.finish = contact.end;
                out.push_back(tr);
                break;
            }
            out.push_back(tr);
            t = tr.finish;
        }
        return out;
    }

    struct Delivery
    {
        MessageId message = 0;
        NodeId destination = 0;
        SimTime created = 0;
        SimTime delivered = 0;

        double latency() const { return delivered - created; }
        bool operator==(const Delivery &) const = default;
    };

    struct RunResult
    {
        std::size_t delivered = 0;
        std::size_t expected = 0;
        std::size_t transmissions = 0;
        std::size_t aborted = 0;
        std::size_t evictions = 0;
        std::vector<Delivery> deliveries;
        std::vector<std::size_t> peak_buffer;
        double mean_message_bytes = 0;
        std::vector<LogRecord> event_log;
    };

    struct EngineOptions
    {
        ProtocolParams protocol;
        bool record_log = false;
        // Receives one JSON object per window boundary.
        std::function<void(const nlohmann::json &)> social_dump;
    };

    inline void validate_compatibility(ProtocolName p, const Workload &w)
    {
        if (const auto k = required_kind(p); k && !w.messages.empty() && w.kind != *k)
        {
            throw ValidationError(std::string("protocol/workload mismatch: ") + to_string(p) + " needs a " +
                                  to_string(*k) + " workload, got " + to_string(w.kind));
        }
    }

    class Simulator
    {
    public:
        Simulator(const ContactTrace &trace, const ScenarioConfig &config, const Workload &workload,
                  EngineOptions options)
            : trace_(trace), config_(config), workload_(workload), opt_(std::move(options)),
              social_(config.nodes, opt_.protocol.alpha), windows_(opt_.protocol.window_seconds)
        {
            std::size_t max_size = 0;
            for (const auto &m : workload_.messages)
            {
                max_size = std::max(max_size, m.size);
            }
            config_.validate(std::max<std::size_t>(max_size, 1));
            if (trace_.node_count() > config_.nodes)
            {
                throw ValidationError("trace has more nodes than the scenario");
            }
            validate_compatibility(opt_.protocol.name, workload_);
            for (std::size_t i = 0; i < workload_.messages.size(); ++i)
            {
                const auto &m = workload_.messages[i];
                if (m.id != i)
                {
                    throw ValidationError("workload message ids must be dense and ordered");
                }
                validate_message(m, 1, SIZE_MAX);
                if (m.src >= config_.nodes || (m.is_unicast() && m.dest() >= config_.nodes))
                {
                    throw ValidationError("message " + std::to_string(m.id) + " references an unknown node");
                }
            }
            own_interests_ = workload_.interests;
            own_interests_.resize(config_.nodes);
            for (NodeId n = 0; n < config_.nodes; ++n)
            {
                std::optional<std::size_t> cap;
                if (!config_.unrestricted(n))
                {
                    cap = config_.buffer_bytes;
                }
                nodes_.emplace_back(n, cap, own_interests_[n]);
            }
            known_.resize(config_.nodes);
            ongoing_.resize(config_.nodes);
            communities_ = CommunitySet::singletons(config_.nodes);
            centrality_ = update_centrality(windows_, 0, communities_, config_.nodes);
        }

        RunResult run()
        {
            result_ = RunResult{};
            result_.expected = expected_deliveries(workload_);
            result_.mean_message_bytes = workload_.mean_size();
            seed_events();
            while (!queue_.empty())
            {
                const Event ev = queue_.top();
                queue_.pop();
                if (ev.time > config_.duration)
                {
                    break;
                }
                now_ = ev.time;
                dispatch(ev);
            }
            result_.peak_buffer.clear();
            for (const auto &n : nodes_)
            {
                result_.peak_buffer.push_back(n.peak());
            }
            result_.delivered = result_.deliveries.size();
            return std::move(result_);
        }

    private:
        enum class EventType
        {
            WindowBoundary = 0,
            ContactStart = 1,
            MessageCreate = 2,
            TransferComplete = 3,
            ContactEnd = 4,
            Expire = 5
        };

        struct Event
        {
            SimTime time = 0;
            EventType type = EventType::ContactStart;
            std::uint64_t seq = 0;
            // Contact index, message id, window index or link token.
            std::uint64_t payload = 0;
            std::uint64_t aux = 0;
        };

        struct Later
        {
            bool operator()(const Event &x, const Event &y) const
            {
                if (x.time != y.time)
                {
                    return x.time > y.time;
                }
                if (x.type != y.type)
                {
                    return x.type > y.type;
                }
                return x.seq > y.seq;
            }
        };

        struct Link
        {
            NodeId from = 0;
            NodeId to = 0;
            std::set<std::pair<SimTime, MessageId>> pending;
            std::optional<MessageId> in_flight;
            SimTime flight_start = 0;
            std::uint64_t generation = 0;
        };

        struct ActiveContact
        {
            ContactEvent contact;
            SimTime end = 0;
            Link links[2];
        };

        void push(SimTime t, EventType type, std::uint64_t payload, std::uint64_t aux = 0)
        {
            queue_.push(Event{t, type, seq_++, payload, aux});
        }

        void log(LogKind k, MessageId m, NodeId from, NodeId to, std::size_t size)
        {
            if (opt_.record_log)
            {
                result_.event_log.push_back(LogRecord{now_, k, m, from, to, size});
            }
        }

        void seed_events()
        {
            const auto &events = trace_.events();
            for (std::size_t i = 0; i < events.size(); ++i)
            {
                if (events[i].start >= config_.duration)
                {
                    continue;
                }
                push(events[i].start, EventType::ContactStart, i);
                push(std::min(events[i].end, config_.duration), EventType::ContactEnd, i);
            }
            for (const auto &m : workload_.messages)
            {
                push(m.created, EventType::MessageCreate, m.id);
                if (const auto exp = m.expires_at())
                {
                    push(*exp, EventType::Expire, m.id);
                }
            }
            if (opt_.protocol.name == ProtocolName::BubbleRap || opt_.social_dump)
            {
                const double w = opt_.protocol.window_seconds;
                for (std::uint64_t k = 1; static_cast<double>(k) * w <= config_.duration; ++k)
                {
                    push(static_cast<double>(k) * w, EventType::WindowBoundary, k);
                }
            }
        }

        void dispatch(const Event &ev)
        {
            switch (ev.type)
            {
            case EventType::WindowBoundary:
                on_window(ev.payload);
                break;
            case EventType::ContactStart:
                on_contact_start(ev.payload);
                break;
            case EventType::MessageCreate:
                on_create(ev.payload);
                break;
            case EventType::TransferComplete:
                on_transfer_complete(ev.payload, ev.aux);
                break;
            case EventType::ContactEnd:
                on_contact_end(ev.payload);
                break;
            case EventType::Expire:
                on_expire(ev.payload);
                break;
            }
        }

        ProtocolContext context() const
        {
            ProtocolContext ctx;
            ctx.social = &social_;
            ctx.communities = &communities_;
            ctx.centrality = &centrality_;
            ctx.known = &known_;
            ctx.now = now_;
            ctx.utility = opt_.protocol.utility;
            return ctx;
        }

        bool expired(const Message &m) const
        {
            const auto e = m.expires_at();
            return e && now_ >= *e;
        }

        void evaluate(Link &link, const std::vector<MessageId> &candidates)
        {
            std::vector<const Message *> msgs;
            for (auto id : candidates)
            {
                const auto &m = workload_.messages[id];
                if (!expired(m))
                {
                    msgs.push_back(&m);
                }
            }
            if (msgs.empty())
            {
                return;
            }
            std::sort(msgs.begin(), msgs.end(), [](const Message *x, const Message *y) { return CreationOrder{}(*x, *y); });
            const auto &peer = nodes_[link.to];
            const PeerState ps{link.to, &peer.held(), &peer.delivered()};
            for (const auto &d : decide(opt_.protocol.name, context(), link.from, ps, msgs))
            {
                if (d.action != Action::Skip)
                {
                    link.pending.emplace(workload_.messages[d.message].created, d.message);
                }
            }
        }

        void start_link(std::uint64_t contact_index, int dir)
        {
            auto &ac = active_.at(contact_index);
            auto &link = ac.links[dir];
            while (!link.in_flight && !link.pending.empty())
            {
                const auto [created, id] = *link.pending.begin();
                link.pending.erase(link.pending.begin());
                const auto &m = workload_.messages[id];
                if (!nodes_[link.from].holds(id) || nodes_[link.to].holds(id) || nodes_[link.to].was_delivered(id) ||
                    expired(m))
                {
                    continue;
                }
                link.in_flight = id;
                link.flight_start = now_;
                ++link.generation;
                const std::uint64_t token = (contact_index << 1) | static_cast<std::uint64_t>(dir);
                push(now_ + transfer_seconds(m.size, config_.link_rate_bps), EventType::TransferComplete, token,
                     link.generation);
            }
        }

        std::vector<MessageId> buffer_ids(NodeId n) const
        {
            std::vector<MessageId> ids;
            for (const auto &c : nodes_[n].copies())
            {
                ids.push_back(c.id);
            }
            return ids;
        }

        void on_contact_start(std::uint64_t idx)
        {
            const auto &c = trace_.events()[idx];
            interests_exchange(known_, own_interests_, c.a, c.b);
            ActiveContact ac;
            ac.contact = c;
            ac.end = std::min(c.end, config_.duration);
            ac.links[0].from = c.a;
            ac.links[0].to = c.b;
            ac.links[1].from = c.b;
            ac.links[1].to = c.a;
            auto &slot = active_[idx] = std::move(ac);
            ongoing_[c.a].insert(idx);
            ongoing_[c.b].insert(idx);
            evaluate(slot.links[0], buffer_ids(c.a));
            evaluate(slot.links[1], buffer_ids(c.b));
            start_link(idx, 0);
            start_link(idx, 1);
        }

        // A node obtained a new copy: offer it on every contact it is in.
        void offer(NodeId n, MessageId id)
        {
            for (auto idx : ongoing_[n])
            {
                auto &ac = active_.at(idx);
                const int dir = ac.links[0].from == n ? 0 : 1;
                evaluate(ac.links[dir], {id});
                start_link(idx, dir);
            }
        }

        void store(NodeId n, const Message &m, NodeId from)
        {
            auto &node = nodes_[n];
            const auto r = buffer_admit(node, m, now_);
            for (auto v : r.evicted)
            {
                ++result_.evictions;
                log(LogKind::Evict, v, n, n, workload_.messages[v].size);
            }
            if (r.admitted)
            {
                log(LogKind::Store, m.id, from, n, m.size);
                offer(n, m.id);
            }
            else if (!node.holds(m.id))
            {
                log(LogKind::Reject, m.id, from, n, m.size);
            }
        }

        void on_create(MessageId id)
        {
            const auto &m = workload_.messages[id];
            log(LogKind::Create, id, m.src, m.src, m.size);
            if (!m.is_unicast() && own_interests_[m.src].count(m.content()) != 0)
            {
                nodes_[m.src].mark_delivered(id);
            }
            store(m.src, m, m.src);
        }

        void on_transfer_complete(std::uint64_t token, std::uint64_t generation)
        {
            const auto idx = token >> 1;
            const int dir = static_cast<int>(token & 1);
            const auto it = active_.find(idx);
            if (it == active_.end())
            {
                return;
            }
            auto &link = it->second.links[dir];
            if (!link.in_flight || link.generation != generation)
            {
                return;
            }
            const MessageId id = *link.in_flight;
            link.in_flight.reset();
            const NodeId from = link.from;
            const NodeId to = link.to;
            const auto &m = workload_.messages[id];
            ++result_.transmissions;
            log(LogKind::Transfer, id, from, to, m.size);

            auto &receiver = nodes_[to];
            if (m.is_unicast())
            {
                if (m.dest() == to)
                {
                    if (!receiver.was_delivered(id))
                    {
                        receiver.mark_delivered(id);
                        result_.deliveries.push_back(Delivery{id, to, m.created, now_});
                        log(LogKind::Deliver, id, from, to, m.size);
                    }
                    if (nodes_[from].erase(id))
                    {
                        log(LogKind::Remove, id, from, from, m.size);
                    }
                }
                else if (!receiver.holds(id))
                {
                    store(to, m, from);
                }
            }
            else
            {
                if (receiver.interests().count(m.content()) != 0 && !receiver.was_delivered(id))
                {
                    receiver.mark_delivered(id);
                    result_.deliveries.push_back(Delivery{id, to, m.created, now_});
                    log(LogKind::Deliver, id, from, to, m.size);
                }
                if (!receiver.holds(id))
                {
                    store(to, m, from);
                }
            }
            // The stored copy may have triggered nested work on this contact.
            if (active_.count(idx) != 0)
            {
                start_link(idx, dir);
            }
        }

        void on_contact_end(std::uint64_t idx)
        {
            const auto it = active_.find(idx);
            if (it == active_.end())
            {
                return;
            }
            auto &ac = it->second;
            for (auto &link : ac.links)
            {
                if (link.in_flight)
                {
                    ++result_.aborted;
                    log(LogKind::Abort, *link.in_flight, link.from, link.to, workload_.messages[*link.in_flight].size);
                }
            }
            ContactEvent seen = ac.contact;
            seen.end = ac.end;
            ongoing_[seen.a].erase(idx);
            ongoing_[seen.b].erase(idx);
            active_.erase(it);

            social_.add_contact(seen);
            contact_seconds_[seen.pair()] += seen.duration();
            windows_.add(seen.pair(), seen.start, seen.end);
        }

        void on_window(std::uint64_t k)
        {
            AggregatedGraph g;
            g.nodes = config_.nodes;
            g.edge_weight = contact_seconds_;
            for (const auto &[idx, ac] : active_)
            {
                if (now_ > ac.contact.start)
                {
                    g.edge_weight[ac.contact.pair()] += now_ - ac.contact.start;
                    windows_.add(ac.contact.pair(), ac.contact.start, now_);
                }
            }
            communities_ = kclique_communities(g, opt_.protocol.k, opt_.protocol.threshold_seconds);
            centrality_ = update_centrality(windows_, static_cast<std::size_t>(k), communities_, config_.nodes);
            if (opt_.social_dump)
            {
                opt_.social_dump(social_snapshot_json(now_, social_, communities_, centrality_));
            }
        }

        void on_expire(MessageId id)
        {
            for (auto &n : nodes_)
            {
                if (n.erase(id))
                {
                    log(LogKind::Expire, id, n.id(), n.id(), workload_.messages[id].size);
                }
            }
        }

        const ContactTrace &trace_;
        ScenarioConfig config_;
        const Workload &workload_;
        EngineOptions opt_;

        SimTime now_ = 0;
        std::uint64_t seq_ = 0;
        std::priority_queue<Event, std::vector<Event>, Later> queue_;

        std::vector<NodeRuntime> nodes_;
        std::vector<InterestSet> own_interests_;
        std::vector<KnownInterests> known_;
        std::vector<std::set<std::uint64_t>> ongoing_;
        std::map<std::uint64_t, ActiveContact> active_;

        SocialWeights social_;
        std::map<NodePair, double> contact_seconds_;
        WindowContacts windows_;
        CommunitySet communities_;
        CentralityTable centrality_;

        RunResult result_;
    };

    inline RunResult run(const ContactTrace &trace, const ScenarioConfig &config, const ProtocolParams &protocol,
                         const Workload &workload, bool record_log = false)
    {
        EngineOptions opt;
        opt.protocol = protocol;
        opt.record_log = record_log;
        return Simulator(trace, config, workload, std::move(opt)).run();
    }

} // namespace oppnet
