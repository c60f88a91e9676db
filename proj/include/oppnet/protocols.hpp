#pragma once

#include "core.hpp"
#include "social.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace oppnet
{
    enum class ProtocolName
    {
        Epidemic,
        BubbleRap,
        DLife,
        Scorp
    };

    inline ProtocolName parse_protocol_name(std::string_view s)
    {
        if (s == "epidemic")
        {
            return ProtocolName::Epidemic;
        }
        if (s == "bubblerap")
        {
            return ProtocolName::BubbleRap;
        }
        if (s == "dlife")
        {
            return ProtocolName::DLife;
        }
        if (s == "scorp")
        {
            return ProtocolName::Scorp;
        }
        throw ValidationError("unknown protocol '" + std::string(s) + "'");
    }

    inline const char *to_string(ProtocolName p)
    {
        switch (p)
        {
        case ProtocolName::Epidemic:
            return "epidemic";
        case ProtocolName::BubbleRap:
            return "bubblerap";
        case ProtocolName::DLife:
            return "dlife";
        case ProtocolName::Scorp:
            return "scorp";
        }
        return "?";
    }

    // Message kind a protocol can route; nullopt = either.
    inline std::optional<MessageKind> required_kind(ProtocolName p)
    {
        switch (p)
        {
        case ProtocolName::BubbleRap:
        case ProtocolName::DLife:
            return MessageKind::Unicast;
        case ProtocolName::Scorp:
            return MessageKind::Typed;
        case ProtocolName::Epidemic:
            break;
        }
        return std::nullopt;
    }

    enum class UtilityAggregator
    {
        Max,
        Sum
    };

    struct ProtocolParams
    {
        ProtocolName name = ProtocolName::Epidemic;
        // Bubble Rap
        std::size_t k = 3;
        double threshold_seconds = 3600;
        double window_seconds = 21600;
        // dLife / SCORP
        double alpha = 0.5;
        UtilityAggregator utility = UtilityAggregator::Max;
    };

    enum class Action
    {
        Deliver,
        Replicate,
        Skip
    };

    inline const char *to_string(Action a)
    {
        switch (a)
        {
        case Action::Deliver:
            return "deliver";
        case Action::Replicate:
            return "replicate";
        case Action::Skip:
            return "skip";
        }
        return "?";
    }

    struct ForwardingDecision
    {
        MessageId message = 0;
        Action action = Action::Skip;

        bool operator==(const ForwardingDecision &) const = default;
    };

    // Interests a node has learned from peers it met (one hop only).
    using KnownInterests = std::map<NodeId, InterestSet>;

    struct ProtocolContext
    {
        const SocialWeights *social = nullptr;
        const CommunitySet *communities = nullptr;
        const CentralityTable *centrality = nullptr;
        const std::vector<KnownInterests> *known = nullptr;
        SimTime now = 0;
        UtilityAggregator utility = UtilityAggregator::Max;
    };

    struct PeerState
    {
        NodeId id = 0;
        const std::unordered_set<MessageId> *held = nullptr;
        // Messages already received as a destination.
        const std::unordered_set<MessageId> *delivered = nullptr;

        bool has(MessageId m) const
        {
            return (held != nullptr && held->count(m) != 0) || (delivered != nullptr && delivered->count(m) != 0);
        }
    };

    namespace detail
    {
        inline void require_kind(const Message &m, MessageKind k, ProtocolName p)
        {
            if (m.kind() != k)
            {
                throw ValidationError(std::string("protocol/workload mismatch: ") + to_string(p) + " cannot route " +
                                      to_string(m.kind()) + " message " + std::to_string(m.id));
            }
        }

        inline const InterestSet *learned_profile(const ProtocolContext &ctx, NodeId who, NodeId about)
        {
            if (ctx.known == nullptr || who >= ctx.known->size())
            {
                return nullptr;
            }
            const auto &k = (*ctx.known)[who];
            const auto it = k.find(about);
            return it == k.end() ? nullptr : &it->second;
        }

        inline bool peer_wants(const ProtocolContext &ctx, NodeId carrier, NodeId peer, const ContentType &t)
        {
            const auto *profile = learned_profile(ctx, carrier, peer);
            return profile != nullptr && profile->count(t) != 0;
        }

        inline bool is_destination(const ProtocolContext &ctx, const Message &m, NodeId carrier, NodeId peer)
        {
            if (m.is_unicast())
            {
                return m.dest() == peer;
            }
            return peer_wants(ctx, carrier, peer, m.content());
        }
    } // namespace detail

    // Flooding with summary-vector exchange: anything the peer lacks is copied.
    inline std::vector<ForwardingDecision> epidemic_decide(const ProtocolContext &ctx, NodeId carrier,
                                                           const PeerState &peer, std::span<const Message *const> msgs)
    {
        std::vector<ForwardingDecision> out;
        out.reserve(msgs.size());
        for (const Message *m : msgs)
        {
            if (peer.has(m->id))
            {
                out.push_back({m->id, Action::Skip});
            }
            else if (detail::is_destination(ctx, *m, carrier, peer.id))
            {
                out.push_back({m->id, Action::Deliver});
            }
            else
            {
                out.push_back({m->id, Action::Replicate});
            }
        }
        return out;
    }

    namespace detail
    {
        // Best local centrality of n over the communities it shares with d;
        // nullopt when n and d share none.
        inline std::optional<double> local_towards(const ProtocolContext &ctx, NodeId n, NodeId d)
        {
            const auto &cs = *ctx.communities;
            if (n >= cs.membership.size())
            {
                return std::nullopt;
            }
            std::optional<double> best;
            for (auto c : cs.membership[n])
            {
                if (cs.contains(c, d))
                {
                    const double v = ctx.centrality->local_of(n, c);
                    best = std::max(best.value_or(v), v);
                }
            }
            return best;
        }
    } // namespace detail

    inline std::vector<ForwardingDecision> bubblerap_decide(const ProtocolContext &ctx, NodeId carrier,
                                                            const PeerState &peer, std::span<const Message *const> msgs)
    {
        std::vector<ForwardingDecision> out;
        out.reserve(msgs.size());
        for (const Message *m : msgs)
        {
            detail::require_kind(*m, MessageKind::Unicast, ProtocolName::BubbleRap);
            const NodeId d = m->dest();
            Action a = Action::Skip;
            if (peer.has(m->id))
            {
                a = Action::Skip;
            }
            else if (peer.id == d)
            {
                a = Action::Deliver;
            }
            else
            {
                const auto peer_local = detail::local_towards(ctx, peer.id, d);
                const auto carrier_local = detail::local_towards(ctx, carrier, d);
                if (peer_local)
                {
                    if (!carrier_local || *peer_local > *carrier_local)
                    {
                        a = Action::Replicate;
                    }
                }
                else if (!carrier_local && ctx.centrality->global_of(peer.id) > ctx.centrality->global_of(carrier))
                {
                    a = Action::Replicate;
                }
            }
            out.push_back({m->id, a});
        }
        return out;
    }

    inline std::vector<ForwardingDecision> dlife_decide(const ProtocolContext &ctx, NodeId carrier,
                                                        const PeerState &peer, std::span<const Message *const> msgs)
    {
        const auto slot = slot_of(ctx.now);
        std::vector<ForwardingDecision> out;
        out.reserve(msgs.size());
        for (const Message *m : msgs)
        {
            detail::require_kind(*m, MessageKind::Unicast, ProtocolName::DLife);
            const NodeId d = m->dest();
            Action a = Action::Skip;
            if (peer.has(m->id))
            {
                a = Action::Skip;
            }
            else if (peer.id == d)
            {
                a = Action::Deliver;
            }
            else
            {
                const double wp = ctx.social->weight(peer.id, d, slot);
                const double wc = ctx.social->weight(carrier, d, slot);
                if (wp > wc)
                {
                    a = Action::Replicate;
                }
                else if (wp == 0 && wc == 0 &&
                         ctx.social->node_importance(peer.id, slot) > ctx.social->node_importance(carrier, slot))
                {
                    a = Action::Replicate;
                }
            }
            out.push_back({m->id, a});
        }
        return out;
    }

    // Utility of x as a carrier for content t: the social weight from x to the
    // nodes x knows to be interested in t, aggregated by max (or sum). The two
    // endpoints of the current contact are left out.
    inline double scorp_utility(const ProtocolContext &ctx, NodeId x, NodeId other, const ContentType &t)
    {
        if (ctx.known == nullptr || x >= ctx.known->size())
        {
            return 0.0;
        }
        const auto slot = slot_of(ctx.now);
        double acc = 0;
        for (const auto &[n, interests] : (*ctx.known)[x])
        {
            if (n == other || n == x || interests.count(t) == 0)
            {
                continue;
            }
            const double w = ctx.social->weight(x, n, slot);
            acc = ctx.utility == UtilityAggregator::Max ? std::max(acc, w) : acc + w;
        }
        return acc;
    }

    inline std::vector<ForwardingDecision> scorp_decide(const ProtocolContext &ctx, NodeId carrier,
                                                        const PeerState &peer, std::span<const Message *const> msgs)
    {
        std::vector<ForwardingDecision> out;
        out.reserve(msgs.size());
        for (const Message *m : msgs)
        {
            detail::require_kind(*m, MessageKind::Typed, ProtocolName::Scorp);
            Action a = Action::Skip;
            if (peer.has(m->id))
            {
                a = Action::Skip;
            }
            else if (detail::peer_wants(ctx, carrier, peer.id, m->content()))
            {
                a = Action::Deliver;
            }
            else if (scorp_utility(ctx, peer.id, carrier, m->content()) >
                     scorp_utility(ctx, carrier, peer.id, m->content()))
            {
                a = Action::Replicate;
            }
            out.push_back({m->id, a});
        }
        return out;
    }

    inline std::vector<ForwardingDecision> decide(ProtocolName p, const ProtocolContext &ctx, NodeId carrier,
                                                  const PeerState &peer, std::span<const Message *const> msgs)
    {
        switch (p)
        {
        case ProtocolName::Epidemic:
            return epidemic_decide(ctx, carrier, peer, msgs);
        case ProtocolName::BubbleRap:
            return bubblerap_decide(ctx, carrier, peer, msgs);
        case ProtocolName::DLife:
            return dlife_decide(ctx, carrier, peer, msgs);
        case ProtocolName::Scorp:
            return scorp_decide(ctx, carrier, peer, msgs);
        }
        return {};
    }

    // Each side records the other's own profile; third-party knowledge is
    // never relayed.
    inline void interests_exchange(std::vector<KnownInterests> &known, const std::vector<InterestSet> &own,
                                   NodeId carrier, NodeId peer)
    {
        const auto needed = static_cast<std::size_t>(std::max(carrier, peer)) + 1;
        if (known.size() < needed)
        {
            known.resize(needed);
        }
        static const InterestSet empty;
        known[carrier][peer] = peer < own.size() ? own[peer] : empty;
        known[peer][carrier] = carrier < own.size() ? own[carrier] : empty;
    }

} // namespace oppnet
