#pragma once

#include "core.hpp"
#include "mobility.hpp"
#include "rng.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace oppnet
{
    struct UnicastSource
    {
        NodeId node = 0;
        std::vector<NodeId> destinations;
        // Messages sent to each destination (the msg/int load).
        std::size_t per_destination = 1;
        double rate_per_day = 35;
    };

    struct TypedSource
    {
        NodeId node = 0;
        // One message per entry.
        std::vector<ContentType> contents;
        double rate_per_day = 35;
    };

    // Each receiver gets a uniform random subset of `types` of size per_node.
    struct RandomInterests
    {
        std::vector<NodeId> receivers;
        std::vector<ContentType> types;
        std::size_t per_node = 1;
    };

    struct WorkloadSpec
    {
        MessageKind kind = MessageKind::Unicast;
        std::vector<UnicastSource> unicast;
        std::vector<TypedSource> typed;
        std::optional<RandomInterests> random_interests;
        std::size_t size_min = kMinMessageBytes;
        std::size_t size_max = kMaxMessageBytes;
        std::optional<double> ttl;
    };

    struct Workload
    {
        MessageKind kind = MessageKind::Unicast;
        // Ordered by (created, id); ids are 0..n-1.
        std::vector<Message> messages;
        // Own interests per node (empty for unicast workloads).
        std::vector<InterestSet> interests;

        double mean_size() const
        {
            if (messages.empty())
            {
                return 0.0;
            }
            double s = 0;
            for (const auto &m : messages)
            {
                s += static_cast<double>(m.size);
            }
            return s / static_cast<double>(messages.size());
        }
    };

    // Creation rate used for the trace unicast grid: 35/day up to 10 messages
    // per destination, then 70/day (20) and 140/day (35).
    inline double grid_rate_for_load(std::size_t msg_per_destination)
    {
        if (msg_per_destination <= 10)
        {
            return 35;
        }
        if (msg_per_destination <= 20)
        {
            return 70;
        }
        return 140;
    }

    inline Workload make_workload(const WorkloadSpec &spec, std::size_t node_count, std::uint64_t seed,
                                  const std::vector<InterestProfile> &base_profiles = {},
                                  std::optional<SimTime> duration = std::nullopt)
    {
        if (spec.size_min < 1 || spec.size_min > spec.size_max)
        {
            throw ValidationError("message size range must satisfy 1 <= min <= max");
        }
        const SplitRng root = SplitRng(seed).split("workload");
        Workload w;
        w.kind = spec.kind;
        w.interests.assign(node_count, {});

        auto check_node = [&](NodeId n, const char *what) {
            if (n >= node_count)
            {
                throw ValidationError(std::string(what) + " node " + std::to_string(n) + " out of range");
            }
        };

        struct Pending
        {
            SimTime created;
            std::size_t source_index;
            std::size_t seq;
            Message msg;
        };
        std::vector<Pending> pending;

        if (spec.kind == MessageKind::Unicast)
        {
            if (!spec.typed.empty() || spec.random_interests)
            {
                throw ValidationError("unicast workload cannot carry typed sources or interests");
            }
            for (std::size_t si = 0; si < spec.unicast.size(); ++si)
            {
                const auto &src = spec.unicast[si];
                check_node(src.node, "source");
                if (!(src.rate_per_day > 0))
                {
                    throw ValidationError("creation rate must be positive");
                }
                const double spacing = kSecondsPerDay / src.rate_per_day;
                std::size_t seq = 0;
                for (std::size_t r = 0; r < src.per_destination; ++r)
                {
                    for (NodeId d : src.destinations)
                    {
                        check_node(d, "destination");
                        if (d == src.node)
                        {
                            throw ValidationError("source " + std::to_string(d) + " listed as its own destination");
                        }
                        Message m;
                        m.src = src.node;
                        m.target = Unicast{d};
                        m.created = static_cast<double>(seq) * spacing;
                        m.ttl = spec.ttl;
                        pending.push_back(Pending{m.created, si, seq, m});
                        ++seq;
                    }
                }
            }
        }
        else
        {
            if (!spec.unicast.empty())
            {
                throw ValidationError("typed workload cannot carry unicast sources");
            }
            for (const auto &p : base_profiles)
            {
                check_node(p.node, "profile");
                w.interests[p.node] = p.interests;
            }
            if (spec.random_interests)
            {
                const auto &ri = *spec.random_interests;
                if (ri.per_node > ri.types.size())
                {
                    throw ValidationError("interest cardinality " + std::to_string(ri.per_node) +
                                          " exceeds the number of content types " + std::to_string(ri.types.size()));
                }
                SplitRng rng = root.split("interests");
                for (NodeId n : ri.receivers)
                {
                    check_node(n, "receiver");
                    auto types = ri.types;
                    shuffle(types, rng);
                    w.interests[n] = InterestSet(types.begin(), types.begin() + static_cast<std::ptrdiff_t>(ri.per_node));
                }
            }
            for (std::size_t si = 0; si < spec.typed.size(); ++si)
            {
                const auto &src = spec.typed[si];
                check_node(src.node, "source");
                if (!(src.rate_per_day > 0))
                {
                    throw ValidationError("creation rate must be positive");
                }
                const double spacing = kSecondsPerDay / src.rate_per_day;
                for (std::size_t seq = 0; seq < src.contents.size(); ++seq)
                {
                    Message m;
                    m.src = src.node;
                    m.target = Typed{src.contents[seq]};
                    m.created = static_cast<double>(seq) * spacing;
                    m.ttl = spec.ttl;
                    pending.push_back(Pending{m.created, si, seq, m});
                }
            }
        }

        std::sort(pending.begin(), pending.end(), [](const Pending &x, const Pending &y) {
            return std::tie(x.created, x.source_index, x.seq) < std::tie(y.created, y.source_index, y.seq);
        });
        SplitRng sizes = root.split("sizes");
        for (std::size_t i = 0; i < pending.size(); ++i)
        {
            Message m = pending[i].msg;
            m.id = i;
            m.size = static_cast<std::size_t>(
                sizes.between(static_cast<std::int64_t>(spec.size_min), static_cast<std::int64_t>(spec.size_max)));
            if (duration && m.created >= *duration)
            {
                throw ValidationError("message " + std::to_string(i) + " scheduled after the scenario ends");
            }
            w.messages.push_back(std::move(m));
        }
        return w;
    }

    struct ExpectedCount
    {
        std::size_t count = 0;
        // Typed messages nobody (other than the source) wants.
        std::vector<MessageId> unwanted;
    };

    inline ExpectedCount expected_deliveries_detail(const Workload &w)
    {
        ExpectedCount e;
        for (const auto &m : w.messages)
        {
            if (m.is_unicast())
            {
                ++e.count;
                continue;
            }
            std::size_t wanted = 0;
            for (NodeId n = 0; n < w.interests.size(); ++n)
            {
                if (n != m.src && w.interests[n].count(m.content()) != 0)
                {
                    ++wanted;
                }
            }
            if (wanted == 0)
            {
                e.unwanted.push_back(m.id);
            }
            e.count += wanted;
        }
        return e;
    }

    inline std::size_t expected_deliveries(const Workload &w) { return expected_deliveries_detail(w).count; }

    // Synthetic unicast load: node 0 (first of A) sends one message to every
    // member of M and B; the first member of B sends one to every member of
    // A and M. 25 messages every 12 hours per source.
    inline WorkloadSpec synthetic_unicast_workload(const std::vector<NodeGroup> &groups)
    {
        if (groups.size() != 3)
        {
            throw ValidationError("synthetic workload expects groups A, M, B");
        }
        const auto &a = groups[0].members;
        const auto &m = groups[1].members;
        const auto &b = groups[2].members;
        WorkloadSpec spec;
        spec.kind = MessageKind::Unicast;
        UnicastSource s0{a.front(), {}, 1, 50};
        s0.destinations.insert(s0.destinations.end(), m.begin(), m.end());
        s0.destinations.insert(s0.destinations.end(), b.begin(), b.end());
        UnicastSource s1{b.front(), {}, 1, 50};
        s1.destinations.insert(s1.destinations.end(), a.begin(), a.end());
        s1.destinations.insert(s1.destinations.end(), m.begin(), m.end());
        spec.unicast = {s0, s1};
        return spec;
    }

    // Synthetic typed load: each source creates the content type the other
    // end of the map is interested in, so A's source publishes games and B's
    // source publishes reading.
    inline WorkloadSpec synthetic_typed_workload(const std::vector<NodeGroup> &groups)
    {
        if (groups.size() != 3)
        {
            throw ValidationError("synthetic workload expects groups A, M, B");
        }
        WorkloadSpec spec;
        spec.kind = MessageKind::Typed;
        spec.typed = {TypedSource{groups[0].members.front(), {games_type()}, 50},
                      TypedSource{groups[2].members.front(), {reading_type()}, 50}};
        return spec;
    }

    inline std::vector<ContentType> numbered_content_types(std::size_t n)
    {
        std::vector<ContentType> out;
        for (std::size_t i = 0; i < n; ++i)
        {
            out.emplace_back("c" + std::to_string(i));
        }
        return out;
    }

    // Trace grid, unicast variant: node 0 sends `load` messages to each of
    // nodes 1..destinations.
    inline WorkloadSpec trace_unicast_workload(std::size_t load, std::size_t destinations = 35)
    {
        WorkloadSpec spec;
        spec.kind = MessageKind::Unicast;
        UnicastSource s{0, {}, load, grid_rate_for_load(load)};
        for (NodeId d = 1; d <= destinations; ++d)
        {
            s.destinations.push_back(d);
        }
        spec.unicast = {s};
        return spec;
    }

    // Trace grid, typed variant: node 0 creates one message per content type
    // and every receiver is interested in `load` random types.
    inline WorkloadSpec trace_typed_workload(std::size_t load, std::size_t types = 35, std::size_t receivers = 35)
    {
        WorkloadSpec spec;
        spec.kind = MessageKind::Typed;
        const auto all = numbered_content_types(types);
        spec.typed = {TypedSource{0, all, 35}};
        RandomInterests ri;
        ri.types = all;
        ri.per_node = load;
        for (NodeId n = 1; n <= receivers; ++n)
        {
            ri.receivers.push_back(n);
        }
        spec.random_interests = ri;
        return spec;
    }

} // namespace oppnet
