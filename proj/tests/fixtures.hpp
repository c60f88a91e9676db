#pragma once

// Randomized micro-scenarios shared by the engine tests and the acceptance
// suite. Generated with std::mt19937_64 so they do not depend on the
// library's own generator.

#include <oppnet/oppnet.hpp>

#include "oracles.hpp"

#include <random>
#include <string>
#include <vector>

namespace fixtures
{
    struct MicroCase
    {
        oppnet::ContactTrace trace;
        oppnet::ScenarioConfig config;
        oppnet::Workload unicast;
        oppnet::Workload typed;
    };

    inline constexpr double kMicroHorizon = 2000.0;

    // <= 8 nodes, <= 20 contacts, unlimited buffers, instantaneous links.
    inline MicroCase make_micro_case(std::uint64_t seed)
    {
        std::mt19937_64 gen(seed);
        auto pick = [&](std::uint64_t lo, std::uint64_t hi) {
            return std::uniform_int_distribution<std::uint64_t>(lo, hi)(gen);
        };
        MicroCase mc;
        const auto n = static_cast<std::size_t>(pick(2, 8));
        const auto contacts = static_cast<std::size_t>(pick(1, 20));
        std::vector<oppnet::ContactEvent> events;
        for (std::size_t i = 0; i < contacts; ++i)
        {
            const auto a = static_cast<oppnet::NodeId>(pick(0, n - 1));
            auto b = static_cast<oppnet::NodeId>(pick(0, n - 2));
            if (b >= a)
            {
                ++b;
            }
            const double start = static_cast<double>(pick(0, 1500));
            const double len = static_cast<double>(pick(1, 300));
            events.push_back(oppnet::make_contact(a, b, start, start + len));
        }
        mc.trace = oppnet::ContactTrace::from_events(events, n, kMicroHorizon);

        mc.config.nodes = n;
        mc.config.link_rate_bps = oppnet::kInstantaneous;
        mc.config.duration = kMicroHorizon;
        for (oppnet::NodeId i = 0; i < n; ++i)
        {
            mc.config.unrestricted_buffer_nodes.insert(i);
        }

        const auto messages = static_cast<std::size_t>(pick(1, 6));
        mc.unicast.kind = oppnet::MessageKind::Unicast;
        mc.unicast.interests.assign(n, {});
        for (std::size_t i = 0; i < messages; ++i)
        {
            oppnet::Message m;
            m.src = static_cast<oppnet::NodeId>(pick(0, n - 1));
            auto d = static_cast<oppnet::NodeId>(pick(0, n - 2));
            if (d >= m.src)
            {
                ++d;
            }
            m.target = oppnet::Unicast{d};
            m.size = 1024;
            m.created = static_cast<double>(pick(0, 1200));
            mc.unicast.messages.push_back(m);
        }
        std::sort(mc.unicast.messages.begin(), mc.unicast.messages.end(),
                  [](const oppnet::Message &x, const oppnet::Message &y) { return x.created < y.created; });
        for (std::size_t i = 0; i < mc.unicast.messages.size(); ++i)
        {
            mc.unicast.messages[i].id = i;
        }

        const std::vector<oppnet::ContentType> types{oppnet::ContentType("x"), oppnet::ContentType("y")};
        mc.typed.kind = oppnet::MessageKind::Typed;
        mc.typed.interests.assign(n, {});
        for (oppnet::NodeId i = 0; i < n; ++i)
        {
            for (const auto &t : types)
            {
                if (pick(0, 1) == 1)
                {
                    mc.typed.interests[i].insert(t);
                }
            }
        }
        for (std::size_t i = 0; i < messages; ++i)
        {
            oppnet::Message m;
            m.id = i;
            m.src = static_cast<oppnet::NodeId>(pick(0, n - 1));
            m.target = oppnet::Typed{types[pick(0, 1)]};
            m.size = 1024;
            m.created = static_cast<double>(pick(0, 1200));
            mc.typed.messages.push_back(m);
        }
        std::sort(mc.typed.messages.begin(), mc.typed.messages.end(),
                  [](const oppnet::Message &x, const oppnet::Message &y) { return x.created < y.created; });
        for (std::size_t i = 0; i < mc.typed.messages.size(); ++i)
        {
            mc.typed.messages[i].id = i;
        }
        return mc;
    }

    // (message, receiver) -> earliest possible delivery time, for every
    // reachable target within the horizon.
    inline std::map<std::pair<oppnet::MessageId, oppnet::NodeId>, double> oracle_deliveries(const MicroCase &mc,
                                                                                          const oppnet::Workload &w)
    {
        std::map<std::pair<oppnet::MessageId, oppnet::NodeId>, double> out;
        for (const auto &m : w.messages)
        {
            const auto arr = oracle::earliest_arrival(mc.config.nodes, mc.trace.events(), m.src, m.created);
            for (oppnet::NodeId n = 0; n < mc.config.nodes; ++n)
            {
                const bool target = m.is_unicast() ? m.dest() == n
                                                   : (n != m.src && w.interests[n].count(m.content()) != 0);
                if (target && arr[n] <= mc.config.duration)
                {
                    out[{m.id, n}] = arr[n];
                }
            }
        }
        return out;
    }

    inline std::map<std::pair<oppnet::MessageId, oppnet::NodeId>, double> engine_deliveries(
        const oppnet::RunResult &r)
    {
        std::map<std::pair<oppnet::MessageId, oppnet::NodeId>, double> out;
        for (const auto &d : r.deliveries)
        {
            out[{d.message, d.destination}] = d.delivered;
        }
        return out;
    }

    inline oppnet::RunResult run_micro(const MicroCase &mc, oppnet::ProtocolName p, const oppnet::Workload &w)
    {
        oppnet::EngineOptions opt;
        opt.protocol.name = p;
        return oppnet::Simulator(mc.trace, mc.config, w, std::move(opt)).run();
    }

    inline const oppnet::Workload &workload_for(const MicroCase &mc, oppnet::ProtocolName p)
    {
        return oppnet::required_kind(p).value_or(oppnet::MessageKind::Unicast) == oppnet::MessageKind::Unicast
                   ? mc.unicast
                   : mc.typed;
    }

} // namespace fixtures
