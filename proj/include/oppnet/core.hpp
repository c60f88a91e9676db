#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace oppnet
{
    using NodeId = std::uint32_t;
    using MessageId = std::uint64_t;

    // Seconds since scenario start.
    using SimTime = double;

    inline constexpr double kSecondsPerDay = 86400.0;
    inline constexpr double kSecondsPerSlot = 3600.0;
    inline constexpr int kSlotsPerDay = 24;

    inline constexpr std::size_t kMinMessageBytes = 1024;
    inline constexpr std::size_t kMaxMessageBytes = 102400;
    inline constexpr std::size_t kDefaultBufferBytes = 2'097'152;
    inline constexpr double kDefaultLinkRateBps = 250'000.0;

    // Input that violates a documented contract (bad config, malformed trace,
    // incompatible protocol/workload). The CLI maps these to exit code 2.
    class ValidationError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class ParseError : public ValidationError
    {
    public:
        ParseError(std::size_t line, const std::string &what)
            : ValidationError("line " + std::to_string(line) + ": " + what), line_(line)
        {
        }

        std::size_t line() const noexcept { return line_; }

    private:
        std::size_t line_;
    };

    struct TimeSlotIndex
    {
        int slot = 0;

        auto operator<=>(const TimeSlotIndex &) const = default;
    };

    inline TimeSlotIndex slot_of(SimTime t)
    {
        const double in_day = std::fmod(t, kSecondsPerDay);
        int s = static_cast<int>(std::floor(in_day / kSecondsPerSlot));
        // fmod of values a hair below a day boundary can round up to 86400.
        if (s >= kSlotsPerDay)
        {
            s = kSlotsPerDay - 1;
        }
        return TimeSlotIndex{s};
    }

    inline std::int64_t day_of(SimTime t)
    {
        return static_cast<std::int64_t>(std::floor(t / kSecondsPerDay));
    }

    // Unordered node pair stored with a < b.
    struct NodePair
    {
        NodeId a = 0;
        NodeId b = 0;

        NodePair() = default;
        NodePair(NodeId x, NodeId y) : a(x < y ? x : y), b(x < y ? y : x) {}

        auto operator<=>(const NodePair &) const = default;

        std::uint64_t key() const noexcept { return (static_cast<std::uint64_t>(a) << 32) | b; }
    };

    struct ContactEvent
    {
        NodeId a = 0;
        NodeId b = 0;
        SimTime start = 0;
        SimTime end = 0;

        NodePair pair() const { return NodePair{a, b}; }
        double duration() const { return end - start; }

        auto operator<=>(const ContactEvent &) const = default;
    };

    // Builds a canonical contact (a < b) or throws.
    inline ContactEvent make_contact(NodeId x, NodeId y, SimTime start, SimTime end)
    {
        if (x == y)
        {
            throw ValidationError("self-contact for node " + std::to_string(x));
        }
        if (!(start >= 0))
        {
            throw ValidationError("contact start must be non-negative");
        }
        if (!(end > start))
        {
            throw ValidationError("contact end must be greater than start");
        }
        NodePair p{x, y};
        return ContactEvent{p.a, p.b, start, end};
    }

    struct SlotFragment
    {
        TimeSlotIndex slot;
        std::int64_t day = 0;
        double seconds = 0;

        bool operator==(const SlotFragment &) const = default;
    };

    // Cuts a contact at every hour boundary. Boundary instants belong to the
    // later slot, so a fragment covers [lo, hi) of exactly one slot.
    inline std::vector<SlotFragment> split_duration_by_slot(const ContactEvent &c)
    {
        std::vector<SlotFragment> out;
        SimTime lo = c.start;
        while (lo < c.end)
        {
            const double slot_start = std::floor(lo / kSecondsPerSlot) * kSecondsPerSlot;
            const SimTime hi = std::min(c.end, slot_start + kSecondsPerSlot);
            const auto abs_slot = static_cast<std::int64_t>(slot_start / kSecondsPerSlot);
            out.push_back(SlotFragment{TimeSlotIndex{static_cast<int>(abs_slot % kSlotsPerDay)},
                                       abs_slot / kSlotsPerDay, hi - lo});
            lo = hi;
        }
        return out;
    }

    struct ContentType
    {
        std::string tag;

        ContentType() = default;
        explicit ContentType(std::string t) : tag(std::move(t))
        {
            if (tag.empty())
            {
                throw ValidationError("content type must be non-empty");
            }
        }

        auto operator<=>(const ContentType &) const = default;
    };

    using InterestSet = std::set<ContentType>;

    struct InterestProfile
    {
        NodeId node = 0;
        InterestSet interests;
    };

    struct Unicast
    {
        NodeId dest = 0;
        bool operator==(const Unicast &) const = default;
    };

    struct Typed
    {
        ContentType content;
        bool operator==(const Typed &) const = default;
    };

    enum class MessageKind
    {
        Unicast,
        Typed
    };

    struct Message
    {
        MessageId id = 0;
        NodeId src = 0;
        std::variant<Unicast, Typed> target;
        std::size_t size = kMinMessageBytes;
        SimTime created = 0;
        // nullopt means unlimited.
        std::optional<double> ttl;

        MessageKind kind() const { return std::holds_alternative<Unicast>(target) ? MessageKind::Unicast : MessageKind::Typed; }
        bool is_unicast() const { return kind() == MessageKind::Unicast; }
        NodeId dest() const { return std::get<Unicast>(target).dest; }
        const ContentType &content() const { return std::get<Typed>(target).content; }

        std::optional<SimTime> expires_at() const
        {
            if (!ttl)
            {
                return std::nullopt;
            }
            return created + *ttl;
        }
    };

    inline void validate_message(const Message &m, std::size_t min_size = kMinMessageBytes,
                                 std::size_t max_size = kMaxMessageBytes)
    {
        if (m.size < min_size || m.size > max_size)
        {
            throw ValidationError("message " + std::to_string(m.id) + " size out of range");
        }
        if (m.is_unicast() && m.dest() == m.src)
        {
            throw ValidationError("message " + std::to_string(m.id) + " addressed to its own source");
        }
        if (m.ttl && !(*m.ttl > 0))
        {
            throw ValidationError("message ttl must be positive");
        }
    }

    inline const char *to_string(MessageKind k)
    {
        return k == MessageKind::Unicast ? "unicast" : "typed";
    }

    // Ordering used whenever messages compete for a link.
    struct CreationOrder
    {
        bool operator()(const Message &x, const Message &y) const
        {
            if (x.created != y.created)
            {
                return x.created < y.created;
            }
            return x.id < y.id;
        }
    };

    inline constexpr double kInstantaneous = std::numeric_limits<double>::infinity();

    struct ScenarioConfig
    {
        std::size_t nodes = 0;
        std::size_t buffer_bytes = kDefaultBufferBytes;
        std::set<NodeId> unrestricted_buffer_nodes;
        // kInstantaneous selects zero-duration transfers.
        double link_rate_bps = kDefaultLinkRateBps;
        int slot_count = kSlotsPerDay;
        std::uint64_t seed = 0;
        SimTime duration = 0;

        bool unrestricted(NodeId n) const { return unrestricted_buffer_nodes.count(n) != 0; }

        void validate(std::size_t max_message_bytes = kMaxMessageBytes) const
        {
            if (nodes == 0)
            {
                throw ValidationError("scenario needs at least one node");
            }
            if (!(duration > 0))
            {
                throw ValidationError("scenario duration must be positive");
            }
            if (buffer_bytes <= max_message_bytes && unrestricted_buffer_nodes.size() < nodes)
            {
                throw ValidationError("buffer_bytes must exceed the maximum message size");
            }
            if (!(link_rate_bps > 0))
            {
                throw ValidationError("link rate must be positive");
            }
            if (slot_count != kSlotsPerDay)
            {
                throw ValidationError("only 24 daily slots are supported");
            }
            for (NodeId n : unrestricted_buffer_nodes)
            {
                if (n >= nodes)
                {
                    throw ValidationError("unrestricted buffer node " + std::to_string(n) + " out of range");
                }
            }
        }
    };

} // namespace oppnet
