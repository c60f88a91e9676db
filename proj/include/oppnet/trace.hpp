#pragma once

#include "core.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace oppnet
{
    enum class TraceFormat
    {
        // start_seconds,end_seconds,node_a,node_b
        Csv,
        // node_a node_b start end, whitespace separated, sparse ids renumbered
        Crawdad
    };

    inline TraceFormat parse_trace_format(std::string_view s)
    {
        if (s == "csv")
        {
            return TraceFormat::Csv;
        }
        if (s == "crawdad")
        {
            return TraceFormat::Crawdad;
        }
        throw ValidationError("unknown trace format '" + std::string(s) + "'");
    }

    class ContactTrace
    {
    public:
        ContactTrace() = default;

        // Validates, merges overlapping contacts of the same pair into their
        // union and sorts by (start, a, b). node_count and duration default
        // to the smallest values consistent with the events.
        static ContactTrace from_events(std::vector<ContactEvent> events,
                                        std::optional<std::size_t> node_count = std::nullopt,
                                        std::optional<SimTime> duration = std::nullopt)
        {
            std::size_t max_id_plus_one = 0;
            SimTime max_end = 0;
            for (auto &e : events)
            {
                e = make_contact(e.a, e.b, e.start, e.end);
                max_id_plus_one = std::max<std::size_t>(max_id_plus_one, e.b + 1);
                max_end = std::max(max_end, e.end);
            }
            ContactTrace t;
            t.node_count_ = node_count.value_or(max_id_plus_one);
            if (max_id_plus_one > t.node_count_)
            {
                throw ValidationError("node id " + std::to_string(max_id_plus_one - 1) + " out of range for " +
                                      std::to_string(t.node_count_) + " nodes");
            }
            t.duration_ = duration.value_or(max_end);
            if (max_end > t.duration_)
            {
                throw ValidationError("contact extends past trace duration");
            }
            t.events_ = merge_overlaps(std::move(events));
            return t;
        }

        const std::vector<ContactEvent> &events() const noexcept { return events_; }
        std::size_t node_count() const noexcept { return node_count_; }
        SimTime duration() const noexcept { return duration_; }
        bool empty() const noexcept { return events_.empty(); }

        bool operator==(const ContactTrace &) const = default;

    private:
        static std::vector<ContactEvent> merge_overlaps(std::vector<ContactEvent> events)
        {
            std::sort(events.begin(), events.end(), [](const ContactEvent &x, const ContactEvent &y) {
                return std::tie(x.a, x.b, x.start, x.end) < std::tie(y.a, y.b, y.start, y.end);
            });
            std::vector<ContactEvent> merged;
            merged.reserve(events.size());
            for (const auto &e : events)
            {
                if (!merged.empty() && merged.back().a == e.a && merged.back().b == e.b && e.start <= merged.back().end)
                {
                    merged.back().end = std::max(merged.back().end, e.end);
                }
                else
                {
                    merged.push_back(e);
                }
            }
            std::sort(merged.begin(), merged.end(), [](const ContactEvent &x, const ContactEvent &y) {
                return std::tie(x.start, x.a, x.b, x.end) < std::tie(y.start, y.a, y.b, y.end);
            });
            return merged;
        }

        std::vector<ContactEvent> events_;
        std::size_t node_count_ = 0;
        SimTime duration_ = 0;
    };

    namespace detail
    {
        inline std::string_view trim(std::string_view s)
        {
            const auto ws = " \t\r\n";
            const auto b = s.find_first_not_of(ws);
            if (b == std::string_view::npos)
            {
                return {};
            }
            const auto e = s.find_last_not_of(ws);
            return s.substr(b, e - b + 1);
        }

        inline std::vector<std::string_view> split_fields(std::string_view line, bool csv)
        {
            std::vector<std::string_view> out;
            if (csv)
            {
                std::size_t pos = 0;
                while (true)
                {
                    const auto comma = line.find(',', pos);
                    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
                    if (comma == std::string_view::npos)
                    {
                        break;
                    }
                    pos = comma + 1;
                }
            }
            else
            {
                std::size_t pos = 0;
                while (pos < line.size())
                {
                    const auto b = line.find_first_not_of(" \t", pos);
                    if (b == std::string_view::npos)
                    {
                        break;
                    }
                    const auto e = line.find_first_of(" \t", b);
                    out.push_back(line.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
                    pos = e == std::string_view::npos ? line.size() : e;
                }
            }
            return out;
        }

        inline std::optional<double> parse_real(std::string_view s)
        {
            if (s.empty())
            {
                return std::nullopt;
            }
            double v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v))
            {
                return std::nullopt;
            }
            return v;
        }

        inline std::optional<std::int64_t> parse_int(std::string_view s)
        {
            if (s.empty())
            {
                return std::nullopt;
            }
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size())
            {
                return std::nullopt;
            }
            return v;
        }

        // Shortest representation that parses back to the same double.
        inline std::string format_real(double v)
        {
            char buf[64];
            auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
            return std::string(buf, p);
        }

        inline bool looks_like_header(std::string_view line)
        {
            return std::any_of(line.begin(), line.end(), [](char c) {
                return (c >= 'a' && c <= 'z' && c != 'e') || (c >= 'A' && c <= 'Z' && c != 'E') || c == '_';
            });
        }
    } // namespace detail

    struct TraceParseOptions
    {
        std::optional<std::size_t> node_count;
        std::optional<SimTime> duration;
    };

    // The canonical writer emits "# oppnet-trace nodes=N duration=D"; when
    // present it supplies node_count and duration unless options override.
    inline ContactTrace parse_contact_trace(std::istream &in, TraceFormat format, TraceParseOptions opts = {})
    {
        const bool csv = format == TraceFormat::Csv;
        std::vector<ContactEvent> events;
        std::map<std::int64_t, NodeId> renumber;
        std::vector<std::array<std::int64_t, 2>> raw_ids;
        std::optional<std::size_t> meta_nodes;
        std::optional<SimTime> meta_duration;
        bool seen_data = false;

        std::string buf;
        std::size_t lineno = 0;
        while (std::getline(in, buf))
        {
            ++lineno;
            std::string_view line = detail::trim(buf);
            if (line.empty())
            {
                continue;
            }
            if (line.front() == '#')
            {
                std::istringstream meta{std::string(line.substr(1))};
                std::string word;
                meta >> word;
                if (word == "oppnet-trace")
                {
                    while (meta >> word)
                    {
                        const auto eq = word.find('=');
                        if (eq == std::string::npos)
                        {
                            continue;
                        }
                        const auto key = word.substr(0, eq);
                        const auto val = std::string_view(word).substr(eq + 1);
                        if (key == "nodes")
                        {
                            const auto v = detail::parse_int(val);
                            if (!v || *v < 0)
                            {
                                throw ParseError(lineno, "bad nodes metadata");
                            }
                            meta_nodes = static_cast<std::size_t>(*v);
                        }
                        else if (key == "duration")
                        {
                            const auto v = detail::parse_real(val);
                            if (!v || *v < 0)
                            {
                                throw ParseError(lineno, "bad duration metadata");
                            }
                            meta_duration = *v;
                        }
                    }
                }
                continue;
            }
            const auto fields = detail::split_fields(line, csv);
            if (!seen_data && csv && detail::looks_like_header(line))
            {
                seen_data = true;
                continue;
            }
            seen_data = true;
            if (fields.size() != 4)
            {
                throw ParseError(lineno, "expected 4 fields, got " + std::to_string(fields.size()));
            }
            const auto &f_start = csv ? fields[0] : fields[2];
            const auto &f_end = csv ? fields[1] : fields[3];
            const auto &f_a = csv ? fields[2] : fields[0];
            const auto &f_b = csv ? fields[3] : fields[1];
            const auto start = detail::parse_real(f_start);
            const auto end = detail::parse_real(f_end);
            const auto a = detail::parse_int(f_a);
            const auto b = detail::parse_int(f_b);
            if (!start || !end || !a || !b)
            {
                throw ParseError(lineno, "malformed record '" + std::string(line) + "'");
            }
            if (*a < 0 || *b < 0 || *a > std::int64_t{UINT32_MAX} || *b > std::int64_t{UINT32_MAX})
            {
                throw ParseError(lineno, "node id out of range");
            }
            if (*a == *b)
            {
                throw ParseError(lineno, "self-contact for node " + std::to_string(*a));
            }
            if (*start < 0)
            {
                throw ParseError(lineno, "negative start time");
            }
            if (!(*end > *start))
            {
                throw ParseError(lineno, "end <= start");
            }
            if (csv)
            {
                const std::size_t limit = opts.node_count ? *opts.node_count : meta_nodes.value_or(SIZE_MAX);
                if (static_cast<std::size_t>(*a) >= limit || static_cast<std::size_t>(*b) >= limit)
                {
                    throw ParseError(lineno, "node id out of range");
                }
                events.push_back(make_contact(static_cast<NodeId>(*a), static_cast<NodeId>(*b), *start, *end));
            }
            else
            {
                renumber.emplace(*a, 0);
                renumber.emplace(*b, 0);
                raw_ids.push_back({*a, *b});
                events.push_back(ContactEvent{0, 0, *start, *end});
            }
        }
        if (!csv)
        {
            NodeId next = 0;
            for (auto &[raw, dense] : renumber)
            {
                dense = next++;
            }
            for (std::size_t i = 0; i < events.size(); ++i)
            {
                events[i] = make_contact(renumber.at(raw_ids[i][0]), renumber.at(raw_ids[i][1]), events[i].start, events[i].end);
            }
            if (!opts.node_count && !meta_nodes)
            {
                opts.node_count = renumber.size();
            }
        }
        return ContactTrace::from_events(std::move(events), opts.node_count ? opts.node_count : meta_nodes,
                                         opts.duration ? opts.duration : meta_duration);
    }

    inline ContactTrace parse_contact_trace(std::string_view text, TraceFormat format, TraceParseOptions opts = {})
    {
        std::istringstream in{std::string(text)};
        return parse_contact_trace(in, format, opts);
    }

    inline void write_canonical_csv(std::ostream &out, const ContactTrace &trace)
    {
        out << "# oppnet-trace nodes=" << trace.node_count() << " duration=" << detail::format_real(trace.duration())
            << '\n';
        for (const auto &e : trace.events())
        {
            out << detail::format_real(e.start) << ',' << detail::format_real(e.end) << ',' << e.a << ',' << e.b << '\n';
        }
    }

    struct AggregatedGraph
    {
        std::size_t nodes = 0;
        // Total contact seconds per pair; an entry exists iff the pair met.
        std::map<NodePair, double> edge_weight;

        std::size_t edge_count() const noexcept { return edge_weight.size(); }

        bool has_edge(NodeId x, NodeId y) const { return x != y && edge_weight.count(NodePair{x, y}) != 0; }

        double weight(NodeId x, NodeId y) const
        {
            const auto it = edge_weight.find(NodePair{x, y});
            return it == edge_weight.end() ? 0.0 : it->second;
        }

        std::vector<std::size_t> degrees() const
        {
            std::vector<std::size_t> d(nodes, 0);
            for (const auto &[p, w] : edge_weight)
            {
                ++d[p.a];
                ++d[p.b];
            }
            return d;
        }

        bool operator==(const AggregatedGraph &) const = default;
    };

    inline AggregatedGraph aggregate(const ContactTrace &trace)
    {
        AggregatedGraph g;
        g.nodes = trace.node_count();
        for (const auto &e : trace.events())
        {
            g.edge_weight[e.pair()] += e.duration();
        }
        return g;
    }

    // Average node degree of the unweighted aggregated graph.
    inline double network_density(const AggregatedGraph &g)
    {
        if (g.nodes == 0)
        {
            throw ValidationError("density of a graph with no nodes");
        }
        return 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.nodes);
    }

    struct PairStats
    {
        NodePair pair;
        std::size_t contacts = 0;
        double total_seconds = 0;
        std::optional<double> mean_gap;
        std::optional<double> max_gap;
    };

    struct TraceStats
    {
        std::size_t nodes = 0;
        std::size_t contacts = 0;
        double total_contact_seconds = 0;
        std::size_t active_days = 0;
        std::optional<double> mean_gap;
        std::optional<double> max_gap;
        std::vector<PairStats> pairs;
    };

    inline TraceStats trace_stats(const ContactTrace &trace)
    {
        TraceStats s;
        s.nodes = trace.node_count();
        s.contacts = trace.events().size();

        std::map<NodePair, std::vector<const ContactEvent *>> by_pair;
        std::set<std::int64_t> days;
        for (const auto &e : trace.events())
        {
            by_pair[e.pair()].push_back(&e);
            s.total_contact_seconds += e.duration();
            for (const auto &f : split_duration_by_slot(e))
            {
                days.insert(f.day);
            }
        }
        s.active_days = days.size();

        double gap_sum = 0;
        std::size_t gap_count = 0;
        for (const auto &[pair, list] : by_pair)
        {
            PairStats ps;
            ps.pair = pair;
            ps.contacts = list.size();
            double local_sum = 0;
            for (std::size_t i = 0; i < list.size(); ++i)
            {
                ps.total_seconds += list[i]->duration();
                if (i > 0)
                {
                    const double gap = list[i]->start - list[i - 1]->end;
                    local_sum += gap;
                    ps.max_gap = std::max(ps.max_gap.value_or(gap), gap);
                }
            }
            if (list.size() > 1)
            {
                ps.mean_gap = local_sum / static_cast<double>(list.size() - 1);
                gap_sum += local_sum;
                gap_count += list.size() - 1;
                s.max_gap = std::max(s.max_gap.value_or(*ps.max_gap), *ps.max_gap);
            }
            s.pairs.push_back(ps);
        }
        if (gap_count > 0)
        {
            s.mean_gap = gap_sum / static_cast<double>(gap_count);
        }
        return s;
    }

    inline nlohmann::json optional_json(const std::optional<double> &v)
    {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    }

    inline nlohmann::json to_json(const TraceStats &s, bool include_pairs = true)
    {
        nlohmann::json j;
        j["nodes"] = s.nodes;
        j["contacts"] = s.contacts;
        j["total_contact_seconds"] = s.total_contact_seconds;
        j["active_days"] = s.active_days;
        j["mean_intercontact_gap"] = optional_json(s.mean_gap);
        j["max_intercontact_gap"] = optional_json(s.max_gap);
        if (include_pairs)
        {
            auto &arr = j["pairs"] = nlohmann::json::array();
            for (const auto &p : s.pairs)
            {
                arr.push_back({{"a", p.pair.a},
                               {"b", p.pair.b},
                               {"contacts", p.contacts},
                               {"total_seconds", p.total_seconds},
                               {"mean_gap", optional_json(p.mean_gap)},
                               {"max_gap", optional_json(p.max_gap)}});
            }
        }
        return j;
    }

} // namespace oppnet
