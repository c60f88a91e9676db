#pragma once

#include "core.hpp"
#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace oppnet
{
    inline double delivery_probability(const RunResult &r)
    {
        if (r.expected == 0)
        {
            throw ValidationError("delivery probability undefined: no deliveries expected");
        }
        return static_cast<double>(r.delivered) / static_cast<double>(r.expected);
    }

    // Replicas per delivered message, excluding the final delivery hop.
    // nullopt when nothing was delivered.
    inline std::optional<double> cost(const RunResult &r)
    {
        if (r.delivered == 0)
        {
            return std::nullopt;
        }
        const auto d = static_cast<double>(r.delivered);
        return (static_cast<double>(r.transmissions) - d) / d;
    }

    // Companion metric: all transmissions per delivered message.
    inline std::optional<double> cost_inclusive(const RunResult &r)
    {
        if (r.delivered == 0)
        {
            return std::nullopt;
        }
        return static_cast<double>(r.transmissions) / static_cast<double>(r.delivered);
    }

    inline std::optional<double> mean_latency(const RunResult &r)
    {
        if (r.deliveries.empty())
        {
            return std::nullopt;
        }
        double s = 0;
        for (const auto &d : r.deliveries)
        {
            s += d.latency();
        }
        return s / static_cast<double>(r.deliveries.size());
    }

    struct Interval
    {
        double mean = 0;
        double half_width = 0;
    };

    // Normal-approximation 95% interval: mean +- 1.96 s / sqrt(n).
    inline Interval ci95(const std::vector<double> &samples)
    {
        if (samples.size() < 2)
        {
            throw ValidationError("ci95 needs at least two samples");
        }
        const auto n = static_cast<double>(samples.size());
        double mean = 0;
        for (double x : samples)
        {
            mean += x;
        }
        mean /= n;
        double ss = 0;
        for (double x : samples)
        {
            ss += (x - mean) * (x - mean);
        }
        const double sd = std::sqrt(ss / (n - 1));
        return Interval{mean, 1.96 * sd / std::sqrt(n)};
    }

    // Worst-case per-node buffer demand if every forwarding leaves a copy:
    // forwardings / days / relay nodes * mean message size.
    inline double estimate_buffer_occupancy(double forwardings, double days, double relay_nodes, double avg_msg_bytes)
    {
        if (!(forwardings > 0) || !(days > 0) || !(relay_nodes > 0) || !(avg_msg_bytes > 0))
        {
            throw ValidationError("buffer estimate inputs must be positive");
        }
        return forwardings / days / relay_nodes * avg_msg_bytes;
    }

    // Aggregate over seeds; undefined per-seed values are skipped.
    struct MetricSummary
    {
        std::size_t samples = 0;
        std::optional<double> mean;
        std::optional<double> ci;
    };

    inline MetricSummary summarize(const std::vector<std::optional<double>> &values)
    {
        std::vector<double> defined;
        for (const auto &v : values)
        {
            if (v)
            {
                defined.push_back(*v);
            }
        }
        MetricSummary s;
        s.samples = defined.size();
        if (defined.size() == 1)
        {
            s.mean = defined.front();
        }
        else if (defined.size() >= 2)
        {
            const auto ci = ci95(defined);
            s.mean = ci.mean;
            s.ci = ci.half_width;
        }
        return s;
    }

    struct ReportRow
    {
        std::string scenario;
        std::string protocol;
        std::string param_name;
        std::string param_value;
        std::size_t seed_count = 0;
        MetricSummary delivery;
        MetricSummary cost;
        MetricSummary cost_inclusive;
        MetricSummary latency;
        std::size_t peak_buffer_bytes_max = 0;
        std::optional<double> density;
    };

    inline ReportRow make_report_row(std::string scenario, std::string protocol, std::string param_name,
                                     std::string param_value, const std::vector<RunResult> &runs,
                                     std::optional<double> density)
    {
        ReportRow row;
        row.scenario = std::move(scenario);
        row.protocol = std::move(protocol);
        row.param_name = std::move(param_name);
        row.param_value = std::move(param_value);
        row.seed_count = runs.size();
        row.density = density;
        std::vector<std::optional<double>> dp;
        std::vector<std::optional<double>> c;
        std::vector<std::optional<double>> ci;
        std::vector<std::optional<double>> lat;
        for (const auto &r : runs)
        {
            dp.push_back(r.expected > 0 ? std::optional<double>(delivery_probability(r)) : std::nullopt);
            c.push_back(cost(r));
            ci.push_back(cost_inclusive(r));
            lat.push_back(mean_latency(r));
            for (auto b : r.peak_buffer)
            {
                row.peak_buffer_bytes_max = std::max(row.peak_buffer_bytes_max, b);
            }
        }
        row.delivery = summarize(dp);
        row.cost = summarize(c);
        row.cost_inclusive = summarize(ci);
        row.latency = summarize(lat);
        return row;
    }

    namespace detail
    {
        inline std::string fixed(double v, int digits = 6)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.*f", digits, v);
            return buf;
        }

        inline std::string fixed(const std::optional<double> &v, int digits = 6)
        {
            return v ? fixed(*v, digits) : std::string("NA");
        }

        inline std::string csv_field(const std::string &s)
        {
            if (s.find_first_of(",\"\n") == std::string::npos)
            {
                return s;
            }
            std::string out = "\"";
            for (char c : s)
            {
                if (c == '"')
                {
                    out += '"';
                }
                out += c;
            }
            return out + "\"";
        }
    } // namespace detail

    inline constexpr const char *kReportHeader = "scenario,protocol,param_name,param_value,seed_count,delivery_mean,"
                                                 "delivery_ci,cost_mean,cost_ci,latency_mean_s,latency_ci,"
                                                 "peak_buffer_bytes_max,density";

    inline void write_report_csv(std::ostream &out, const std::vector<ReportRow> &rows)
    {
        out << kReportHeader << '\n';
        for (const auto &r : rows)
        {
            out << detail::csv_field(r.scenario) << ',' << detail::csv_field(r.protocol) << ','
                << detail::csv_field(r.param_name) << ',' << detail::csv_field(r.param_value) << ',' << r.seed_count
                << ',' << detail::fixed(r.delivery.mean) << ',' << detail::fixed(r.delivery.ci) << ','
                << detail::fixed(r.cost.mean) << ',' << detail::fixed(r.cost.ci) << ',' << detail::fixed(r.latency.mean, 3)
                << ',' << detail::fixed(r.latency.ci, 3) << ',' << r.peak_buffer_bytes_max << ','
                << detail::fixed(r.density, 4) << '\n';
        }
    }

    // Tidy long-format series for one metric against the sweep axis.
    inline void write_plot_csv(std::ostream &out, const std::vector<ReportRow> &rows, const std::string &metric)
    {
        out << "scenario,protocol,param_name,param_value,density,metric,mean,ci\n";
        for (const auto &r : rows)
        {
            const MetricSummary *m = nullptr;
            if (metric == "delivery")
            {
                m = &r.delivery;
            }
            else if (metric == "cost")
            {
                m = &r.cost;
            }
            else if (metric == "cost_inclusive")
            {
                m = &r.cost_inclusive;
            }
            else if (metric == "latency")
            {
                m = &r.latency;
            }
            else
            {
                throw std::invalid_argument("unknown metric " + metric);
            }
            out << detail::csv_field(r.scenario) << ',' << detail::csv_field(r.protocol) << ','
                << detail::csv_field(r.param_name) << ',' << detail::csv_field(r.param_value) << ','
                << detail::fixed(r.density, 4) << ',' << metric << ',' << detail::fixed(m->mean) << ','
                << detail::fixed(m->ci) << '\n';
        }
    }

    // Replays a run's event log and checks buffer invariants: occupancy never
    // exceeds capacity and every eviction removes the oldest-received copy.
    struct BufferAudit
    {
        bool ok = true;
        std::size_t evictions = 0;
        std::size_t max_occupancy = 0;
        std::vector<std::string> violations;
    };

    inline BufferAudit audit_buffers(const std::vector<LogRecord> &log, const ScenarioConfig &config)
    {
        BufferAudit a;
        struct Copy
        {
            MessageId id;
            std::size_t size;
        };
        std::vector<std::vector<Copy>> buffers(config.nodes);
        std::vector<std::size_t> used(config.nodes, 0);
        auto fail = [&](const LogRecord &r, const std::string &why) {
            a.ok = false;
            a.violations.push_back("t=" + detail::fixed(r.time, 3) + " msg " + std::to_string(r.msg) + ": " + why);
        };
        auto remove = [&](NodeId n, MessageId id) -> bool {
            auto &b = buffers[n];
            const auto it = std::find_if(b.begin(), b.end(), [&](const Copy &c) { return c.id == id; });
            if (it == b.end())
            {
                return false;
            }
            used[n] -= it->size;
            b.erase(it);
            return true;
        };
        for (const auto &r : log)
        {
            switch (r.kind)
            {
            case LogKind::Store:
            {
                buffers[r.to].push_back(Copy{r.msg, r.size});
                used[r.to] += r.size;
                a.max_occupancy = std::max(a.max_occupancy, used[r.to]);
                if (!config.unrestricted(r.to) && used[r.to] > config.buffer_bytes)
                {
                    fail(r, "node " + std::to_string(r.to) + " over capacity");
                }
                break;
            }
            case LogKind::Evict:
            {
                ++a.evictions;
                if (config.unrestricted(r.to))
                {
                    fail(r, "eviction at an unrestricted node");
                }
                if (buffers[r.to].empty() || buffers[r.to].front().id != r.msg)
                {
                    fail(r, "eviction is not the oldest copy at node " + std::to_string(r.to));
                }
                remove(r.to, r.msg);
                break;
            }
            case LogKind::Remove:
            case LogKind::Expire:
                if (!remove(r.to, r.msg))
                {
                    fail(r, "removal of a copy the node does not hold");
                }
                break;
            default:
                break;
            }
        }
        return a;
    }

} // namespace oppnet
