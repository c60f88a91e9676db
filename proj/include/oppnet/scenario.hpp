#pragma once

#include "core.hpp"
#include "engine.hpp"
#include "metrics.hpp"
#include "mobility.hpp"
#include "protocols.hpp"
#include "trace.hpp"
#include "workload.hpp"

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace oppnet
{
    using nlohmann::json;

    namespace detail
    {
        inline const json &require(const json &j, const char *key, const std::string &where)
        {
            if (!j.is_object() || !j.contains(key))
            {
                throw ValidationError(where + ": missing '" + key + "'");
            }
            return j.at(key);
        }

        template <typename T>
        T get_or(const json &j, const char *key, T fallback)
        {
            if (!j.is_object() || !j.contains(key) || j.at(key).is_null())
            {
                return fallback;
            }
            try
            {
                return j.at(key).get<T>();
            }
            catch (const json::exception &e)
            {
                throw ValidationError(std::string("bad value for '") + key + "': " + e.what());
            }
        }

        inline std::vector<ContentType> content_list(const json &j)
        {
            std::vector<ContentType> out;
            for (const auto &t : j)
            {
                out.emplace_back(t.get<std::string>());
            }
            return out;
        }
    } // namespace detail

    struct SyntheticSpec
    {
        SyntheticOptions options;
        double pause_seconds = 100;
    };

    inline SyntheticSpec parse_synthetic(const json &j)
    {
        SyntheticSpec s;
        s.pause_seconds = detail::get_or(j, "pause_seconds", 100.0);
        s.options.group_size = detail::get_or<std::size_t>(j, "group_size", 50);
        s.options.duration = detail::get_or(j, "days", 12.0) * kSecondsPerDay;
        s.options.radio_range = detail::get_or(j, "radio_range", 10.0);
        if (j.contains("grid"))
        {
            const auto &g = j.at("grid");
            s.options.grid.rows = detail::get_or<std::size_t>(g, "rows", 10);
            s.options.grid.cols = detail::get_or<std::size_t>(g, "cols", 10);
            s.options.grid.spacing = detail::get_or(g, "spacing", 50.0);
        }
        if (j.contains("speed"))
        {
            const auto sp = j.at("speed").get<std::vector<double>>();
            if (sp.size() != 2)
            {
                throw ValidationError("synthetic.speed must be [min, max]");
            }
            s.options.speed_min = sp[0];
            s.options.speed_max = sp[1];
        }
        // Validate eagerly so bad configs fail before any run starts.
        generate_grid_map(s.options.grid);
        synthetic_movement(s.pause_seconds, s.options).validate(generate_grid_map(s.options.grid));
        return s;
    }

    inline ProtocolParams parse_protocol(const json &j)
    {
        ProtocolParams p;
        if (j.is_string())
        {
            p.name = parse_protocol_name(j.get<std::string>());
            return p;
        }
        p.name = parse_protocol_name(detail::require(j, "name", "protocol").get<std::string>());
        p.k = detail::get_or<std::size_t>(j, "k", 3);
        p.threshold_seconds = detail::get_or(j, "threshold", 3600.0);
        p.window_seconds = detail::get_or(j, "window", 21600.0);
        p.alpha = detail::get_or(j, "alpha", 0.5);
        const auto util = detail::get_or<std::string>(j, "utility", "max");
        if (util == "max")
        {
            p.utility = UtilityAggregator::Max;
        }
        else if (util == "sum")
        {
            p.utility = UtilityAggregator::Sum;
        }
        else
        {
            throw ValidationError("protocol.utility must be 'max' or 'sum'");
        }
        if (p.k < 3)
        {
            throw ValidationError("protocol.k must be >= 3");
        }
        if (!(p.window_seconds > 0))
        {
            throw ValidationError("protocol.window must be positive");
        }
        if (!(p.alpha > 0) || p.alpha > 1)
        {
            throw ValidationError("protocol.alpha must lie in (0, 1]");
        }
        return p;
    }

    inline json protocol_to_json(const ProtocolParams &p)
    {
        return json{{"name", to_string(p.name)},
                    {"k", p.k},
                    {"threshold", p.threshold_seconds},
                    {"window", p.window_seconds},
                    {"alpha", p.alpha},
                    {"utility", p.utility == UtilityAggregator::Max ? "max" : "sum"}};
    }

    // Workload section. Presets pick the unicast or typed variant from the
    // protocol; explicit workloads must match the protocol's kind.
    inline WorkloadSpec parse_workload(const json &j, ProtocolName protocol, const std::vector<NodeGroup> &groups)
    {
        const auto needed = required_kind(protocol).value_or(MessageKind::Unicast);
        WorkloadSpec spec;
        if (j.contains("preset"))
        {
            const auto preset = j.at("preset").get<std::string>();
            if (preset == "synthetic")
            {
                if (groups.empty())
                {
                    throw ValidationError("workload preset 'synthetic' needs a synthetic scenario");
                }
                spec = needed == MessageKind::Unicast ? synthetic_unicast_workload(groups) : synthetic_typed_workload(groups);
            }
            else if (preset == "trace-grid")
            {
                const auto load = detail::get_or<std::size_t>(j, "load", 1);
                const auto dests = detail::get_or<std::size_t>(j, "destinations", 35);
                spec = needed == MessageKind::Unicast ? trace_unicast_workload(load, dests)
                                                      : trace_typed_workload(load, dests, dests);
            }
            else
            {
                throw ValidationError("unknown workload preset '" + preset + "'");
            }
        }
        else
        {
            const auto kind = detail::require(j, "kind", "workload").get<std::string>();
            if (kind == "unicast")
            {
                spec.kind = MessageKind::Unicast;
                for (const auto &s : detail::require(j, "sources", "workload"))
                {
                    UnicastSource u;
                    u.node = detail::require(s, "node", "workload.sources").get<NodeId>();
                    u.destinations = detail::require(s, "destinations", "workload.sources").get<std::vector<NodeId>>();
                    u.per_destination = detail::get_or<std::size_t>(s, "per_destination", 1);
                    u.rate_per_day = detail::get_or(s, "rate_per_day", grid_rate_for_load(u.per_destination));
                    spec.unicast.push_back(std::move(u));
                }
            }
            else if (kind == "typed")
            {
                spec.kind = MessageKind::Typed;
                for (const auto &s : detail::require(j, "sources", "workload"))
                {
                    TypedSource t;
                    t.node = detail::require(s, "node", "workload.sources").get<NodeId>();
                    t.contents = detail::content_list(detail::require(s, "contents", "workload.sources"));
                    t.rate_per_day = detail::get_or(s, "rate_per_day", 35.0);
                    spec.typed.push_back(std::move(t));
                }
                if (j.contains("random_interests"))
                {
                    const auto &r = j.at("random_interests");
                    RandomInterests ri;
                    ri.receivers = detail::require(r, "receivers", "random_interests").get<std::vector<NodeId>>();
                    ri.types = detail::content_list(detail::require(r, "types", "random_interests"));
                    ri.per_node = detail::get_or<std::size_t>(r, "per_node", 1);
                    spec.random_interests = ri;
                }
            }
            else
            {
                throw ValidationError("workload.kind must be 'unicast' or 'typed'");
            }
            if (const auto k = required_kind(protocol); k && *k != spec.kind)
            {
                throw ValidationError(std::string("protocol/workload mismatch: ") + to_string(protocol) + " needs a " +
                                      to_string(*k) + " workload");
            }
        }
        if (j.contains("size"))
        {
            const auto sz = j.at("size").get<std::vector<std::size_t>>();
            if (sz.size() != 2)
            {
                throw ValidationError("workload.size must be [min, max]");
            }
            spec.size_min = sz[0];
            spec.size_max = sz[1];
        }
        if (j.contains("ttl") && !j.at("ttl").is_null())
        {
            spec.ttl = j.at("ttl").get<double>();
        }
        return spec;
    }

    // Explicit per-node interests for typed workloads: {"3": ["games"], ...}
    inline std::vector<InterestProfile> parse_interest_map(const json &j)
    {
        std::vector<InterestProfile> out;
        if (!j.contains("interests"))
        {
            return out;
        }
        for (const auto &[key, list] : j.at("interests").items())
        {
            InterestProfile p;
            p.node = static_cast<NodeId>(std::stoul(key));
            for (const auto &t : detail::content_list(list))
            {
                p.interests.insert(t);
            }
            out.push_back(std::move(p));
        }
        return out;
    }

    struct Scenario
    {
        std::string name = "scenario";
        std::optional<SyntheticSpec> synthetic;
        std::optional<std::filesystem::path> trace_path;
        TraceFormat trace_format = TraceFormat::Csv;
        std::optional<std::size_t> trace_nodes;
        ProtocolParams protocol;
        json workload = json{{"preset", "synthetic"}};
        std::size_t buffer_bytes = kDefaultBufferBytes;
        std::set<NodeId> unrestricted;
        double link_rate_bps = kDefaultLinkRateBps;
        std::optional<SimTime> duration;
        std::vector<std::uint64_t> seeds{1};
        json raw;
    };

    inline Scenario parse_scenario(const json &j, const std::filesystem::path &base_dir = {})
    {
        if (!j.is_object())
        {
            throw ValidationError("scenario must be a JSON object");
        }
        Scenario s;
        s.raw = j;
        s.name = detail::get_or<std::string>(j, "name", "scenario");
        if (j.contains("synthetic") == j.contains("trace"))
        {
            throw ValidationError("scenario needs exactly one of 'synthetic' or 'trace'");
        }
        if (j.contains("synthetic"))
        {
            s.synthetic = parse_synthetic(j.at("synthetic"));
        }
        else
        {
            const auto &t = j.at("trace");
            std::filesystem::path p = detail::require(t, "path", "trace").get<std::string>();
            s.trace_path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
            s.trace_format = parse_trace_format(detail::get_or<std::string>(t, "format", "csv"));
            if (t.contains("nodes"))
            {
                s.trace_nodes = t.at("nodes").get<std::size_t>();
            }
        }
        s.protocol = parse_protocol(detail::require(j, "protocol", "scenario"));
        if (j.contains("workload"))
        {
            s.workload = j.at("workload");
        }
        s.buffer_bytes = detail::get_or<std::size_t>(j, "buffer_bytes", kDefaultBufferBytes);
        if (j.contains("unrestricted_buffer_nodes"))
        {
            const auto v = j.at("unrestricted_buffer_nodes").get<std::vector<NodeId>>();
            s.unrestricted = std::set<NodeId>(v.begin(), v.end());
        }
        if (j.contains("link_rate_bps"))
        {
            const auto &r = j.at("link_rate_bps");
            if (r.is_string())
            {
                if (r.get<std::string>() != "instant")
                {
                    throw ValidationError("link_rate_bps must be a number or \"instant\"");
                }
                s.link_rate_bps = kInstantaneous;
            }
            else
            {
                s.link_rate_bps = r.get<double>();
            }
        }
        if (j.contains("duration"))
        {
            s.duration = j.at("duration").get<double>();
        }
        if (j.contains("seeds"))
        {
            s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
            if (s.seeds.empty())
            {
                throw ValidationError("seeds must be non-empty");
            }
        }
        // Catch protocol/workload mismatches before any run starts.
        if (!s.workload.contains("preset"))
        {
            parse_workload(s.workload, s.protocol.name, {});
        }
        return s;
    }

    inline json load_json_file(const std::filesystem::path &p)
    {
        std::ifstream in(p);
        if (!in)
        {
            throw std::runtime_error("cannot open " + p.string());
        }
        try
        {
            return json::parse(in);
        }
        catch (const json::parse_error &e)
        {
            throw ValidationError(p.string() + ": " + e.what());
        }
    }

    inline ContactTrace load_trace_file(const std::filesystem::path &p, TraceFormat format,
                                        std::optional<std::size_t> nodes = std::nullopt)
    {
        std::ifstream in(p);
        if (!in)
        {
            throw std::runtime_error("cannot open trace " + p.string());
        }
        TraceParseOptions opts;
        opts.node_count = nodes;
        return parse_contact_trace(in, format, opts);
    }

    // Everything one seed of a scenario needs before simulation.
    struct PreparedInput
    {
        ContactTrace trace;
        std::vector<NodeGroup> groups;
        std::vector<InterestProfile> profiles;
        double density = 0;
    };

    inline PreparedInput prepare_input(const Scenario &s, std::uint64_t seed)
    {
        PreparedInput in;
        if (s.synthetic)
        {
            auto syn = three_group_scenario(s.synthetic->pause_seconds, seed, s.synthetic->options);
            in.trace = std::move(syn.trace);
            in.groups = std::move(syn.groups);
            in.profiles = std::move(syn.profiles);
        }
        else
        {
            in.trace = load_trace_file(*s.trace_path, s.trace_format, s.trace_nodes);
        }
        in.density = in.trace.node_count() > 0 ? network_density(aggregate(in.trace)) : 0.0;
        return in;
    }

    struct RunOutputs
    {
        bool record_log = false;
        std::function<void(const json &)> social_dump;
    };

    inline RunResult run_prepared(const Scenario &s, const PreparedInput &in, std::uint64_t seed,
                                  const RunOutputs &out = {})
    {
        ScenarioConfig cfg;
        cfg.nodes = in.trace.node_count();
        cfg.buffer_bytes = s.buffer_bytes;
        cfg.unrestricted_buffer_nodes = s.unrestricted;
        cfg.link_rate_bps = s.link_rate_bps;
        cfg.seed = seed;
        cfg.duration = s.duration.value_or(in.trace.duration());

        const auto spec = parse_workload(s.workload, s.protocol.name, in.groups);
        auto profiles = in.profiles;
        for (auto &p : parse_interest_map(s.workload))
        {
            profiles.push_back(std::move(p));
        }
        if (spec.kind == MessageKind::Unicast)
        {
            profiles.clear();
        }
        const auto workload = make_workload(spec, cfg.nodes, seed, profiles, cfg.duration);
        EngineOptions opt;
        opt.protocol = s.protocol;
        opt.record_log = out.record_log;
        opt.social_dump = out.social_dump;
        return Simulator(in.trace, cfg, workload, std::move(opt)).run();
    }

    // Runs fn(i) for i in [0, n) on up to `jobs` threads. The first
    // exception (lowest index) is rethrown after all workers stop.
    template <typename F>
    void parallel_for(std::size_t n, std::size_t jobs, F &&fn)
    {
        jobs = std::max<std::size_t>(1, std::min(jobs, n));
        std::vector<std::exception_ptr> errors(n);
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        auto worker = [&] {
            while (!failed.load())
            {
                const std::size_t i = next.fetch_add(1);
                if (i >= n)
                {
                    return;
                }
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                    failed.store(true);
                }
            }
        };
        if (jobs == 1)
        {
            worker();
        }
        else
        {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < jobs; ++t)
            {
                pool.emplace_back(worker);
            }
            for (auto &t : pool)
            {
                t.join();
            }
        }
        for (auto &e : errors)
        {
            if (e)
            {
                std::rethrow_exception(e);
            }
        }
    }

    inline std::string seed_suffixed(const std::filesystem::path &p, std::uint64_t seed)
    {
        return (p.parent_path() / (p.stem().string() + ".s" + std::to_string(seed) + p.extension().string())).string();
    }

    struct SimulateOptions
    {
        std::size_t jobs = 1;
        std::optional<std::filesystem::path> log_path;
        std::optional<std::filesystem::path> social_path;
    };

    struct ScenarioOutcome
    {
        ReportRow row;
        std::vector<RunResult> runs;
    };

    inline ScenarioOutcome simulate_scenario(const Scenario &s, const SimulateOptions &opt = {},
                                             const std::string &param_name = "none",
                                             const std::string &param_value = "")
    {
        const std::size_t n = s.seeds.size();
        std::vector<RunResult> runs(n);
        std::vector<double> densities(n);
        std::vector<std::string> dumps(n);
        parallel_for(n, opt.jobs, [&](std::size_t i) {
            const auto seed = s.seeds[i];
            const auto in = prepare_input(s, seed);
            densities[i] = in.density;
            RunOutputs out;
            out.record_log = opt.log_path.has_value();
            std::ostringstream social;
            if (opt.social_path)
            {
                out.social_dump = [&social](const json &j) { social << j.dump() << '\n'; };
            }
            runs[i] = run_prepared(s, in, seed, out);
            dumps[i] = social.str();
        });
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto seed = s.seeds[i];
            if (opt.log_path)
            {
                const auto path = n == 1 ? opt.log_path->string() : seed_suffixed(*opt.log_path, seed);
                std::ofstream f(path);
                if (!f)
                {
                    throw std::runtime_error("cannot write " + path);
                }
                write_event_log(f, runs[i].event_log);
            }
            if (opt.social_path)
            {
                const auto path = n == 1 ? opt.social_path->string() : seed_suffixed(*opt.social_path, seed);
                std::ofstream f(path);
                if (!f)
                {
                    throw std::runtime_error("cannot write " + path);
                }
                f << dumps[i];
            }
        }
        double density = 0;
        for (double d : densities)
        {
            density += d;
        }
        density /= static_cast<double>(n);
        ScenarioOutcome o;
        o.row = make_report_row(s.name, to_string(s.protocol.name), param_name, param_value, runs, density);
        o.runs = std::move(runs);
        return o;
    }

    enum class SweepAxis
    {
        MsgInt,
        Pause,
        Scenario
    };

    struct SweepSpec
    {
        json base;
        SweepAxis axis = SweepAxis::Pause;
        std::string axis_name;
        std::vector<json> values;
        std::vector<ProtocolName> protocols;
        std::vector<std::uint64_t> seeds;
    };

    inline SweepSpec parse_sweep(const json &j)
    {
        SweepSpec s;
        s.base = detail::require(j, "base", "sweep");
        const auto &axis = detail::require(j, "axis", "sweep");
        s.axis_name = detail::require(axis, "name", "sweep.axis").get<std::string>();
        if (s.axis_name == "msg_int")
        {
            s.axis = SweepAxis::MsgInt;
        }
        else if (s.axis_name == "pause")
        {
            s.axis = SweepAxis::Pause;
        }
        else if (s.axis_name == "scenario")
        {
            s.axis = SweepAxis::Scenario;
        }
        else
        {
            throw ValidationError("sweep axis must be msg_int, pause or scenario");
        }
        for (const auto &v : detail::require(axis, "values", "sweep.axis"))
        {
            s.values.push_back(v);
        }
        if (s.values.empty())
        {
            throw ValidationError("sweep axis values must be non-empty");
        }
        for (const auto &p : detail::require(j, "protocols", "sweep"))
        {
            s.protocols.push_back(parse_protocol_name(p.get<std::string>()));
        }
        if (s.protocols.empty())
        {
            throw ValidationError("sweep protocols must be non-empty");
        }
        if (j.contains("seeds"))
        {
            s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        }
        else
        {
            s.seeds = detail::get_or(s.base, "seeds", std::vector<std::uint64_t>{1});
        }
        if (s.seeds.empty())
        {
            throw ValidationError("sweep seeds must be non-empty");
        }
        return s;
    }

    inline std::string axis_value_label(const SweepSpec &s, const json &v)
    {
        if (s.axis == SweepAxis::Scenario)
        {
            return detail::get_or<std::string>(v, "name", "scenario");
        }
        if (v.is_number_integer())
        {
            return std::to_string(v.get<std::int64_t>());
        }
        return v.dump();
    }

    // Base scenario JSON with one axis value and protocol applied.
    inline json sweep_point(const SweepSpec &s, const json &value, ProtocolName protocol)
    {
        json j = s.base;
        if (s.axis == SweepAxis::Scenario)
        {
            if (!value.is_object())
            {
                throw ValidationError("scenario axis values must be objects");
            }
            if (value.contains("synthetic") && j.contains("trace"))
            {
                j.erase("trace");
            }
            if (value.contains("trace") && j.contains("synthetic"))
            {
                j.erase("synthetic");
            }
            j.merge_patch(value);
        }
        else if (s.axis == SweepAxis::Pause)
        {
            if (!j.contains("synthetic"))
            {
                throw ValidationError("pause axis needs a synthetic base scenario");
            }
            j["synthetic"]["pause_seconds"] = value.get<double>();
        }
        else
        {
            const auto load = value.get<std::size_t>();
            auto &w = j["workload"];
            if (w.contains("preset"))
            {
                w["load"] = load;
            }
            else if (w.value("kind", "") == "unicast")
            {
                for (auto &src : w["sources"])
                {
                    src["per_destination"] = load;
                    src["rate_per_day"] = grid_rate_for_load(load);
                }
            }
            else if (w.contains("random_interests"))
            {
                w["random_interests"]["per_node"] = load;
            }
            else
            {
                throw ValidationError("msg_int axis needs a trace-grid preset or an explicit load");
            }
        }
        if (j.contains("protocol") && j.at("protocol").is_object())
        {
            j["protocol"]["name"] = to_string(protocol);
        }
        else
        {
            j["protocol"] = to_string(protocol);
        }
        j["seeds"] = s.seeds;
        // Typed-only and unicast-only explicit workloads can be given per kind.
        const auto kind = required_kind(protocol).value_or(MessageKind::Unicast);
        const char *kind_key = kind == MessageKind::Unicast ? "unicast_workload" : "typed_workload";
        if (j.contains(kind_key))
        {
            j["workload"] = j.at(kind_key);
        }
        j.erase("unicast_workload");
        j.erase("typed_workload");
        return j;
    }

    struct SweepOptions
    {
        std::size_t jobs = 1;
        std::optional<std::filesystem::path> log_dir;
    };

    inline std::vector<ReportRow> run_sweep(const SweepSpec &s, const std::filesystem::path &base_dir,
                                            const SweepOptions &opt = {})
    {
        struct Job
        {
            std::size_t point = 0;
            std::size_t seed_index = 0;
        };
        struct Point
        {
            Scenario scenario;
            std::string label;
            std::size_t value_index = 0;
        };
        std::vector<Point> points;
        for (std::size_t p = 0; p < s.protocols.size(); ++p)
        {
            for (std::size_t v = 0; v < s.values.size(); ++v)
            {
                Point pt;
                try
                {
                    pt.scenario = parse_scenario(sweep_point(s, s.values[v], s.protocols[p]), base_dir);
                }
                catch (const ValidationError &e)
                {
                    throw ValidationError("sweep point " + std::string(to_string(s.protocols[p])) + "/" +
                                          axis_value_label(s, s.values[v]) + ": " + e.what());
                }
                pt.label = axis_value_label(s, s.values[v]);
                pt.value_index = v;
                points.push_back(std::move(pt));
            }
        }

        // Inputs depend on the axis value and seed only, so protocols share them.
        const std::size_t nseeds = s.seeds.size();
        std::vector<PreparedInput> inputs(s.values.size() * nseeds);
        parallel_for(inputs.size(), opt.jobs, [&](std::size_t i) {
            const auto v = i / nseeds;
            const auto &sc = points[v].scenario;
            inputs[i] = prepare_input(sc, s.seeds[i % nseeds]);
        });

        std::vector<Job> jobs;
        for (std::size_t p = 0; p < points.size(); ++p)
        {
            for (std::size_t k = 0; k < nseeds; ++k)
            {
                jobs.push_back(Job{p, k});
            }
        }
        std::vector<RunResult> results(jobs.size());
        parallel_for(jobs.size(), opt.jobs, [&](std::size_t i) {
            const auto &job = jobs[i];
            const auto &pt = points[job.point];
            const auto &in = inputs[pt.value_index * nseeds + job.seed_index];
            RunOutputs out;
            out.record_log = opt.log_dir.has_value();
            try
            {
                results[i] = run_prepared(pt.scenario, in, s.seeds[job.seed_index], out);
            }
            catch (const ValidationError &e)
            {
                throw ValidationError(std::string(to_string(pt.scenario.protocol.name)) + "/" + pt.label + " seed " +
                                      std::to_string(s.seeds[job.seed_index]) + ": " + e.what());
            }
            catch (const std::exception &e)
            {
                throw std::runtime_error(std::string(to_string(pt.scenario.protocol.name)) + "/" + pt.label + " seed " +
                                         std::to_string(s.seeds[job.seed_index]) + ": " + e.what());
            }
            if (opt.log_dir)
            {
                const auto path = *opt.log_dir / (pt.scenario.name + "." + to_string(pt.scenario.protocol.name) + "." +
                                                  pt.label + ".s" + std::to_string(s.seeds[job.seed_index]) + ".jsonl");
                std::ofstream f(path);
                if (!f)
                {
                    throw std::runtime_error("cannot write " + path.string());
                }
                write_event_log(f, results[i].event_log);
                results[i].event_log.clear();
                results[i].event_log.shrink_to_fit();
            }
        });

        std::vector<ReportRow> rows;
        for (std::size_t p = 0; p < points.size(); ++p)
        {
            std::vector<RunResult> runs;
            double density = 0;
            for (std::size_t k = 0; k < nseeds; ++k)
            {
                runs.push_back(std::move(results[p * nseeds + k]));
                density += inputs[points[p].value_index * nseeds + k].density;
            }
            density /= static_cast<double>(nseeds);
            rows.push_back(make_report_row(points[p].scenario.name, to_string(points[p].scenario.protocol.name),
                                           s.axis_name, points[p].label, runs, density));
        }
        return rows;
    }

} // namespace oppnet
