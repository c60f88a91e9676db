// oppnet-lab: trace generation, density analysis, single scenario runs and
// parameter sweeps. Exit codes: 0 success, 1 runtime failure, 2 invalid input.

#include <oppnet/oppnet.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace oppnet;

namespace
{
    constexpr int kExitRuntime = 1;
    constexpr int kExitValidation = 2;

    std::ofstream open_out(const fs::path &p)
    {
        if (p.has_parent_path())
        {
            fs::create_directories(p.parent_path());
        }
        std::ofstream f(p, std::ios::binary);
        if (!f)
        {
            throw std::runtime_error("cannot write " + p.string());
        }
        return f;
    }

    fs::path sidecar_path(const fs::path &trace_out)
    {
        auto p = trace_out;
        p.replace_extension(".groups.json");
        return p;
    }

    int cmd_gen_trace(const fs::path &config, const fs::path &out, std::optional<std::uint64_t> seed_override)
    {
        const auto j = load_json_file(config);
        // Accept a bare synthetic section or a full scenario.
        const json &syn = j.contains("synthetic") ? j.at("synthetic") : j;
        const auto spec = parse_synthetic(syn);
        std::uint64_t seed = 1;
        if (j.contains("seed"))
        {
            seed = j.at("seed").get<std::uint64_t>();
        }
        else if (j.contains("seeds") && !j.at("seeds").empty())
        {
            seed = j.at("seeds").front().get<std::uint64_t>();
        }
        seed = seed_override.value_or(seed);

        const auto scenario = three_group_scenario(spec.pause_seconds, seed, spec.options);
        {
            auto f = open_out(out);
            write_canonical_csv(f, scenario.trace);
        }
        {
            auto f = open_out(sidecar_path(out));
            auto side = groups_to_json(scenario.groups, scenario.profiles);
            side["seed"] = seed;
            side["pause_seconds"] = spec.pause_seconds;
            f << side.dump(2) << '\n';
        }
        const double density = network_density(aggregate(scenario.trace));
        std::cout << json{{"trace", out.string()},
                          {"nodes", scenario.trace.node_count()},
                          {"contacts", scenario.trace.events().size()},
                          {"density", density}}
                         .dump()
                  << '\n';
        return 0;
    }

    int cmd_density(const fs::path &trace_path, const std::string &format, std::optional<std::size_t> nodes,
                    bool pairs)
    {
        const auto trace = load_trace_file(trace_path, parse_trace_format(format), nodes);
        auto j = to_json(trace_stats(trace), pairs);
        const auto g = aggregate(trace);
        j["density"] = trace.node_count() > 0 ? network_density(g) : 0.0;
        j["edges"] = g.edge_count();
        j["duration"] = trace.duration();
        std::cout << j.dump(2) << '\n';
        return 0;
    }

    int cmd_simulate(const fs::path &config, const fs::path &out, const SimulateOptions &opt)
    {
        const auto scenario = parse_scenario(load_json_file(config), config.parent_path());
        const auto outcome = simulate_scenario(scenario, opt);
        auto f = open_out(out);
        write_report_csv(f, {outcome.row});
        std::cout << "wrote " << out.string() << " (" << outcome.row.seed_count << " seeds, delivery "
                  << detail::fixed(outcome.row.delivery.mean) << ", cost " << detail::fixed(outcome.row.cost.mean)
                  << ")\n";
        return 0;
    }

    int cmd_sweep(const fs::path &config, const fs::path &out, std::size_t jobs, const std::optional<fs::path> &log_dir,
                  const std::optional<fs::path> &plot_dir)
    {
        const auto spec = parse_sweep(load_json_file(config));
        SweepOptions opt;
        opt.jobs = jobs;
        if (log_dir)
        {
            fs::create_directories(*log_dir);
            opt.log_dir = *log_dir;
        }
        const auto rows = run_sweep(spec, config.parent_path(), opt);
        {
            auto f = open_out(out);
            write_report_csv(f, rows);
        }
        if (plot_dir)
        {
            fs::create_directories(*plot_dir);
            for (const char *metric : {"delivery", "cost", "cost_inclusive", "latency"})
            {
                auto f = open_out(*plot_dir / (std::string(metric) + "_vs_" + spec.axis_name + ".csv"));
                write_plot_csv(f, rows, metric);
            }
        }
        std::cout << "wrote " << out.string() << " (" << rows.size() << " rows)\n";
        return 0;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Opportunistic network routing laboratory"};
    app.require_subcommand(1);

    fs::path config;
    fs::path out;
    std::size_t jobs = 1;
    std::optional<fs::path> log_path;
    std::optional<fs::path> plot_dir;
    std::optional<fs::path> social_path;
    std::optional<std::uint64_t> seed;
    std::string format = "csv";
    std::optional<std::size_t> nodes;
    bool pairs = false;

    auto *gen = app.add_subcommand("gen-trace", "Generate a synthetic contact trace and group sidecar");
    gen->add_option("--config", config, "Synthetic scenario JSON")->required();
    gen->add_option("--out", out, "Output trace CSV")->required();
    gen->add_option("--seed", seed, "Override the config seed");

    auto *den = app.add_subcommand("density", "Print node count, density and contact statistics as JSON");
    den->add_option("trace,--config", config, "Contact trace file")->required();
    den->add_option("--format", format, "csv or crawdad")->check(CLI::IsMember({"csv", "crawdad"}));
    den->add_option("--nodes", nodes, "Declared node count");
    den->add_flag("--pairs", pairs, "Include per-pair statistics");

    auto *sim = app.add_subcommand("simulate", "Run one scenario over all its seeds");
    sim->add_option("--config", config, "Scenario JSON")->required();
    sim->add_option("--out", out, "Report CSV")->default_val("report.csv");
    sim->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sim->add_option("--log", log_path, "Event log JSONL (one file per seed)");
    sim->add_option("--dump-social", social_path, "Social state JSONL at window boundaries");

    auto *sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep->add_option("--config", config, "Sweep JSON")->required();
    sweep->add_option("--out", out, "Report CSV")->default_val("report.csv");
    sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("--log", log_path, "Directory for per-run event logs");
    sweep->add_option("--plot-data", plot_dir, "Directory for per-metric plot CSVs");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try
    {
        if (*gen)
        {
            return cmd_gen_trace(config, out, seed);
        }
        if (*den)
        {
            return cmd_density(config, format, nodes, pairs);
        }
        if (*sim)
        {
            SimulateOptions opt;
            opt.jobs = jobs;
            opt.log_path = log_path;
            opt.social_path = social_path;
            return cmd_simulate(config, out, opt);
        }
        return cmd_sweep(config, out, jobs, log_path, plot_dir);
    }
    catch (const ParseError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    catch (const ValidationError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    catch (const json::exception &e)
    {
        std::cerr << "error: malformed config: " << e.what() << '\n';
        return kExitValidation;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
