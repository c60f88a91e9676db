#include <oppnet/scenario.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace oppnet;
namespace fs = std::filesystem;

namespace
{
    struct CmdResult
    {
        int code = -1;
        std::string out;
    };

    // Runs the CLI with stderr folded into the captured output.
    CmdResult lab(const std::string &args)
    {
        const std::string cmd = std::string(OPPNET_LAB_BINARY) + " " + args + " 2>&1";
        CmdResult r;
        FILE *p = popen(cmd.c_str(), "r");
        if (p == nullptr)
        {
            return r;
        }
        std::array<char, 4096> buf{};
        while (const auto n = std::fread(buf.data(), 1, buf.size(), p))
        {
            r.out.append(buf.data(), n);
        }
        const int status = pclose(p);
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        return r;
    }

    std::string slurp(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    std::vector<std::string> lines(const std::string &text)
    {
        std::vector<std::string> out;
        std::istringstream in(text);
        std::string l;
        while (std::getline(in, l))
        {
            out.push_back(l);
        }
        return out;
    }

    std::vector<std::string> split(const std::string &line)
    {
        std::vector<std::string> out;
        std::istringstream in(line);
        std::string f;
        while (std::getline(in, f, ','))
        {
            out.push_back(f);
        }
        if (!line.empty() && line.back() == ',')
        {
            out.emplace_back();
        }
        return out;
    }

    class Workdir : public ::testing::Test
    {
    protected:
        void SetUp() override
        {
            const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
            dir_ = fs::temp_directory_path() / (std::string("oppnet-") + info->test_suite_name() + "-" + info->name());
            fs::remove_all(dir_);
            fs::create_directories(dir_);
        }
        void TearDown() override { fs::remove_all(dir_); }

        fs::path write(const std::string &name, const std::string &text) const
        {
            const auto p = dir_ / name;
            std::ofstream(p, std::ios::binary) << text;
            return p;
        }

        fs::path write_json(const std::string &name, const json &j) const { return write(name, j.dump(2)); }

        std::string q(const fs::path &p) const { return "'" + p.string() + "'"; }

        // 36 nodes with random contacts over 12 days, enough for the
        // 35-destination workload grid.
        fs::path campus_trace() const
        {
            std::mt19937_64 gen(17);
            std::uniform_int_distribution<int> node(0, 35);
            std::uniform_real_distribution<double> start(0, 12 * kSecondsPerDay - 600);
            std::uniform_real_distribution<double> len(30, 600);
            std::vector<ContactEvent> ev;
            for (int i = 0; i < 4000; ++i)
            {
                const auto a = static_cast<NodeId>(node(gen));
                const auto b = static_cast<NodeId>(node(gen));
                if (a != b)
                {
                    const double s = start(gen);
                    ev.push_back(make_contact(a, b, s, s + len(gen)));
                }
            }
            std::ostringstream out;
            write_canonical_csv(out, ContactTrace::from_events(ev, 36, 12 * kSecondsPerDay));
            return write("campus.csv", out.str());
        }

        json tiny_synthetic(double pause = 100) const
        {
            return json{{"pause_seconds", pause},
                        {"group_size", 2},
                        {"days", 1},
                        {"grid", {{"rows", 4}, {"cols", 4}, {"spacing", 25}}}};
        }

        fs::path dir_;
    };

    json pair_scenario(const std::string &protocol)
    {
        return json{{"name", "pair"},
                    {"trace", {{"path", "pair.csv"}}},
                    {"protocol", protocol},
                    {"workload",
                     {{"kind", "unicast"},
                      {"sources", {{{"node", 0}, {"destinations", {1}}, {"per_destination", 1}, {"rate_per_day", 35}}}},
                      {"size", {1024, 1024}}}}};
    }

    const std::string kPairTrace = "# oppnet-trace nodes=2 duration=1000\n0,100,0,1\n";
} // namespace

TEST(ParseConfig, SyntheticDefaultsAndValidation)
{
    const auto s = parse_synthetic(json::object());
    EXPECT_EQ(s.options.group_size, 50u);
    EXPECT_DOUBLE_EQ(s.options.duration, 12 * kSecondsPerDay);
    EXPECT_DOUBLE_EQ(s.pause_seconds, 100);
    EXPECT_THROW(parse_synthetic(json{{"grid", {{"rows", 1}}}}), ValidationError);
    EXPECT_THROW(parse_synthetic(json{{"speed", {0.5, 2.0}}}), ValidationError);
    EXPECT_THROW(parse_synthetic(json{{"pause_seconds", 0}}), ValidationError);
}

TEST(ParseConfig, Protocol)
{
    EXPECT_EQ(parse_protocol(json("dlife")).name, ProtocolName::DLife);
    const auto p = parse_protocol(json{{"name", "bubblerap"}, {"k", 4}, {"window", 3600}});
    EXPECT_EQ(p.k, 4u);
    EXPECT_DOUBLE_EQ(p.window_seconds, 3600);
    EXPECT_EQ(parse_protocol(protocol_to_json(p)).k, 4u);
    EXPECT_THROW(parse_protocol(json{{"name", "bubblerap"}, {"k", 2}}), ValidationError);
    EXPECT_THROW(parse_protocol(json{{"name", "dlife"}, {"alpha", 0}}), ValidationError);
    EXPECT_THROW(parse_protocol(json{{"name", "scorp"}, {"utility", "mean"}}), ValidationError);
    EXPECT_THROW(parse_protocol(json("prophet")), ValidationError);
}

TEST(ParseConfig, WorkloadPresetsFollowProtocol)
{
    const auto uni = parse_workload(json{{"preset", "trace-grid"}, {"load", 5}}, ProtocolName::DLife, {});
    EXPECT_EQ(uni.kind, MessageKind::Unicast);
    EXPECT_EQ(uni.unicast[0].per_destination, 5u);
    const auto typed = parse_workload(json{{"preset", "trace-grid"}, {"load", 5}}, ProtocolName::Scorp, {});
    EXPECT_EQ(typed.kind, MessageKind::Typed);
    EXPECT_EQ(typed.random_interests->per_node, 5u);
    EXPECT_THROW(parse_workload(json{{"preset", "synthetic"}}, ProtocolName::Scorp, {}), ValidationError);
    EXPECT_THROW(parse_workload(json{{"preset", "bogus"}}, ProtocolName::Scorp, {}), ValidationError);
}

TEST(ParseConfig, ExplicitWorkloadMismatch)
{
    const json w = pair_scenario("scorp").at("workload");
    try
    {
        parse_workload(w, ProtocolName::Scorp, {});
        FAIL() << "expected mismatch";
    }
    catch (const ValidationError &e)
    {
        EXPECT_NE(std::string(e.what()).find("protocol/workload mismatch"), std::string::npos);
    }
    EXPECT_NO_THROW(parse_workload(w, ProtocolName::Epidemic, {}));
    auto ttl = w;
    ttl["ttl"] = 60;
    EXPECT_DOUBLE_EQ(*parse_workload(ttl, ProtocolName::Epidemic, {}).ttl, 60);
}

TEST(ParseConfig, Scenario)
{
    auto j = pair_scenario("epidemic");
    j["link_rate_bps"] = "instant";
    j["seeds"] = {3, 4};
    const auto s = parse_scenario(j, "/data");
    EXPECT_EQ(*s.trace_path, fs::path("/data/pair.csv"));
    EXPECT_TRUE(std::isinf(s.link_rate_bps));
    EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{3, 4}));

    auto both = j;
    both["synthetic"] = json::object();
    EXPECT_THROW(parse_scenario(both), ValidationError);
    auto neither = j;
    neither.erase("trace");
    EXPECT_THROW(parse_scenario(neither), ValidationError);
    auto rate = j;
    rate["link_rate_bps"] = "fast";
    EXPECT_THROW(parse_scenario(rate), ValidationError);
}

TEST(ParseConfig, SweepPoints)
{
    const json base{{"name", "b"}, {"synthetic", {{"pause_seconds", 100}}}, {"protocol", "epidemic"}};
    auto sw = parse_sweep(json{{"base", base},
                               {"axis", {{"name", "pause"}, {"values", {100, 100000}}}},
                               {"protocols", {"scorp"}},
                               {"seeds", {1, 2}}});
    const auto p = sweep_point(sw, 100000, ProtocolName::Scorp);
    EXPECT_DOUBLE_EQ(p["synthetic"]["pause_seconds"].get<double>(), 100000);
    EXPECT_EQ(p["protocol"], "scorp");
    EXPECT_EQ(p["seeds"], json({1, 2}));
    EXPECT_EQ(axis_value_label(sw, 100000), "100000");

    const json trace_base{{"trace", {{"path", "t.csv"}}},
                          {"protocol", {{"name", "dlife"}, {"alpha", 0.3}}},
                          {"workload", {{"preset", "trace-grid"}}}};
    auto mi = parse_sweep(json{{"base", trace_base},
                               {"axis", {{"name", "msg_int"}, {"values", {1, 5}}}},
                               {"protocols", {"dlife", "scorp"}}});
    const auto q = sweep_point(mi, 5, ProtocolName::Scorp);
    EXPECT_EQ(q["workload"]["load"], 5);
    EXPECT_EQ(q["protocol"]["name"], "scorp");
    EXPECT_DOUBLE_EQ(q["protocol"]["alpha"].get<double>(), 0.3);

    auto sc = parse_sweep(json{{"base", trace_base},
                               {"axis", {{"name", "scenario"}, {"values", {{{"name", "syn"}, {"synthetic", json::object()}}}}}},
                               {"protocols", {"epidemic"}}});
    const auto r = sweep_point(sc, sc.values[0], ProtocolName::Epidemic);
    EXPECT_FALSE(r.contains("trace"));
    EXPECT_EQ(axis_value_label(sc, sc.values[0]), "syn");

    EXPECT_THROW(parse_sweep(json{{"base", base}, {"axis", {{"name", "pause"}, {"values", json::array()}}}, {"protocols", {"scorp"}}}),
                 ValidationError);
    EXPECT_THROW(parse_sweep(json{{"base", base}, {"axis", {{"name", "speed"}, {"values", {1}}}}, {"protocols", {"scorp"}}}),
                 ValidationError);
}

TEST(ParallelFor, CoversEveryIndexAndRethrowsLowest)
{
    std::vector<int> hit(50, 0);
    parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
    EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 50);
    try
    {
        parallel_for(10, 1, [](std::size_t i) {
            if (i >= 3)
            {
                throw std::runtime_error("job " + std::to_string(i));
            }
        });
        FAIL();
    }
    catch (const std::runtime_error &e)
    {
        EXPECT_STREQ(e.what(), "job 3");
    }
    EXPECT_EQ(seed_suffixed("out/run.jsonl", 7), "out/run.s7.jsonl");
}

TEST_F(Workdir, GenTraceRejectsDegenerateGrid)
{
    auto cfg = tiny_synthetic();
    cfg["grid"]["rows"] = 1;
    const auto r = lab("gen-trace --config " + q(write_json("bad.json", cfg)) + " --out " + q(dir_ / "t.csv"));
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_NE(r.out.find("rows"), std::string::npos) << r.out;
}

TEST_F(Workdir, GenTraceIsDeterministic)
{
    auto cfg = tiny_synthetic();
    cfg["seed"] = 7;
    const auto c = write_json("syn.json", cfg);
    const auto a = lab("gen-trace --config " + q(c) + " --out " + q(dir_ / "a.csv"));
    const auto b = lab("gen-trace --config " + q(c) + " --out " + q(dir_ / "b.csv"));
    ASSERT_EQ(a.code, 0) << a.out;
    ASSERT_EQ(b.code, 0) << b.out;
    EXPECT_EQ(slurp(dir_ / "a.csv"), slurp(dir_ / "b.csv"));
    EXPECT_EQ(slurp(dir_ / "a.groups.json"), slurp(dir_ / "b.groups.json"));
    const auto printed = json::parse(a.out);
    EXPECT_EQ(printed["nodes"], 6);
    EXPECT_TRUE(printed.contains("density"));
    const auto side = json::parse(slurp(dir_ / "a.groups.json"));
    EXPECT_EQ(side["seed"], 7);

    const auto other = lab("gen-trace --config " + q(c) + " --out " + q(dir_ / "c.csv") + " --seed 8");
    ASSERT_EQ(other.code, 0);
    EXPECT_NE(slurp(dir_ / "a.csv"), slurp(dir_ / "c.csv"));
}

TEST_F(Workdir, DensityCommand)
{
    const auto k4 = write("k4.csv", "0,10,0,1\n0,10,0,2\n0,10,0,3\n0,10,1,2\n0,10,1,3\n0,10,2,3\n");
    const auto r = lab("density " + q(k4));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = json::parse(r.out);
    EXPECT_DOUBLE_EQ(j["density"].get<double>(), 3.0);
    EXPECT_EQ(j["edges"], 6);

    const auto empty = lab("density " + q(write("empty.csv", "")));
    ASSERT_EQ(empty.code, 0) << empty.out;
    EXPECT_DOUBLE_EQ(json::parse(empty.out)["density"].get<double>(), 0.0);

    const auto bad = lab("density " + q(write("bad.csv", "0,10,0,1\n5,1,0,2\n")));
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.out.find("line 2"), std::string::npos) << bad.out;
}

TEST_F(Workdir, SimulateTwoNodeEpidemic)
{
    write("pair.csv", kPairTrace);
    const auto cfg = write_json("pair.json", pair_scenario("epidemic"));
    const auto r = lab("simulate --config " + q(cfg) + " --out " + q(dir_ / "report.csv") + " --log " +
                       q(dir_ / "events.jsonl"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines(slurp(dir_ / "report.csv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], kReportHeader);
    const auto f = split(rows[1]);
    ASSERT_EQ(f.size(), 13u);
    EXPECT_EQ(f[0], "pair");
    EXPECT_EQ(f[1], "epidemic");
    EXPECT_EQ(f[4], "1");
    EXPECT_EQ(f[5], "1.000000");
    EXPECT_EQ(f[7], "0.000000");
    const auto log = lines(slurp(dir_ / "events.jsonl"));
    ASSERT_FALSE(log.empty());
    EXPECT_EQ(json::parse(log.front())["kind"], "create");
}

TEST_F(Workdir, SimulateRejectsMismatchedWorkload)
{
    write("pair.csv", kPairTrace);
    const auto r = lab("simulate --config " + q(write_json("s.json", pair_scenario("scorp"))) + " --out " +
                       q(dir_ / "r.csv"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("protocol/workload mismatch"), std::string::npos) << r.out;
}

TEST_F(Workdir, SimulateMissingTraceIsRuntimeFailure)
{
    const auto r = lab("simulate --config " + q(write_json("s.json", pair_scenario("epidemic"))) + " --out " +
                       q(dir_ / "r.csv"));
    EXPECT_EQ(r.code, 1) << r.out;
    EXPECT_NE(r.out.find("pair.csv"), std::string::npos);
}

TEST_F(Workdir, SimulateMalformedConfig)
{
    EXPECT_EQ(lab("simulate --config " + q(write("x.json", "{ nope"))).code, 2);
    EXPECT_EQ(lab("simulate").code, 2);
}

TEST_F(Workdir, SimulateFiveSeedsWithPerSeedLogs)
{
    const json cfg{{"name", "tiny"}, {"synthetic", tiny_synthetic()}, {"protocol", "scorp"}, {"seeds", {1, 2, 3, 4, 5}}};
    const auto r = lab("simulate --config " + q(write_json("t.json", cfg)) + " --out " + q(dir_ / "r.csv") +
                       " --log " + q(dir_ / "ev.jsonl") + " --dump-social " + q(dir_ / "social.jsonl"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines(slurp(dir_ / "r.csv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(split(rows[1])[4], "5");
    for (int s = 1; s <= 5; ++s)
    {
        EXPECT_TRUE(fs::exists(dir_ / ("ev.s" + std::to_string(s) + ".jsonl")));
        EXPECT_FALSE(slurp(dir_ / ("social.s" + std::to_string(s) + ".jsonl")).empty());
    }
}

TEST_F(Workdir, PauseSweepRows)
{
    const json sweep{{"base", {{"name", "tiny"}, {"synthetic", tiny_synthetic()}, {"protocol", "scorp"}}},
                     {"axis", {{"name", "pause"}, {"values", {100, 100000}}}},
                     {"protocols", {"scorp"}},
                     {"seeds", {1, 2}}};
    const auto r = lab("sweep --config " + q(write_json("sw.json", sweep)) + " --out " + q(dir_ / "r.csv") +
                       " --plot-data " + q(dir_ / "plots"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines(slurp(dir_ / "r.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(split(rows[1])[3], "100");
    EXPECT_EQ(split(rows[2])[3], "100000");
    EXPECT_EQ(split(rows[1])[2], "pause");
    for (const char *m : {"delivery", "cost", "cost_inclusive", "latency"})
    {
        EXPECT_EQ(lines(slurp(dir_ / "plots" / (std::string(m) + "_vs_pause.csv"))).size(), 3u) << m;
    }
}

TEST_F(Workdir, MsgIntSweepGrid)
{
    campus_trace();
    const json sweep{{"base",
                      {{"name", "campus"},
                       {"trace", {{"path", "campus.csv"}}},
                       {"protocol", "dlife"},
                       {"workload", {{"preset", "trace-grid"}}},
                       {"unrestricted_buffer_nodes", {0}}}},
                     {"axis", {{"name", "msg_int"}, {"values", {1, 5, 10, 20, 35}}}},
                     {"protocols", {"bubblerap", "dlife", "scorp"}},
                     {"seeds", {1}}};
    const auto r = lab("sweep --config " + q(write_json("sw.json", sweep)) + " --out " + q(dir_ / "r.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines(slurp(dir_ / "r.csv"));
    ASSERT_EQ(rows.size(), 16u);
    EXPECT_EQ(split(rows[1])[1], "bubblerap");
    EXPECT_EQ(split(rows[15])[1], "scorp");
    EXPECT_EQ(split(rows[15])[3], "35");
}

TEST_F(Workdir, SweepFailureNamesThePoint)
{
    const json sweep{{"base", {{"synthetic", tiny_synthetic()}, {"protocol", "scorp"}}},
                     {"axis", {{"name", "pause"}, {"values", {100, -5}}}},
                     {"protocols", {"scorp"}}};
    const auto r = lab("sweep --config " + q(write_json("sw.json", sweep)) + " --out " + q(dir_ / "r.csv"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("scorp/-5"), std::string::npos) << r.out;
}

TEST_F(Workdir, OutputsIndependentOfWorkerCount)
{
    const json sweep{{"base", {{"name", "tiny"}, {"synthetic", tiny_synthetic()}, {"protocol", "scorp"}}},
                     {"axis", {{"name", "pause"}, {"values", {100, 1000}}}},
                     {"protocols", {"epidemic", "bubblerap", "scorp"}},
                     {"seeds", {1, 2, 3}}};
    const auto cfg = write_json("sw.json", sweep);
    for (const std::string jobs : {"1", "3"})
    {
        const auto r = lab("sweep --config " + q(cfg) + " --jobs " + jobs + " --out " + q(dir_ / ("r" + jobs + ".csv")) +
                           " --log " + q(dir_ / ("logs" + jobs)));
        ASSERT_EQ(r.code, 0) << r.out;
    }
    EXPECT_EQ(slurp(dir_ / "r1.csv"), slurp(dir_ / "r3.csv"));
    std::size_t compared = 0;
    for (const auto &e : fs::directory_iterator(dir_ / "logs1"))
    {
        EXPECT_EQ(slurp(e.path()), slurp(dir_ / "logs3" / e.path().filename())) << e.path();
        ++compared;
    }
    EXPECT_EQ(compared, 18u);
}

TEST(ShippedConfigs, AllParse)
{
    std::size_t seen = 0;
    for (const auto &e : fs::directory_iterator(OPPNET_CONFIG_DIR))
    {
        if (e.path().extension() != ".json")
        {
            continue;
        }
        const auto j = load_json_file(e.path());
        SCOPED_TRACE(e.path().filename().string());
        if (j.contains("axis"))
        {
            const auto sw = parse_sweep(j);
            for (const auto &v : sw.values)
            {
                for (auto p : sw.protocols)
                {
                    EXPECT_NO_THROW(parse_scenario(sweep_point(sw, v, p), OPPNET_CONFIG_DIR));
                }
            }
        }
        else if (j.contains("protocol"))
        {
            const auto s = parse_scenario(j, OPPNET_CONFIG_DIR);
            if (s.trace_path)
            {
                EXPECT_TRUE(fs::exists(*s.trace_path));
            }
        }
        else
        {
            EXPECT_NO_THROW(parse_synthetic(j.at("synthetic")));
        }
        ++seen;
    }
    EXPECT_GE(seen, 8u);
}
