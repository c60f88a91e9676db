#include <oppnet/social.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace oppnet;

namespace
{
    AggregatedGraph graph_of(std::size_t nodes, const std::vector<std::pair<NodeId, NodeId>> &edges, double w = 4000)
    {
        AggregatedGraph g;
        g.nodes = nodes;
        for (auto [a, b] : edges)
        {
            g.edge_weight[NodePair(a, b)] = w;
        }
        return g;
    }

    std::set<std::set<NodeId>> non_singletons(const CommunitySet &cs, std::size_t k)
    {
        std::set<std::set<NodeId>> out;
        for (const auto &c : cs.communities)
        {
            if (c.size() >= k)
            {
                out.insert(std::set<NodeId>(c.begin(), c.end()));
            }
        }
        return out;
    }

    // Random contacts in start order, some spanning slot and day boundaries.
    std::vector<ContactEvent> random_contacts(std::mt19937_64 &gen, std::size_t nodes, std::size_t count, double days)
    {
        std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(nodes - 1));
        std::uniform_real_distribution<double> start(0, days * 86400);
        std::uniform_real_distribution<double> len(1, 7200);
        std::vector<ContactEvent> ev;
        while (ev.size() < count)
        {
            const auto a = node(gen);
            const auto b = node(gen);
            if (a != b)
            {
                const double s = start(gen);
                ev.push_back(make_contact(a, b, s, s + len(gen)));
            }
        }
        std::sort(ev.begin(), ev.end(), [](const auto &x, const auto &y) { return x.end < y.end; });
        return ev;
    }
} // namespace

TEST(SlotWeights, TwoDayExample)
{
    SlotWeightTable t(0.5);
    const NodePair p(1, 2);
    t.update(p, SlotFragment{TimeSlotIndex{9}, 0, 600});
    EXPECT_DOUBLE_EQ(t.weight(1, 2, TimeSlotIndex{9}), 300);
    t.update(p, SlotFragment{TimeSlotIndex{9}, 1, 1200});
    EXPECT_DOUBLE_EQ(t.weight(1, 2, TimeSlotIndex{9}), 750);
    EXPECT_DOUBLE_EQ(social_weight(t, 2, 1, TimeSlotIndex{9}), 750);
    EXPECT_DOUBLE_EQ(t.weight(1, 2, TimeSlotIndex{10}), 0);
}

TEST(SlotWeights, SameDayFragmentsAccumulate)
{
    SlotWeightTable t(0.5);
    const NodePair p(0, 3);
    t.update(p, SlotFragment{TimeSlotIndex{4}, 2, 100});
    t.update(p, SlotFragment{TimeSlotIndex{4}, 2, 500});
    EXPECT_DOUBLE_EQ(t.weight(0, 3, TimeSlotIndex{4}), 300);
}

TEST(SlotWeights, SkippedDaysDecay)
{
    SlotWeightTable t(0.5);
    const NodePair p(0, 1);
    t.update(p, SlotFragment{TimeSlotIndex{0}, 0, 800});
    t.update(p, SlotFragment{TimeSlotIndex{0}, 3, 0.5});
    // 400 -> two zero days -> 100, then folded with 0.5 s.
    EXPECT_DOUBLE_EQ(t.weight(0, 1, TimeSlotIndex{0}), 0.5 * 100 + 0.5 * 0.5);
}

TEST(SlotWeights, NeverInContact)
{
    SlotWeightTable t;
    for (int s = 0; s < 24; ++s)
    {
        EXPECT_EQ(t.weight(4, 5, TimeSlotIndex{s}), 0);
    }
    EXPECT_THROW(SlotWeightTable(0), ValidationError);
    EXPECT_THROW(SlotWeightTable(1.5), ValidationError);
}

TEST(SlotWeights, MatchesDailyEwmaOracleAndStaysBounded)
{
    std::mt19937_64 gen(99);
    for (double alpha : {0.5, 0.2, 1.0})
    {
        const auto contacts = random_contacts(gen, 5, 150, 6);
        // Feed pair by pair in time order so the per-cell day order holds.
        SocialWeights sw(5, alpha);
        std::vector<ContactEvent> sorted = contacts;
        std::sort(sorted.begin(), sorted.end(), [](const auto &x, const auto &y) { return x.start < y.start; });
        const auto trace = ContactTrace::from_events(sorted, 5);
        for (const auto &c : trace.events())
        {
            sw.add_contact(c);
        }
        for (NodeId a = 0; a < 5; ++a)
        {
            for (NodeId b = a + 1; b < 5; ++b)
            {
                for (int s = 0; s < 24; ++s)
                {
                    const double want = oracle::daily_ewma(oracle::slot_totals(trace.events(), a, b, s), alpha);
                    const double got = sw.weight(a, b, TimeSlotIndex{s});
                    EXPECT_NEAR(got, want, 1e-9) << a << "-" << b << " slot " << s;
                    EXPECT_GE(got, 0);
                    EXPECT_LE(got, 3600);
                }
            }
        }
    }
}

TEST(Importance, SumOfWeights)
{
    SocialWeights sw(3);
    sw.update_social_weights(NodePair(0, 1), SlotFragment{TimeSlotIndex{9}, 0, 600});
    sw.update_social_weights(NodePair(0, 2), SlotFragment{TimeSlotIndex{9}, 0, 900});
    EXPECT_DOUBLE_EQ(sw.weight(0, 1, TimeSlotIndex{9}), 300);
    EXPECT_DOUBLE_EQ(sw.weight(0, 2, TimeSlotIndex{9}), 450);
    EXPECT_DOUBLE_EQ(node_importance(sw, 0, TimeSlotIndex{9}), 750);
    EXPECT_DOUBLE_EQ(node_importance(sw, 1, TimeSlotIndex{9}), 300);
    EXPECT_DOUBLE_EQ(node_importance(sw, 0, TimeSlotIndex{8}), 0);

    SocialWeights isolated(4);
    EXPECT_EQ(node_importance(isolated, 3, TimeSlotIndex{0}), 0);
}

TEST(Importance, PermutationInvariant)
{
    SocialWeights x(3);
    SocialWeights y(3);
    x.update_social_weights(NodePair(0, 1), SlotFragment{TimeSlotIndex{9}, 0, 600});
    x.update_social_weights(NodePair(0, 2), SlotFragment{TimeSlotIndex{9}, 0, 900});
    y.update_social_weights(NodePair(0, 2), SlotFragment{TimeSlotIndex{9}, 0, 900});
    y.update_social_weights(NodePair(0, 1), SlotFragment{TimeSlotIndex{9}, 0, 600});
    EXPECT_DOUBLE_EQ(x.node_importance(0, TimeSlotIndex{9}), y.node_importance(0, TimeSlotIndex{9}));
}

TEST(Importance, IncrementalEqualsRecomputationAfterEveryContact)
{
    std::mt19937_64 gen(5);
    auto contacts = random_contacts(gen, 6, 200, 5);
    std::sort(contacts.begin(), contacts.end(), [](const auto &x, const auto &y) { return x.start < y.start; });
    const auto trace = ContactTrace::from_events(contacts, 6);
    SocialWeights sw(6);
    for (const auto &c : trace.events())
    {
        sw.add_contact(c);
        const auto full = recompute_importance(sw.weights(), 6);
        for (NodeId n = 0; n < 6; ++n)
        {
            for (int s = 0; s < 24; ++s)
            {
                ASSERT_NEAR(sw.node_importance(n, TimeSlotIndex{s}), full.get(n, TimeSlotIndex{s}), 1e-6);
            }
        }
    }
}

TEST(KClique, Triangle)
{
    const auto cs = kclique_communities(graph_of(3, {{0, 1}, {1, 2}, {0, 2}}), 3, 3600);
    ASSERT_EQ(cs.communities.size(), 1u);
    EXPECT_EQ(cs.communities[0], (std::vector<NodeId>{0, 1, 2}));
}

TEST(KClique, TrianglesSharingAnEdgeMerge)
{
    const auto g = graph_of(4, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}});
    const auto cs = kclique_communities(g, 3, 3600);
    ASSERT_EQ(cs.communities.size(), 1u);
    EXPECT_EQ(cs.communities[0], (std::vector<NodeId>{0, 1, 2, 3}));
    EXPECT_EQ(non_singletons(cs, 3), oracle::clique_percolation(4, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}}, 3));
}

TEST(KClique, TrianglesSharingAVertexStayApart)
{
    const std::set<std::pair<NodeId, NodeId>> e{{0, 1}, {0, 2}, {1, 2}, {2, 3}, {2, 4}, {3, 4}};
    const auto cs = kclique_communities(graph_of(5, {e.begin(), e.end()}), 3, 3600);
    ASSERT_EQ(cs.communities.size(), 2u);
    EXPECT_EQ(non_singletons(cs, 3), oracle::clique_percolation(5, e, 3));
    EXPECT_EQ(cs.membership[2].size(), 2u);
}

TEST(KClique, ThresholdDropsLightEdges)
{
    auto g = graph_of(3, {{0, 1}, {1, 2}, {0, 2}});
    g.edge_weight[NodePair(0, 2)] = 100;
    const auto cs = kclique_communities(g, 3, 3600);
    EXPECT_EQ(cs.communities.size(), 3u);
    EXPECT_FALSE(cs.shares_community(0, 1));
    g.edge_weight[NodePair(0, 2)] = 3600;
    EXPECT_TRUE(kclique_communities(g, 3, 3600).shares_community(0, 1));
}

TEST(KClique, SingletonsCoverUnclusteredNodes)
{
    const auto cs = kclique_communities(graph_of(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}}), 3, 3600);
    std::set<NodeId> covered;
    for (const auto &c : cs.communities)
    {
        EXPECT_TRUE(c.size() >= 3 || c.size() == 1);
        covered.insert(c.begin(), c.end());
    }
    EXPECT_EQ(covered.size(), 6u);
    EXPECT_EQ(cs.membership[5].size(), 1u);
}

TEST(KClique, RejectsSmallK) { EXPECT_THROW(kclique_communities(graph_of(3, {}), 2, 0), ValidationError); }

TEST(KClique, MatchesBruteForceOnRandomGraphs)
{
    std::mt19937_64 gen(17);
    for (int rep = 0; rep < 200; ++rep)
    {
        const std::size_t n = 3 + rep % 7;
        const std::size_t k = 3 + (rep / 7) % 2;
        std::bernoulli_distribution edge(0.55);
        std::set<std::pair<NodeId, NodeId>> e;
        for (NodeId a = 0; a < n; ++a)
        {
            for (NodeId b = a + 1; b < n; ++b)
            {
                if (edge(gen))
                {
                    e.insert({a, b});
                }
            }
        }
        const auto cs = kclique_communities(graph_of(n, {e.begin(), e.end()}), k, 3600);
        EXPECT_EQ(non_singletons(cs, k), oracle::clique_percolation(n, e, k)) << "rep " << rep;
    }
}

TEST(KClique, RelabelingInvariant)
{
    std::mt19937_64 gen(23);
    for (int rep = 0; rep < 50; ++rep)
    {
        const std::size_t n = 9;
        std::bernoulli_distribution edge(0.5);
        std::vector<std::pair<NodeId, NodeId>> e;
        for (NodeId a = 0; a < n; ++a)
        {
            for (NodeId b = a + 1; b < n; ++b)
            {
                if (edge(gen))
                {
                    e.emplace_back(a, b);
                }
            }
        }
        std::vector<NodeId> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), gen);
        std::vector<std::pair<NodeId, NodeId>> relabeled;
        for (auto [a, b] : e)
        {
            relabeled.emplace_back(perm[a], perm[b]);
        }
        const auto base = kclique_communities(graph_of(n, e), 3, 3600);
        const auto moved = kclique_communities(graph_of(n, relabeled), 3, 3600);
        std::set<std::set<NodeId>> mapped;
        for (const auto &c : base.communities)
        {
            std::set<NodeId> s;
            for (auto v : c)
            {
                s.insert(perm[v]);
            }
            mapped.insert(s);
        }
        std::set<std::set<NodeId>> got;
        for (const auto &c : moved.communities)
        {
            got.insert(std::set<NodeId>(c.begin(), c.end()));
        }
        EXPECT_EQ(mapped, got);
    }
}

TEST(Centrality, TwoPeersPerWindow)
{
    const auto cs = CommunitySet::singletons(3);
    std::vector<ContactEvent> seen{make_contact(0, 1, 10, 20), make_contact(0, 2, 30, 40), make_contact(0, 1, 110, 120),
                                   make_contact(0, 2, 130, 140)};
    const auto t = update_centrality(seen, 200, 100, cs, 3);
    EXPECT_EQ(t.completed_windows, 2u);
    EXPECT_DOUBLE_EQ(t.global_of(0), 2.0);
    EXPECT_DOUBLE_EQ(t.global_of(1), 1.0);
}

TEST(Centrality, RepeatedPeerCountsOnce)
{
    const auto cs = CommunitySet::singletons(2);
    std::vector<ContactEvent> seen;
    for (int i = 0; i < 5; ++i)
    {
        seen.push_back(make_contact(0, 1, i * 10.0, i * 10.0 + 5));
    }
    EXPECT_DOUBLE_EQ(update_centrality(seen, 100, 100, cs, 2).global_of(0), 1.0);
}

TEST(Centrality, MeanOfWindowDegrees)
{
    const auto cs = CommunitySet::singletons(4);
    // Node 0: degree 3 in window 0, 1 in window 1, 0 in window 2.
    std::vector<ContactEvent> seen{make_contact(0, 1, 1, 2), make_contact(0, 2, 3, 4), make_contact(0, 3, 5, 6),
                                   make_contact(0, 1, 101, 102)};
    EXPECT_DOUBLE_EQ(update_centrality(seen, 300, 100, cs, 4).global_of(0), 4.0 / 3.0);
}

TEST(Centrality, LocalCountsOnlyCommunityPeersAndNeverExceedsGlobal)
{
    const auto cs = kclique_communities(graph_of(5, {{0, 1}, {1, 2}, {0, 2}}), 3, 3600);
    std::vector<ContactEvent> seen{make_contact(0, 1, 1, 2), make_contact(0, 3, 3, 4), make_contact(0, 4, 5, 6)};
    const auto t = update_centrality(seen, 100, 100, cs, 5);
    const auto c = cs.membership[0].front();
    EXPECT_DOUBLE_EQ(t.global_of(0), 3.0);
    EXPECT_DOUBLE_EQ(t.local_of(0, c), 1.0);

    std::mt19937_64 gen(2);
    const auto contacts = random_contacts(gen, 8, 300, 2);
    AggregatedGraph g;
    g.nodes = 8;
    for (const auto &e : contacts)
    {
        g.edge_weight[e.pair()] += e.duration();
    }
    const auto comm = kclique_communities(g, 3, 3600);
    const auto tab = update_centrality(contacts, 2 * 86400, 21600, comm, 8);
    for (NodeId n = 0; n < 8; ++n)
    {
        EXPECT_GE(tab.global_of(n), 0);
        for (auto ci : comm.membership[n])
        {
            EXPECT_LE(tab.local_of(n, ci), tab.global_of(n));
        }
    }
}

TEST(Centrality, ContactsSpanningWindowsCountInEach)
{
    WindowContacts wc(100);
    wc.add(NodePair(0, 1), 50, 250);
    ASSERT_EQ(wc.windows().size(), 3u);
    const auto t = update_centrality(wc, 3, CommunitySet::singletons(2), 2);
    EXPECT_DOUBLE_EQ(t.global_of(1), 1.0);
    WindowContacts edge(100);
    edge.add(NodePair(0, 1), 50, 100);
    EXPECT_EQ(edge.windows().size(), 1u);
}

TEST(Centrality, ArgmaxSurvivesUniformScaling)
{
    std::mt19937_64 gen(41);
    const auto contacts = random_contacts(gen, 7, 120, 1);
    auto t = update_centrality(contacts, 86400, 21600, CommunitySet::singletons(7), 7);
    const auto best = std::max_element(t.global.begin(), t.global.end()) - t.global.begin();
    for (auto &v : t.global)
    {
        v *= 3.5;
    }
    EXPECT_EQ(std::max_element(t.global.begin(), t.global.end()) - t.global.begin(), best);
}

TEST(SocialSnapshot, JsonShape)
{
    SocialWeights sw(3);
    sw.add_contact(make_contact(0, 1, 0, 600));
    const auto cs = CommunitySet::singletons(3);
    const auto j = social_snapshot_json(21600, sw, cs, update_centrality({}, 0, 21600, cs, 3));
    EXPECT_EQ(j["time"], 21600);
    EXPECT_EQ(j["communities"].size(), 3u);
    ASSERT_EQ(j["weights"].size(), 1u);
    EXPECT_EQ(j["weights"][0]["w"], 300);
}
