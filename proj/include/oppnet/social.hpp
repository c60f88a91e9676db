#pragma once

#include "core.hpp"
#include "trace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace oppnet
{
    // Per (pair, hour-of-day) social weight in seconds, folded daily with an
    // exponentially weighted moving average:
    //   w = (1 - alpha) * base + alpha * today
    // where base is the weight before the current day and today is the
    // contact time accumulated so far in that slot on the current day.
    // Every day skipped since the last update folds in one zero.
    class SlotWeightTable
    {
    public:
        explicit SlotWeightTable(double alpha = 0.5) : alpha_(alpha)
        {
            if (!(alpha > 0) || alpha > 1)
            {
                throw ValidationError("EWMA alpha must lie in (0, 1]");
            }
        }

        double alpha() const noexcept { return alpha_; }

        // Returns the change applied to w(pair, slot).
        double update(NodePair pair, const SlotFragment &f)
        {
            auto &cell = cells_[pair.key()][static_cast<std::size_t>(f.slot.slot)];
            const double before = cell.weight;
            if (!cell.touched || f.day > cell.day)
            {
                double base = cell.touched ? cell.weight : 0.0;
                if (cell.touched)
                {
                    const auto skipped = f.day - cell.day - 1;
                    base *= std::pow(1.0 - alpha_, static_cast<double>(skipped));
                }
                cell.base = base;
                cell.today = 0;
                cell.day = f.day;
                cell.touched = true;
            }
            else if (f.day < cell.day)
            {
                throw std::logic_error("slot weight fragments must arrive in day order");
            }
            cell.today += f.seconds;
            cell.weight = (1.0 - alpha_) * cell.base + alpha_ * cell.today;
            return cell.weight - before;
        }

        double weight(NodeId x, NodeId y, TimeSlotIndex slot) const
        {
            if (x == y)
            {
                return 0.0;
            }
            const auto it = cells_.find(NodePair{x, y}.key());
            if (it == cells_.end())
            {
                return 0.0;
            }
            return it->second[static_cast<std::size_t>(slot.slot)].weight;
        }

        std::optional<std::int64_t> last_day(NodeId x, NodeId y, TimeSlotIndex slot) const
        {
            const auto it = cells_.find(NodePair{x, y}.key());
            if (it == cells_.end() || !it->second[static_cast<std::size_t>(slot.slot)].touched)
            {
                return std::nullopt;
            }
            return it->second[static_cast<std::size_t>(slot.slot)].day;
        }

        template <typename F>
        void for_each(F &&f) const
        {
            for (const auto &[key, slots] : cells_)
            {
                const NodePair p{static_cast<NodeId>(key >> 32), static_cast<NodeId>(key & 0xffffffffU)};
                for (int s = 0; s < kSlotsPerDay; ++s)
                {
                    if (slots[static_cast<std::size_t>(s)].touched)
                    {
                        f(p, TimeSlotIndex{s}, slots[static_cast<std::size_t>(s)].weight);
                    }
                }
            }
        }

    private:
        struct Cell
        {
            double weight = 0;
            double base = 0;
            double today = 0;
            std::int64_t day = 0;
            bool touched = false;
        };

        double alpha_;
        std::unordered_map<std::uint64_t, std::array<Cell, kSlotsPerDay>> cells_;
    };

    inline double social_weight(const SlotWeightTable &table, NodeId a, NodeId b, TimeSlotIndex slot)
    {
        return table.weight(a, b, slot);
    }

    // imp(n, slot) = sum over peers of w(n, peer, slot), kept in step with
    // the weight table by SocialWeights.
    class ImportanceTable
    {
    public:
        explicit ImportanceTable(std::size_t nodes = 0) : imp_(nodes) {}

        double get(NodeId n, TimeSlotIndex slot) const
        {
            return n < imp_.size() ? imp_[n][static_cast<std::size_t>(slot.slot)] : 0.0;
        }

        void add(NodeId n, TimeSlotIndex slot, double delta)
        {
            if (n >= imp_.size())
            {
                imp_.resize(n + 1);
            }
            auto &v = imp_[n][static_cast<std::size_t>(slot.slot)];
            v += delta;
            if (v < 0 && v > -1e-9)
            {
                v = 0;
            }
        }

        std::size_t nodes() const noexcept { return imp_.size(); }

    private:
        std::vector<std::array<double, kSlotsPerDay>> imp_;
    };

    inline ImportanceTable recompute_importance(const SlotWeightTable &table, std::size_t nodes)
    {
        ImportanceTable t(nodes);
        table.for_each([&](NodePair p, TimeSlotIndex s, double w) {
            t.add(p.a, s, w);
            t.add(p.b, s, w);
        });
        return t;
    }

    // Weight table plus the importance table derived from it.
    class SocialWeights
    {
    public:
        explicit SocialWeights(std::size_t nodes = 0, double alpha = 0.5) : weights_(alpha), importance_(nodes) {}

        void add_contact(const ContactEvent &c)
        {
            for (const auto &f : split_duration_by_slot(c))
            {
                update_social_weights(c.pair(), f);
            }
        }

        void update_social_weights(NodePair pair, const SlotFragment &f)
        {
            const double delta = weights_.update(pair, f);
            importance_.add(pair.a, f.slot, delta);
            importance_.add(pair.b, f.slot, delta);
        }

        const SlotWeightTable &weights() const noexcept { return weights_; }
        const ImportanceTable &importance() const noexcept { return importance_; }

        double weight(NodeId a, NodeId b, TimeSlotIndex slot) const { return weights_.weight(a, b, slot); }
        double node_importance(NodeId a, TimeSlotIndex slot) const { return importance_.get(a, slot); }

    private:
        SlotWeightTable weights_;
        ImportanceTable importance_;
    };

    inline double node_importance(const SocialWeights &s, NodeId a, TimeSlotIndex slot)
    {
        return s.node_importance(a, slot);
    }

    struct CommunitySet
    {
        // Sorted member lists; communities ordered by their smallest member.
        std::vector<std::vector<NodeId>> communities;
        // node -> indices into communities
        std::vector<std::vector<std::size_t>> membership;

        bool shares_community(NodeId x, NodeId y) const
        {
            if (x >= membership.size() || y >= membership.size())
            {
                return false;
            }
            const auto &mx = membership[x];
            const auto &my = membership[y];
            for (auto c : mx)
            {
                if (std::find(my.begin(), my.end(), c) != my.end())
                {
                    return true;
                }
            }
            return false;
        }

        bool contains(std::size_t community, NodeId n) const
        {
            return std::binary_search(communities[community].begin(), communities[community].end(), n);
        }

        bool operator==(const CommunitySet &) const = default;

        static CommunitySet singletons(std::size_t nodes)
        {
            CommunitySet cs;
            for (NodeId n = 0; n < nodes; ++n)
            {
                cs.communities.push_back({n});
            }
            cs.index(nodes);
            return cs;
        }

        void index(std::size_t nodes)
        {
            std::sort(communities.begin(), communities.end());
            membership.assign(nodes, {});
            for (std::size_t c = 0; c < communities.size(); ++c)
            {
                for (auto n : communities[c])
                {
                    membership[n].push_back(c);
                }
            }
        }
    };

    namespace detail
    {
        inline void bron_kerbosch(const std::vector<std::vector<NodeId>> &adj, std::vector<NodeId> &r,
                                  std::vector<NodeId> p, std::vector<NodeId> x, std::size_t min_size,
                                  std::vector<std::vector<NodeId>> &out)
        {
            if (p.empty() && x.empty())
            {
                if (r.size() >= min_size)
                {
                    auto c = r;
                    std::sort(c.begin(), c.end());
                    out.push_back(std::move(c));
                }
                return;
            }
            if (r.size() + p.size() < min_size)
            {
                return;
            }
            auto adjacent = [&](NodeId u, NodeId v) { return std::binary_search(adj[u].begin(), adj[u].end(), v); };
            // Pivot: vertex of P u X with most neighbours in P.
            NodeId pivot = p.empty() ? x.front() : p.front();
            std::size_t best = 0;
            for (const auto *set : {&p, &x})
            {
                for (auto u : *set)
                {
                    std::size_t cnt = 0;
                    for (auto v : p)
                    {
                        cnt += adjacent(u, v) ? 1 : 0;
                    }
                    if (cnt > best)
                    {
                        best = cnt;
                        pivot = u;
                    }
                }
            }
            std::vector<NodeId> candidates;
            for (auto v : p)
            {
                if (!adjacent(pivot, v))
                {
                    candidates.push_back(v);
                }
            }
            for (auto v : candidates)
            {
                std::vector<NodeId> np;
                std::vector<NodeId> nx;
                for (auto u : p)
                {
                    if (adjacent(v, u))
                    {
                        np.push_back(u);
                    }
                }
                for (auto u : x)
                {
                    if (adjacent(v, u))
                    {
                        nx.push_back(u);
                    }
                }
                r.push_back(v);
                bron_kerbosch(adj, r, std::move(np), std::move(nx), min_size, out);
                r.pop_back();
                p.erase(std::find(p.begin(), p.end(), v));
                x.push_back(v);
            }
        }

        struct DisjointSets
        {
            std::vector<std::size_t> parent;

            explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

            std::size_t find(std::size_t i)
            {
                while (parent[i] != i)
                {
                    parent[i] = parent[parent[i]];
                    i = parent[i];
                }
                return i;
            }

            void unite(std::size_t i, std::size_t j) { parent[find(i)] = find(j); }
        };
    } // namespace detail

    // Clique percolation: k-cliques are adjacent when they share k-1 nodes and
    // a community is the union of a connected set of k-cliques. Computed via
    // maximal cliques of size >= k, which percolate iff they overlap in at
    // least k-1 nodes. Nodes in no k-clique become singleton communities.
    inline CommunitySet kclique_communities(const AggregatedGraph &g, std::size_t k, double duration_threshold_seconds)
    {
        if (k < 3)
        {
            throw ValidationError("k-clique communities need k >= 3");
        }
        std::vector<std::vector<NodeId>> adj(g.nodes);
        for (const auto &[p, w] : g.edge_weight)
        {
            if (w >= duration_threshold_seconds)
            {
                adj[p.a].push_back(p.b);
                adj[p.b].push_back(p.a);
            }
        }
        for (auto &a : adj)
        {
            std::sort(a.begin(), a.end());
        }

        std::vector<std::vector<NodeId>> cliques;
        std::vector<NodeId> r;
        std::vector<NodeId> p;
        for (NodeId n = 0; n < g.nodes; ++n)
        {
            if (adj[n].size() + 1 >= k)
            {
                p.push_back(n);
            }
        }
        detail::bron_kerbosch(adj, r, p, {}, k, cliques);

        detail::DisjointSets ds(cliques.size());
        for (std::size_t i = 0; i < cliques.size(); ++i)
        {
            for (std::size_t j = i + 1; j < cliques.size(); ++j)
            {
                std::vector<NodeId> common;
                std::set_intersection(cliques[i].begin(), cliques[i].end(), cliques[j].begin(), cliques[j].end(),
                                      std::back_inserter(common));
                if (common.size() + 1 >= k)
                {
                    ds.unite(i, j);
                }
            }
        }
        std::map<std::size_t, std::set<NodeId>> merged;
        for (std::size_t i = 0; i < cliques.size(); ++i)
        {
            merged[ds.find(i)].insert(cliques[i].begin(), cliques[i].end());
        }

        CommunitySet cs;
        std::vector<bool> covered(g.nodes, false);
        for (const auto &[root, members] : merged)
        {
            cs.communities.emplace_back(members.begin(), members.end());
            for (auto n : members)
            {
                covered[n] = true;
            }
        }
        for (NodeId n = 0; n < g.nodes; ++n)
        {
            if (!covered[n])
            {
                cs.communities.push_back({n});
            }
        }
        cs.index(g.nodes);
        return cs;
    }

    // Cumulative-window (C-Window) degree centrality. Time is cut into fixed
    // windows; a node's window-degree is the number of distinct peers it was
    // in contact with during the window. Global centrality averages the
    // window-degree over completed windows; local centrality does the same
    // counting only peers inside one community.
    struct CentralityTable
    {
        double window_length = 21600;
        std::size_t completed_windows = 0;
        std::vector<double> global;
        // local[n] maps community index -> centrality, only for communities of n.
        std::vector<std::map<std::size_t, double>> local;

        double global_of(NodeId n) const { return n < global.size() ? global[n] : 0.0; }

        double local_of(NodeId n, std::size_t community) const
        {
            if (n >= local.size())
            {
                return 0.0;
            }
            const auto it = local[n].find(community);
            return it == local[n].end() ? 0.0 : it->second;
        }
    };

    class WindowContacts
    {
    public:
        explicit WindowContacts(double window_length = 21600) : window_(window_length)
        {
            if (!(window_length > 0))
            {
                throw ValidationError("centrality window length must be positive");
            }
        }

        double window_length() const noexcept { return window_; }

        // Records the pair in every window overlapping [start, end). Safe to
        // call repeatedly for a growing interval.
        void add(NodePair pair, SimTime start, SimTime end)
        {
            const auto first = static_cast<std::size_t>(std::floor(start / window_));
            auto last = static_cast<std::size_t>(std::ceil(end / window_));
            if (last > 0)
            {
                --last;
            }
            last = std::max(last, first);
            if (windows_.size() <= last)
            {
                windows_.resize(last + 1);
            }
            for (std::size_t w = first; w <= last; ++w)
            {
                windows_[w].insert(pair);
            }
        }

        const std::vector<std::set<NodePair>> &windows() const noexcept { return windows_; }

    private:
        double window_;
        std::vector<std::set<NodePair>> windows_;
    };

    inline CentralityTable update_centrality(const WindowContacts &contacts, std::size_t completed_windows,
                                             const CommunitySet &communities, std::size_t nodes)
    {
        CentralityTable t;
        t.window_length = contacts.window_length();
        t.completed_windows = completed_windows;
        t.global.assign(nodes, 0.0);
        t.local.assign(nodes, {});
        if (completed_windows == 0)
        {
            return t;
        }
        std::vector<std::map<std::size_t, double>> local_sum(nodes);
        for (std::size_t w = 0; w < completed_windows && w < contacts.windows().size(); ++w)
        {
            for (const auto &p : contacts.windows()[w])
            {
                t.global[p.a] += 1;
                t.global[p.b] += 1;
                for (auto [self, peer] : {std::pair{p.a, p.b}, std::pair{p.b, p.a}})
                {
                    if (self >= communities.membership.size())
                    {
                        continue;
                    }
                    for (auto c : communities.membership[self])
                    {
                        if (communities.contains(c, peer))
                        {
                            local_sum[self][c] += 1;
                        }
                    }
                }
            }
        }
        const double n = static_cast<double>(completed_windows);
        for (NodeId v = 0; v < nodes; ++v)
        {
            t.global[v] /= n;
            if (v < communities.membership.size())
            {
                for (auto c : communities.membership[v])
                {
                    t.local[v][c] = local_sum[v].count(c) ? local_sum[v][c] / n : 0.0;
                }
            }
        }
        return t;
    }

    // Convenience form over a list of contacts observed up to `now`.
    inline CentralityTable update_centrality(const std::vector<ContactEvent> &seen, SimTime now, double window_length,
                                             const CommunitySet &communities, std::size_t nodes)
    {
        WindowContacts wc(window_length);
        for (const auto &c : seen)
        {
            if (c.start < now)
            {
                wc.add(c.pair(), c.start, std::min(c.end, now));
            }
        }
        return update_centrality(wc, static_cast<std::size_t>(std::floor(now / window_length)), communities, nodes);
    }

    inline nlohmann::json social_snapshot_json(SimTime now, const SocialWeights &weights, const CommunitySet &communities,
                                               const CentralityTable &centrality)
    {
        nlohmann::json j;
        j["time"] = now;
        j["communities"] = communities.communities;
        j["completed_windows"] = centrality.completed_windows;
        j["global"] = centrality.global;
        auto &local = j["local"] = nlohmann::json::array();
        for (std::size_t n = 0; n < centrality.local.size(); ++n)
        {
            for (const auto &[c, v] : centrality.local[n])
            {
                local.push_back({{"node", n}, {"community", c}, {"value", v}});
            }
        }
        std::vector<std::tuple<NodeId, NodeId, int, double>> rows;
        weights.weights().for_each([&](NodePair p, TimeSlotIndex s, double w) { rows.emplace_back(p.a, p.b, s.slot, w); });
        std::sort(rows.begin(), rows.end());
        auto &wj = j["weights"] = nlohmann::json::array();
        for (const auto &[a, b, s, w] : rows)
        {
            wj.push_back({{"a", a}, {"b", b}, {"slot", s}, {"w", w}});
        }
        return j;
    }

} // namespace oppnet
