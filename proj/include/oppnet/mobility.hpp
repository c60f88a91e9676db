#pragma once

#include "core.hpp"
#include "rng.hpp"
#include "trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

namespace oppnet
{
    struct Point
    {
        double x = 0;
        double y = 0;
    };

    inline double distance(Point p, Point q) { return std::hypot(p.x - q.x, p.y - q.y); }

    struct MapEdge
    {
        std::size_t u = 0;
        std::size_t v = 0;
        double length = 0;
    };

    class MapGraph
    {
    public:
        MapGraph() = default;

        MapGraph(std::vector<Point> vertices, const std::vector<std::pair<std::size_t, std::size_t>> &segments)
            : vertices_(std::move(vertices)), adjacency_(vertices_.size())
        {
            for (auto [u, v] : segments)
            {
                if (u >= vertices_.size() || v >= vertices_.size() || u == v)
                {
                    throw ValidationError("map segment references an invalid vertex");
                }
                const double len = distance(vertices_[u], vertices_[v]);
                edges_.push_back(MapEdge{u, v, len});
                adjacency_[u].push_back(v);
                adjacency_[v].push_back(u);
            }
            for (auto &adj : adjacency_)
            {
                std::sort(adj.begin(), adj.end());
            }
            compute_routes();
        }

        const std::vector<Point> &vertices() const noexcept { return vertices_; }
        const std::vector<MapEdge> &edges() const noexcept { return edges_; }
        std::size_t vertex_count() const noexcept { return vertices_.size(); }

        double path_length(std::size_t from, std::size_t to) const { return dist_[from * n() + to]; }

        // Vertex sequence from -> to inclusive; ties between equal-length
        // routes resolve to the lowest-index predecessor.
        std::vector<std::size_t> shortest_path(std::size_t from, std::size_t to) const
        {
            std::vector<std::size_t> path{to};
            std::size_t cur = to;
            while (cur != from)
            {
                cur = pred_[from * n() + cur];
                path.push_back(cur);
            }
            std::reverse(path.begin(), path.end());
            return path;
        }

        Point min_corner() const { return bounds(true); }
        Point max_corner() const { return bounds(false); }

    private:
        std::size_t n() const noexcept { return vertices_.size(); }

        Point bounds(bool lo) const
        {
            Point p{lo ? std::numeric_limits<double>::max() : std::numeric_limits<double>::lowest(),
                    lo ? std::numeric_limits<double>::max() : std::numeric_limits<double>::lowest()};
            for (auto v : vertices_)
            {
                p.x = lo ? std::min(p.x, v.x) : std::max(p.x, v.x);
                p.y = lo ? std::min(p.y, v.y) : std::max(p.y, v.y);
            }
            return p;
        }

        void compute_routes()
        {
            const double inf = std::numeric_limits<double>::infinity();
            dist_.assign(n() * n(), inf);
            pred_.assign(n() * n(), 0);
            using Item = std::pair<double, std::size_t>;
            for (std::size_t s = 0; s < n(); ++s)
            {
                double *d = &dist_[s * n()];
                std::size_t *p = &pred_[s * n()];
                std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
                d[s] = 0;
                p[s] = s;
                pq.emplace(0.0, s);
                while (!pq.empty())
                {
                    auto [du, u] = pq.top();
                    pq.pop();
                    if (du > d[u])
                    {
                        continue;
                    }
                    for (std::size_t v : adjacency_[u])
                    {
                        const double nd = du + distance(vertices_[u], vertices_[v]);
                        if (nd < d[v] - 1e-9)
                        {
                            d[v] = nd;
                            p[v] = u;
                            pq.emplace(nd, v);
                        }
                        else if (std::abs(nd - d[v]) <= 1e-9 && u < p[v])
                        {
                            p[v] = u;
                        }
                    }
                }
                for (std::size_t v = 0; v < n(); ++v)
                {
                    if (d[v] == inf)
                    {
                        throw ValidationError("map graph is not connected");
                    }
                }
            }
        }

        std::vector<Point> vertices_;
        std::vector<MapEdge> edges_;
        std::vector<std::vector<std::size_t>> adjacency_;
        std::vector<double> dist_;
        std::vector<std::size_t> pred_;
    };

    struct GridSpec
    {
        std::size_t rows = 10;
        std::size_t cols = 10;
        double spacing = 50.0;
    };

    inline MapGraph generate_grid_map(const GridSpec &g)
    {
        if (g.rows < 2 || g.cols < 2)
        {
            throw ValidationError("grid map needs rows >= 2 and cols >= 2");
        }
        if (!(g.spacing > 0))
        {
            throw ValidationError("grid spacing must be positive");
        }
        std::vector<Point> pts;
        std::vector<std::pair<std::size_t, std::size_t>> segs;
        for (std::size_t r = 0; r < g.rows; ++r)
        {
            for (std::size_t c = 0; c < g.cols; ++c)
            {
                pts.push_back(Point{static_cast<double>(c) * g.spacing, static_cast<double>(r) * g.spacing});
                const std::size_t id = r * g.cols + c;
                if (c + 1 < g.cols)
                {
                    segs.emplace_back(id, id + 1);
                }
                if (r + 1 < g.rows)
                {
                    segs.emplace_back(id, id + g.cols);
                }
            }
        }
        return MapGraph(std::move(pts), segs);
    }

    struct MovementGroup
    {
        std::string name;
        std::size_t size = 0;
        InterestSet interests;
        // Vertices a member may pick as destinations; empty = whole map.
        std::vector<std::size_t> home_vertices;
    };

    struct MovementParams
    {
        double speed_min = 0.5;
        double speed_max = 1.4;
        double pause_min = 100;
        double pause_max = 100;
        double radio_range = 10;
        SimTime duration = 12 * kSecondsPerDay;
        std::vector<MovementGroup> groups;
        // Each node's first pause is scaled by a uniform draw so that nodes
        // do not all leave their start vertex at the same instant.
        bool stagger_start = true;
        // Optional fixed start vertices, one per node.
        std::vector<std::size_t> initial_vertices;

        std::size_t node_count() const
        {
            std::size_t n = 0;
            for (const auto &g : groups)
            {
                n += g.size;
            }
            return n;
        }

        void validate(const MapGraph &map) const
        {
            if (!(speed_min > 0) || speed_min > speed_max)
            {
                throw ValidationError("speed range must satisfy 0 < min <= max");
            }
            if (speed_max > 1.4)
            {
                throw ValidationError("pedestrian speed is capped at 1.4 m/s");
            }
            if (!(pause_min > 0) || pause_min > pause_max)
            {
                throw ValidationError("pause range must satisfy 0 < min <= max");
            }
            if (!(radio_range > 0))
            {
                throw ValidationError("radio range must be positive");
            }
            if (!(duration > 0))
            {
                throw ValidationError("movement duration must be positive");
            }
            if (node_count() == 0)
            {
                throw ValidationError("movement needs at least one node");
            }
            if (!initial_vertices.empty() && initial_vertices.size() != node_count())
            {
                throw ValidationError("initial_vertices must list one vertex per node");
            }
            for (auto v : initial_vertices)
            {
                if (v >= map.vertex_count())
                {
                    throw ValidationError("initial vertex out of range");
                }
            }
            for (const auto &g : groups)
            {
                for (auto v : g.home_vertices)
                {
                    if (v >= map.vertex_count())
                    {
                        throw ValidationError("home vertex out of range");
                    }
                }
            }
        }
    };

    namespace detail
    {
        class Walker
        {
        public:
            Walker(const MapGraph &map, const MovementParams &params, const std::vector<std::size_t> *home,
                   std::size_t start_vertex, SplitRng rng)
                : map_(&map), params_(&params), home_(home), rng_(rng), vertex_(start_vertex),
                  pos_(map.vertices()[start_vertex])
            {
                double first = draw_pause();
                if (params.stagger_start)
                {
                    first *= rng_.uniform01();
                }
                resume_ = first;
            }

            Point position() const noexcept { return pos_; }
            std::size_t legs() const noexcept { return legs_; }

            // Moves the walker from time now to now + dt.
            void advance(SimTime now, double dt)
            {
                SimTime t = now;
                const SimTime until = now + dt;
                while (t < until)
                {
                    if (path_.empty())
                    {
                        if (resume_ >= until)
                        {
                            return;
                        }
                        t = std::max(t, resume_);
                        start_leg();
                        continue;
                    }
                    const Point target = map_->vertices()[path_[next_]];
                    const double remaining = distance(pos_, target);
                    const double need = remaining / speed_;
                    if (t + need <= until)
                    {
                        t += need;
                        pos_ = target;
                        vertex_ = path_[next_];
                        if (++next_ == path_.size())
                        {
                            path_.clear();
                            resume_ = t + draw_pause();
                        }
                    }
                    else
                    {
                        const double frac = (until - t) * speed_ / remaining;
                        pos_.x += (target.x - pos_.x) * frac;
                        pos_.y += (target.y - pos_.y) * frac;
                        t = until;
                    }
                }
            }

        private:
            double draw_pause() { return rng_.uniform(params_->pause_min, params_->pause_max); }

            std::size_t draw_destination()
            {
                if (home_ != nullptr && !home_->empty())
                {
                    if (home_->size() == 1)
                    {
                        return (*home_)[0];
                    }
                    while (true)
                    {
                        const auto d = (*home_)[rng_.below(home_->size())];
                        if (d != vertex_)
                        {
                            return d;
                        }
                    }
                }
                const auto n = map_->vertex_count();
                auto d = static_cast<std::size_t>(rng_.below(n - 1));
                return d >= vertex_ ? d + 1 : d;
            }

            void start_leg()
            {
                const auto dest = draw_destination();
                speed_ = rng_.uniform(params_->speed_min, params_->speed_max);
                ++legs_;
                if (dest == vertex_)
                {
                    resume_ = resume_ + draw_pause();
                    return;
                }
                path_ = map_->shortest_path(vertex_, dest);
                next_ = 1;
            }

            const MapGraph *map_;
            const MovementParams *params_;
            const std::vector<std::size_t> *home_;
            SplitRng rng_;
            std::size_t vertex_;
            Point pos_;
            SimTime resume_ = 0;
            double speed_ = 1;
            std::vector<std::size_t> path_;
            std::size_t next_ = 0;
            std::size_t legs_ = 0;
        };

        // Uniform cell grid with cell side = radio range; neighbours of a
        // node can only sit in the 3x3 block around its cell.
        class CellIndex
        {
        public:
            CellIndex(Point lo, Point hi, double cell)
                : lo_(lo), cell_(cell), nx_(static_cast<std::size_t>(std::floor((hi.x - lo.x) / cell)) + 1),
                  ny_(static_cast<std::size_t>(std::floor((hi.y - lo.y) / cell)) + 1), head_(nx_ * ny_, npos)
            {
            }

            void rebuild(const std::vector<Point> &pos)
            {
                for (auto c : used_)
                {
                    head_[c] = npos;
                }
                used_.clear();
                next_.assign(pos.size(), npos);
                cell_of_.resize(pos.size());
                for (std::size_t i = pos.size(); i-- > 0;)
                {
                    const auto c = cell_index(pos[i]);
                    cell_of_[i] = c;
                    if (head_[c] == npos)
                    {
                        used_.push_back(c);
                    }
                    next_[i] = head_[c];
                    head_[c] = i;
                }
            }

            template <typename F>
            void for_each_candidate(std::size_t i, F &&f) const
            {
                const std::size_t cx = cell_of_[i] % nx_;
                const std::size_t cy = cell_of_[i] / nx_;
                for (std::size_t y = cy == 0 ? 0 : cy - 1; y <= std::min(ny_ - 1, cy + 1); ++y)
                {
                    for (std::size_t x = cx == 0 ? 0 : cx - 1; x <= std::min(nx_ - 1, cx + 1); ++x)
                    {
                        for (std::size_t j = head_[y * nx_ + x]; j != npos; j = next_[j])
                        {
                            f(j);
                        }
                    }
                }
            }

        private:
            static constexpr std::size_t npos = static_cast<std::size_t>(-1);

            std::size_t cell_index(Point p) const
            {
                auto cx = static_cast<std::size_t>(std::max(0.0, std::floor((p.x - lo_.x) / cell_)));
                auto cy = static_cast<std::size_t>(std::max(0.0, std::floor((p.y - lo_.y) / cell_)));
                cx = std::min(cx, nx_ - 1);
                cy = std::min(cy, ny_ - 1);
                return cy * nx_ + cx;
            }

            Point lo_;
            double cell_;
            std::size_t nx_;
            std::size_t ny_;
            std::vector<std::size_t> head_;
            std::vector<std::size_t> next_;
            std::vector<std::size_t> cell_of_;
            std::vector<std::size_t> used_;
        };
    } // namespace detail

    struct MobilityStats
    {
        // Legs started per node (the movement count).
        std::vector<std::size_t> legs;
    };

    // Shortest-path map-based movement sampled once per second. A contact
    // opens at the first sample with distance <= radio_range and closes at
    // the first sample where the pair is out of range (or at duration).
    inline ContactTrace generate_synthetic_trace(const MapGraph &map, const MovementParams &params, std::uint64_t seed,
                                                 MobilityStats *stats = nullptr)
    {
        params.validate(map);
        const std::size_t n = params.node_count();
        const SplitRng root = SplitRng(seed).split("mobility");
        SplitRng placement = root.split("placement");

        std::vector<detail::Walker> walkers;
        walkers.reserve(n);
        std::size_t id = 0;
        for (const auto &g : params.groups)
        {
            for (std::size_t k = 0; k < g.size; ++k, ++id)
            {
                std::size_t start = 0;
                if (!params.initial_vertices.empty())
                {
                    start = params.initial_vertices[id];
                }
                else if (!g.home_vertices.empty())
                {
                    start = g.home_vertices[placement.below(g.home_vertices.size())];
                }
                else
                {
                    start = placement.below(map.vertex_count());
                }
                walkers.emplace_back(map, params, &g.home_vertices, start, root.split(static_cast<std::uint64_t>(id)));
            }
        }

        const Point lo = map.min_corner();
        const Point hi = map.max_corner();
        detail::CellIndex index(lo, hi, params.radio_range);
        const double r2 = params.radio_range * params.radio_range;

        struct Open
        {
            SimTime start;
            std::uint64_t seen;
        };
        std::unordered_map<std::uint64_t, Open> open;
        std::vector<ContactEvent> events;
        std::vector<Point> pos(n);
        std::vector<std::uint64_t> stale;

        const auto last = static_cast<std::uint64_t>(std::floor(params.duration));
        for (std::uint64_t step = 0; step <= last; ++step)
        {
            const auto t = static_cast<SimTime>(step);
            if (step > 0)
            {
                for (auto &w : walkers)
                {
                    w.advance(t - 1.0, 1.0);
                }
            }
            if (t >= params.duration)
            {
                break;
            }
            for (std::size_t i = 0; i < n; ++i)
            {
                pos[i] = walkers[i].position();
            }
            index.rebuild(pos);
            for (std::size_t i = 0; i < n; ++i)
            {
                index.for_each_candidate(i, [&](std::size_t j) {
                    if (j <= i)
                    {
                        return;
                    }
                    const double dx = pos[i].x - pos[j].x;
                    const double dy = pos[i].y - pos[j].y;
                    if (dx * dx + dy * dy <= r2)
                    {
                        const auto key = NodePair(static_cast<NodeId>(i), static_cast<NodeId>(j)).key();
                        auto [it, inserted] = open.try_emplace(key, Open{t, step});
                        it->second.seen = step;
                    }
                });
            }
            stale.clear();
            for (const auto &[key, o] : open)
            {
                if (o.seen != step)
                {
                    stale.push_back(key);
                }
            }
            for (auto key : stale)
            {
                events.push_back(ContactEvent{static_cast<NodeId>(key >> 32), static_cast<NodeId>(key & 0xffffffffU),
                                              open[key].start, t});
                open.erase(key);
            }
        }
        for (const auto &[key, o] : open)
        {
            if (params.duration > o.start)
            {
                events.push_back(ContactEvent{static_cast<NodeId>(key >> 32), static_cast<NodeId>(key & 0xffffffffU),
                                              o.start, params.duration});
            }
        }
        if (stats != nullptr)
        {
            stats->legs.clear();
            for (const auto &w : walkers)
            {
                stats->legs.push_back(w.legs());
            }
        }
        return ContactTrace::from_events(std::move(events), n, params.duration);
    }

    struct NodeGroup
    {
        std::string name;
        std::vector<NodeId> members;
        InterestSet interests;
    };

    struct SyntheticScenario
    {
        ContactTrace trace;
        std::vector<NodeGroup> groups;
        std::vector<InterestProfile> profiles;
    };

    struct SyntheticOptions
    {
        std::size_t group_size = 50;
        SimTime duration = 12 * kSecondsPerDay;
        GridSpec grid{};
        double radio_range = 10;
        double speed_min = 0.5;
        double speed_max = 1.4;
    };

    inline const ContentType &reading_type()
    {
        static const ContentType t{"reading"};
        return t;
    }

    inline const ContentType &games_type()
    {
        static const ContentType t{"games"};
        return t;
    }

    // Three equal groups: A = [0, g) reading, M = [g, 2g) reading+games,
    // B = [2g, 3g) games. All groups roam the whole map.
    inline MovementParams synthetic_movement(double pause_seconds, const SyntheticOptions &opt)
    {
        if (!(pause_seconds > 0))
        {
            throw ValidationError("pause time must be positive");
        }
        if (opt.group_size == 0)
        {
            throw ValidationError("group size must be positive");
        }
        MovementParams p;
        p.speed_min = opt.speed_min;
        p.speed_max = opt.speed_max;
        p.pause_min = pause_seconds;
        p.pause_max = pause_seconds;
        p.radio_range = opt.radio_range;
        p.duration = opt.duration;
        p.groups = {
            MovementGroup{"A", opt.group_size, {reading_type()}, {}},
            MovementGroup{"M", opt.group_size, {reading_type(), games_type()}, {}},
            MovementGroup{"B", opt.group_size, {games_type()}, {}},
        };
        return p;
    }

    inline std::pair<std::vector<NodeGroup>, std::vector<InterestProfile>> group_layout(const MovementParams &p)
    {
        std::vector<NodeGroup> groups;
        std::vector<InterestProfile> profiles;
        NodeId id = 0;
        for (const auto &g : p.groups)
        {
            NodeGroup ng{g.name, {}, g.interests};
            for (std::size_t k = 0; k < g.size; ++k, ++id)
            {
                ng.members.push_back(id);
                profiles.push_back(InterestProfile{id, g.interests});
            }
            groups.push_back(std::move(ng));
        }
        return {std::move(groups), std::move(profiles)};
    }

    inline SyntheticScenario three_group_scenario(double pause_seconds, std::uint64_t seed,
                                                      const SyntheticOptions &opt = {})
    {
        const auto params = synthetic_movement(pause_seconds, opt);
        const auto map = generate_grid_map(opt.grid);
        SyntheticScenario s;
        s.trace = generate_synthetic_trace(map, params, seed);
        std::tie(s.groups, s.profiles) = group_layout(params);
        return s;
    }

    inline nlohmann::json groups_to_json(const std::vector<NodeGroup> &groups, const std::vector<InterestProfile> &profiles)
    {
        nlohmann::json j;
        auto &gs = j["groups"] = nlohmann::json::array();
        for (const auto &g : groups)
        {
            nlohmann::json interests = nlohmann::json::array();
            for (const auto &t : g.interests)
            {
                interests.push_back(t.tag);
            }
            gs.push_back({{"name", g.name}, {"members", g.members}, {"interests", interests}});
        }
        auto &ps = j["profiles"] = nlohmann::json::array();
        for (const auto &p : profiles)
        {
            nlohmann::json interests = nlohmann::json::array();
            for (const auto &t : p.interests)
            {
                interests.push_back(t.tag);
            }
            ps.push_back({{"node", p.node}, {"interests", interests}});
        }
        return j;
    }

} // namespace oppnet
