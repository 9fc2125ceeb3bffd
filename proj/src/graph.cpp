#include "vascnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

namespace vascnet {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Dense voxel -> position-in-list map for a sparse voxel set.
class VoxelIndex {
public:
    VoxelIndex(const Dims& d, const std::vector<std::size_t>& voxels) : dims_(d), pos_(d.count(), -1) {
        for (std::size_t i = 0; i < voxels.size(); ++i) pos_[voxels[i]] = static_cast<std::int32_t>(i);
    }
    std::int32_t operator[](std::size_t v) const { return pos_[v]; }
    bool contains(std::size_t v) const { return pos_[v] >= 0; }

    template <typename F>
    void for_each_neighbor(std::size_t v, F&& f) const {
        const Index3 c = unravel(dims_, v);
        for (const auto& o : neighbor_offsets_26()) {
            const std::int64_t x = c.x + o[0], y = c.y + o[1], z = c.z + o[2];
            if (!in_bounds(dims_, x, y, z)) continue;
            const std::size_t u = linear_index(dims_, x, y, z);
            if (pos_[u] >= 0) f(u);
        }
    }

private:
    Dims dims_;
    std::vector<std::int32_t> pos_;
};

bool adjacent26(const Index3& a, const Index3& b) {
    const auto dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y), dz = std::abs(a.z - b.z);
    return std::max(dx, std::max(dy, dz)) == 1;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

}  // namespace

const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Endpoint: return "endpoint";
        case NodeKind::Junction: return "junction";
        case NodeKind::HubCenter: return "hub_center";
    }
    return "endpoint";
}

NodeKind node_kind_from_string(const std::string& s) {
    if (s == "endpoint") return NodeKind::Endpoint;
    if (s == "junction") return NodeKind::Junction;
    if (s == "hub_center") return NodeKind::HubCenter;
    throw Error(ErrorKind::Format, "unknown node kind '" + s + "'");
}

SkeletonGraph classify_voxels(const BinaryVolume& skel) {
    SkeletonGraph sg;
    sg.dims = skel.dims();
    sg.voxels = skel.foreground_indices();
    sg.degree.resize(sg.voxels.size());
    for (std::size_t i = 0; i < sg.voxels.size(); ++i) {
        const Index3 c = unravel(sg.dims, sg.voxels[i]);
        int deg = 0;
        for (const auto& o : neighbor_offsets_26())
            if (skel.get(c.x + o[0], c.y + o[1], c.z + o[2])) ++deg;
        sg.degree[i] = static_cast<std::uint8_t>(deg);
        if (deg <= 1) sg.endpoints.push_back(sg.voxels[i]);
        else if (deg == 2) sg.between.push_back(sg.voxels[i]);
        else sg.node_candidates.push_back(sg.voxels[i]);
    }
    return sg;
}

std::size_t hub_center(const Hub& hub, const Dims& dims) {
    if (hub.members.empty()) throw Error(ErrorKind::Parameter, "hub has no members");
    if (hub.hub_endpoints.empty()) return hub.members.front();

    std::vector<std::size_t> local = hub.members;
    local.insert(local.end(), hub.hub_endpoints.begin(), hub.hub_endpoints.end());
    std::sort(local.begin(), local.end());
    std::vector<Index3> coords;
    for (auto v : local) coords.push_back(unravel(dims, v));
    const std::size_t n = local.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (adjacent26(coords[i], coords[j])) {
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
    auto slot = [&](std::size_t v) {
        return static_cast<std::size_t>(std::lower_bound(local.begin(), local.end(), v) - local.begin());
    };

    const std::int64_t unreachable = static_cast<std::int64_t>(n) + 1;
    std::vector<std::int64_t> sum(n, 0), sum_sq(n, 0);
    std::vector<std::int64_t> dist(n);
    for (auto e : hub.hub_endpoints) {
        std::fill(dist.begin(), dist.end(), -1);
        std::deque<std::size_t> q;
        const std::size_t s = slot(e);
        dist[s] = 0;
        q.push_back(s);
        while (!q.empty()) {
            const std::size_t a = q.front();
            q.pop_front();
            for (auto b : adj[a])
                if (dist[b] < 0) {
                    dist[b] = dist[a] + 1;
                    q.push_back(b);
                }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t d = dist[i] < 0 ? unreachable : dist[i];
            sum[i] += d;
            sum_sq[i] += d * d;
        }
    }
    const auto k = static_cast<std::int64_t>(hub.hub_endpoints.size());
    std::size_t best = kNone;
    std::int64_t best_var = 0, best_sum = 0;
    for (auto m : hub.members) {  // ascending, so index ties resolve to the smaller voxel
        const std::size_t i = slot(m);
        // k^2 * variance; k is the same for all members.
        const std::int64_t var = k * sum_sq[i] - sum[i] * sum[i];
        if (best == kNone || var < best_var || (var == best_var && sum[i] < best_sum)) {
            best = m;
            best_var = var;
            best_sum = sum[i];
        }
    }
    return best;
}

std::vector<Hub> detect_hubs(const SkeletonGraph& sg) {
    VoxelIndex skel(sg.dims, sg.voxels);
    std::vector<std::uint8_t> is_candidate(sg.voxels.size(), 0);
    for (auto v : sg.node_candidates) is_candidate[static_cast<std::size_t>(skel[v])] = 1;
    std::vector<std::uint8_t> seen(sg.voxels.size(), 0);
    std::vector<Hub> hubs;
    for (auto seed : sg.node_candidates) {
        if (seen[static_cast<std::size_t>(skel[seed])]) continue;
        Hub hub;
        std::vector<std::size_t> stack{seed};
        seen[static_cast<std::size_t>(skel[seed])] = 1;
        std::set<std::size_t> ends;
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            hub.members.push_back(v);
            skel.for_each_neighbor(v, [&](std::size_t u) {
                const auto p = static_cast<std::size_t>(skel[u]);
                if (!is_candidate[p]) {
                    ends.insert(u);
                } else if (!seen[p]) {
                    seen[p] = 1;
                    stack.push_back(u);
                }
            });
        }
        std::sort(hub.members.begin(), hub.members.end());
        hub.hub_endpoints.assign(ends.begin(), ends.end());
        hub.center = hub_center(hub, sg.dims);
        hubs.push_back(std::move(hub));
    }
    return hubs;
}

const GraphNode* VesselNetwork::find_node(int id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id, [](const GraphNode& n, int v) { return n.id < v; });
    return it != nodes.end() && it->id == id ? &*it : nullptr;
}

const GraphTrace* VesselNetwork::find_trace(int id) const {
    auto it = std::lower_bound(traces.begin(), traces.end(), id, [](const GraphTrace& t, int v) { return t.id < v; });
    return it != traces.end() && it->id == id ? &*it : nullptr;
}

std::vector<int> VesselNetwork::node_degrees() const {
    std::vector<int> deg(nodes.size(), 0);
    auto slot = [&](int id) {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), id, [](const GraphNode& n, int v) { return n.id < v; });
        if (it == nodes.end() || it->id != id) throw Error(ErrorKind::Consistency, "trace references missing node " + std::to_string(id));
        return static_cast<std::size_t>(it - nodes.begin());
    };
    for (const auto& t : traces) {
        ++deg[slot(t.start)];
        ++deg[slot(t.end)];
    }
    return deg;
}

std::size_t VesselNetwork::component_count() const {
    std::vector<std::size_t> parent(nodes.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::map<int, std::size_t> slot;
    for (std::size_t i = 0; i < nodes.size(); ++i) slot[nodes[i].id] = i;
    for (const auto& t : traces) {
        const auto a = find_root(parent, slot.at(t.start));
        const auto b = find_root(parent, slot.at(t.end));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (find_root(parent, i) == i) ++count;
    return count;
}

VesselNetwork build_vessel_network(const BinaryVolume& skel, const SparseCenterline& centerline) {
    const Dims& d = skel.dims();
    const SkeletonGraph sg = classify_voxels(skel);
    const VoxelIndex pos(d, sg.voxels);
    const std::size_t n = sg.voxels.size();

    std::vector<double> radius(n, -1.0);
    for (const auto& p : centerline.points) {
        if (!in_bounds(d, p.voxel.x, p.voxel.y, p.voxel.z)) continue;
        const auto i = pos[linear_index(d, p.voxel)];
        if (i >= 0) radius[static_cast<std::size_t>(i)] = p.radius_mm;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (radius[i] < 0.0) {
            const Index3 c = unravel(d, sg.voxels[i]);
            throw Error(ErrorKind::Consistency, "centerline has no radius for skeleton voxel (" + std::to_string(c.x) + "," +
                                                    std::to_string(c.y) + "," + std::to_string(c.z) + ")");
        }
    }
    auto deg = [&](std::size_t v) { return static_cast<int>(sg.degree[static_cast<std::size_t>(pos[v])]); };

    const std::vector<Hub> hubs = detect_hubs(sg);
    std::vector<std::int32_t> hub_of(n, -1);
    for (std::size_t h = 0; h < hubs.size(); ++h)
        for (auto m : hubs[h].members) hub_of[static_cast<std::size_t>(pos[m])] = static_cast<std::int32_t>(h);
    auto hub_at = [&](std::size_t v) { return hub_of[static_cast<std::size_t>(pos[v])]; };

    VesselNetwork net;
    net.dims = d;
    net.spacing = centerline.spacing;

    // Nodes: endpoints and hub centers, numbered in voxel order.
    std::vector<std::pair<std::size_t, NodeKind>> node_voxels;
    for (auto v : sg.endpoints) node_voxels.emplace_back(v, NodeKind::Endpoint);
    for (const auto& h : hubs)
        node_voxels.emplace_back(h.center, h.members.size() == 1 ? NodeKind::Junction : NodeKind::HubCenter);
    std::sort(node_voxels.begin(), node_voxels.end());
    std::vector<std::int32_t> node_of(n, -1);
    for (const auto& [v, kind] : node_voxels) {
        const int id = net.next_node_id++;
        net.nodes.push_back({id, unravel(d, v), kind});
        node_of[static_cast<std::size_t>(pos[v])] = id;
    }
    auto node_at = [&](std::size_t v) { return node_of[static_cast<std::size_t>(pos[v])]; };

    // BFS tree inside each hub, rooted at the center.
    std::vector<std::size_t> tree_parent(n, kNone);
    std::vector<std::int32_t> tree_depth(n, -1);
    for (const auto& h : hubs) {
        std::deque<std::size_t> q{h.center};
        tree_depth[static_cast<std::size_t>(pos[h.center])] = 0;
        const auto hid = hub_at(h.center);
        while (!q.empty()) {
            const std::size_t v = q.front();
            q.pop_front();
            pos.for_each_neighbor(v, [&](std::size_t u) {
                const auto p = static_cast<std::size_t>(pos[u]);
                if (hub_of[p] != hid || tree_depth[p] >= 0) return;
                tree_depth[p] = tree_depth[static_cast<std::size_t>(pos[v])] + 1;
                tree_parent[p] = v;
                q.push_back(u);
            });
        }
    }
    // Member path from m up to its hub center, m first.
    auto path_to_center = [&](std::size_t m) {
        std::vector<std::size_t> path{m};
        while (tree_parent[static_cast<std::size_t>(pos[path.back()])] != kNone)
            path.push_back(tree_parent[static_cast<std::size_t>(pos[path.back()])]);
        return path;
    };

    std::vector<std::uint8_t> visited(n, 0);
    std::vector<std::vector<std::size_t>> paths;
    std::vector<std::pair<int, int>> ends;
    std::vector<bool> closed_flags;

    // Follows degree-2 voxels from `cur` until a node or hub member is reached.
    auto walk = [&](std::vector<std::size_t> path, std::size_t prev, std::size_t cur, int start_node, std::size_t stop_voxel) {
        int end_node = -1;
        while (true) {
            path.push_back(cur);
            if (cur == stop_voxel) {
                end_node = start_node;
                break;
            }
            if (deg(cur) <= 1) {
                end_node = node_at(cur);
                break;
            }
            if (hub_at(cur) >= 0) {
                const auto up = path_to_center(cur);
                path.insert(path.end(), up.begin() + 1, up.end());
                end_node = node_at(up.back());
                break;
            }
            visited[static_cast<std::size_t>(pos[cur])] = 1;
            std::size_t next = kNone;
            pos.for_each_neighbor(cur, [&](std::size_t u) {
                if (u != prev && next == kNone) next = u;
            });
            if (next == kNone) throw Error(ErrorKind::Consistency, "dangling degree-2 voxel while tracing");
            prev = cur;
            cur = next;
        }
        paths.push_back(std::move(path));
        ends.emplace_back(start_node, end_node);
        closed_flags.push_back(stop_voxel != kNone);
    };

    for (const auto& h : hubs) {
        const int hub_node = node_at(h.center);
        for (auto e : h.hub_endpoints) {
            if (deg(e) == 2 && visited[static_cast<std::size_t>(pos[e])]) continue;
            std::size_t attach = kNone;
            pos.for_each_neighbor(e, [&](std::size_t u) {
                if (hub_at(u) != hub_at(h.center)) return;
                if (attach == kNone || tree_depth[static_cast<std::size_t>(pos[u])] < tree_depth[static_cast<std::size_t>(pos[attach])])
                    attach = u;
            });
            auto prefix = path_to_center(attach);
            std::reverse(prefix.begin(), prefix.end());
            walk(std::move(prefix), attach, e, hub_node, kNone);
        }
    }
    for (auto v : sg.endpoints) {
        const int id = node_at(v);
        if (deg(v) == 0) {
            paths.push_back({v});
            ends.emplace_back(id, id);
            closed_flags.push_back(false);
            continue;
        }
        std::size_t w = kNone;
        pos.for_each_neighbor(v, [&](std::size_t u) { w = u; });
        if (hub_at(w) >= 0) continue;
        if (deg(w) <= 1) {
            if (v < w) {
                paths.push_back({v, w});
                ends.emplace_back(id, node_at(w));
                closed_flags.push_back(false);
            }
            continue;
        }
        if (visited[static_cast<std::size_t>(pos[w])]) continue;
        walk({v}, v, w, id, kNone);
    }
    // Whatever degree-2 voxels remain form closed loops without any node.
    for (auto v : sg.between) {
        if (visited[static_cast<std::size_t>(pos[v])]) continue;
        const int id = net.next_node_id++;
        net.nodes.push_back({id, unravel(d, v), NodeKind::Junction});
        node_of[static_cast<std::size_t>(pos[v])] = id;
        visited[static_cast<std::size_t>(pos[v])] = 1;
        std::size_t first = kNone;
        pos.for_each_neighbor(v, [&](std::size_t u) {
            if (first == kNone) first = u;
        });
        walk({v}, v, first, id, v);
    }

    // Attribute each hub member to exactly one trace.
    std::vector<std::int32_t> owner(n, -1);
    for (std::size_t t = 0; t < paths.size(); ++t) {
        GraphTrace tr;
        tr.id = net.next_trace_id++;
        tr.start = ends[t].first;
        tr.end = ends[t].second;
        tr.closed = closed_flags[t];
        const auto& p = paths[t];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const auto slot = static_cast<std::size_t>(pos[p[i]]);
            TracePoint pt{unravel(d, p[i]), radius[slot], true};
            const bool interior = i > 0 && i + 1 < p.size();
            if (interior && hub_of[slot] >= 0) {
                if (owner[slot] < 0) owner[slot] = tr.id;
                else pt.owned = false;
            }
            tr.points.push_back(pt);
        }
        net.traces.push_back(std::move(tr));
    }
    for (const auto& h : hubs) {
        const int hub_node = node_at(h.center);
        for (auto m : h.members) {
            const auto slot = static_cast<std::size_t>(pos[m]);
            if (m == h.center || owner[slot] >= 0) continue;
            std::int32_t target = -1;
            for (std::size_t a = tree_parent[slot]; a != kNone && target < 0; a = tree_parent[static_cast<std::size_t>(pos[a])])
                target = owner[static_cast<std::size_t>(pos[a])];
            if (target < 0) {
                for (const auto& t : net.traces)
                    if (t.start == hub_node || t.end == hub_node) {
                        target = t.id;
                        break;
                    }
            }
            if (target < 0) {
                GraphTrace tr;
                tr.id = net.next_trace_id++;
                tr.start = tr.end = hub_node;
                tr.points.push_back({unravel(d, h.center), radius[static_cast<std::size_t>(pos[h.center])], true});
                net.traces.push_back(std::move(tr));
                target = net.traces.back().id;
            }
            owner[slot] = target;
            net.traces[static_cast<std::size_t>(target)].absorbed.push_back(unravel(d, m));
        }
    }
    std::sort(net.nodes.begin(), net.nodes.end(), [](const GraphNode& a, const GraphNode& b) { return a.id < b.id; });
    return net;
}

VesselNetwork remove_traces(const VesselNetwork& net, const std::vector<int>& trace_ids, const std::vector<int>& keep_nodes) {
    std::set<int> drop;
    for (int id : trace_ids) {
        if (!net.find_trace(id)) throw Error(ErrorKind::NotFound, "unknown trace id " + std::to_string(id));
        drop.insert(id);
    }
    VesselNetwork out = net;
    std::set<int> touched;
    out.traces.clear();
    for (const auto& t : net.traces) {
        if (drop.count(t.id)) {
            touched.insert(t.start);
            touched.insert(t.end);
        } else {
            out.traces.push_back(t);
        }
    }
    const std::set<int> keep(keep_nodes.begin(), keep_nodes.end());

    auto incident = [&](int node) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < out.traces.size(); ++i) {
            if (out.traces[i].start == node) idx.push_back(i);
            if (out.traces[i].end == node) idx.push_back(i);
        }
        return idx;
    };

    // Drop orphaned nodes, then fuse pass-through nodes created by the removal.
    for (int node : touched) {
        if (incident(node).empty()) {
            out.nodes.erase(std::remove_if(out.nodes.begin(), out.nodes.end(), [&](const GraphNode& g) { return g.id == node; }),
                            out.nodes.end());
        }
    }
    for (int node : touched) {
        if (keep.count(node)) continue;
        const auto inc = incident(node);
        if (inc.size() != 2 || inc[0] == inc[1]) continue;
        GraphTrace a = out.traces[inc[0]];
        GraphTrace b = out.traces[inc[1]];
        if (a.end != node) {
            std::reverse(a.points.begin(), a.points.end());
            std::swap(a.start, a.end);
        }
        if (b.start != node) {
            std::reverse(b.points.begin(), b.points.end());
            std::swap(b.start, b.end);
        }
        GraphTrace merged;
        merged.id = out.next_trace_id++;
        merged.start = a.start;
        merged.end = b.end;
        merged.closed = merged.start == merged.end;
        merged.points = a.points;
        merged.points.insert(merged.points.end(), b.points.begin() + 1, b.points.end());
        merged.absorbed = a.absorbed;
        merged.absorbed.insert(merged.absorbed.end(), b.absorbed.begin(), b.absorbed.end());
        const int ida = a.id, idb = b.id;
        out.traces.erase(std::remove_if(out.traces.begin(), out.traces.end(),
                                        [&](const GraphTrace& t) { return t.id == ida || t.id == idb; }),
                         out.traces.end());
        out.traces.push_back(std::move(merged));
        out.nodes.erase(std::remove_if(out.nodes.begin(), out.nodes.end(), [&](const GraphNode& g) { return g.id == node; }),
                        out.nodes.end());
    }
    return out;
}

VesselNetwork delete_edge(const VesselNetwork& net, int trace_id) { return remove_traces(net, {trace_id}); }

std::vector<int> spurious_traces(const VesselNetwork& net, double length_factor) {
    if (!(length_factor >= 0.0)) throw Error(ErrorKind::Parameter, "spur length factor must be >= 0");
    const auto deg = net.node_degrees();
    std::map<int, int> degree;
    for (std::size_t i = 0; i < net.nodes.size(); ++i) degree[net.nodes[i].id] = deg[i];
    auto path_length = [&](const GraphTrace& t) {
        double len = 0.0;
        for (std::size_t i = 1; i < t.points.size(); ++i) {
            const Index3& a = t.points[i - 1].voxel;
            const Index3& b = t.points[i].voxel;
            const double dx = static_cast<double>(a.x - b.x) * net.spacing.x;
            const double dy = static_cast<double>(a.y - b.y) * net.spacing.y;
            const double dz = static_cast<double>(a.z - b.z) * net.spacing.z;
            len += std::sqrt(dx * dx + dy * dy + dz * dz);
        }
        return len;
    };

    std::set<int> out;
    std::map<int, std::vector<std::pair<double, int>>> tips;  // junction -> (length, trace)
    std::vector<std::tuple<double, int, int, int>> chords;    // (length, trace, a, b)
    for (const auto& t : net.traces) {
        if (t.points.empty()) continue;
        const double len = path_length(t);
        const int ds = degree.at(t.start), de = degree.at(t.end);
        if (t.closed) {
            if (ds > 2 && len < length_factor * t.points.front().radius_mm) out.insert(t.id);
        } else if (ds == 1 && de >= 3) {
            if (len < length_factor * t.points.back().radius_mm) tips[t.end].push_back({len, t.id});
        } else if (de == 1 && ds >= 3) {
            if (len < length_factor * t.points.front().radius_mm) tips[t.start].push_back({len, t.id});
        } else if (ds >= 3 && de >= 3) {
            const double r = std::max(t.points.front().radius_mm, t.points.back().radius_mm);
            if (len < length_factor * r) chords.emplace_back(len, t.id, t.start, t.end);
        }
    }

    auto physical = [&](const Index3& v) {
        return Vec3{static_cast<double>(v.x) * net.spacing.x, static_cast<double>(v.y) * net.spacing.y,
                    static_cast<double>(v.z) * net.spacing.z};
    };
    // Point `steps` voxels away from `node` along trace t.
    auto away_from = [&](const GraphTrace& t, int node, std::size_t steps) {
        const std::size_t k = std::min(steps, t.points.size() - 1);
        return physical(t.start == node ? t.points[k].voxel : t.points[t.points.size() - 1 - k].voxel);
    };
    for (auto& [node, list] : tips) {
        const int others = degree.at(node) - static_cast<int>(list.size());
        std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        if (others == 1 && list.size() > 1) {
            // A forked vessel end keeps the tip reaching furthest along the incoming axis.
            const Vec3 c = physical(net.find_node(node)->voxel);
            const GraphTrace* stem = nullptr;
            for (const auto& t : net.traces)
                if ((t.start == node || t.end == node) &&
                    std::none_of(list.begin(), list.end(), [&](const auto& e) { return e.second == t.id; }))
                    stem = &t;
            Vec3 axis = c - away_from(*stem, node, 6);
            const double n = axis.norm();
            if (n > 0.0) axis = axis * (1.0 / n);
            std::size_t best = 0;
            double best_reach = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < list.size(); ++i) {
                const GraphTrace& t = *net.find_trace(list[i].second);
                const double reach = (away_from(t, node, t.points.size()) - c).dot(axis);
                if (reach > best_reach + 1e-9) {
                    best_reach = reach;
                    best = i;
                }
            }
            for (std::size_t i = 0; i < list.size(); ++i)
                if (i != best) out.insert(list[i].second);
            continue;
        }
        const std::size_t keep = others >= 2 ? 0 : static_cast<std::size_t>(2 - others);
        for (std::size_t i = keep; i < list.size(); ++i) out.insert(list[i].second);
    }

    // Spanning forest over the short chords; whatever closes a loop goes.
    std::sort(chords.begin(), chords.end());
    std::map<int, int> parent;
    std::function<int(int)> root = [&](int v) {
        auto it = parent.find(v);
        if (it == parent.end() || it->second == v) return v;
        return it->second = root(it->second);
    };
    for (const auto& [len, id, a, b] : chords) {
        const int ra = root(a), rb = root(b);
        if (ra == rb) out.insert(id);
        else parent[ra] = rb;
    }
    return {out.begin(), out.end()};
}

NetworkAudit audit_network(const VesselNetwork& net, const BinaryVolume* skel) {
    NetworkAudit audit;
    auto fail = [&](std::string s) { audit.violations.push_back(std::move(s)); };
    const Dims& d = net.dims;

    std::size_t ends = 0;
    for (const auto& t : net.traces) {
        const GraphNode* a = net.find_node(t.start);
        const GraphNode* b = net.find_node(t.end);
        if (!a || !b) {
            fail("trace " + std::to_string(t.id) + " references a missing node");
            continue;
        }
        ends += 2;
        if (t.points.empty()) {
            fail("trace " + std::to_string(t.id) + " has no points");
            continue;
        }
        if (!(t.points.front().voxel == a->voxel) || !(t.points.back().voxel == b->voxel))
            fail("trace " + std::to_string(t.id) + " does not start and end on its nodes");
        for (std::size_t i = 1; i < t.points.size(); ++i)
            if (!adjacent26(t.points[i - 1].voxel, t.points[i].voxel))
                fail("trace " + std::to_string(t.id) + " has a gap at point " + std::to_string(i));
        for (const auto& p : t.points)
            if (!(p.radius_mm > 0.0)) fail("trace " + std::to_string(t.id) + " has a nonpositive radius");
    }
    const auto degrees = net.node_degrees();
    const auto degree_sum = static_cast<std::size_t>(std::accumulate(degrees.begin(), degrees.end(), 0));
    if (degree_sum != ends || ends != 2 * net.traces.size()) fail("handshake identity violated");

    std::map<std::size_t, int> hits;
    for (const auto& nd : net.nodes) ++hits[linear_index(d, nd.voxel)];
    for (const auto& t : net.traces) {
        for (std::size_t i = 1; i + 1 < t.points.size(); ++i)
            if (t.points[i].owned) ++hits[linear_index(d, t.points[i].voxel)];
        for (const auto& a : t.absorbed) ++hits[linear_index(d, a)];
    }
    for (const auto& [v, c] : hits)
        if (c != 1) {
            const Index3 i = unravel(d, v);
            fail("voxel (" + std::to_string(i.x) + "," + std::to_string(i.y) + "," + std::to_string(i.z) + ") attributed " +
                 std::to_string(c) + " times");
        }
    if (skel) {
        const auto fg = skel->foreground_indices();
        if (fg.size() != hits.size()) {
            fail("network covers " + std::to_string(hits.size()) + " voxels, skeleton has " + std::to_string(fg.size()));
        } else {
            std::size_t i = 0;
            for (const auto& [v, c] : hits)
                if (fg[i++] != v) {
                    fail("network voxel set differs from the skeleton");
                    break;
                }
        }
        if (net.component_count() != count_components(*skel, 26)) fail("component count differs from the skeleton");
    }
    return audit;
}

GuidePackage labeling_guide(const Volume3D& vol, const VesselNetwork& net) {
    const Dims& d = vol.dims();
    if (!(net.dims == d)) throw Error(ErrorKind::Dimension, "guide volume and network dims differ");
    GuidePackage pkg;
    // axis index -> (u axis, v axis)
    const int uv[3][2] = {{1, 2}, {0, 2}, {0, 1}};
    const char* names[3] = {"x", "y", "z"};
    for (int axis = 0; axis < 3; ++axis) {
        GuideView view;
        view.axis = names[axis];
        view.width = d[uv[axis][0]];
        view.height = d[uv[axis][1]];
        view.pixels.assign(static_cast<std::size_t>(view.width * view.height), -std::numeric_limits<float>::infinity());
        for (std::int64_t z = 0; z < d.nz; ++z)
            for (std::int64_t y = 0; y < d.ny; ++y)
                for (std::int64_t x = 0; x < d.nx; ++x) {
                    const std::int64_t c[3] = {x, y, z};
                    const auto pix = static_cast<std::size_t>(c[uv[axis][0]] + view.width * c[uv[axis][1]]);
                    view.pixels[pix] = std::max(view.pixels[pix], vol.at(x, y, z));
                }
        for (const auto& nd : net.nodes) {
            const std::int64_t c[3] = {nd.voxel.x, nd.voxel.y, nd.voxel.z};
            view.nodes.push_back({nd.id, c[uv[axis][0]], c[uv[axis][1]]});
        }
        pkg.views.push_back(std::move(view));
    }
    return pkg;
}

}  // namespace vascnet
