#include "vascnet/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <set>

namespace vascnet {

namespace {

void check_radii(const Polyline& p) {
    if (p.radii.size() != p.points.size()) throw Error(ErrorKind::Parameter, "polyline needs one radius per point");
    for (std::size_t i = 0; i < p.radii.size(); ++i)
        if (!(p.radii[i] >= 0.0) || !std::isfinite(p.radii[i]))
            throw Error(ErrorKind::Parameter, "invalid radius at point " + std::to_string(i));
}

Polyline oriented(const GraphTrace& t, bool reversed, const Spacing& s) {
    Polyline p = trace_polyline(t, s);
    if (reversed) {
        std::reverse(p.points.begin(), p.points.end());
        std::reverse(p.radii.begin(), p.radii.end());
    }
    return p;
}

void append_voxels(const GraphTrace& t, std::vector<Index3>& out) {
    for (const auto& p : t.points) out.push_back(p.voxel);
    out.insert(out.end(), t.absorbed.begin(), t.absorbed.end());
}

// Longest of the shortest paths from any root to any node it reaches, using
// only `trace_ids`.
std::optional<Polyline> longest_root_path(const VesselNetwork& net, const std::vector<int>& roots, const std::vector<int>& trace_ids) {
    std::map<int, std::vector<std::pair<const GraphTrace*, double>>> adj;
    for (int id : trace_ids) {
        const GraphTrace* t = net.find_trace(id);
        if (!t || t->start == t->end) continue;
        const double len = polyline_length(trace_polyline(*t, net.spacing));
        adj[t->start].push_back({t, len});
        adj[t->end].push_back({t, len});
    }
    std::optional<Polyline> best;
    double best_len = -1.0;
    std::vector<int> sorted_roots = roots;
    std::sort(sorted_roots.begin(), sorted_roots.end());
    for (int root : sorted_roots) {
        std::map<int, double> dist;
        std::map<int, const GraphTrace*> via;
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
        dist[root] = 0.0;
        q.push({0.0, root});
        while (!q.empty()) {
            const auto [d, u] = q.top();
            q.pop();
            if (d > dist.at(u)) continue;
            for (const auto& [t, len] : adj[u]) {
                const int v = t->start == u ? t->end : t->start;
                const double nd = d + len;
                auto it = dist.find(v);
                if (it == dist.end() || nd < it->second) {
                    dist[v] = nd;
                    via[v] = t;
                    q.push({nd, v});
                }
            }
        }
        int far = -1;
        double far_d = 0.0;
        for (const auto& [node, d] : dist)
            if (node != root && d > far_d) {
                far = node;
                far_d = d;
            }
        if (far < 0 || !(far_d > best_len)) continue;
        std::vector<Polyline> parts;
        for (int v = far; v != root;) {
            const GraphTrace* t = via.at(v);
            const int u = t->start == v ? t->end : t->start;
            parts.push_back(oriented(*t, t->start != u, net.spacing));
            v = u;
        }
        std::reverse(parts.begin(), parts.end());
        best = concatenate(parts);
        best_len = far_d;
    }
    return best;
}

}  // namespace

Polyline smooth_polyline(Polyline p, int passes) {
    if (passes < 0) throw Error(ErrorKind::Parameter, "smoothing passes must be >= 0");
    std::vector<Vec3> prev;
    for (int k = 0; k < passes && p.points.size() > 2; ++k) {
        prev = p.points;
        for (std::size_t i = 1; i + 1 < prev.size(); ++i) p.points[i] = (prev[i - 1] + prev[i] * 2.0 + prev[i + 1]) * 0.25;
    }
    return p;
}

Polyline trace_polyline(const GraphTrace& t, const Spacing& spacing, int smoothing_passes) {
    Polyline p;
    for (const auto& pt : t.points) {
        p.points.push_back(to_physical(pt.voxel, spacing));
        p.radii.push_back(pt.radius_mm);
    }
    return smooth_polyline(std::move(p), smoothing_passes);
}

Polyline concatenate(const std::vector<Polyline>& parts) {
    Polyline out;
    for (const auto& p : parts) {
        std::size_t skip = out.points.empty() ? 0 : 1;
        for (std::size_t i = skip; i < p.points.size(); ++i) {
            out.points.push_back(p.points[i]);
            out.radii.push_back(p.radii[i]);
        }
    }
    return out;
}

double polyline_length(const Polyline& p) {
    double len = 0.0;
    for (std::size_t i = 1; i < p.points.size(); ++i) len += distance(p.points[i - 1], p.points[i]);
    return len;
}

double total_length(const std::vector<Polyline>& traces) {
    double len = 0.0;
    for (const auto& t : traces) len += polyline_length(t);
    return len;
}

double segment_volume(const Polyline& p) {
    check_radii(p);
    double v = 0.0;
    for (std::size_t i = 1; i < p.points.size(); ++i) {
        const double h = distance(p.points[i - 1], p.points[i]);
        const double a = p.radii[i - 1], b = p.radii[i];
        v += std::numbers::pi * h / 3.0 * (a * a + a * b + b * b);
    }
    return v;
}

double mean_section_area(const std::vector<Polyline>& traces) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : traces) {
        check_radii(t);
        for (double r : t.radii) {
            sum += std::numbers::pi * r * r;
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double surface_area(const Polyline& p) {
    check_radii(p);
    double s = 0.0;
    for (std::size_t i = 1; i < p.points.size(); ++i) {
        const double h = distance(p.points[i - 1], p.points[i]);
        const double a = p.radii[i - 1], b = p.radii[i];
        s += std::numbers::pi * (a + b) * std::sqrt(h * h + (a - b) * (a - b));
    }
    return s;
}

double tortuosity(const Polyline& path) {
    if (path.points.size() < 2) throw Error(ErrorKind::Undefined, "tortuosity needs at least two points");
    const double chord = distance(path.points.front(), path.points.back());
    if (!(chord > 0.0)) throw Error(ErrorKind::Undefined, "tortuosity is undefined for a closed path");
    const double len = polyline_length(path);
    if (!(len > 0.0)) throw Error(ErrorKind::Undefined, "tortuosity is undefined for a zero-length path");
    return len / chord;
}

BoxCount box_count(const std::vector<Index3>& voxels, const Dims& dims) {
    validate_dims(dims);
    const std::int64_t min_dim = std::min(dims.nx, std::min(dims.ny, dims.nz));
    int levels = 0;
    while ((std::int64_t{1} << (levels + 1)) <= min_dim) ++levels;  // floor(log2(min_dim))
    if (levels < 3) throw Error(ErrorKind::InsufficientScale, "box counting needs at least 3 box sizes; grid too small");
    BoxCount bc;
    std::vector<std::int64_t> keys(voxels.size());
    for (int k = 0; k < levels; ++k) {
        const std::int64_t s = std::int64_t{1} << k;
        const std::int64_t bx = (dims.nx + s - 1) / s, by = (dims.ny + s - 1) / s;
        for (std::size_t i = 0; i < voxels.size(); ++i) {
            const auto& v = voxels[i];
            if (!in_bounds(dims, v.x, v.y, v.z)) throw Error(ErrorKind::Bounds, "voxel outside the box-counting grid");
            keys[i] = v.x / s + bx * (v.y / s + by * (v.z / s));
        }
        std::sort(keys.begin(), keys.end());
        const auto n = static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
        bc.sizes.push_back(s);
        bc.counts.push_back(n);
    }
    double mx = 0.0, my = 0.0;
    const auto m = static_cast<double>(bc.sizes.size());
    for (std::size_t i = 0; i < bc.sizes.size(); ++i) {
        mx += -std::log(static_cast<double>(bc.sizes[i]));
        my += std::log(static_cast<double>(bc.counts[i]));
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < bc.sizes.size(); ++i) {
        const double x = -std::log(static_cast<double>(bc.sizes[i])) - mx;
        const double y = std::log(static_cast<double>(bc.counts[i])) - my;
        sxy += x * y;
        sxx += x * x;
    }
    bc.slope = sxy / sxx;
    return bc;
}

double fractal_dimension(const std::vector<Index3>& voxels, const Dims& dims) {
    if (voxels.size() < 2) throw Error(ErrorKind::InsufficientScale, "fractal dimension needs at least two occupied voxels");
    return box_count(voxels, dims).slope;
}

double fractal_dimension(const BinaryVolume& bin) {
    std::vector<Index3> v;
    for (auto i : bin.foreground_indices()) v.push_back(unravel(bin.dims(), i));
    return fractal_dimension(v, bin.dims());
}

FeatureRow compute_row(const ArteryGeometry& g, const Dims& grid) {
    FeatureRow row;
    row.artery = g.name;
    row.present = g.present;
    if (!g.present) return row;
    double rsum = 0.0;
    std::size_t rn = 0;
    for (const auto& t : g.traces) {
        row.total_length += polyline_length(t);
        row.total_volume += segment_volume(t);
        row.surface_area += surface_area(t);
        for (double r : t.radii) {
            rsum += r;
            ++rn;
        }
    }
    row.mean_radius = rn ? rsum / static_cast<double>(rn) : 0.0;
    row.mean_section_area = mean_section_area(g.traces);
    row.branch_count = g.branch_count;

    double path_len = 0.0, chord = 0.0;
    bool ok = !g.tortuosity_paths.empty();
    for (const auto& p : g.tortuosity_paths) {
        try {
            tortuosity(p);
        } catch (const Error&) {
            ok = false;
            break;
        }
        path_len += polyline_length(p);
        chord += distance(p.points.front(), p.points.back());
    }
    if (ok) row.tortuosity = path_len / chord;

    std::vector<Index3> vox = g.voxels;
    std::sort(vox.begin(), vox.end(), [&](const Index3& a, const Index3& b) { return linear_index(grid, a) < linear_index(grid, b); });
    vox.erase(std::unique(vox.begin(), vox.end()), vox.end());
    try {
        row.fractal_dimension = fractal_dimension(vox, grid);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InsufficientScale) throw;
    }
    return row;
}

std::vector<ArteryGeometry> table_geometry(const DynamicGraphTable& table) {
    const VesselNetwork& net = table.network;
    std::vector<ArteryGeometry> out;
    ArteryGeometry proximal{"Proximal", false, {}, {}, {}, 0};
    ArteryGeometry distal{"Distal", false, {}, {}, {}, 0};

    for (const auto& s : table.segments) {
        ArteryGeometry g;
        g.name = s.name;
        g.present = s.present;
        if (s.present) {
            for (std::size_t i = 0; i < s.trace_ids.size(); ++i) {
                const GraphTrace* t = net.find_trace(s.trace_ids[i]);
                g.traces.push_back(oriented(*t, s.reversed[i], net.spacing));
                append_voxels(*t, g.voxels);
            }
            g.tortuosity_paths.push_back(concatenate(g.traces));
            g.branch_count = static_cast<int>(g.traces.size());

            proximal.present = true;
            proximal.traces.insert(proximal.traces.end(), g.traces.begin(), g.traces.end());
            proximal.tortuosity_paths.push_back(g.tortuosity_paths.back());
            proximal.voxels.insert(proximal.voxels.end(), g.voxels.begin(), g.voxels.end());
            proximal.branch_count += g.branch_count;
        }
        out.push_back(std::move(g));
    }
    for (const auto& s : table.subnetworks) {
        ArteryGeometry g;
        g.name = s.name;
        g.present = s.present;
        if (s.present) {
            for (int id : s.trace_ids) {
                const GraphTrace* t = net.find_trace(id);
                g.traces.push_back(trace_polyline(*t, net.spacing));
                append_voxels(*t, g.voxels);
            }
            if (auto path = longest_root_path(net, s.root_nodes, s.trace_ids)) g.tortuosity_paths.push_back(*path);
            g.branch_count = static_cast<int>(g.traces.size());

            distal.present = true;
            distal.traces.insert(distal.traces.end(), g.traces.begin(), g.traces.end());
            distal.tortuosity_paths.insert(distal.tortuosity_paths.end(), g.tortuosity_paths.begin(), g.tortuosity_paths.end());
            distal.voxels.insert(distal.voxels.end(), g.voxels.begin(), g.voxels.end());
            distal.branch_count += g.branch_count;
        }
        out.push_back(std::move(g));
    }
    out.push_back(std::move(proximal));
    out.push_back(std::move(distal));
    return out;
}

std::vector<FeatureRow> extract_features(const DynamicGraphTable& table) {
    std::vector<FeatureRow> rows;
    if (table.segments.empty() && table.subnetworks.empty()) return rows;
    for (const auto& g : table_geometry(table)) rows.push_back(compute_row(g, table.network.dims));
    return rows;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names{"total_length",      "mean_radius",  "total_volume", "branch_count",
                                                "mean_section_area", "surface_area", "tortuosity",   "fractal_dimension"};
    return names;
}

std::optional<double> feature_value(const FeatureRow& row, const std::string& f) {
    if (!row.present) return std::nullopt;
    if (f == "total_length") return row.total_length;
    if (f == "mean_radius") return row.mean_radius;
    if (f == "total_volume") return row.total_volume;
    if (f == "branch_count") return static_cast<double>(row.branch_count);
    if (f == "mean_section_area") return row.mean_section_area;
    if (f == "surface_area") return row.surface_area;
    if (f == "tortuosity") return row.tortuosity;
    if (f == "fractal_dimension") return row.fractal_dimension;
    throw Error(ErrorKind::Parameter, "unknown feature '" + f + "'");
}

}  // namespace vascnet
