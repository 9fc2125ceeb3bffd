#include "vascnet/simulate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <set>

#include "vascnet/parallel.hpp"

namespace vascnet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

Vec3 normalized(const Vec3& v) {
    const double n = v.norm();
    return v * (1.0 / n);
}

std::vector<double> arclength_params(const std::vector<Point2>& c) {
    std::vector<double> s(c.size(), 0.0);
    for (std::size_t i = 1; i < c.size(); ++i) s[i] = s[i - 1] + std::hypot(c[i][0] - c[i - 1][0], c[i][1] - c[i - 1][1]);
    const double total = s.back();
    for (std::size_t i = 0; i < c.size(); ++i)
        s[i] = total > 0.0 ? s[i] / total : (c.size() > 1 ? static_cast<double>(i) / static_cast<double>(c.size() - 1) : 0.0);
    return s;
}

double series(const std::vector<double>& c, int order, double s) {
    double v = c[0];
    for (int k = 1; k <= order; ++k) {
        const double w = 2.0 * std::numbers::pi * k * s;
        v += c[static_cast<std::size_t>(2 * k - 1)] * std::cos(w) + c[static_cast<std::size_t>(2 * k)] * std::sin(w);
    }
    return v;
}

void check_inside(const std::vector<Vec3>& trace, const std::vector<double>& radii, const GridSpec& g) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double r = radii[i];
        const double p[3] = {trace[i].x, trace[i].y, trace[i].z};
        for (int a = 0; a < 3; ++a) {
            const double lo = -0.5 * g.spacing[a];
            const double hi = (static_cast<double>(g.dims[a]) - 0.5) * g.spacing[a];
            if (!std::isfinite(p[a]) || p[a] - r < lo || p[a] + r > hi)
                throw Error(ErrorKind::Bounds, "trace leaves the grid at point " + std::to_string(i));
        }
    }
}

Index3 nearest_voxel(const Vec3& p, const Spacing& s) {
    return {std::llround(p.x / s.x), std::llround(p.y / s.y), std::llround(p.z / s.z)};
}

// Longest of the shortest paths (by length) from `root` through `members`.
// Point and radius at arclength d from the chosen end of an artery.
std::pair<Vec3, double> at_arclength(const GeneratedArtery& a, const std::vector<double>& cum, bool from_start, double d) {
    const double total = cum.back();
    const double t = std::clamp(from_start ? d : total - d, 0.0, total);
    const auto hi = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), t) - cum.begin());
    const std::size_t i = std::min(hi == 0 ? 0 : hi - 1, cum.size() - 2);
    const double len = cum[i + 1] - cum[i];
    const double w = len > 0.0 ? (t - cum[i]) / len : 0.0;
    return {a.points[i] + (a.points[i + 1] - a.points[i]) * w, a.radii[i] * (1.0 - w) + a.radii[i + 1] * w};
}

// Fills the crotch between arteries leaving the same landmark wherever their
// surfaces are closer than one voxel, so no sub-voxel sliver digitizes into a tunnel.
void fill_crotches(const std::vector<GeneratedArtery>& arteries, BinaryVolume& mask) {
    const Spacing& sp = mask.spacing();
    const double voxel = std::max({sp.x, sp.y, sp.z});
    const double step = 0.25 * std::min({sp.x, sp.y, sp.z});
    std::vector<std::vector<double>> cum(arteries.size());
    for (std::size_t i = 0; i < arteries.size(); ++i) {
        cum[i].assign(arteries[i].points.size(), 0.0);
        for (std::size_t k = 1; k < cum[i].size(); ++k)
            cum[i][k] = cum[i][k - 1] + (arteries[i].points[k] - arteries[i].points[k - 1]).norm();
    }
    std::map<std::string, std::vector<std::pair<std::size_t, bool>>> ends;
    for (std::size_t i = 0; i < arteries.size(); ++i) {
        ends[arteries[i].start_label].push_back({i, true});
        ends[arteries[i].end_label].push_back({i, false});
    }
    for (const auto& [label, list] : ends)
        for (std::size_t p = 0; p < list.size(); ++p)
            for (std::size_t q = p + 1; q < list.size(); ++q) {
                const auto [ia, sa] = list[p];
                const auto [ib, sb] = list[q];
                const GeneratedArtery& a = arteries[ia];
                const GeneratedArtery& b = arteries[ib];
                const double reach = std::min({3.0 * (at_arclength(a, cum[ia], sa, 0).second + at_arclength(b, cum[ib], sb, 0).second),
                                               0.5 * cum[ia].back(), 0.5 * cum[ib].back()});
                for (double d = step; d <= reach; d += step) {
                    const auto [pa, ra] = at_arclength(a, cum[ia], sa, d);
                    const auto [pb, rb] = at_arclength(b, cum[ib], sb, d);
                    if ((pa - pb).norm() - ra - rb < voxel) rasterize_tube({pa, pb}, {0.5 * ra, 0.5 * rb}, mask);
                }
            }
}

std::optional<Polyline> farthest_path(const std::vector<const GeneratedArtery*>& members, const std::string& root) {
    std::map<std::string, double> dist{{root, 0.0}};
    std::map<std::string, const GeneratedArtery*> via;
    using Item = std::pair<double, std::string>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
    q.push({0.0, root});
    while (!q.empty()) {
        const auto [dd, lab] = q.top();
        q.pop();
        if (dd > dist.at(lab)) continue;
        for (const auto* a : members) {
            std::string other;
            if (a->start_label == lab) other = a->end_label;
            else if (a->end_label == lab) other = a->start_label;
            else continue;
            const double nd = dd + polyline_length({a->points, a->radii});
            auto it = dist.find(other);
            if (it == dist.end() || nd < it->second) {
                dist[other] = nd;
                via[other] = a;
                q.push({nd, other});
            }
        }
    }
    std::string far;
    double far_d = 0.0;
    for (const auto& [lab, dd] : dist)
        if (lab != root && dd > far_d) {
            far = lab;
            far_d = dd;
        }
    if (far.empty()) return std::nullopt;
    std::vector<Polyline> parts;
    for (std::string lab = far; lab != root;) {
        const GeneratedArtery* a = via.at(lab);
        Polyline p{a->points, a->radii};
        const std::string prev = a->start_label == lab ? a->end_label : a->start_label;
        if (a->start_label == lab) {
            std::reverse(p.points.begin(), p.points.end());
            std::reverse(p.radii.begin(), p.radii.end());
        }
        parts.push_back(std::move(p));
        lab = prev;
    }
    std::reverse(parts.begin(), parts.end());
    return concatenate(parts);
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t a = splitmix64(seed ^ splitmix64(index * 2 + 1));
    const std::uint64_t b = splitmix64(a ^ 0x5851f42d4c957f2dULL);
    const double u1 = 1.0 - unit_from_bits(a);  // (0, 1]
    const double u2 = unit_from_bits(b);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void FourierArtery::validate() const {
    if (order < 0) throw Error(ErrorKind::Parameter, "Fourier order must be >= 0");
    const auto n = static_cast<std::size_t>(2 * order + 1);
    if (coeffs_u.size() != n || coeffs_v.size() != n)
        throw Error(ErrorKind::Parameter, "Fourier coefficient vectors need 2*order+1 entries");
    for (double c : coeffs_u)
        if (!std::isfinite(c)) throw Error(ErrorKind::Parameter, "non-finite Fourier coefficient");
    for (double c : coeffs_v)
        if (!std::isfinite(c)) throw Error(ErrorKind::Parameter, "non-finite Fourier coefficient");
}

Point2 FourierArtery::evaluate(double s) const {
    return {series(coeffs_u, order, s) + trend_u * s, series(coeffs_v, order, s) + trend_v * s};
}

FourierArtery encode_fourier(const std::vector<Point2>& curve, int order, bool remove_trend) {
    return encode_fourier(curve, arclength_params(curve), order, remove_trend);
}

FourierArtery encode_fourier(const std::vector<Point2>& curve, const std::vector<double>& params, int order, bool remove_trend) {
    if (order < 0) throw Error(ErrorKind::Parameter, "Fourier order must be >= 0");
    const auto m = static_cast<std::size_t>(2 * order + 1);
    if (curve.size() < m)
        throw Error(ErrorKind::Parameter, "Fourier fit is underdetermined: " + std::to_string(curve.size()) + " samples for " +
                                              std::to_string(m) + " coefficients");
    if (params.size() != curve.size()) throw Error(ErrorKind::Parameter, "one parameter per sample is required");
    FourierArtery fa;
    fa.order = order;
    if (remove_trend) {
        fa.trend_u = curve.back()[0] - curve.front()[0];
        fa.trend_v = curve.back()[1] - curve.front()[1];
    }
    const auto n = static_cast<Eigen::Index>(curve.size());
    Eigen::MatrixXd A(n, static_cast<Eigen::Index>(m));
    Eigen::MatrixXd B(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = params[static_cast<std::size_t>(i)];
        A(i, 0) = 1.0;
        for (int k = 1; k <= order; ++k) {
            const double w = 2.0 * std::numbers::pi * k * s;
            A(i, 2 * k - 1) = std::cos(w);
            A(i, 2 * k) = std::sin(w);
        }
        B(i, 0) = curve[static_cast<std::size_t>(i)][0] - fa.trend_u * s;
        B(i, 1) = curve[static_cast<std::size_t>(i)][1] - fa.trend_v * s;
    }
    const Eigen::MatrixXd X = A.colPivHouseholderQr().solve(B);
    fa.coeffs_u.resize(m);
    fa.coeffs_v.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        fa.coeffs_u[j] = X(static_cast<Eigen::Index>(j), 0);
        fa.coeffs_v[j] = X(static_cast<Eigen::Index>(j), 1);
    }
    return fa;
}

std::vector<Point2> decode_fourier(const FourierArtery& fa, int n_samples) {
    fa.validate();
    if (n_samples < 2) throw Error(ErrorKind::Parameter, "decode needs at least 2 samples");
    std::vector<Point2> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) out.push_back(fa.evaluate(static_cast<double>(i) / (n_samples - 1)));
    return out;
}

void RadiusProfile::validate() const {
    if (samples.size() < 2) throw Error(ErrorKind::Parameter, "radius profile needs at least 2 samples");
    for (double r : samples)
        if (!(r > 0.0)) throw Error(ErrorKind::Parameter, "radius profile samples must be positive");
}

double RadiusProfile::at(double s) const {
    const double x = std::clamp(s, 0.0, 1.0) * static_cast<double>(samples.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(x), samples.size() - 2);
    const double t = x - static_cast<double>(i);
    return samples[i] * (1.0 - t) + samples[i + 1] * t;
}

std::vector<Vec3> orient_trace(const FourierArtery& fa, OrientationPlane& plane, const Vec3& start, const Vec3& end,
                               std::uint64_t seed, double jitter_range, int n_samples) {
    fa.validate();
    if (n_samples < 2) throw Error(ErrorKind::Parameter, "orient_trace needs at least 2 samples");
    const Vec3 chord = end - start;
    const double chord_len = chord.norm();
    if (!(chord_len > 0.0)) throw Error(ErrorKind::Degenerate, "artery start and end landmarks coincide");
    const Vec3 u = chord * (1.0 / chord_len);
    Vec3 v = plane.v - u * plane.v.dot(u);
    if (!(v.norm() > 1e-9)) throw Error(ErrorKind::Degenerate, "orientation plane is degenerate (v parallel to the chord)");
    v = normalized(v);

    std::mt19937_64 rng(seed);
    const double angle = (2.0 * unit_from_bits(rng()) - 1.0) * jitter_range;
    const Vec3 w = v * std::cos(angle) + u.cross(v) * std::sin(angle);

    const Point2 c0 = fa.evaluate(0.0);
    const Point2 c1 = fa.evaluate(1.0);
    const double ex = c1[0] - c0[0], ey = c1[1] - c0[1];
    const double elen = std::hypot(ex, ey);
    // Express the in-plane shape relative to its own chord.
    const double ca = elen > 0.0 ? ex / elen : 1.0;
    const double sa = elen > 0.0 ? ey / elen : 0.0;

    std::vector<Vec3> out(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        const double s = static_cast<double>(i) / (n_samples - 1);
        const Point2 c = fa.evaluate(s);
        const double dx = c[0] - c0[0] - s * ex;
        const double dy = c[1] - c0[1] - s * ey;
        const double along = ca * dx + sa * dy;
        const double across = -sa * dx + ca * dy;
        out[static_cast<std::size_t>(i)] = start + chord * s + u * along + w * across;
    }
    out.front() = start;
    out.back() = end;
    plane.origin = start;
    plane.u = u;
    plane.v = w;
    plane.jitter_angle = angle;
    return out;
}

void rasterize_tube(const std::vector<Vec3>& trace, const std::vector<double>& radii, BinaryVolume& out) {
    if (trace.empty()) return;
    if (radii.size() != trace.size()) throw Error(ErrorKind::Parameter, "one radius per trace point is required");
    for (std::size_t i = 0; i < radii.size(); ++i)
        if (!(radii[i] > 0.0)) throw Error(ErrorKind::Parameter, "nonpositive radius at point " + std::to_string(i));
    const GridSpec g{out.dims(), out.spacing()};
    check_inside(trace, radii, g);
    const Spacing& sp = g.spacing;
    const Dims& d = g.dims;

    auto mark_sphere_segment = [&](const Vec3& a, const Vec3& b, double ra, double rb) {
        const double rmax = std::max(ra, rb);
        std::int64_t lo[3], hi[3];
        const double pa[3] = {a.x, a.y, a.z}, pb[3] = {b.x, b.y, b.z};
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((std::min(pa[k], pb[k]) - rmax) / sp[k])));
            hi[k] = std::min<std::int64_t>(d[k] - 1, static_cast<std::int64_t>(std::ceil((std::max(pa[k], pb[k]) + rmax) / sp[k])));
        }
        const Vec3 ab = b - a;
        const double len2 = ab.dot(ab);
        for (std::int64_t z = lo[2]; z <= hi[2]; ++z)
            for (std::int64_t y = lo[1]; y <= hi[1]; ++y)
                for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
                    if (out.at(x, y, z)) continue;
                    const Vec3 c = to_physical({x, y, z}, sp);
                    const double t = len2 > 0.0 ? std::clamp((c - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
                    const Vec3 q = a + ab * t;
                    const double r = ra + (rb - ra) * t;
                    const Vec3 dq = c - q;
                    if (dq.dot(dq) <= r * r) out.set(x, y, z, true);
                }
    };
    if (trace.size() == 1) mark_sphere_segment(trace[0], trace[0], radii[0], radii[0]);
    for (std::size_t i = 1; i < trace.size(); ++i) mark_sphere_segment(trace[i - 1], trace[i], radii[i - 1], radii[i]);
    for (const auto& v : centerline_voxels(trace, g)) out.set(v.x, v.y, v.z, true);
}

BinaryVolume rasterize_tube(const std::vector<Vec3>& trace, const std::vector<double>& radii, const GridSpec& grid) {
    validate_dims(grid.dims);
    validate_spacing(grid.spacing);
    BinaryVolume out(grid.dims, grid.spacing);
    rasterize_tube(trace, radii, out);
    return out;
}

std::vector<Index3> centerline_voxels(const std::vector<Vec3>& trace, const GridSpec& grid) {
    // Dense samples give a face-connected staircase; shortcut it to a 26-connected chain like a thinned skeleton.
    std::vector<Index3> chain;
    auto adjacent = [](const Index3& a, const Index3& b) {
        return std::abs(a.x - b.x) <= 1 && std::abs(a.y - b.y) <= 1 && std::abs(a.z - b.z) <= 1;
    };
    auto add = [&](const Vec3& p) {
        const Index3 v = nearest_voxel(p, grid.spacing);
        if (!in_bounds(grid.dims, v.x, v.y, v.z)) throw Error(ErrorKind::Bounds, "centerline leaves the grid");
        if (!chain.empty() && chain.back() == v) return;
        while (chain.size() >= 2 && adjacent(chain[chain.size() - 2], v)) chain.pop_back();
        chain.push_back(v);
    };
    if (!trace.empty()) add(trace.front());
    const double step = 0.25 * grid.spacing.min();
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const Vec3 a = trace[i - 1], b = trace[i];
        const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / step)));
        for (int k = 1; k <= n; ++k) add(a + (b - a) * (static_cast<double>(k) / n));
    }
    std::vector<std::size_t> idx;
    for (const auto& v : chain) idx.push_back(linear_index(grid.dims, v));
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    std::vector<Index3> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(unravel(grid.dims, i));
    return out;
}

FeatureRow ground_truth_features(const std::string& name, const std::vector<Vec3>& trace, const std::vector<double>& radii,
                                 const GridSpec& grid) {
    ArteryGeometry g;
    g.name = name;
    g.present = true;
    g.traces.push_back({trace, radii});
    g.tortuosity_paths.push_back(g.traces.back());
    g.voxels = centerline_voxels(trace, grid);
    g.branch_count = 1;
    return compute_row(g, grid.dims);
}

void SimConfig::validate(const std::map<std::string, FourierArtery>& fbd) const {
    validate_dims(grid.dims);
    validate_spacing(grid.spacing);
    if (arteries.empty()) throw Error(ErrorKind::Parameter, "simulation config has no arteries");
    if (samples_per_artery < 2) throw Error(ErrorKind::Parameter, "samples_per_artery must be >= 2");
    if (!(jitter_deg >= 0.0)) throw Error(ErrorKind::Parameter, "jitter_deg must be >= 0");
    if (!(intensity.sigma_b >= 0.0) || !(intensity.sigma_v >= 0.0)) throw Error(ErrorKind::Parameter, "intensity sigmas must be >= 0");
    std::set<std::string> names;
    for (const auto& a : arteries) {
        if (!names.insert(a.name).second) throw Error(ErrorKind::Parameter, "duplicate artery " + a.name);
        for (const auto& l : {a.start_label, a.end_label})
            if (!landmarks.count(l)) throw Error(ErrorKind::Parameter, "artery " + a.name + " uses unknown landmark " + l);
        if (!fbd.count(a.fbd_key)) throw Error(ErrorKind::Parameter, "artery " + a.name + " uses unknown dictionary entry " + a.fbd_key);
        a.radius.validate();
    }
}

SimResult simulate_subject(const SimConfig& cfg, const std::map<std::string, FourierArtery>& fbd) {
    cfg.validate(fbd);
    const GridSpec& grid = cfg.grid;
    BinaryVolume mask(grid.dims, grid.spacing);
    GroundTruth truth;
    truth.landmarks = cfg.landmarks;
    truth.seed = cfg.seed;
    const double jitter = cfg.jitter_deg * std::numbers::pi / 180.0;

    for (std::size_t i = 0; i < cfg.arteries.size(); ++i) {
        const SimArtery& a = cfg.arteries[i];
        const Vec3 start = cfg.landmarks.at(a.start_label);
        const Vec3 end = cfg.landmarks.at(a.end_label);
        const Vec3 u = normalized(end - start);
        OrientationPlane plane;
        for (const Vec3& n : {a.plane_normal, Vec3{0, 0, 1}, Vec3{1, 0, 0}}) {
            const Vec3 v = n.cross(u);
            if (v.norm() > 1e-6) {
                plane.v = normalized(v);
                break;
            }
        }
        const std::uint64_t artery_seed = splitmix64(cfg.seed ^ splitmix64(i + 1));
        GeneratedArtery ga;
        ga.name = a.name;
        ga.group = a.group.empty() ? a.name : a.group;
        ga.start_label = a.start_label;
        ga.end_label = a.end_label;
        ga.points = orient_trace(fbd.at(a.fbd_key), plane, start, end, artery_seed, jitter, cfg.samples_per_artery);
        ga.jitter_angle = plane.jitter_angle;
        for (int k = 0; k < cfg.samples_per_artery; ++k)
            ga.radii.push_back(a.radius.at(static_cast<double>(k) / (cfg.samples_per_artery - 1)));
        try {
            rasterize_tube(ga.points, ga.radii, mask);
        } catch (const Error& e) {
            throw Error(e.kind(), "artery " + a.name + ": " + e.what());
        }
        truth.arteries.push_back(std::move(ga));
    }
    fill_crotches(truth.arteries, mask);

    // Generating graph with pass-through landmarks merged.
    std::map<std::string, int> degree;
    for (const auto& a : truth.arteries) {
        ++degree[a.start_label];
        ++degree[a.end_label];
    }
    std::size_t pass_through = 0;
    for (const auto& [label, deg] : degree)
        if (deg == 2) ++pass_through;
    truth.graph_nodes = degree.size() - pass_through;
    truth.graph_edges = truth.arteries.size() - pass_through;

    // One report row per group, in order of first appearance.
    std::vector<std::string> group_order;
    for (const auto& a : truth.arteries)
        if (std::find(group_order.begin(), group_order.end(), a.group) == group_order.end()) group_order.push_back(a.group);
    std::map<std::string, ArteryGeometry> geometry;
    for (const auto& gname : group_order) {
        ArteryGeometry g;
        g.name = gname;
        g.present = true;
        std::vector<const GeneratedArtery*> members;
        for (const auto& a : truth.arteries)
            if (a.group == gname) members.push_back(&a);
        std::map<std::string, int> local_degree;
        for (const auto* a : members) {
            g.traces.push_back({a->points, a->radii});
            const auto vox = centerline_voxels(a->points, grid);
            g.voxels.insert(g.voxels.end(), vox.begin(), vox.end());
            ++local_degree[a->start_label];
            ++local_degree[a->end_label];
        }
        int merged = 0;
        for (const auto& [label, deg] : local_degree)
            if (deg == 2 && degree.at(label) == 2) ++merged;
        g.branch_count = static_cast<int>(members.size()) - merged;

        std::vector<std::string> roots{members.front()->start_label};
        for (const auto& sg : cfg.groups)
            if (sg.name == gname && !sg.roots.empty()) roots = sg.roots;
        std::sort(roots.begin(), roots.end());
        double best_len = -1.0;
        for (const auto& root : roots) {
            auto path = farthest_path(members, root);
            if (path && polyline_length(*path) > best_len) {
                best_len = polyline_length(*path);
                g.tortuosity_paths.assign(1, std::move(*path));
            }
        }
        truth.rows.push_back(compute_row(g, grid.dims));
        geometry[gname] = std::move(g);
    }
    for (const auto& agg : cfg.aggregates) {
        ArteryGeometry g;
        g.name = agg.name;
        for (const auto& gname : agg.groups) {
            auto it = geometry.find(gname);
            if (it == geometry.end()) continue;
            g.present = true;
            const auto& m = it->second;
            g.traces.insert(g.traces.end(), m.traces.begin(), m.traces.end());
            g.tortuosity_paths.insert(g.tortuosity_paths.end(), m.tortuosity_paths.begin(), m.tortuosity_paths.end());
            g.voxels.insert(g.voxels.end(), m.voxels.begin(), m.voxels.end());
            g.branch_count += m.branch_count;
        }
        truth.rows.push_back(compute_row(g, grid.dims));
    }

    const IntensityModel& im = cfg.intensity;
    const std::uint64_t noise_seed = splitmix64(cfg.seed ^ 0x6a09e667f3bcc909ULL);
    std::vector<float> data(mask.size());
    parallel_for(mask.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double n = counter_normal(noise_seed, i);
            data[i] = static_cast<float>(mask[i] ? im.mu_v + im.sigma_v * n : im.mu_b + im.sigma_b * n);
        }
    });
    return SimResult{Volume3D(grid.dims, grid.spacing, std::move(data)), std::move(mask), std::move(truth)};
}

}  // namespace vascnet
