#include "vascnet/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "vascnet/landmarks.hpp"

namespace vascnet {

namespace {

constexpr double kFov = 96.0;

Vec3 unit(const Vec3& v) { return v * (1.0 / v.norm()); }

Vec3 mirror(const Vec3& p) { return {kFov - p.x, p.y, p.z}; }

// Component of `axis` orthogonal to `d`, normalized.
Vec3 orthogonal_to(const Vec3& d, const Vec3& axis) { return unit(axis - d * axis.dot(d)); }

Vec3 rotate_towards(const Vec3& d, const Vec3& axis, double deg) {
    const double a = deg * std::numbers::pi / 180.0;
    return unit(d * std::cos(a) + orthogonal_to(d, axis) * std::sin(a));
}

struct Level {
    int split = 2;
    double length = 10.0;
    double angle_deg = 30.0;
    Vec3 axis;
    int max_split_parents = -1;  // -1: every parent splits
};

struct TreeSpec {
    std::string prefix;
    std::string group;
    std::string root_label;
    Vec3 direction;
    std::vector<Level> levels;
    double r_begin = 1.3;
    double r_end = 1.0;
};

struct Builder {
    Phantom ph;
    int counter = 0;

    // Deterministic shape amplitude per artery in [lo, hi].
    double amplitude(double lo, double hi) {
        const double t = std::fmod(0.6180339887498949 * (counter + 1), 1.0);
        return lo + (hi - lo) * t;
    }

    void add(const std::string& name, const std::string& from, const std::string& to, const std::string& group, double r0,
             double r1, const Vec3& plane_normal, double bend_lo = 0.05, double bend_hi = 0.25) {
        const double len = distance(ph.config.landmarks.at(from), ph.config.landmarks.at(to));
        const double bump = amplitude(bend_lo, bend_hi) * len;
        const double wave = amplitude(-0.08, 0.08) * len;
        ++counter;
        FourierArtery fa;
        fa.order = 8;
        fa.coeffs_u.assign(17, 0.0);
        fa.coeffs_v.assign(17, 0.0);
        fa.coeffs_v[0] = 0.5 * bump;
        fa.coeffs_v[1] = -0.5 * bump;
        fa.coeffs_v[2] = wave;
        fa.trend_u = len;
        ph.fbd[name] = fa;
        SimArtery a;
        a.name = name;
        a.start_label = from;
        a.end_label = to;
        a.radius.samples = {r0, r1};
        a.fbd_key = name;
        a.group = group;
        a.plane_normal = plane_normal;
        ph.config.arteries.push_back(std::move(a));
    }

    void tree(const TreeSpec& t, double radius_scale) {
        struct Open {
            std::string label;
            Vec3 dir;
        };
        std::vector<Open> open{{t.root_label, unit(t.direction)}};
        const auto n_levels = static_cast<double>(t.levels.size());
        for (std::size_t li = 0; li < t.levels.size(); ++li) {
            const Level& lv = t.levels[li];
            const double r0 = radius_scale * (t.r_begin + (t.r_end - t.r_begin) * static_cast<double>(li) / n_levels);
            const double r1 = radius_scale * (t.r_begin + (t.r_end - t.r_begin) * static_cast<double>(li + 1) / n_levels);
            std::vector<Open> next;
            for (std::size_t pi = 0; pi < open.size(); ++pi) {
                if (lv.max_split_parents >= 0 && static_cast<int>(pi) >= lv.max_split_parents) continue;
                const Open& parent = open[pi];
                for (int c = 0; c < lv.split; ++c) {
                    Vec3 d = parent.dir;
                    if (lv.split == 2) d = rotate_towards(parent.dir, lv.axis, c == 0 ? lv.angle_deg : -lv.angle_deg);
                    const std::string label = (li == 0 ? t.prefix : parent.label) + "." + std::to_string(c + 1);
                    ph.config.landmarks[label] = ph.config.landmarks.at(parent.label) + d * lv.length;
                    add(label, parent.label, label, t.group, r0, r1, orthogonal_to(d, lv.axis), 0.04, 0.2);
                    next.push_back({label, d});
                }
            }
            open = std::move(next);
        }
    }
};

}  // namespace

Phantom build_cow_phantom(const PhantomOptions& opt) {
    if (opt.dim < 32) throw Error(ErrorKind::Parameter, "phantom grid must be at least 32 voxels per axis");
    Builder b;
    SimConfig& cfg = b.ph.config;
    const double sp = kFov / static_cast<double>(opt.dim);
    cfg.grid = {{opt.dim, opt.dim, opt.dim}, {sp, sp, sp}};
    cfg.seed = opt.seed;
    cfg.jitter_deg = opt.jitter_deg;
    const double rs = opt.radius_scale;

    const std::map<std::string, Vec3> left = {
        {"ICA_Root", {34, 52, 8}},  {"Pcomm-ICA", {34, 50, 30}}, {"ICA-MCA-ACA", {34, 54, 42}},
        {"M1-M2", {20, 57, 46}},    {"A1-A2", {44, 66, 46}},     {"P1-P2-Pcomm", {34, 34, 38}},
        {"VA_Root", {40, 28, 4}},
    };
    for (const auto& [k, p] : left) {
        cfg.landmarks[k + "_L"] = p;
        cfg.landmarks[k + "_R"] = mirror(p);
    }
    cfg.landmarks["PCA-BA"] = {48, 38, 34};
    cfg.landmarks["BA-VA"] = {48, 36, 14};

    const Vec3 ez{0, 0, 1}, ex{1, 0, 0}, ey{0, 1, 0};
    for (const std::string s : {"L", "R"}) {
        b.add("ICA_" + s + "_a", "ICA_Root_" + s, "Pcomm-ICA_" + s, "ICA_" + s, 2.2 * rs, 2.0 * rs, ey);
        b.add("ICA_" + s + "_b", "Pcomm-ICA_" + s, "ICA-MCA-ACA_" + s, "ICA_" + s, 2.0 * rs, 1.6 * rs, ey);
        b.add("M1_" + s, "ICA-MCA-ACA_" + s, "M1-M2_" + s, "M1_" + s, 1.6 * rs, 1.4 * rs, ez);
        b.add("A1_" + s, "ICA-MCA-ACA_" + s, "A1-A2_" + s, "A1_" + s, 1.3 * rs, 1.2 * rs, ez);
        if (s == "L" ? opt.include_pcomm_l : opt.include_pcomm_r)
            b.add("Pcomm_" + s, "Pcomm-ICA_" + s, "P1-P2-Pcomm_" + s, "Pcomm_" + s, 1.0 * rs, 1.0 * rs, ex);
        b.add("P1_" + s, "PCA-BA", "P1-P2-Pcomm_" + s, "P1_" + s, 1.5 * rs, 1.2 * rs, ey);
        b.add("VA_" + s, "VA_Root_" + s, "BA-VA", "VA_" + s, 1.5 * rs, 1.5 * rs, ex);
    }
    b.add("Acomm", "A1-A2_L", "A1-A2_R", "Acomm", 1.0 * rs, 1.0 * rs, ey, 0.02, 0.1);
    b.add("BA", "BA-VA", "PCA-BA", "BA", 1.7 * rs, 1.5 * rs, ex);

    for (const std::string s : {"L", "R"}) {
        const double sx = s == "L" ? -1.0 : 1.0;
        const Vec3 lat{sx, 0, 0};
        b.tree({"MCA_" + s, "MCA_" + s, "M1-M2_" + s, {0.25 * sx, 0.1, 1.0},
                {{2, 12, 32, ey}, {2, 10, 25, lat}, {2, 8, 28, ey, 3}}, 1.4, 0.9},
               rs);
        b.tree({"ACA_" + s, "ACA", "A1-A2_" + s, {0.12 * sx, 0.55, 1.0}, {{1, 12, 0, ey}, {2, 10, 30, ey}, {2, 8, 28, lat}}, 1.2, 0.9},
               rs);
        b.tree({"PCA_" + s, "PCA_" + s, "P1-P2-Pcomm_" + s, {0.35 * sx, -1.0, 0.25},
                {{1, 10, 0, ez}, {2, 10, 30, ez}, {2, 8, 28, lat}}, 1.2, 0.9},
               rs);
    }
    cfg.groups = {{"MCA_L", {"M1-M2_L"}}, {"MCA_R", {"M1-M2_R"}}, {"ACA", {"A1-A2_L", "A1-A2_R"}},
                  {"PCA_L", {"P1-P2-Pcomm_L"}}, {"PCA_R", {"P1-P2-Pcomm_R"}}};
    std::vector<std::string> proximal;
    for (const std::string s : {"L", "R"})
        for (const std::string a : {"ICA_", "M1_", "A1_", "Pcomm_", "P1_", "VA_"}) proximal.push_back(a + s);
    proximal.push_back("Acomm");
    proximal.push_back("BA");
    cfg.aggregates = {{"Proximal", proximal}, {"Distal", {"MCA_L", "MCA_R", "ACA", "PCA_L", "PCA_R"}}};
    cfg.validate(b.ph.fbd);
    return b.ph;
}

std::map<std::string, Vec3> phantom_landmarks(const SimConfig& cfg) {
    std::map<std::string, int> degree;
    for (const auto& a : cfg.arteries) {
        ++degree[a.start_label];
        ++degree[a.end_label];
    }
    // Pass-through landmarks have no graph node to snap to.
    std::map<std::string, Vec3> out;
    for (const auto& l : canonical_labels())
        if (degree.count(l) && degree.at(l) != 2) out[l] = cfg.landmarks.at(l);
    return out;
}

std::vector<ClearanceIssue> clearance_issues(const GroundTruth& truth, double margin_mm) {
    std::vector<ClearanceIssue> out;
    const auto& arts = truth.arteries;
    for (std::size_t i = 0; i < arts.size(); ++i)
        for (std::size_t j = i + 1; j < arts.size(); ++j) {
            const auto& a = arts[i];
            const auto& b = arts[j];
            const std::set<std::string> la{a.start_label, a.end_label};
            if (la.count(b.start_label) || la.count(b.end_label)) continue;
            double gap = INFINITY;
            const std::size_t step = 8;
            for (std::size_t p = 0; p < a.points.size(); p += step)
                for (std::size_t q = 0; q < b.points.size(); q += step)
                    gap = std::min(gap, distance(a.points[p], b.points[q]) - a.radii[p] - b.radii[q]);
            if (gap < margin_mm) out.push_back({a.name, b.name, gap});
        }
    return out;
}

}  // namespace vascnet
