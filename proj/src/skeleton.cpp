#include "vascnet/skeleton.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>

#include "vascnet/parallel.hpp"

namespace vascnet {

namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
constexpr int kForkReach = 4;

// One 1D pass of the separable exact EDT (lower envelope of parabolas).
// Where two sites give the same value the smaller site position wins, which
// over the three passes yields the smallest linear index overall.
struct EnvelopeScratch {
    std::vector<std::int64_t> f, feat, site;
    std::vector<double> bound;
    void resize(std::size_t n) {
        f.resize(n);
        feat.resize(n);
        site.resize(n);
        bound.resize(n + 1);
    }
};

void envelope_line(std::int64_t n, EnvelopeScratch& s, std::int64_t* out_f, std::int64_t* out_feat, std::size_t stride) {
    auto key = [&](std::int64_t q) { return static_cast<double>(s.f[static_cast<std::size_t>(q)]) + static_cast<double>(q * q); };
    std::int64_t k = -1;
    for (std::int64_t q = 0; q < n; ++q) {
        if (s.f[static_cast<std::size_t>(q)] == kInf) continue;
        if (k < 0) {
            k = 0;
            s.site[0] = q;
            s.bound[0] = -std::numeric_limits<double>::infinity();
            s.bound[1] = std::numeric_limits<double>::infinity();
            continue;
        }
        double x = 0.0;
        while (true) {
            const std::int64_t p = s.site[static_cast<std::size_t>(k)];
            x = (key(q) - key(p)) / (2.0 * static_cast<double>(q - p));
            if (x <= s.bound[static_cast<std::size_t>(k)]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        s.site[static_cast<std::size_t>(k)] = q;
        s.bound[static_cast<std::size_t>(k)] = x;
        s.bound[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
    }
    if (k < 0) {
        for (std::int64_t y = 0; y < n; ++y) {
            out_f[static_cast<std::size_t>(y) * stride] = kInf;
            out_feat[static_cast<std::size_t>(y) * stride] = -1;
        }
        return;
    }
    std::size_t j = 0;
    for (std::int64_t y = 0; y < n; ++y) {
        while (s.bound[j + 1] < static_cast<double>(y)) ++j;
        const std::int64_t p = s.site[j];
        out_f[static_cast<std::size_t>(y) * stride] = s.f[static_cast<std::size_t>(p)] + (y - p) * (y - p);
        out_feat[static_cast<std::size_t>(y) * stride] = s.feat[static_cast<std::size_t>(p)];
    }
}

void envelope_axis(const Dims& d, int axis, std::vector<std::int64_t>& f, std::vector<std::int64_t>& feat) {
    const std::int64_t n = d[axis];
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(d.nx) : static_cast<std::size_t>(d.nx * d.ny);
    const std::int64_t a = axis == 0 ? d.ny : d.nx;
    const std::int64_t b = axis == 2 ? d.ny : d.nz;
    const std::size_t lines = static_cast<std::size_t>(a * b);
    parallel_for(lines, [&](std::size_t lb, std::size_t le) {
        EnvelopeScratch s;
        s.resize(static_cast<std::size_t>(n));
        for (std::size_t line = lb; line < le; ++line) {
            const auto i = static_cast<std::int64_t>(line) % a;
            const auto j = static_cast<std::int64_t>(line) / a;
            std::size_t base = 0;
            if (axis == 0) base = linear_index(d, 0, i, j);
            else if (axis == 1) base = linear_index(d, i, 0, j);
            else base = linear_index(d, i, j, 0);
            for (std::int64_t t = 0; t < n; ++t) {
                s.f[static_cast<std::size_t>(t)] = f[base + static_cast<std::size_t>(t) * stride];
                s.feat[static_cast<std::size_t>(t)] = feat[base + static_cast<std::size_t>(t) * stride];
            }
            envelope_line(n, s, f.data() + base, feat.data() + base, stride);
        }
    });
}

// 3x3x3 neighborhood positions are numbered (dx+1) + 3(dy+1) + 9(dz+1); 13 is
// the center. Bit masks below skip nothing, the center bit is just never set.
struct NeighborhoodTables {
    std::array<std::uint32_t, 27> adj26{};
    std::array<std::uint32_t, 27> adj6{};
    std::uint32_t n26 = 0;
    std::uint32_t n18 = 0;
    std::uint32_t n6 = 0;

    NeighborhoodTables() {
        auto coord = [](int i) { return std::array<int, 3>{i % 3 - 1, (i / 3) % 3 - 1, i / 9 - 1}; };
        for (int i = 0; i < 27; ++i) {
            if (i == 13) continue;
            const auto c = coord(i);
            const int l1 = std::abs(c[0]) + std::abs(c[1]) + std::abs(c[2]);
            n26 |= 1u << i;
            if (l1 <= 2) n18 |= 1u << i;
            if (l1 == 1) n6 |= 1u << i;
            for (int j = 0; j < 27; ++j) {
                if (j == 13 || j == i) continue;
                const auto e = coord(j);
                const int dx = std::abs(c[0] - e[0]), dy = std::abs(c[1] - e[1]), dz = std::abs(c[2] - e[2]);
                if (std::max(dx, std::max(dy, dz)) == 1) adj26[static_cast<std::size_t>(i)] |= 1u << j;
                if (dx + dy + dz == 1) adj6[static_cast<std::size_t>(i)] |= 1u << j;
            }
        }
    }
};

const NeighborhoodTables& tables() {
    static const NeighborhoodTables t;
    return t;
}

int lowest_bit(std::uint32_t m) { return __builtin_ctz(m); }

// Components of `set` (under `adj`) that contain at least one bit of `seeds`;
// stops counting at 2.
int count_components_capped(std::uint32_t set, const std::array<std::uint32_t, 27>& adj, std::uint32_t seeds) {
    int count = 0;
    std::uint32_t remaining = set;
    while ((remaining & seeds) != 0) {
        std::uint32_t comp = 1u << lowest_bit(remaining & seeds);
        std::uint32_t frontier = comp;
        while (frontier) {
            const int b = lowest_bit(frontier);
            frontier &= frontier - 1;
            const std::uint32_t nb = adj[static_cast<std::size_t>(b)] & remaining & ~comp;
            comp |= nb;
            frontier |= nb;
        }
        remaining &= ~comp;
        if (++count > 1) break;
    }
    return count;
}

std::uint32_t neighborhood_mask(const BinaryVolume& bin, std::int64_t x, std::int64_t y, std::int64_t z) {
    std::uint32_t m = 0;
    const Dims& d = bin.dims();
    const bool interior = x > 0 && y > 0 && z > 0 && x + 1 < d.nx && y + 1 < d.ny && z + 1 < d.nz;
    int i = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx, ++i) {
                if (i == 13) continue;
                const bool v = interior ? bin.at(x + dx, y + dy, z + dz) : bin.get(x + dx, y + dy, z + dz);
                if (v) m |= 1u << i;
            }
    return m;
}

bool simple_from_mask(std::uint32_t fg) {
    const auto& t = tables();
    if (count_components_capped(fg, t.adj26, t.n26) != 1) return false;
    const std::uint32_t bg18 = ~fg & t.n18;
    return count_components_capped(bg18, t.adj6, t.n6) == 1;
}

// Unit vector of neighbor bit b of a 3x3x3 block.
Index3 neighbor_at(const Index3& c, int b) { return {c.x + b % 3 - 1, c.y + b / 3 % 3 - 1, c.z + b / 9 - 1}; }

// Walks the skeleton from neighbour `start` of branch voxel `n`, never re-entering
// `n` or its neighbourhood; true when the walk dead-ends within `limit` steps.
bool short_terminal(const BinaryVolume& skel, const Index3& n, const Index3& start, int limit) {
    std::vector<Index3> seen{n};
    const std::uint32_t nm = neighborhood_mask(skel, n.x, n.y, n.z);
    for (int b = 0; b < 27; ++b)
        if (nm >> b & 1u) seen.push_back(neighbor_at(n, b));
    auto visited = [&](const Index3& q) {
        return std::any_of(seen.begin(), seen.end(), [&](const Index3& v) { return v.x == q.x && v.y == q.y && v.z == q.z; });
    };
    Index3 at = start;
    for (int step = 0; step < limit; ++step) {
        const std::uint32_t m = neighborhood_mask(skel, at.x, at.y, at.z);
        std::vector<Index3> next;
        for (int b = 0; b < 27; ++b)
            if ((m >> b & 1u) && !visited(neighbor_at(at, b))) next.push_back(neighbor_at(at, b));
        if (next.empty()) return true;
        if (next.size() > 1) return false;
        seen.push_back(next.front());
        at = next.front();
    }
    return false;
}

}  // namespace

DistanceField distance_transform(const BinaryVolume& bin) {
    const Dims& d = bin.dims();
    const std::size_t n = bin.size();
    std::vector<std::int64_t> f(n), feat(n);
    bool any_background = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (bin[i]) {
            f[i] = kInf;
            feat[i] = -1;
        } else {
            f[i] = 0;
            feat[i] = static_cast<std::int64_t>(i);
            any_background = true;
        }
    }
    if (!any_background) throw Error(ErrorKind::Degenerate, "distance transform needs at least one background voxel");
    for (int axis = 0; axis < 3; ++axis) envelope_axis(d, axis, f, feat);

    DistanceField out;
    out.dims = d;
    out.dist.resize(n);
    out.nearest = std::move(feat);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) out.dist[i] = std::sqrt(static_cast<double>(f[i]));
    });
    return out;
}

bool is_simple_point(const BinaryVolume& bin, std::int64_t x, std::int64_t y, std::int64_t z) {
    return simple_from_mask(neighborhood_mask(bin, x, y, z));
}

BinaryVolume skeletonize_3d(const BinaryVolume& bin) {
    BinaryVolume skel = bin;
    const Dims& d = skel.dims();
    std::vector<std::size_t> fg = skel.foreground_indices();
    // Opposite directions alternate so peeling stays centered.
    static constexpr std::array<std::array<int, 3>, 6> kDirs{{{0, 0, -1}, {0, 0, 1}, {0, -1, 0}, {0, 1, 0}, {-1, 0, 0}, {1, 0, 0}}};
    std::vector<std::uint8_t> flag;

    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& dir : kDirs) {
            flag.assign(fg.size(), 0);
            parallel_for(fg.size(), [&](std::size_t b, std::size_t e) {
                for (std::size_t r = b; r < e; ++r) {
                    const Index3 c = unravel(d, fg[r]);
                    if (skel.get(c.x + dir[0], c.y + dir[1], c.z + dir[2])) continue;
                    const std::uint32_t m = neighborhood_mask(skel, c.x, c.y, c.z);
                    if (__builtin_popcount(m) <= 1) continue;  // endpoint or isolated
                    if (simple_from_mask(m)) flag[r] = 1;
                }
            });
            std::size_t removed = 0;
            for (std::size_t r = 0; r < fg.size(); ++r) {
                if (!flag[r]) continue;
                const Index3 c = unravel(d, fg[r]);
                const std::uint32_t m = neighborhood_mask(skel, c.x, c.y, c.z);
                if (__builtin_popcount(m) <= 1 || !simple_from_mask(m)) {
                    flag[r] = 0;
                    continue;
                }
                skel.set(fg[r], false);
                ++removed;
            }
            if (removed == 0) continue;
            changed = true;
            std::size_t w = 0;
            for (std::size_t r = 0; r < fg.size(); ++r)
                if (!flag[r]) fg[w++] = fg[r];
            fg.resize(w);
        }
        if (changed) continue;
        // One-voxel side branches off a branch voxel are surface noise; drop them and
        // thin again. Next to a short terminal branch the stub is one prong of a forked
        // vessel end and stays.
        std::vector<std::size_t> stubs;
        for (std::size_t v : fg) {
            const Index3 c = unravel(d, v);
            const std::uint32_t m = neighborhood_mask(skel, c.x, c.y, c.z);
            if (__builtin_popcount(m) != 1) continue;
            const Index3 n = neighbor_at(c, __builtin_ctz(m));
            const std::uint32_t nm = neighborhood_mask(skel, n.x, n.y, n.z);
            if (__builtin_popcount(nm) < 3) continue;
            bool fork = false;
            for (int b = 0; b < 27 && !fork; ++b) {
                if (!(nm >> b & 1u)) continue;
                const Index3 q = neighbor_at(n, b);
                if (q.x == c.x && q.y == c.y && q.z == c.z) continue;
                fork = short_terminal(skel, n, q, kForkReach);
            }
            if (!fork) stubs.push_back(v);
        }
        if (stubs.empty()) break;
        for (std::size_t v : stubs) skel.set(v, false);
        fg = skel.foreground_indices();
        changed = true;
    }
    return skel;
}

SparseCenterline compute_radii(const BinaryVolume& skel, const DistanceField& field, const Spacing& spacing) {
    validate_spacing(spacing);
    if (skel.dims() != field.dims) throw Error(ErrorKind::Dimension, "skeleton and distance field dims differ");
    SparseCenterline out;
    out.dims = skel.dims();
    out.spacing = spacing;
    for (std::size_t v : skel.foreground_indices()) {
        const auto nb = field.nearest[v];
        if (nb < 0 || static_cast<std::size_t>(nb) == v) {
            const Index3 c = unravel(skel.dims(), v);
            throw Error(ErrorKind::Consistency, "skeleton voxel (" + std::to_string(c.x) + "," + std::to_string(c.y) + "," +
                                                    std::to_string(c.z) + ") lies on background");
        }
        const Index3 c = unravel(skel.dims(), v);
        const Index3 b = unravel(skel.dims(), static_cast<std::size_t>(nb));
        const double dx = static_cast<double>(c.x - b.x) * spacing.x;
        const double dy = static_cast<double>(c.y - b.y) * spacing.y;
        const double dz = static_cast<double>(c.z - b.z) * spacing.z;
        out.points.push_back({c, std::sqrt(dx * dx + dy * dy + dz * dz)});
    }
    return out;
}

std::size_t count_components(const BinaryVolume& bin, int connectivity) {
    if (connectivity != 6 && connectivity != 26) throw Error(ErrorKind::Parameter, "connectivity must be 6 or 26");
    const Dims& d = bin.dims();
    std::vector<std::uint8_t> seen(bin.size(), 0);
    std::vector<std::size_t> stack;
    std::size_t count = 0;
    for (std::size_t s = 0; s < bin.size(); ++s) {
        if (!bin[s] || seen[s]) continue;
        ++count;
        seen[s] = 1;
        stack.push_back(s);
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            const Index3 c = unravel(d, v);
            auto visit = [&](int dx, int dy, int dz) {
                const std::int64_t x = c.x + dx, y = c.y + dy, z = c.z + dz;
                if (!bin.get(x, y, z)) return;
                const std::size_t u = linear_index(d, x, y, z);
                if (seen[u]) return;
                seen[u] = 1;
                stack.push_back(u);
            };
            if (connectivity == 6) {
                for (const auto& o : neighbor_offsets_6()) visit(o[0], o[1], o[2]);
            } else {
                for (const auto& o : neighbor_offsets_26()) visit(o[0], o[1], o[2]);
            }
        }
    }
    return count;
}

}  // namespace vascnet
