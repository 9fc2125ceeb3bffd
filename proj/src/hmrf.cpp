#include "vascnet/hmrf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vascnet/parallel.hpp"

namespace vascnet {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

struct ClassModel {
    std::vector<double> mu;
    std::vector<double> inv_two_var;
    std::vector<double> log_norm;  // -0.5 ln(2 pi) - ln sigma

    explicit ClassModel(const EmParams& p) {
        for (int i = 0; i < p.k; ++i) {
            mu.push_back(p.mu[static_cast<std::size_t>(i)]);
            const double s = p.sigma[static_cast<std::size_t>(i)];
            inv_two_var.push_back(1.0 / (2.0 * s * s));
            log_norm.push_back(-kHalfLog2Pi - std::log(s));
        }
    }
    double log_pdf(double y, int i) const {
        const auto c = static_cast<std::size_t>(i);
        const double d = y - mu[c];
        return log_norm[c] - d * d * inv_two_var[c];
    }
};

void check_same_dims(const LabelMap& labels, const Volume3D& vol) {
    if (labels.dims != vol.dims() || labels.labels.size() != vol.size() || labels.mask.size() != vol.size()) {
        throw Error(ErrorKind::Dimension, "label map dims do not match the volume");
    }
}

// Counts, per class, the masked 6-neighbors carrying that label. Returns the
// number of masked neighbors.
template <std::size_t MaxK>
int neighbor_class_counts(const LabelMap& labels, std::size_t v, std::array<int, MaxK>& counts) {
    const auto& d = labels.dims;
    const auto nx = static_cast<std::size_t>(d.nx);
    const auto nxy = nx * static_cast<std::size_t>(d.ny);
    const Index3 c = unravel(d, v);
    counts.fill(0);
    int total = 0;
    auto visit = [&](std::size_t n) {
        if (labels.mask[n]) {
            ++total;
            const auto l = labels.labels[n];
            if (l < MaxK) ++counts[l];
        }
    };
    if (c.x > 0) visit(v - 1);
    if (c.x + 1 < d.nx) visit(v + 1);
    if (c.y > 0) visit(v - nx);
    if (c.y + 1 < d.ny) visit(v + nx);
    if (c.z > 0) visit(v - nxy);
    if (c.z + 1 < d.nz) visit(v + nxy);
    return total;
}

constexpr std::size_t kMaxClasses = 16;

}  // namespace

void EmParams::validate() const {
    if (k < 2 || k >= static_cast<int>(kMaxClasses)) throw Error(ErrorKind::Parameter, "class count k must be in [2, 15]");
    if (mu.size() != static_cast<std::size_t>(k) || sigma.size() != static_cast<std::size_t>(k)) {
        throw Error(ErrorKind::Parameter, "mu and sigma need one entry per class");
    }
    for (double s : sigma)
        if (!(s > 0.0)) throw Error(ErrorKind::Parameter, "every sigma must be positive");
    if (n_icm < 1) throw Error(ErrorKind::Parameter, "n_icm must be >= 1");
    if (n_em_max < 1) throw Error(ErrorKind::Parameter, "n_em_max must be >= 1");
    if (!(beta >= 0.0)) throw Error(ErrorKind::Parameter, "beta must be >= 0");
    if (!(eps_em > 0.0)) throw Error(ErrorKind::Parameter, "eps_em must be > 0");
}

double gaussian_pdf(double y, double mu, double sigma) {
    if (!(sigma > 0.0)) throw Error(ErrorKind::Parameter, "gaussian_pdf: sigma must be positive");
    const double d = (y - mu) / sigma;
    return std::exp(-0.5 * d * d) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

double log_gaussian_pdf(double y, double mu, double sigma) {
    if (!(sigma > 0.0)) throw Error(ErrorKind::Parameter, "log_gaussian_pdf: sigma must be positive");
    const double d = (y - mu) / sigma;
    return -kHalfLog2Pi - std::log(sigma) - 0.5 * d * d;
}

int prior_penalty(const LabelMap& labels, std::size_t voxel, int cls) {
    std::array<int, kMaxClasses> counts{};
    const int total = neighbor_class_counts(labels, voxel, counts);
    const int same = (cls >= 0 && cls < static_cast<int>(kMaxClasses)) ? counts[static_cast<std::size_t>(cls)] : 0;
    return total - same;
}

double log_posterior(const LabelMap& labels, const Volume3D& vol, const EmParams& params) {
    check_same_dims(labels, vol);
    const ClassModel model(params);
    const auto data = vol.data();
    return chunked_sum<double>(vol.size(), [&](std::size_t b, std::size_t e) {
        double acc = 0.0;
        std::array<int, kMaxClasses> counts{};
        for (std::size_t v = b; v < e; ++v) {
            if (!labels.mask[v]) continue;
            const int z = labels.labels[v];
            const int total = neighbor_class_counts(labels, v, counts);
            const int penalty = total - counts[static_cast<std::size_t>(z)];
            acc += model.log_pdf(data[v], z - 1) - params.beta * penalty;
        }
        return acc;
    });
}

LabelMap icm_update(const LabelMap& labels, const Volume3D& vol, const EmParams& params) {
    return icm_update(labels, vol, params, nullptr);
}

LabelMap icm_update(const LabelMap& labels, const Volume3D& vol, const EmParams& params,
                    std::vector<double>* per_sweep_log_posterior) {
    check_same_dims(labels, vol);
    params.validate();
    const ClassModel model(params);
    const auto data = vol.data();
    LabelMap out = labels;
    std::array<int, kMaxClasses> counts{};
    for (int sweep = 0; sweep < params.n_icm; ++sweep) {
        std::size_t changed = 0;
        for (std::size_t v = 0; v < out.labels.size(); ++v) {
            if (!out.mask[v]) continue;
            const int total = neighbor_class_counts(out, v, counts);
            const double y = data[v];
            int best = 1;
            double best_score = -std::numeric_limits<double>::infinity();
            for (int i = 1; i <= params.k; ++i) {
                const double score = model.log_pdf(y, i - 1) - params.beta * (total - counts[static_cast<std::size_t>(i)]);
                if (score > best_score) {
                    best_score = score;
                    best = i;
                }
            }
            if (out.labels[v] != best) {
                out.labels[v] = static_cast<std::uint8_t>(best);
                ++changed;
            }
        }
        if (per_sweep_log_posterior) per_sweep_log_posterior->push_back(log_posterior(out, vol, params));
        // Later sweeps would reproduce the same field.
        if (changed == 0 && !per_sweep_log_posterior) break;
    }
    return out;
}

Memberships e_step(const LabelMap& labels, const Volume3D& vol, const EmParams& params) {
    check_same_dims(labels, vol);
    params.validate();
    const ClassModel model(params);
    const auto data = vol.data();
    const auto k = static_cast<std::size_t>(params.k);

    Memberships out;
    out.k = params.k;
    for (std::size_t v = 0; v < labels.mask.size(); ++v)
        if (labels.mask[v]) out.voxels.push_back(v);
    out.m.assign(out.voxels.size() * k, 0.0);

    std::vector<std::size_t> warn_per_chunk;
    const std::size_t rows = out.voxels.size();
    out.warnings = chunked_sum<std::size_t>(rows, [&](std::size_t b, std::size_t e) {
        std::size_t warnings = 0;
        std::array<int, kMaxClasses> counts{};
        std::array<double, kMaxClasses> score{};
        for (std::size_t r = b; r < e; ++r) {
            const std::size_t v = out.voxels[r];
            const int total = neighbor_class_counts(labels, v, counts);
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < k; ++i) {
                score[i] = model.log_pdf(data[v], static_cast<int>(i)) - params.beta * (total - counts[i + 1]);
                top = std::max(top, score[i]);
            }
            double sum = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                score[i] = std::isfinite(top) ? std::exp(score[i] - top) : 0.0;
                sum += score[i];
            }
            double* row = out.m.data() + r * k;
            if (!(sum > 0.0) || !std::isfinite(sum)) {
                ++warnings;
                for (std::size_t i = 0; i < k; ++i) row[i] = 1.0 / static_cast<double>(k);
            } else {
                for (std::size_t i = 0; i < k; ++i) row[i] = score[i] / sum;
            }
        }
        return warnings;
    });
    return out;
}

MStepResult m_step(const Memberships& mem, const Volume3D& vol, const EmParams& params) {
    const auto k = static_cast<std::size_t>(mem.k);
    if (mem.k != params.k) throw Error(ErrorKind::Parameter, "membership class count differs from params.k");
    const auto data = vol.data();
    const std::size_t rows = mem.voxels.size();

    struct Acc {
        std::array<double, kMaxClasses> w{};
        std::array<double, kMaxClasses> wy{};
        Acc& operator+=(const Acc& o) {
            for (std::size_t i = 0; i < kMaxClasses; ++i) {
                w[i] += o.w[i];
                wy[i] += o.wy[i];
            }
            return *this;
        }
    };
    const Acc first = chunked_sum<Acc>(rows, [&](std::size_t b, std::size_t e) {
        Acc a;
        for (std::size_t r = b; r < e; ++r) {
            const double y = data[mem.voxels[r]];
            for (std::size_t i = 0; i < k; ++i) {
                const double m = mem.m[r * k + i];
                a.w[i] += m;
                a.wy[i] += m * y;
            }
        }
        return a;
    });

    MStepResult out{params, {}};
    for (std::size_t i = 0; i < k; ++i) {
        if (!(first.w[i] > 0.0)) {
            throw Error(ErrorKind::EmptyClass, "class " + std::to_string(i + 1) + " has zero total membership");
        }
        out.params.mu[i] = first.wy[i] / first.w[i];
    }

    const Acc second = chunked_sum<Acc>(rows, [&](std::size_t b, std::size_t e) {
        Acc a;
        for (std::size_t r = b; r < e; ++r) {
            const double y = data[mem.voxels[r]];
            for (std::size_t i = 0; i < k; ++i) {
                const double d = y - out.params.mu[i];
                a.wy[i] += mem.m[r * k + i] * d * d;
            }
        }
        return a;
    });

    const double range = vol.intensity_range();
    const double floor = params.sigma_floor_fraction * (range > 0.0 ? range : 1.0);
    for (std::size_t i = 0; i < k; ++i) {
        const double s = std::sqrt(second.wy[i] / first.w[i]);
        if (!(s >= floor)) {
            out.params.sigma[i] = floor;
            out.clamped_classes.push_back(static_cast<int>(i) + 1);
        } else {
            out.params.sigma[i] = s;
        }
    }
    return out;
}

std::vector<double> EmResult::accepted_log_posteriors() const {
    std::vector<double> out;
    for (const auto& it : trace)
        if (it.accepted) out.push_back(it.log_p_before);
    return out;
}

EmParams initial_params_from_labels(const LabelMap& labels, const Volume3D& vol, EmParams base) {
    check_same_dims(labels, vol);
    const auto k = static_cast<std::size_t>(base.k);
    std::vector<double> n(k, 0.0), s(k, 0.0), ss(k, 0.0);
    for (std::size_t v = 0; v < labels.labels.size(); ++v) {
        if (!labels.mask[v]) continue;
        const int l = labels.labels[v];
        if (l < 1 || l > base.k) continue;
        const double y = vol[v];
        n[l - 1] += 1.0;
        s[l - 1] += y;
    }
    base.mu.assign(k, 0.0);
    base.sigma.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        if (n[i] == 0.0) throw Error(ErrorKind::EmptyClass, "class " + std::to_string(i + 1) + " has no voxels in the initial labeling");
        base.mu[i] = s[i] / n[i];
    }
    for (std::size_t v = 0; v < labels.labels.size(); ++v) {
        if (!labels.mask[v]) continue;
        const int l = labels.labels[v];
        if (l < 1 || l > base.k) continue;
        const double d = vol[v] - base.mu[static_cast<std::size_t>(l - 1)];
        ss[static_cast<std::size_t>(l - 1)] += d * d;
    }
    const double range = vol.intensity_range();
    const double floor = base.sigma_floor_fraction * (range > 0.0 ? range : 1.0);
    for (std::size_t i = 0; i < k; ++i) base.sigma[i] = std::max(floor, std::sqrt(ss[i] / n[i]));
    return base;
}

EmResult em_segment(const Volume3D& vol, const LabelMap& init, const EmParams& params) {
    params.validate();
    check_same_dims(init, vol);
    init.validate(params.k);

    EmResult res;
    res.labels = init;
    res.params = params;
    res.label_params = params;
    bool have_memberships = false;

    int iterations = 0;
    while (true) {
        EmIteration it;
        it.log_p_before = log_posterior(res.labels, vol, res.params);
        LabelMap candidate = icm_update(res.labels, vol, res.params);
        it.log_p_after = log_posterior(candidate, vol, res.params);
        const double denom = std::abs(it.log_p_before);
        it.rel_change = denom > 0.0 ? std::abs(it.log_p_after - it.log_p_before) / denom
                                    : (it.log_p_after == it.log_p_before ? 0.0 : std::numeric_limits<double>::infinity());
        if (it.log_p_after < it.log_p_before) {
            // Keep the segmentation from before the failed pass.
            res.trace.push_back(it);
            res.stop = EmStop::PosteriorDecreased;
            break;
        }
        it.accepted = true;
        res.trace.push_back(it);
        res.labels = std::move(candidate);
        res.label_params = res.params;
        if (it.rel_change <= params.eps_em) {
            res.stop = EmStop::Converged;
            break;
        }

        res.memberships = e_step(res.labels, vol, res.params);
        have_memberships = true;
        auto m = m_step(res.memberships, vol, res.params);
        res.sigma_clamps += m.clamped_classes.size();
        res.params = std::move(m.params);

        if (++iterations >= params.n_em_max) {
            res.stop = EmStop::MaxIterations;
            break;
        }
    }
    if (!have_memberships) res.memberships = e_step(res.labels, vol, res.params);
    return res;
}

std::string to_string(EmStop stop) {
    switch (stop) {
        case EmStop::Converged: return "converged";
        case EmStop::PosteriorDecreased: return "posterior-decreased";
        case EmStop::MaxIterations: return "max-iterations";
    }
    return "unknown";
}

}  // namespace vascnet
