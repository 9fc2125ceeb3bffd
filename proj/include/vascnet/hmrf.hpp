#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vascnet/volume.hpp"

namespace vascnet {

/// Parameters of the k-class Gaussian HMRF model and of the EM/ICM loop.
struct EmParams {
    int k = 2;
    std::vector<double> mu;
    std::vector<double> sigma;
    double beta = 1.0;
    double eps_em = 1e-4;
    int n_icm = 10;
    int n_em_max = 4;
    /// Lower bound applied to sigma after every M-step, as a fraction of the
    /// volume's intensity range.
    double sigma_floor_fraction = 1e-6;

    void validate() const;
};

/// Per-voxel class memberships for masked voxels; row-major (voxel, class).
struct Memberships {
    int k = 2;
    std::vector<std::size_t> voxels;
    std::vector<double> m;

    double at(std::size_t row, int cls) const { return m[row * static_cast<std::size_t>(k) + static_cast<std::size_t>(cls)]; }
    std::size_t warnings = 0;
};

double gaussian_pdf(double y, double mu, double sigma);
double log_gaussian_pdf(double y, double mu, double sigma);

/// Masked 6-neighbors of `voxel` whose label differs from `cls`.
int prior_penalty(const LabelMap& labels, std::size_t voxel, int cls);

double log_posterior(const LabelMap& labels, const Volume3D& vol, const EmParams& params);

/// `n_icm` sequential sweeps in ascending linear-index order.
LabelMap icm_update(const LabelMap& labels, const Volume3D& vol, const EmParams& params);
/// Same as icm_update but reports the log-posterior after each sweep.
LabelMap icm_update(const LabelMap& labels, const Volume3D& vol, const EmParams& params,
                    std::vector<double>* per_sweep_log_posterior);

Memberships e_step(const LabelMap& labels, const Volume3D& vol, const EmParams& params);

struct MStepResult {
    EmParams params;
    std::vector<int> clamped_classes;
};
MStepResult m_step(const Memberships& memberships, const Volume3D& vol, const EmParams& params);

struct EmIteration {
    double log_p_before = 0.0;
    double log_p_after = 0.0;
    double rel_change = 0.0;
    bool accepted = false;
};

enum class EmStop { Converged, PosteriorDecreased, MaxIterations };

struct EmResult {
    LabelMap labels;
    Memberships memberships;
    /// Parameters after the last M-step.
    EmParams params;
    /// Parameters the returned labels were computed with.
    EmParams label_params;
    std::vector<EmIteration> trace;
    EmStop stop = EmStop::MaxIterations;
    std::size_t sigma_clamps = 0;

    /// Loop-top log-posteriors of the iterations that passed the decrease check.
    std::vector<double> accepted_log_posteriors() const;
};

/// Estimates initial per-class mean/std from a hard labeling.
EmParams initial_params_from_labels(const LabelMap& labels, const Volume3D& vol, EmParams base);

EmResult em_segment(const Volume3D& vol, const LabelMap& init, const EmParams& params);

std::string to_string(EmStop stop);

}  // namespace vascnet
