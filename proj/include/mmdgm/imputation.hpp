#ifndef MMDGM_IMPUTATION_HPP
#define MMDGM_IMPUTATION_HPP

#include "mmdgm/trainer.hpp"

namespace mmdgm {

enum class ImputeInit {
    Uniform01,
    Gaussian, // N(0.5, 0.25), clamped to [0,1]
};

// Refinement sequence x^0..x^T plus the per-iterate MSE over the missing
// pixels. Observed pixels are identical in every iterate.
struct ImputationTrace {
    std::vector<Vector> iterates;
    BoolArray mask;
    std::vector<double> mse_per_iter;
};

// Iterative missing-value inference: initialize the missing entries, then
// alternate (1) sampling z from the recognition posterior of the current
// iterate and (2) overwriting only the missing entries with the decoder's
// Bernoulli means. `posterior_mean` swaps step (1) for z = mu, a
// variance-free debugging mode.
ImputationTrace impute(const ModelState& state, const Vector& x_true, const BoolArray& mask,
                       int T, RngCursor& rng, ImputeInit init = ImputeInit::Uniform01,
                       bool posterior_mean = false);

// Mean squared error over the missing pixels only.
double impute_mse(const Vector& x_true, const Vector& x_imputed, const BoolArray& mask);

// Secondary whole-image reading of the same error.
double impute_mse_full(const Vector& x_true, const Vector& x_imputed);

// Impute every sample for T iterations, then classify the final iterates.
double classify_after_impute(const ModelState& state, const LabeledDataset& data,
                             const std::vector<BoolArray>& masks, int T, const RngStream& rng,
                             ImputeInit init = ImputeInit::Uniform01);

} // namespace mmdgm

#endif
