#include "mmdgm/imputation.hpp"

#include <algorithm>

namespace mmdgm {

ImputationTrace impute(const ModelState& state, const Vector& x_true, const BoolArray& mask,
                       int T, RngCursor& rng, ImputeInit init, bool posterior_mean)
{
    if (T < 1)
        throw ParamError("impute: at least one iteration required");
    if (mask.size() != x_true.size())
        throw ParamError("impute: mask length does not match image");
    if (mask.all())
        throw ParamError("impute: mask leaves no observed pixels");

    ImputationTrace trace;
    trace.mask = mask;

    Vector x = x_true;
    for (Index d = 0; d < x.size(); ++d) {
        if (!mask[d])
            continue;
        if (init == ImputeInit::Uniform01)
            x[d] = rng.uniform();
        else
            x[d] = std::clamp(0.5 + 0.5 * rng.normal(), 0.0, 1.0);
    }
    trace.iterates.push_back(x);
    trace.mse_per_iter.push_back(mask.any() ? impute_mse(x_true, x, mask) : 0.0);

    const Index K = state.phi.latent_dim();
    for (int t = 0; t < T; ++t) {
        const GaussianPosterior post = encoder_forward(state.phi, x.transpose());
        Matrix z;
        if (posterior_mean) {
            z = post.mu;
        } else {
            const Matrix eps = rng.normal_matrix(1, K);
            z = reparam_sample(post, eps);
        }
        const Matrix logits = decoder_forward(state.theta, z);
        for (Index d = 0; d < x.size(); ++d)
            if (mask[d])
                x[d] = sigmoid(logits(0, d));
        trace.iterates.push_back(x);
        trace.mse_per_iter.push_back(mask.any() ? impute_mse(x_true, x, mask) : 0.0);
    }
    return trace;
}

double impute_mse(const Vector& x_true, const Vector& x_imputed, const BoolArray& mask)
{
    if (x_true.size() != x_imputed.size() || mask.size() != x_true.size())
        throw ParamError("impute_mse: shape mismatch");
    Index count = 0;
    double sum = 0.0;
    for (Index d = 0; d < mask.size(); ++d) {
        if (!mask[d])
            continue;
        const double diff = x_true[d] - x_imputed[d];
        sum += diff * diff;
        ++count;
    }
    if (count == 0)
        throw ParamError("impute_mse: empty missing set");
    return sum / static_cast<double>(count);
}

double impute_mse_full(const Vector& x_true, const Vector& x_imputed)
{
    if (x_true.size() != x_imputed.size())
        throw ParamError("impute_mse_full: shape mismatch");
    return (x_true - x_imputed).squaredNorm() / static_cast<double>(x_true.size());
}

double classify_after_impute(const ModelState& state, const LabeledDataset& data,
                             const std::vector<BoolArray>& masks, int T, const RngStream& rng,
                             ImputeInit init)
{
    if (masks.size() != static_cast<std::size_t>(data.size()))
        throw ParamError("classify_after_impute: one mask per sample required");

    Index wrong = 0;
    for (Index n = 0; n < data.size(); ++n) {
        const BoolArray& mask = masks[static_cast<std::size_t>(n)];
        Vector x = data.images.row(n).transpose();
        if (mask.any()) {
            RngCursor cur(substream(rng, static_cast<std::uint64_t>(n)));
            const ImputationTrace trace = impute(state, x, mask, T, cur, init);
            x = trace.iterates.back();
        }
        const Vector feat = extract_features(state.phi, x, state.cls.feature_mode);
        if (predict(state.cls, feat) != data.labels[static_cast<std::size_t>(n)])
            ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(data.size());
}

} // namespace mmdgm
