#ifndef MMDGM_MLP_HPP
#define MMDGM_MLP_HPP

#include "mmdgm/math.hpp"
#include "mmdgm/rng.hpp"
#include "mmdgm/types.hpp"

#include <vector>

namespace mmdgm {

// Batch convention throughout: rows are samples. A layer maps m x in to
// m x out via act(x * W^T + b).
struct Layer {
    Matrix W; // out x in
    Vector b; // out
    Act act = Act::Identity;
};

struct MlpParams {
    std::vector<Layer> layers;

    Index in_dim() const { return layers.empty() ? 0 : layers.front().W.cols(); }
    Index out_dim() const { return layers.empty() ? 0 : layers.back().W.rows(); }
};

struct MlpCache {
    Matrix input;
    std::vector<Matrix> pre;  // pre-activation per layer
    std::vector<Matrix> post; // post-activation per layer
};

// Glorot-style uniform(-a, a) with a = sqrt(6/(in+out)); biases zero.
Layer make_layer(Index out, Index in, Act act, RngCursor& init);
MlpParams make_mlp(Index in, const std::vector<int>& hidden, Act act, RngCursor& init);

MlpParams zeros_like(const MlpParams& p);

Matrix mlp_forward(const MlpParams& params, const Matrix& x, MlpCache* cache = nullptr);

// Accumulates parameter gradients of sum(output .* grad_out) into `grads`
// and returns the input gradient. `extra_post_grads`, when given, adds a
// gradient arriving directly at each layer's post-activation (used when
// hidden activations are consumed as classifier features).
Matrix mlp_backward(const MlpParams& params, const MlpCache& cache, const Matrix& grad_out,
                    MlpParams& grads,
                    const std::vector<Matrix>* extra_post_grads = nullptr);

} // namespace mmdgm

#endif
