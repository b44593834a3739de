#ifndef MMDGM_NETWORKS_HPP
#define MMDGM_NETWORKS_HPP

#include "mmdgm/mlp.hpp"

namespace mmdgm {

struct LinearHead {
    Matrix W; // out x in
    Vector b; // out
};

// Diagonal-Gaussian posterior parameters for a batch: row n holds
// mu(x_n) and log sigma^2(x_n).
struct GaussianPosterior {
    Matrix mu;      // m x K
    Matrix log_var; // m x K

    Index batch() const { return mu.rows(); }
    Index latent_dim() const { return mu.cols(); }
};

// Recognition network: shared trunk, then two linear heads for the
// posterior mean and log-variance.
struct EncoderParams {
    MlpParams trunk;
    LinearHead mu;
    LinearHead log_var;

    Index latent_dim() const { return mu.W.rows(); }
    Index input_dim() const { return trunk.in_dim(); }
};

// Generative network: trunk from latent code to hidden features, then a
// linear head producing per-pixel Bernoulli logits.
struct DecoderParams {
    MlpParams trunk;
    LinearHead logits;

    Index latent_dim() const { return trunk.in_dim(); }
    Index output_dim() const { return logits.W.rows(); }
};

struct EncoderCache {
    MlpCache trunk;
    Matrix trunk_out;
};

struct DecoderCache {
    MlpCache trunk;
    Matrix trunk_out;
};

EncoderParams make_encoder(Index data_dim, const std::vector<int>& hidden, Index latent_dim,
                           Act act, RngCursor& init);
DecoderParams make_decoder(Index latent_dim, const std::vector<int>& hidden, Index data_dim,
                           Act act, RngCursor& init);

EncoderParams zeros_like(const EncoderParams& p);
DecoderParams zeros_like(const DecoderParams& p);

GaussianPosterior encoder_forward(const EncoderParams& phi, const Matrix& x,
                                  EncoderCache* cache = nullptr);

// Backpropagates posterior-parameter gradients (and optionally extra
// gradients landing on each trunk hidden activation) into `grads`.
void encoder_backward(const EncoderParams& phi, const EncoderCache& cache,
                      const Matrix& d_mu, const Matrix& d_log_var, EncoderParams& grads,
                      const std::vector<Matrix>* extra_hidden_grads = nullptr);

Matrix decoder_forward(const DecoderParams& theta, const Matrix& z,
                       DecoderCache* cache = nullptr);

// Returns d/dz; accumulates parameter gradients into `grads`.
Matrix decoder_backward(const DecoderParams& theta, const DecoderCache& cache,
                        const Matrix& d_logits, DecoderParams& grads);

// Bernoulli log-likelihood sum_d [x log s(l) + (1-x) log(1-s(l))], computed
// as -sum_d [softplus(-l) + (1-x) l] so saturated logits stay finite.
double bernoulli_loglik(const Vector& x, const Vector& logits);
Vector bernoulli_loglik_rows(const Matrix& x, const Matrix& logits);
Vector bernoulli_loglik_grad(const Vector& x, const Vector& logits); // x - sigmoid(l)

} // namespace mmdgm

#endif
