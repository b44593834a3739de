#ifndef MMDGM_VARIATIONAL_HPP
#define MMDGM_VARIATIONAL_HPP

#include "mmdgm/networks.hpp"

namespace mmdgm {

// Per-sample upper bound on negative log-likelihood, split into its
// analytic KL part and the Monte Carlo reconstruction part.
// value == kl_part - recon_part, recon_part <= 0.
struct BoundEstimate {
    double value = 0.0;
    double kl_part = 0.0;
    double recon_part = 0.0;
    int samples_used = 0;
};

// z = mu + exp(0.5 log_var) .* eps, elementwise over matching shapes.
Matrix reparam_sample(const GaussianPosterior& post, const Matrix& eps);

// KL(N(mu, diag(exp(log_var))) || N(0, I)) per row:
// 0.5 * sum_k (mu_k^2 + exp(lv_k) - 1 - lv_k).
Vector kl_standard_gaussian_rows(const GaussianPosterior& post);
double kl_standard_gaussian(const Vector& mu, const Vector& log_var);

// d KL / d mu = mu;  d KL / d log_var = 0.5 (exp(log_var) - 1).
void kl_standard_gaussian_grad(const GaussianPosterior& post, Matrix& d_mu, Matrix& d_log_var);

// log N(z; mu, diag(exp(log_var))) and log N(z; 0, I), summed over dims.
double log_q_gaussian(const Vector& mu, const Vector& log_var, const Vector& z);
double log_prior_std_normal(const Vector& z);

// Rao-Blackwellized Monte Carlo bound: analytic KL plus a sampled
// reconstruction average over L reparameterized draws from the cursor.
BoundEstimate bound_estimate(const DecoderParams& theta, const EncoderParams& phi,
                             const Vector& x, int L, RngCursor& eps_rng);

// As above with caller-frozen noise; eps has one row per draw.
BoundEstimate bound_estimate_frozen(const DecoderParams& theta, const EncoderParams& phi,
                                    const Vector& x, const Matrix& eps);

// Exact gradients of BoundEstimate.value at frozen eps: the decoder path via
// the Monte Carlo reconstruction term, the encoder path via the analytic KL
// plus the pathwise chain z = mu + sigma .* eps. Accumulates into the grads.
void bound_gradients(const DecoderParams& theta, const EncoderParams& phi, const Vector& x,
                     const Matrix& eps, DecoderParams& g_theta, EncoderParams& g_phi);

// Score-function (likelihood-ratio) estimate of the phi-gradient of
// [bound + C * hinge] at fixed latent draws z_batch (one row per draw,
// sampled from q, not reparameterized). The multiplier on each score is
// -(log p(x,z_l) - log q(z_l) + C lambda' (f(y,z_l) - f(y_tilde,z_l))), so
// the estimator is oriented as a descent gradient of the minimized
// objective; its expectation matches the pathwise bound gradient at C=0.
// Kept as a cross-validation oracle; training uses bound_gradients.
EncoderParams score_function_grad_phi(const DecoderParams& theta, const EncoderParams& phi,
                                      const Matrix& lambda, double C, const Vector& x, int y,
                                      const Matrix& z_batch);

} // namespace mmdgm

#endif
