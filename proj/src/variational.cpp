#include "mmdgm/variational.hpp"

#include "mmdgm/maxmargin.hpp"

#include <cmath>

namespace mmdgm {

Matrix reparam_sample(const GaussianPosterior& post, const Matrix& eps)
{
    if (eps.rows() != post.mu.rows() || eps.cols() != post.mu.cols())
        throw ShapeError("reparam_sample: eps " + shape_str(eps) + " vs posterior " +
                         shape_str(post.mu));
    return post.mu.array() + (0.5 * post.log_var.array()).exp() * eps.array();
}

Vector kl_standard_gaussian_rows(const GaussianPosterior& post)
{
    const auto mu = post.mu.array();
    const auto lv = post.log_var.array();
    return (0.5 * (mu.square() + lv.exp() - 1.0 - lv).rowwise().sum()).matrix();
}

double kl_standard_gaussian(const Vector& mu, const Vector& log_var)
{
    const auto m = mu.array();
    const auto lv = log_var.array();
    return 0.5 * (m.square() + lv.exp() - 1.0 - lv).sum();
}

void kl_standard_gaussian_grad(const GaussianPosterior& post, Matrix& d_mu, Matrix& d_log_var)
{
    d_mu = post.mu;
    d_log_var = (0.5 * (post.log_var.array().exp() - 1.0)).matrix();
}

double log_q_gaussian(const Vector& mu, const Vector& log_var, const Vector& z)
{
    double lq = 0.0;
    for (Index k = 0; k < z.size(); ++k) {
        const double diff = z[k] - mu[k];
        lq += -0.5 * std::log(2.0 * M_PI) - 0.5 * log_var[k] -
              0.5 * diff * diff / std::exp(log_var[k]);
    }
    return lq;
}

double log_prior_std_normal(const Vector& z)
{
    return -0.5 * static_cast<double>(z.size()) * std::log(2.0 * M_PI) -
           0.5 * z.squaredNorm();
}

BoundEstimate bound_estimate_frozen(const DecoderParams& theta, const EncoderParams& phi,
                                    const Vector& x, const Matrix& eps)
{
    const int L = static_cast<int>(eps.rows());
    if (L < 1)
        throw ParamError("bound_estimate: at least one Monte Carlo draw required");

    const Matrix x_row = x.transpose();
    const GaussianPosterior post = encoder_forward(phi, x_row);

    // Broadcast the single posterior row over the L draws.
    GaussianPosterior rep;
    rep.mu = post.mu.replicate(L, 1);
    rep.log_var = post.log_var.replicate(L, 1);
    const Matrix z = reparam_sample(rep, eps);

    const Matrix logits = decoder_forward(theta, z);
    const Vector ll = bernoulli_loglik_rows(x_row.replicate(L, 1), logits);

    BoundEstimate est;
    est.kl_part = kl_standard_gaussian_rows(post)[0];
    est.recon_part = ll.mean();
    est.value = est.kl_part - est.recon_part;
    est.samples_used = L;
    return est;
}

BoundEstimate bound_estimate(const DecoderParams& theta, const EncoderParams& phi,
                             const Vector& x, int L, RngCursor& eps_rng)
{
    return bound_estimate_frozen(theta, phi, x, eps_rng.normal_matrix(L, phi.latent_dim()));
}

void bound_gradients(const DecoderParams& theta, const EncoderParams& phi, const Vector& x,
                     const Matrix& eps, DecoderParams& g_theta, EncoderParams& g_phi)
{
    const int L = static_cast<int>(eps.rows());
    const Matrix x_row = x.transpose();

    EncoderCache ecache;
    const GaussianPosterior post = encoder_forward(phi, x_row, &ecache);
    const Eigen::ArrayXXd sigma = (0.5 * post.log_var.array()).exp(); // 1 x K

    GaussianPosterior rep;
    rep.mu = post.mu.replicate(L, 1);
    rep.log_var = post.log_var.replicate(L, 1);
    const Matrix z = reparam_sample(rep, eps);

    DecoderCache dcache;
    const Matrix logits = decoder_forward(theta, z, &dcache);

    // Reconstruction term enters the bound negatively, averaged over draws.
    const Matrix d_logits =
        (-1.0 / L) * (x_row.replicate(L, 1) - logits.unaryExpr([](double l) { return sigmoid(l); }));
    const Matrix dz = decoder_backward(theta, dcache, d_logits, g_theta);

    Matrix d_mu;
    Matrix d_log_var;
    kl_standard_gaussian_grad(post, d_mu, d_log_var);
    d_mu += dz.colwise().sum();
    for (int l = 0; l < L; ++l)
        d_log_var.array() += dz.row(l).array() * 0.5 * sigma * eps.row(l).array();

    encoder_backward(phi, ecache, d_mu, d_log_var, g_phi);
}

EncoderParams score_function_grad_phi(const DecoderParams& theta, const EncoderParams& phi,
                                      const Matrix& lambda, double C, const Vector& x, int y,
                                      const Matrix& z_batch)
{
    const int L = static_cast<int>(z_batch.rows());
    const Matrix x_row = x.transpose();

    EncoderCache ecache;
    const GaussianPosterior post = encoder_forward(phi, x_row, &ecache);
    const Vector mu = post.mu.row(0).transpose();
    const Vector lv = post.log_var.row(0).transpose();
    const Array var = lv.array().exp();

    // Loss-augmented label from the Monte Carlo feature average; the
    // classifier score is linear, so the mean feature carries the argmax.
    int y_tilde = y;
    if (C != 0.0) {
        const Vector feat_bar = z_batch.colwise().mean().transpose();
        ClassifierState cls{lambda, 1.0, FeatureMode::MeanZ};
        y_tilde = loss_augmented_predict(cls, feat_bar, y);
    }

    const Matrix logits = decoder_forward(theta, z_batch);

    Matrix d_mu = Matrix::Zero(1, mu.size());
    Matrix d_lv = Matrix::Zero(1, mu.size());
    for (int l = 0; l < L; ++l) {
        const Vector z = z_batch.row(l).transpose();
        const double log_p = log_prior_std_normal(z) + bernoulli_loglik(x, logits.row(l).transpose());
        const double log_q = log_q_gaussian(mu, lv, z);

        double hinge_term = 0.0;
        if (C != 0.0 && y_tilde != y)
            hinge_term = (lambda.row(y) - lambda.row(y_tilde)).dot(z);

        // Descent orientation of the minimized objective.
        const double mult = (log_q - log_p - C * hinge_term) / L;

        const Array diff = (z - mu).array();
        d_mu.row(0).array() += mult * (diff / var).transpose();
        d_lv.row(0).array() += mult * (-0.5 + 0.5 * diff.square() / var).transpose();
    }

    EncoderParams g_phi = zeros_like(phi);
    encoder_backward(phi, ecache, d_mu, d_lv, g_phi);
    return g_phi;
}

} // namespace mmdgm
