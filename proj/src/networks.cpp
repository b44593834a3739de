#include "mmdgm/networks.hpp"

namespace mmdgm {

namespace {

LinearHead make_head(Index out, Index in, RngCursor& init)
{
    Layer l = make_layer(out, in, Act::Identity, init);
    return LinearHead{std::move(l.W), std::move(l.b)};
}

LinearHead zero_head(const LinearHead& h)
{
    return LinearHead{Matrix::Zero(h.W.rows(), h.W.cols()), Vector::Zero(h.b.size())};
}

Matrix head_forward(const LinearHead& h, const Matrix& x)
{
    Matrix out = matmul(x, Matrix(h.W.transpose()));
    out.rowwise() += h.b.transpose();
    return out;
}

// Accumulates head gradients; returns the gradient wrt the head input.
Matrix head_backward(const LinearHead& h, const Matrix& input, const Matrix& d_out,
                     LinearHead& grads)
{
    grads.W += d_out.transpose() * input;
    grads.b += d_out.colwise().sum().transpose();
    return d_out * h.W;
}

} // namespace

EncoderParams make_encoder(Index data_dim, const std::vector<int>& hidden, Index latent_dim,
                           Act act, RngCursor& init)
{
    EncoderParams p;
    p.trunk = make_mlp(data_dim, hidden, act, init);
    const Index h = hidden.empty() ? data_dim : hidden.back();
    p.mu = make_head(latent_dim, h, init);
    p.log_var = make_head(latent_dim, h, init);
    return p;
}

DecoderParams make_decoder(Index latent_dim, const std::vector<int>& hidden, Index data_dim,
                           Act act, RngCursor& init)
{
    DecoderParams p;
    p.trunk = make_mlp(latent_dim, hidden, act, init);
    const Index h = hidden.empty() ? latent_dim : hidden.back();
    p.logits = make_head(data_dim, h, init);
    return p;
}

EncoderParams zeros_like(const EncoderParams& p)
{
    return EncoderParams{zeros_like(p.trunk), zero_head(p.mu), zero_head(p.log_var)};
}

DecoderParams zeros_like(const DecoderParams& p)
{
    return DecoderParams{zeros_like(p.trunk), zero_head(p.logits)};
}

GaussianPosterior encoder_forward(const EncoderParams& phi, const Matrix& x,
                                  EncoderCache* cache)
{
    EncoderCache local;
    EncoderCache& c = cache ? *cache : local;
    c.trunk_out = mlp_forward(phi.trunk, x, &c.trunk);

    GaussianPosterior post;
    post.mu = head_forward(phi.mu, c.trunk_out);
    post.log_var = head_forward(phi.log_var, c.trunk_out);
    return post;
}

void encoder_backward(const EncoderParams& phi, const EncoderCache& cache,
                      const Matrix& d_mu, const Matrix& d_log_var, EncoderParams& grads,
                      const std::vector<Matrix>* extra_hidden_grads)
{
    Matrix d_trunk = Matrix::Zero(cache.trunk_out.rows(), cache.trunk_out.cols());
    if (d_mu.size() != 0)
        d_trunk += head_backward(phi.mu, cache.trunk_out, d_mu, grads.mu);
    if (d_log_var.size() != 0)
        d_trunk += head_backward(phi.log_var, cache.trunk_out, d_log_var, grads.log_var);
    mlp_backward(phi.trunk, cache.trunk, d_trunk, grads.trunk, extra_hidden_grads);
}

Matrix decoder_forward(const DecoderParams& theta, const Matrix& z, DecoderCache* cache)
{
    DecoderCache local;
    DecoderCache& c = cache ? *cache : local;
    c.trunk_out = mlp_forward(theta.trunk, z, &c.trunk);
    return head_forward(theta.logits, c.trunk_out);
}

Matrix decoder_backward(const DecoderParams& theta, const DecoderCache& cache,
                        const Matrix& d_logits, DecoderParams& grads)
{
    const Matrix d_trunk = head_backward(theta.logits, cache.trunk_out, d_logits, grads.logits);
    return mlp_backward(theta.trunk, cache.trunk, d_trunk, grads.trunk);
}

double bernoulli_loglik(const Vector& x, const Vector& logits)
{
    if (x.size() != logits.size())
        throw ShapeError("bernoulli_loglik: size mismatch");
    double ll = 0.0;
    for (Index d = 0; d < x.size(); ++d) {
        const double l = logits[d];
        ll -= softplus(-l) + (1.0 - x[d]) * l;
    }
    return ll;
}

Vector bernoulli_loglik_rows(const Matrix& x, const Matrix& logits)
{
    if (x.rows() != logits.rows() || x.cols() != logits.cols())
        throw ShapeError("bernoulli_loglik_rows: shape mismatch " + shape_str(x) + " vs " +
                         shape_str(logits));
    Vector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        double ll = 0.0;
        for (Index d = 0; d < x.cols(); ++d) {
            const double l = logits(i, d);
            ll -= softplus(-l) + (1.0 - x(i, d)) * l;
        }
        out[i] = ll;
    }
    return out;
}

Vector bernoulli_loglik_grad(const Vector& x, const Vector& logits)
{
    Vector g(x.size());
    for (Index d = 0; d < x.size(); ++d)
        g[d] = x[d] - sigmoid(logits[d]);
    return g;
}

} // namespace mmdgm
