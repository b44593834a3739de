#include "mmdgm/maxmargin.hpp"

#include <cmath>
#include <limits>

namespace mmdgm {

Vector feature_map(int y, const Vector& feat, int M)
{
    if (y < 0 || y >= M)
        throw ParamError("feature_map: label " + std::to_string(y) + " out of range 0.." +
                         std::to_string(M - 1));
    Vector out = Vector::Zero(static_cast<Index>(M) * feat.size());
    out.segment(y * feat.size(), feat.size()) = feat;
    return out;
}

Index feature_dim(const EncoderParams& phi, FeatureMode mode)
{
    if (mode == FeatureMode::MeanZ)
        return phi.latent_dim();
    Index d = 0;
    for (const Layer& l : phi.trunk.layers)
        d += l.W.rows();
    return d;
}

Matrix extract_features_batch(const EncoderParams& phi, const Matrix& x, FeatureMode mode,
                              EncoderCache* cache, GaussianPosterior* post)
{
    EncoderCache local;
    EncoderCache& c = cache ? *cache : local;
    const GaussianPosterior p = encoder_forward(phi, x, &c);
    if (post)
        *post = p;

    if (mode == FeatureMode::MeanZ)
        return p.mu;

    Matrix feats(x.rows(), feature_dim(phi, mode));
    Index col = 0;
    for (const Matrix& h : c.trunk.post) {
        feats.middleCols(col, h.cols()) = h;
        col += h.cols();
    }
    return feats;
}

Vector extract_features(const EncoderParams& phi, const Vector& x, FeatureMode mode)
{
    return extract_features_batch(phi, x.transpose(), mode).row(0).transpose();
}

void feature_backward(const EncoderParams& phi, const EncoderCache& cache, FeatureMode mode,
                      const Matrix& g_feat, EncoderParams& g_phi)
{
    const Index m = cache.trunk_out.rows();
    if (mode == FeatureMode::MeanZ) {
        const Matrix zero_lv = Matrix::Zero(m, phi.latent_dim());
        encoder_backward(phi, cache, g_feat, zero_lv, g_phi);
        return;
    }

    // Split the concatenated gradient back onto each hidden activation.
    std::vector<Matrix> extra(phi.trunk.layers.size());
    Index col = 0;
    for (std::size_t li = 0; li < phi.trunk.layers.size(); ++li) {
        const Index width = phi.trunk.layers[li].W.rows();
        extra[li] = g_feat.middleCols(col, width);
        col += width;
    }
    const Matrix zero_mu = Matrix::Zero(m, phi.latent_dim());
    const Matrix zero_lv = Matrix::Zero(m, phi.latent_dim());
    encoder_backward(phi, cache, zero_mu, zero_lv, g_phi, &extra);
}

int predict(const ClassifierState& cls, const Vector& feat)
{
    int best = 0;
    double best_score = cls.lambda.row(0).dot(feat);
    for (int y = 1; y < cls.num_classes(); ++y) {
        const double s = cls.lambda.row(y).dot(feat);
        if (s > best_score) {
            best = y;
            best_score = s;
        }
    }
    return best;
}

int loss_augmented_predict(const ClassifierState& cls, const Vector& feat, int y_true)
{
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < cls.num_classes(); ++y) {
        const double s = (y == y_true ? 0.0 : 1.0) + cls.lambda.row(y).dot(feat);
        if (s > best_score) {
            best = y;
            best_score = s;
        }
    }
    return best;
}

MarginLoss hinge_loss(const ClassifierState& cls, const Vector& feat, int y_true)
{
    const int y_tilde = loss_augmented_predict(cls, feat, y_true);
    const double delta = (y_tilde == y_true) ? 0.0 : 1.0;
    const double value =
        delta + cls.lambda.row(y_tilde).dot(feat) - cls.lambda.row(y_true).dot(feat);
    // The y == y_true term of the max pins the value at >= 0; an exact tie
    // at 0 counts as inactive and reports the true label.
    if (value <= 0.0)
        return MarginLoss{0.0, y_true, false};
    return MarginLoss{value, y_tilde, y_tilde != y_true};
}

void hinge_subgrad(const ClassifierState& cls, const Vector& feat, int y_true,
                   Matrix& g_lambda, Vector& g_feat)
{
    const MarginLoss loss = hinge_loss(cls, feat, y_true);
    g_feat = Vector::Zero(cls.feat_dim());
    if (!loss.active)
        return;
    g_lambda.row(loss.violating_label) += feat.transpose();
    g_lambda.row(y_true) -= feat.transpose();
    g_feat = (cls.lambda.row(loss.violating_label) - cls.lambda.row(y_true)).transpose();
}

Matrix pegasos_train(const Matrix& features, const std::vector<int>& labels, int num_classes,
                     double reg, int iters, int batch, const RngStream& rng)
{
    if (reg <= 0.0)
        throw ParamError("pegasos_train: regularization must be positive");
    const Index n = features.rows();
    const Index d = features.cols();

    ClassifierState cls;
    cls.lambda = Matrix::Zero(num_classes, d);
    cls.prior_var = 1.0 / reg;

    const double radius = 1.0 / std::sqrt(reg);
    RngCursor cur(rng);
    Matrix g = Matrix::Zero(num_classes, d);
    Vector g_feat(d);

    for (int t = 1; t <= iters; ++t) {
        g.setZero();
        for (int b = 0; b < batch; ++b) {
            const Index i = static_cast<Index>(cur.uniform() * static_cast<double>(n));
            hinge_subgrad(cls, features.row(i).transpose(), labels[static_cast<std::size_t>(i)],
                          g, g_feat);
        }
        const double lr = 1.0 / (reg * t);
        cls.lambda -= lr * (reg * cls.lambda + g / batch);

        const double norm = cls.lambda.norm();
        if (norm > radius)
            cls.lambda *= radius / norm;
    }
    return cls.lambda;
}

} // namespace mmdgm
