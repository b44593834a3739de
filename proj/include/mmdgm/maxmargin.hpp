#ifndef MMDGM_MAXMARGIN_HPP
#define MMDGM_MAXMARGIN_HPP

#include "mmdgm/networks.hpp"
#include "mmdgm/rng.hpp"

#include <vector>

namespace mmdgm {

enum class FeatureMode {
    MeanZ,        // posterior mean mu(x), the expectation features
    ConcatHidden, // concatenated trunk hidden activations
};

// Multiclass linear classifier weights. Row y is the class-y block lambda_y,
// the posterior mean of the class weight vector; prior_var is its Gaussian
// prior variance.
struct ClassifierState {
    Matrix lambda; // M x d
    double prior_var = 1.0;
    FeatureMode feature_mode = FeatureMode::MeanZ;

    int num_classes() const { return static_cast<int>(lambda.rows()); }
    Index feat_dim() const { return lambda.cols(); }
};

// Hinge evaluation at one sample. value == 0 iff the margin holds, in which
// case violating_label is the true label under the smallest-index tie-break.
struct MarginLoss {
    double value = 0.0;
    int violating_label = 0;
    bool active = false;
};

// Block-sparse joint feature vector: M blocks of size d, block y = feat.
Vector feature_map(int y, const Vector& feat, int M);

Index feature_dim(const EncoderParams& phi, FeatureMode mode);
Vector extract_features(const EncoderParams& phi, const Vector& x, FeatureMode mode);

// Batched extraction; fills `cache` for a later gradient pass.
Matrix extract_features_batch(const EncoderParams& phi, const Matrix& x, FeatureMode mode,
                              EncoderCache* cache = nullptr,
                              GaussianPosterior* post = nullptr);

// Backpropagates per-sample feature gradients (m x d) into encoder grads,
// reusing the forward cache from extract_features_batch.
void feature_backward(const EncoderParams& phi, const EncoderCache& cache, FeatureMode mode,
                      const Matrix& g_feat, EncoderParams& g_phi);

// argmax_y lambda_y . feat, ties toward the smaller label.
int predict(const ClassifierState& cls, const Vector& feat);

// argmax_y [ 1[y != y_true] + lambda_y . feat ], ties toward the smaller label.
int loss_augmented_predict(const ClassifierState& cls, const Vector& feat, int y_true);

MarginLoss hinge_loss(const ClassifierState& cls, const Vector& feat, int y_true);

// Subgradient of the hinge at this sample: +feat into row y_tilde, -feat
// into row y_true of g_lambda (accumulated), and g_feat = lambda_{y_tilde} -
// lambda_{y_true}. Both are zero when the hinge is inactive.
void hinge_subgrad(const ClassifierState& cls, const Vector& feat, int y_true,
                   Matrix& g_lambda, Vector& g_feat);

// Multiclass Pegasos on fixed features: step size 1/(reg*t), hinge
// subgradients on a random batch, then projection onto the ball of radius
// 1/sqrt(reg). Serves the two-stage baseline.
Matrix pegasos_train(const Matrix& features, const std::vector<int>& labels, int num_classes,
                     double reg, int iters, int batch, const RngStream& rng);

} // namespace mmdgm

#endif
