#ifndef MMDGM_TRAINER_HPP
#define MMDGM_TRAINER_HPP

#include "mmdgm/dataset.hpp"
#include "mmdgm/maxmargin.hpp"
#include "mmdgm/optimizer.hpp"
#include "mmdgm/variational.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mmdgm {

struct TrainConfig {
    double C = 0.0;            // hinge weight; 0 trains a plain VAE
    double sigma2_eta = 1e3;   // prior variance of the classifier weights
    int mc_samples = 1;        // L
    int batch_size = 100;      // m
    int epochs = 100;          // joint epochs (after pre-training)
    int pretrain_epochs = 0;   // unsupervised epochs with the hinge off
    int latent_dim = 50;       // K
    std::vector<int> hidden = {500, 500};
    Act act = Act::Softplus;
    FeatureMode feature_mode = FeatureMode::MeanZ;
    AdamConfig adam;
    LrSchedule lr; // lr.base_lr mirrors adam.base_lr at parse time
    std::uint64_t seed = 0;

    int total_epochs() const { return pretrain_epochs + epochs; }
};

// Everything a run owns: the generative net theta (the latent prior is the
// parameterless standard normal), recognition net phi, classifier mean
// lambda, per-group AdaM accumulators, and the epoch/seed needed to resume.
struct ModelState {
    DecoderParams theta;
    EncoderParams phi;
    ClassifierState cls;
    AdamState adam_theta;
    AdamState adam_phi;
    AdamState adam_lambda;
    int epoch = 0;
    std::uint64_t seed = 0;
};

struct Gradients {
    DecoderParams theta;
    EncoderParams phi;
    Matrix lambda;
};

struct EpochMetrics {
    int epoch = 0;
    double objective = 0.0;   // epoch mean of the mini-batch objective
    double bound_mean = 0.0;  // per-sample bound, frozen evaluation noise
    double train_error = 0.0;
    double lr = 0.0;
};

ModelState init_model(const TrainConfig& config, Index data_dim, int num_classes);

// Noise tensor for one batch: (L*m) x K, rows [l*m, (l+1)*m) hold draw l.
// Keyed by (seed, epoch, batch) so any step can be replayed in isolation.
Matrix batch_epsilon(const TrainConfig& config, std::uint64_t epoch, std::uint64_t batch,
                     Index m, Index latent_dim);

// The mini-batch objective estimate:
//   (N/m) sum_n bound_n + |lambda|^2/(2 sigma2) + (N C/m) sum_n hinge_n.
double minibatch_objective(const ModelState& state, const MiniBatch& batch, Index dataset_size,
                           const TrainConfig& config, const Matrix& eps);

// Exact gradient of minibatch_objective at the same frozen eps (subgradient
// at hinge kinks, using the loss-augmented winner).
Gradients minibatch_subgradient(const ModelState& state, const MiniBatch& batch,
                                Index dataset_size, const TrainConfig& config,
                                const Matrix& eps);

// Full run: init, pre-train with C forced to 0, then the joint loop.
ModelState train(const TrainConfig& config, const LabeledDataset& data,
                 std::vector<EpochMetrics>* metrics = nullptr);

// Continues a (possibly checkpointed) state up to config.total_epochs().
void train_continue(ModelState& state, const TrainConfig& config, const LabeledDataset& data,
                    std::vector<EpochMetrics>* metrics = nullptr);

double evaluate(const ModelState& state, const LabeledDataset& data);

// Per-sample bound over a dataset with the frozen evaluation noise stream.
double mean_bound(const ModelState& state, const TrainConfig& config,
                  const LabeledDataset& data);

// Ancestral samples: z from the standard normal prior, pixels as Bernoulli
// means sigmoid(decoder(z)).
Matrix generate(const ModelState& state, int n, const RngStream& rng);

void checkpoint_save(const ModelState& state, const std::string& path);
ModelState checkpoint_load(const std::string& path);

} // namespace mmdgm

#endif
