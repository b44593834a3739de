#ifndef MMDGM_CONFIG_HPP
#define MMDGM_CONFIG_HPP

#include "mmdgm/dataset.hpp"
#include "mmdgm/imputation.hpp"
#include "mmdgm/trainer.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mmdgm {

// Missing-value pattern, parsed from "rand_drop:p" or "rect:HxW".
struct MaskSpec {
    enum class Kind { None, RandDrop, Rect } kind = Kind::None;
    double drop_prob = 0.0;
    int rect_h = 0;
    int rect_w = 0;
};

// One run, fully resolved: file values overridden by CLI flags, everything
// else at its default. Writable back out as "key = value" lines that parse
// to the same configuration.
struct RunConfig {
    std::string command;

    // data
    std::string data = "synth"; // synth | idx
    std::string idx_train_images;
    std::string idx_train_labels;
    std::string idx_test_images;
    std::string idx_test_labels;
    int synth_classes = 4;
    int synth_side = 14;
    int synth_train_per_class = 200;
    int synth_test_per_class = 100;
    double synth_noise = 0.15;
    std::string binarize = "none"; // none | stochastic | threshold

    // model
    int latent_dim = 50;
    std::vector<int> hidden = {500, 500};
    std::string act = "softplus";            // softplus | tanh
    std::string feature_mode = "mean_z";     // mean_z | concat_hidden

    // training
    double C = 0.0;
    double sigma2_eta = 1e3;
    int mc_samples = 1;
    int batch_size = 100;
    int epochs = 100;
    int pretrain_epochs = -1; // -1: epochs/5 when C > 0, else 0
    double base_lr = 3e-4;
    int lr_decay_every = 100;
    double lr_decay_factor = 3.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    // io
    std::string out_dir = "run";
    std::string checkpoint;

    // generate
    int n_samples = 64;
    int grid_cols = 8;

    // impute
    std::string mask = "rect:7x7";
    int impute_iters = 100;
    std::string impute_init = "uniform01"; // uniform01 | gaussian
    int impute_count = 25;

    // csweep
    std::vector<double> csweep_values = {0, 1, 10, 100, 1000};

    // pegasos baseline
    double pegasos_reg = 1e-4;
    int pegasos_iters = 20000;
    int pegasos_batch = 100;
};

RunConfig parse_config(const std::string& file_text,
                       const std::vector<std::pair<std::string, std::string>>& cli_overrides);

// All keys, one per line, in parse-compatible form.
std::string resolved_config_text(const RunConfig& cfg);

TrainConfig to_train_config(const RunConfig& cfg);
BinarizeMode binarize_mode(const RunConfig& cfg);
ImputeInit impute_init_mode(const RunConfig& cfg);
MaskSpec parse_mask_spec(const std::string& text);

} // namespace mmdgm

#endif
