#ifndef MMDGM_OPTIMIZER_HPP
#define MMDGM_OPTIMIZER_HPP

#include "mmdgm/networks.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mmdgm {

// Flat named view over one parameter tensor; the unit AdaM, checkpointing
// and finite-difference tooling all operate on.
struct ParamView {
    std::string name;
    double* data = nullptr;
    Index rows = 0;
    Index cols = 0;

    Index size() const { return rows * cols; }
};

std::vector<ParamView> param_views(MlpParams& p, const std::string& prefix);
std::vector<ParamView> param_views(EncoderParams& p, const std::string& prefix);
std::vector<ParamView> param_views(DecoderParams& p, const std::string& prefix);
ParamView param_view(Matrix& m, const std::string& name);

struct AdamConfig {
    double base_lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected first/second-moment accumulators, one pair per tensor in
// the view list the state was initialized with.
struct AdamState {
    std::uint64_t t = 0;
    std::vector<Array> m;
    std::vector<Array> v;
};

void adam_init(AdamState& state, const std::vector<ParamView>& params);

// One AdaM update in place:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
void adam_step(AdamState& state, std::vector<ParamView>& params,
               const std::vector<ParamView>& grads, const AdamConfig& cfg, double lr);

// Periodic decay: base_lr / decay_factor^floor(epoch / decay_every).
struct LrSchedule {
    double base_lr = 3e-4;
    double decay_factor = 3.0;
    int decay_every = 100;
};

double scheduled_lr(const LrSchedule& schedule, int epoch);

} // namespace mmdgm

#endif
