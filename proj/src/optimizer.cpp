#include "mmdgm/optimizer.hpp"

#include <cmath>

namespace mmdgm {

ParamView param_view(Matrix& m, const std::string& name)
{
    return ParamView{name, m.data(), m.rows(), m.cols()};
}

namespace {

ParamView vec_view(Vector& v, const std::string& name)
{
    return ParamView{name, v.data(), v.size(), 1};
}

} // namespace

std::vector<ParamView> param_views(MlpParams& p, const std::string& prefix)
{
    std::vector<ParamView> views;
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        const std::string base = prefix + ".layer" + std::to_string(i);
        views.push_back(param_view(p.layers[i].W, base + ".W"));
        views.push_back(vec_view(p.layers[i].b, base + ".b"));
    }
    return views;
}

std::vector<ParamView> param_views(EncoderParams& p, const std::string& prefix)
{
    std::vector<ParamView> views = param_views(p.trunk, prefix + ".trunk");
    views.push_back(param_view(p.mu.W, prefix + ".mu.W"));
    views.push_back(vec_view(p.mu.b, prefix + ".mu.b"));
    views.push_back(param_view(p.log_var.W, prefix + ".log_var.W"));
    views.push_back(vec_view(p.log_var.b, prefix + ".log_var.b"));
    return views;
}

std::vector<ParamView> param_views(DecoderParams& p, const std::string& prefix)
{
    std::vector<ParamView> views = param_views(p.trunk, prefix + ".trunk");
    views.push_back(param_view(p.logits.W, prefix + ".logits.W"));
    views.push_back(vec_view(p.logits.b, prefix + ".logits.b"));
    return views;
}

void adam_init(AdamState& state, const std::vector<ParamView>& params)
{
    state.t = 0;
    state.m.clear();
    state.v.clear();
    for (const ParamView& p : params) {
        state.m.push_back(Array::Zero(p.size()));
        state.v.push_back(Array::Zero(p.size()));
    }
}

void adam_step(AdamState& state, std::vector<ParamView>& params,
               const std::vector<ParamView>& grads, const AdamConfig& cfg, double lr)
{
    if (params.size() != state.m.size() || grads.size() != params.size())
        throw ParamError("adam_step: state/parameter/gradient group counts differ");

    state.t += 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));

    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size())
            throw ParamError("adam_step: shape mismatch in group " + params[i].name);
        Eigen::Map<Array> p(params[i].data, params[i].size());
        Eigen::Map<const Array> g(grads[i].data, grads[i].size());
        Array& m = state.m[i];
        Array& v = state.v[i];

        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
        p -= lr * (m / c1) / ((v / c2).sqrt() + cfg.eps);
    }
}

double scheduled_lr(const LrSchedule& schedule, int epoch)
{
    if (epoch < 0)
        throw ParamError("scheduled_lr: epoch must be nonnegative");
    const int steps = schedule.decay_every > 0 ? epoch / schedule.decay_every : 0;
    return schedule.base_lr / std::pow(schedule.decay_factor, static_cast<double>(steps));
}

} // namespace mmdgm
