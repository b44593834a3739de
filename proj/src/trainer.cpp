#include "mmdgm/trainer.hpp"

#include <cmath>
#include <numeric>

namespace mmdgm {

namespace {

constexpr std::uint64_t kEvalNoiseKey = 0x6576616cULL; // frozen metric noise

struct BatchPass {
    double objective = 0.0;
    Vector bounds; // per sample
    Vector hinges; // per sample
};

// One fused forward/backward over a mini-batch. Gradients are accumulated
// only when `grads` is non-null; the returned objective is always exact for
// the given eps.
BatchPass batch_pass(const ModelState& state, const MiniBatch& batch, Index dataset_size,
                     double C, const TrainConfig& config, const Matrix& eps, Gradients* grads)
{
    const Index m = batch.size();
    const Index K = state.phi.latent_dim();
    const int L = config.mc_samples;
    if (eps.rows() != L * m || eps.cols() != K)
        throw ParamError("batch_pass: eps shape " + shape_str(eps) + " does not match L*m x K");

    const double n_over_m = static_cast<double>(dataset_size) / static_cast<double>(m);

    EncoderCache ecache;
    GaussianPosterior post;
    const Matrix feats = extract_features_batch(state.phi, batch.images, config.feature_mode,
                                                &ecache, &post);

    // --- hinge part ---
    BatchPass out;
    out.hinges = Vector::Zero(m);
    Matrix g_feat = Matrix::Zero(m, feats.cols());
    for (Index n = 0; n < m; ++n) {
        const Vector f = feats.row(n).transpose();
        const int y = batch.labels[static_cast<std::size_t>(n)];
        if (grads && C != 0.0) {
            Vector gf(feats.cols());
            hinge_subgrad(state.cls, f, y, grads->lambda, gf);
            g_feat.row(n) = gf.transpose();
        }
        out.hinges[n] = hinge_loss(state.cls, f, y).value;
    }

    // --- bound part ---
    const Eigen::ArrayXXd sigma = (0.5 * post.log_var.array()).exp(); // m x K

    GaussianPosterior rep;
    rep.mu = post.mu.replicate(L, 1);
    rep.log_var = post.log_var.replicate(L, 1);
    const Matrix z = reparam_sample(rep, eps);

    DecoderCache dcache;
    const Matrix logits = decoder_forward(state.theta, z, grads ? &dcache : nullptr);
    const Matrix x_rep = batch.images.replicate(L, 1);
    const Vector ll = bernoulli_loglik_rows(x_rep, logits);

    const Vector kl = kl_standard_gaussian_rows(post);
    Vector recon = Vector::Zero(m);
    for (int l = 0; l < L; ++l)
        recon += ll.segment(static_cast<Index>(l) * m, m);
    recon /= L;
    out.bounds = kl - recon;

    const double lambda_reg = state.cls.lambda.squaredNorm() / (2.0 * state.cls.prior_var);
    out.objective = n_over_m * out.bounds.sum() + lambda_reg + n_over_m * C * out.hinges.sum();

    if (!grads)
        return out;

    // Scale hinge rows of g_lambda by N C / m and add the Gaussian-prior pull.
    grads->lambda *= n_over_m * C;
    grads->lambda += state.cls.lambda / state.cls.prior_var;

    // Decoder gradients: d objective / d logits = -(N/m)(1/L)(x - sigmoid).
    const Matrix d_logits =
        (-n_over_m / L) *
        (x_rep - logits.unaryExpr([](double v) { return sigmoid(v); }));
    const Matrix dz = decoder_backward(state.theta, dcache, d_logits, grads->theta);

    // Encoder gradients: analytic KL plus the pathwise chain through z.
    Matrix d_mu;
    Matrix d_log_var;
    kl_standard_gaussian_grad(post, d_mu, d_log_var);
    d_mu *= n_over_m;
    d_log_var *= n_over_m;
    for (int l = 0; l < L; ++l) {
        const Index r0 = static_cast<Index>(l) * m;
        d_mu += dz.middleRows(r0, m);
        d_log_var.array() += dz.middleRows(r0, m).array() * 0.5 * sigma *
                             eps.middleRows(r0, m).array();
    }

    if (C != 0.0) {
        // Feature path of the hinge, backpropagated with the same cache.
        g_feat *= n_over_m * C;
        if (config.feature_mode == FeatureMode::MeanZ) {
            d_mu += g_feat;
            encoder_backward(state.phi, ecache, d_mu, d_log_var, grads->phi);
        } else {
            std::vector<Matrix> extra(state.phi.trunk.layers.size());
            Index col = 0;
            for (std::size_t li = 0; li < state.phi.trunk.layers.size(); ++li) {
                const Index width = state.phi.trunk.layers[li].W.rows();
                extra[li] = g_feat.middleCols(col, width);
                col += width;
            }
            encoder_backward(state.phi, ecache, d_mu, d_log_var, grads->phi, &extra);
        }
    } else {
        encoder_backward(state.phi, ecache, d_mu, d_log_var, grads->phi);
    }
    return out;
}

std::string first_nonfinite_group(ModelState& state)
{
    auto views = param_views(state.theta, "theta");
    auto phi_views = param_views(state.phi, "phi");
    views.insert(views.end(), phi_views.begin(), phi_views.end());
    views.push_back(param_view(state.cls.lambda, "lambda"));
    for (const ParamView& v : views) {
        Eigen::Map<const Array> a(v.data, v.size());
        if (!a.isFinite().all())
            return v.name;
    }
    return "(all parameter groups finite)";
}

} // namespace

ModelState init_model(const TrainConfig& config, Index data_dim, int num_classes)
{
    ModelState state;
    state.seed = config.seed;

    RngCursor init(RngStream{config.seed, StreamId::Init});
    state.phi = make_encoder(data_dim, config.hidden, config.latent_dim, config.act, init);
    state.theta = make_decoder(config.latent_dim, config.hidden, data_dim, config.act, init);

    state.cls.feature_mode = config.feature_mode;
    state.cls.prior_var = config.sigma2_eta;
    state.cls.lambda = Matrix::Zero(num_classes, feature_dim(state.phi, config.feature_mode));

    adam_init(state.adam_theta, param_views(state.theta, "theta"));
    adam_init(state.adam_phi, param_views(state.phi, "phi"));
    adam_init(state.adam_lambda, {param_view(state.cls.lambda, "lambda")});
    return state;
}

Matrix batch_epsilon(const TrainConfig& config, std::uint64_t epoch, std::uint64_t batch,
                     Index m, Index latent_dim)
{
    const RngStream s = substream(RngStream{config.seed, StreamId::Epsilon}, epoch, batch);
    return draw_standard_normal(s, 0, static_cast<Index>(config.mc_samples) * m, latent_dim);
}

double minibatch_objective(const ModelState& state, const MiniBatch& batch, Index dataset_size,
                           const TrainConfig& config, const Matrix& eps)
{
    return batch_pass(state, batch, dataset_size, config.C, config, eps, nullptr).objective;
}

Gradients minibatch_subgradient(const ModelState& state, const MiniBatch& batch,
                                Index dataset_size, const TrainConfig& config,
                                const Matrix& eps)
{
    Gradients grads;
    grads.theta = zeros_like(state.theta);
    grads.phi = zeros_like(state.phi);
    grads.lambda = Matrix::Zero(state.cls.lambda.rows(), state.cls.lambda.cols());
    batch_pass(state, batch, dataset_size, config.C, config, eps, &grads);
    return grads;
}

void train_continue(ModelState& state, const TrainConfig& config, const LabeledDataset& data,
                    std::vector<EpochMetrics>* metrics)
{
    if (data.size() < 1)
        throw ParamError("train: dataset is empty");

    const Index N = data.size();
    const RngStream mb_stream{config.seed, StreamId::Minibatch};

    auto theta_views = param_views(state.theta, "theta");
    auto phi_views = param_views(state.phi, "phi");
    std::vector<ParamView> lambda_views = {param_view(state.cls.lambda, "lambda")};

    for (int epoch = state.epoch; epoch < config.total_epochs(); ++epoch) {
        const bool joint = epoch >= config.pretrain_epochs;
        const double C = joint ? config.C : 0.0;
        const double lr = scheduled_lr(config.lr, epoch);

        TrainConfig step_cfg = config;
        step_cfg.C = C;

        double objective_sum = 0.0;
        const std::vector<MiniBatch> batches =
            minibatch_iter(data, std::min<Index>(config.batch_size, N), mb_stream,
                           static_cast<std::uint64_t>(epoch));
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const MiniBatch& batch = batches[b];
            const Matrix eps = batch_epsilon(config, static_cast<std::uint64_t>(epoch), b,
                                             batch.size(), config.latent_dim);

            Gradients grads;
            grads.theta = zeros_like(state.theta);
            grads.phi = zeros_like(state.phi);
            grads.lambda = Matrix::Zero(state.cls.lambda.rows(), state.cls.lambda.cols());
            const BatchPass pass =
                batch_pass(state, batch, N, C, step_cfg, eps, &grads);

            if (!std::isfinite(pass.objective))
                throw std::runtime_error(
                    "train: non-finite objective at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(b) +
                    "; first non-finite parameter group: " + first_nonfinite_group(state));
            objective_sum += pass.objective;

            auto g_theta_views = param_views(grads.theta, "theta");
            auto g_phi_views = param_views(grads.phi, "phi");
            std::vector<ParamView> g_lambda_views = {param_view(grads.lambda, "lambda")};
            adam_step(state.adam_theta, theta_views, g_theta_views, config.adam, lr);
            adam_step(state.adam_phi, phi_views, g_phi_views, config.adam, lr);
            adam_step(state.adam_lambda, lambda_views, g_lambda_views, config.adam, lr);
        }

        state.epoch = epoch + 1;
        if (metrics) {
            EpochMetrics em;
            em.epoch = epoch;
            em.objective = objective_sum / static_cast<double>(batches.size());
            em.bound_mean = mean_bound(state, config, data);
            em.train_error = evaluate(state, data);
            em.lr = lr;
            metrics->push_back(em);
        }
    }
}

ModelState train(const TrainConfig& config, const LabeledDataset& data,
                 std::vector<EpochMetrics>* metrics)
{
    ModelState state = init_model(config, data.dim(), data.num_classes);
    train_continue(state, config, data, metrics);
    return state;
}

double evaluate(const ModelState& state, const LabeledDataset& data)
{
    const Matrix feats =
        extract_features_batch(state.phi, data.images, state.cls.feature_mode);
    Index wrong = 0;
    for (Index n = 0; n < data.size(); ++n) {
        if (predict(state.cls, feats.row(n).transpose()) !=
            data.labels[static_cast<std::size_t>(n)])
            ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(data.size());
}

double mean_bound(const ModelState& state, const TrainConfig& config,
                  const LabeledDataset& data)
{
    const RngStream eval_stream =
        substream(RngStream{state.seed, StreamId::Epsilon}, kEvalNoiseKey);
    const Index N = data.size();
    const Index K = state.phi.latent_dim();
    const int L = config.mc_samples;

    double total = 0.0;
    const Index chunk = 256;
    for (Index start = 0; start < N; start += chunk) {
        const Index m = std::min(chunk, N - start);
        MiniBatch b;
        b.images = data.images.middleRows(start, m);
        b.labels.assign(data.labels.begin() + start, data.labels.begin() + start + m);

        const GaussianPosterior post = encoder_forward(state.phi, b.images);
        GaussianPosterior rep;
        rep.mu = post.mu.replicate(L, 1);
        rep.log_var = post.log_var.replicate(L, 1);

        Matrix eps(static_cast<Index>(L) * m, K);
        for (int l = 0; l < L; ++l)
            for (Index n = 0; n < m; ++n) {
                const std::uint64_t sample_key =
                    (static_cast<std::uint64_t>(start + n) * static_cast<std::uint64_t>(L) +
                     static_cast<std::uint64_t>(l)) *
                    static_cast<std::uint64_t>(K);
                for (Index k = 0; k < K; ++k)
                    eps(static_cast<Index>(l) * m + n, k) =
                        eval_stream.normal(sample_key + static_cast<std::uint64_t>(k));
            }

        const Matrix z = reparam_sample(rep, eps);
        const Matrix logits = decoder_forward(state.theta, z);
        const Vector ll = bernoulli_loglik_rows(b.images.replicate(L, 1), logits);
        const Vector kl = kl_standard_gaussian_rows(post);

        Vector recon = Vector::Zero(m);
        for (int l = 0; l < L; ++l)
            recon += ll.segment(static_cast<Index>(l) * m, m);
        recon /= L;
        total += (kl - recon).sum();
    }
    return total / static_cast<double>(N);
}

Matrix generate(const ModelState& state, int n, const RngStream& rng)
{
    const Matrix z = draw_standard_normal(rng, 0, n, state.phi.latent_dim());
    const Matrix logits = decoder_forward(state.theta, z);
    return logits.unaryExpr([](double v) { return sigmoid(v); });
}

} // namespace mmdgm
