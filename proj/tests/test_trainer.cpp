#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmdgm/trainer.hpp"
#include "testutil.hpp"

#include <cstdio>
#include <fstream>

using namespace mmdgm;

namespace {

TrainConfig toy_config()
{
    TrainConfig cfg;
    cfg.C = 2.0;
    cfg.sigma2_eta = 4.0;
    cfg.mc_samples = 2;
    cfg.batch_size = 4;
    cfg.latent_dim = 3;
    cfg.hidden = {5};
    cfg.seed = 77;
    return cfg;
}

MiniBatch toy_batch(Index m, Index D, int M, std::uint64_t seed)
{
    RngCursor cur(RngStream{seed, StreamId::Init});
    MiniBatch b;
    b.images = (cur.normal_matrix(m, D).array() * 0.25 + 0.5).cwiseMax(0.0).cwiseMin(1.0);
    b.labels.resize(std::size_t(m));
    b.indices.resize(std::size_t(m));
    for (Index i = 0; i < m; ++i) {
        b.labels[std::size_t(i)] = int(cur.uniform() * M);
        b.indices[std::size_t(i)] = i;
    }
    return b;
}

ModelState toy_state(const TrainConfig& cfg, Index D, int M, bool nonzero_lambda)
{
    ModelState state = init_model(cfg, D, M);
    if (nonzero_lambda) {
        RngCursor cur(RngStream{cfg.seed + 1, StreamId::Init});
        state.cls.lambda = 0.7 * cur.normal_matrix(M, feature_dim(state.phi, cfg.feature_mode));
    }
    return state;
}

std::vector<unsigned char> slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

LabeledDataset toy_train_set()
{
    return synth_toy(RngStream{500, StreamId::Init}, 100, 2, 8, 0.1);
}

} // namespace

TEST_CASE("objective term structure")
{
    const Index D = 8;
    const int M = 3;
    TrainConfig cfg = toy_config();
    const MiniBatch batch = toy_batch(4, D, M, 3);
    const Index N = 40;
    const Matrix eps = batch_epsilon(cfg, 0, 0, 4, cfg.latent_dim);

    ModelState state = toy_state(cfg, D, M, false); // lambda = 0

    TrainConfig c0 = cfg;
    c0.C = 0.0;
    TrainConfig c1 = cfg;
    c1.C = 1.0;

    const double obj0 = minibatch_objective(state, batch, N, c0, eps);
    const double obj1 = minibatch_objective(state, batch, N, c1, eps);
    // With lambda = 0 every per-sample hinge is exactly 1.
    CHECK(obj1 - obj0 == doctest::Approx(double(N)).epsilon(1e-12));

    // C=0, lambda=0: the pure VA objective, no regularizer contribution.
    ModelState with_lambda = toy_state(cfg, D, M, true);
    const double reg = with_lambda.cls.lambda.squaredNorm() / (2.0 * cfg.sigma2_eta);
    TrainConfig c0b = cfg;
    c0b.C = 0.0;
    with_lambda.theta = state.theta;
    with_lambda.phi = state.phi;
    CHECK(minibatch_objective(with_lambda, batch, N, c0b, eps) ==
          doctest::Approx(obj0 + reg).epsilon(1e-12));
}

TEST_CASE("objective matches an independent per-sample recomputation")
{
    const Index D = 8;
    const int M = 3;
    TrainConfig cfg = toy_config();
    const MiniBatch batch = toy_batch(4, D, M, 5);
    const Index N = 100;
    const Matrix eps = batch_epsilon(cfg, 2, 1, 4, cfg.latent_dim);

    const ModelState state = toy_state(cfg, D, M, true);

    // From-scratch summation through the single-sample public surface.
    const double n_over_m = double(N) / 4.0;
    double bounds = 0.0;
    double hinges = 0.0;
    for (Index n = 0; n < 4; ++n) {
        Matrix eps_n(cfg.mc_samples, cfg.latent_dim);
        for (int l = 0; l < cfg.mc_samples; ++l)
            eps_n.row(l) = eps.row(l * 4 + n);
        bounds += bound_estimate_frozen(state.theta, state.phi,
                                        batch.images.row(n).transpose(), eps_n)
                      .value;
        const Vector f = extract_features(state.phi, batch.images.row(n).transpose(),
                                          cfg.feature_mode);
        hinges += hinge_loss(state.cls, f, batch.labels[std::size_t(n)]).value;
    }
    const double oracle = n_over_m * bounds +
                          state.cls.lambda.squaredNorm() / (2.0 * cfg.sigma2_eta) +
                          n_over_m * cfg.C * hinges;

    CHECK(minibatch_objective(state, batch, N, cfg, eps) ==
          doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("subgradient matches finite differences over every parameter group")
{
    const Index D = 8;
    const int M = 3;
    const Index N = 64;

    for (FeatureMode mode : {FeatureMode::MeanZ, FeatureMode::ConcatHidden}) {
        TrainConfig cfg = toy_config();
        cfg.feature_mode = mode;
        const MiniBatch batch = toy_batch(4, D, M, 11);
        const Matrix eps = batch_epsilon(cfg, 1, 0, 4, cfg.latent_dim);

        ModelState state = toy_state(cfg, D, M, true);
        state.cls.feature_mode = mode;

        const Gradients grads = minibatch_subgradient(state, batch, N, cfg, eps);
        auto objective = [&]() { return minibatch_objective(state, batch, N, cfg, eps); };

        auto theta_views = param_views(state.theta, "theta");
        const auto fd_theta = testutil::fd_gradients(theta_views, objective);
        Gradients& g = const_cast<Gradients&>(grads);
        CHECK(testutil::max_grad_rel_err(param_views(g.theta, "g"), fd_theta, 1e-6) <= 1e-5);

        auto phi_views = param_views(state.phi, "phi");
        const auto fd_phi = testutil::fd_gradients(phi_views, objective);
        CHECK(testutil::max_grad_rel_err(param_views(g.phi, "g"), fd_phi, 1e-6) <= 1e-5);

        std::vector<ParamView> lambda_views = {param_view(state.cls.lambda, "lambda")};
        const auto fd_lambda = testutil::fd_gradients(lambda_views, objective);
        CHECK(testutil::max_grad_rel_err({param_view(g.lambda, "g")}, fd_lambda, 1e-6) <= 1e-5);
    }
}

TEST_CASE("degenerate subgradient cases")
{
    const Index D = 8;
    const int M = 3;
    TrainConfig cfg = toy_config();
    const MiniBatch batch = toy_batch(4, D, M, 13);
    const Matrix eps = batch_epsilon(cfg, 0, 0, 4, cfg.latent_dim);

    // C = 0: the lambda gradient is exactly the prior pull.
    ModelState state = toy_state(cfg, D, M, true);
    TrainConfig c0 = cfg;
    c0.C = 0.0;
    const Gradients g0 = minibatch_subgradient(state, batch, 64, c0, eps);
    CHECK((g0.lambda - state.cls.lambda / cfg.sigma2_eta).cwiseAbs().maxCoeff() <= 1e-15);

    // All hinges inactive: the phi gradient equals the pure bound gradient.
    // Labels are set to the argmax under a random lambda, then lambda is
    // scaled until each winning gap clears the unit margin.
    ModelState sep = toy_state(cfg, D, M, true);
    const Matrix feats = extract_features_batch(sep.phi, batch.images, cfg.feature_mode);
    MiniBatch relabeled = batch;
    double min_gap = 1e300;
    for (Index n = 0; n < 4; ++n) {
        const Vector f = feats.row(n).transpose();
        const int top = predict(sep.cls, f);
        relabeled.labels[std::size_t(n)] = top;
        double second = -1e300;
        for (int y = 0; y < M; ++y)
            if (y != top)
                second = std::max(second, sep.cls.lambda.row(y).dot(f));
        min_gap = std::min(min_gap, sep.cls.lambda.row(top).dot(f) - second);
    }
    REQUIRE(min_gap > 0.0);
    sep.cls.lambda *= 1.5 / min_gap;

    bool all_inactive = true;
    for (Index n = 0; n < 4; ++n)
        all_inactive = all_inactive &&
                       !hinge_loss(sep.cls, feats.row(n).transpose(),
                                   relabeled.labels[std::size_t(n)])
                            .active;
    if (all_inactive) {
        const Gradients g_joint = minibatch_subgradient(sep, relabeled, 64, cfg, eps);
        TrainConfig cfg0 = cfg;
        cfg0.C = 0.0;
        const Gradients g_bound = minibatch_subgradient(sep, relabeled, 64, cfg0, eps);
        Gradients& a = const_cast<Gradients&>(g_joint);
        Gradients& b = const_cast<Gradients&>(g_bound);
        auto av = param_views(a.phi, "a");
        auto bv = param_views(b.phi, "b");
        for (std::size_t i = 0; i < av.size(); ++i) {
            Eigen::Map<const Array> x(av[i].data, av[i].size());
            Eigen::Map<const Array> y(bv[i].data, bv[i].size());
            CHECK((x - y).abs().maxCoeff() <= 1e-12);
        }
    } else {
        FAIL("constructed margins failed to deactivate every hinge");
    }
}

TEST_CASE("training on the toy set separates it and shrinks the objective")
{
    const LabeledDataset data = toy_train_set(); // M=2, D=64, N=200

    TrainConfig cfg;
    cfg.C = 10.0;
    cfg.sigma2_eta = 1e3;
    cfg.batch_size = 50;
    cfg.epochs = 50;
    cfg.pretrain_epochs = 0;
    cfg.latent_dim = 8;
    cfg.hidden = {32};
    cfg.adam.base_lr = 3e-3;
    cfg.lr.base_lr = 3e-3;
    cfg.seed = 9;

    std::vector<EpochMetrics> metrics;
    const ModelState state = train(cfg, data, &metrics);
    REQUIRE(metrics.size() == 50);

    CHECK(metrics.back().train_error < 0.05);
    CHECK(metrics.back().objective <= 0.7 * metrics.front().objective);
    CHECK(evaluate(state, data) == doctest::Approx(metrics.back().train_error));
}

TEST_CASE("lambda decays toward zero when the hinge is off")
{
    const LabeledDataset data = synth_toy(RngStream{501, StreamId::Init}, 20, 2, 8, 0.1);

    TrainConfig cfg;
    cfg.C = 0.0;
    cfg.sigma2_eta = 10.0;
    cfg.batch_size = 20;
    cfg.epochs = 0;
    cfg.pretrain_epochs = 0;
    cfg.latent_dim = 4;
    cfg.hidden = {8};
    cfg.seed = 10;

    ModelState state = init_model(cfg, data.dim(), data.num_classes);
    state.cls.lambda.setConstant(0.5);

    double prev = state.cls.lambda.norm();
    for (int e = 1; e <= 5; ++e) {
        cfg.epochs = e;
        train_continue(state, cfg, data);
        const double now = state.cls.lambda.norm();
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("same seeds give bit-identical runs; checkpoints round-trip")
{
    const LabeledDataset data = synth_toy(RngStream{502, StreamId::Init}, 15, 2, 8, 0.1);

    TrainConfig cfg;
    cfg.C = 3.0;
    cfg.batch_size = 10;
    cfg.epochs = 6;
    cfg.pretrain_epochs = 2;
    cfg.latent_dim = 4;
    cfg.hidden = {8};
    cfg.seed = 11;

    const ModelState a = train(cfg, data);
    const ModelState b = train(cfg, data);

    const std::string f1 = testutil::temp_path("ck_a.ckpt");
    const std::string f2 = testutil::temp_path("ck_b.ckpt");
    checkpoint_save(a, f1);
    checkpoint_save(b, f2);
    CHECK(slurp(f1) == slurp(f2));

    // save -> load -> save is byte identical.
    const ModelState loaded = checkpoint_load(f1);
    const std::string f3 = testutil::temp_path("ck_c.ckpt");
    checkpoint_save(loaded, f3);
    CHECK(slurp(f1) == slurp(f3));

    // Split-and-resume equals straight-through, bit for bit.
    TrainConfig half = cfg;
    half.epochs = 1; // pretrain 2 + joint 1 = 3 epochs, then resume to 8
    ModelState split = train(half, data);
    const std::string f4 = testutil::temp_path("ck_d.ckpt");
    checkpoint_save(split, f4);
    ModelState resumed = checkpoint_load(f4);
    train_continue(resumed, cfg, data);
    const std::string f5 = testutil::temp_path("ck_e.ckpt");
    checkpoint_save(resumed, f5);
    CHECK(slurp(f1) == slurp(f5));

    // Truncation is reported as corruption.
    const auto bytes = slurp(f1);
    std::ofstream trunc(testutil::temp_path("ck_t.ckpt"), std::ios::binary);
    trunc.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size() / 2));
    trunc.close();
    CHECK_THROWS_AS(checkpoint_load(testutil::temp_path("ck_t.ckpt")), DataError);
    CHECK_THROWS_AS(checkpoint_load("does_not_exist.ckpt"), IoError);

    for (const char* p : {"ck_a.ckpt", "ck_b.ckpt", "ck_c.ckpt", "ck_d.ckpt", "ck_e.ckpt",
                          "ck_t.ckpt"})
        std::remove(testutil::temp_path(p).c_str());
}

TEST_CASE("evaluate with zero weights predicts class 0 everywhere")
{
    const LabeledDataset data = synth_toy(RngStream{503, StreamId::Init}, 10, 3, 8, 0.1);
    TrainConfig cfg;
    cfg.latent_dim = 4;
    cfg.hidden = {8};
    cfg.seed = 12;
    ModelState state = init_model(cfg, data.dim(), data.num_classes);
    state.cls.lambda.setZero();

    int class0 = 0;
    for (int y : data.labels)
        class0 += (y == 0);
    const double err = evaluate(state, data);
    CHECK(err == doctest::Approx(1.0 - double(class0) / double(data.size())));
    CHECK(err >= 0.0);
    CHECK(err <= 1.0);
}

TEST_CASE("generation produces Bernoulli means in the open unit interval")
{
    TrainConfig cfg;
    cfg.latent_dim = 3;
    cfg.hidden = {6};
    cfg.seed = 13;
    ModelState state = init_model(cfg, 16, 2);

    const RngStream gen{13, StreamId::Generate};
    const Matrix a = generate(state, 5, gen);
    const Matrix b = generate(state, 5, gen);
    CHECK((a - b).norm() == 0.0);
    CHECK((a.array() > 0.0).all());
    CHECK((a.array() < 1.0).all());

    for (Layer& l : state.theta.trunk.layers)
        l.W.setZero();
    state.theta.logits.W.setZero();
    state.theta.logits.b.setZero();
    const Matrix c = generate(state, 3, gen);
    CHECK((c.array() == 0.5).all());
}

TEST_CASE("with the hinge off the epoch-mean bound decreases over early epochs")
{
    const LabeledDataset data = synth_toy(RngStream{504, StreamId::Init}, 30, 2, 8, 0.1);

    TrainConfig cfg;
    cfg.C = 0.0;
    cfg.batch_size = 30;
    cfg.epochs = 10;
    cfg.pretrain_epochs = 0;
    cfg.latent_dim = 4;
    cfg.hidden = {16};
    cfg.seed = 14;

    std::vector<EpochMetrics> metrics;
    train(cfg, data, &metrics);
    REQUIRE(metrics.size() == 10);
    for (std::size_t e = 1; e < metrics.size(); ++e)
        CHECK(metrics[e].bound_mean <= metrics[e - 1].bound_mean * 1.01);
}

TEST_CASE("lambda stays bounded and the hinge decreases under lambda-only training")
{
    const LabeledDataset data = toy_train_set();

    TrainConfig cfg;
    cfg.C = 0.0;
    cfg.batch_size = 50;
    cfg.epochs = 20;
    cfg.pretrain_epochs = 0;
    cfg.latent_dim = 8;
    cfg.hidden = {32};
    cfg.adam.base_lr = 3e-3;
    cfg.lr.base_lr = 3e-3;
    cfg.seed = 15;

    ModelState state = train(cfg, data);
    CHECK(state.cls.lambda.norm() <= 1e3); // no divergence

    // Freeze theta/phi; train lambda alone on hinge + prior.
    const Matrix feats =
        extract_features_batch(state.phi, data.images, cfg.feature_mode);
    auto total_hinge = [&]() {
        double h = 0.0;
        for (Index n = 0; n < data.size(); ++n)
            h += hinge_loss(state.cls, feats.row(n).transpose(),
                            data.labels[std::size_t(n)])
                     .value;
        return h;
    };

    const double before = total_hinge();
    AdamState adam;
    std::vector<ParamView> lv = {param_view(state.cls.lambda, "lambda")};
    adam_init(adam, lv);
    for (int step = 0; step < 300; ++step) {
        Matrix g = state.cls.lambda / cfg.sigma2_eta;
        Vector gf;
        for (Index n = 0; n < data.size(); ++n)
            hinge_subgrad(state.cls, feats.row(n).transpose(), data.labels[std::size_t(n)],
                          g, gf);
        std::vector<ParamView> gv = {param_view(g, "g")};
        adam_step(adam, lv, gv, AdamConfig{}, 1e-2);
    }
    CHECK(total_hinge() < before);
    CHECK(state.cls.lambda.norm() <= 1e3);
}

TEST_CASE("training aborts with a diagnostic when the objective blows up")
{
    const LabeledDataset data = synth_toy(RngStream{505, StreamId::Init}, 10, 2, 8, 0.1);

    TrainConfig cfg;
    cfg.C = 0.0;
    cfg.batch_size = 10;
    cfg.epochs = 5;
    cfg.pretrain_epochs = 0;
    cfg.latent_dim = 4;
    cfg.hidden = {8};
    cfg.adam.base_lr = 1e12; // drives exp(log_var) to overflow
    cfg.lr.base_lr = 1e12;
    cfg.seed = 16;

    CHECK_THROWS_WITH_AS(train(cfg, data), doctest::Contains("non-finite"),
                         std::runtime_error);
}
