#include "mmdgm/commands.hpp"

#include "mmdgm/metrics.hpp"
#include "mmdgm/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mmdgm {

namespace fs = std::filesystem;

namespace {

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path);
    out << text;
    if (!out)
        throw IoError("write failed for " + path);
}

void prepare_out_dir(const RunConfig& cfg)
{
    fs::create_directories(cfg.out_dir);
    write_text(cfg.out_dir + "/config.txt", resolved_config_text(cfg));
}

ModelState load_checkpoint_for(const RunConfig& cfg)
{
    if (cfg.checkpoint.empty())
        throw ConfigError("command '" + cfg.command + "' requires the 'checkpoint' key");
    return checkpoint_load(cfg.checkpoint);
}

std::vector<BoolArray> masks_for(const RunConfig& cfg, Index n, int side)
{
    const MaskSpec spec = parse_mask_spec(cfg.mask);
    const RngStream mask_stream{cfg.seed, StreamId::Mask};
    std::vector<BoolArray> masks;
    masks.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        switch (spec.kind) {
        case MaskSpec::Kind::RandDrop:
            masks.push_back(make_rand_drop_mask(
                spec.drop_prob, side, substream(mask_stream, static_cast<std::uint64_t>(i))));
            break;
        case MaskSpec::Kind::Rect:
            masks.push_back(make_rect_mask(spec.rect_h, spec.rect_w, side));
            break;
        case MaskSpec::Kind::None:
            masks.push_back(BoolArray::Constant(static_cast<Index>(side) * side, false));
            break;
        }
    }
    return masks;
}

} // namespace

DataBundle load_data(const RunConfig& cfg)
{
    DataBundle data;
    if (cfg.data == "idx") {
        if (cfg.idx_train_images.empty() || cfg.idx_train_labels.empty())
            throw ConfigError("data = idx requires idx_train_images and idx_train_labels");
        data.train = load_idx(cfg.idx_train_images, cfg.idx_train_labels);
        if (!cfg.idx_test_images.empty())
            data.test = load_idx(cfg.idx_test_images, cfg.idx_test_labels);
        else
            data.test = data.train;
    } else {
        const RngStream synth{cfg.seed, StreamId::Init};
        data.train = synth_toy(substream(synth, 0x7261696eULL), cfg.synth_train_per_class,
                               cfg.synth_classes, cfg.synth_side, cfg.synth_noise);
        data.test = synth_toy(substream(synth, 0x74657374ULL), cfg.synth_test_per_class,
                              cfg.synth_classes, cfg.synth_side, cfg.synth_noise);
    }

    const BinarizeMode mode = binarize_mode(cfg);
    if (mode != BinarizeMode::None) {
        const RngStream bin{cfg.seed, StreamId::Mask};
        data.train = binarize(data.train, mode, substream(bin, 0));
        data.test = binarize(data.test, mode, substream(bin, 1));
    }
    return data;
}

ModelState cmd_train(const RunConfig& cfg, std::vector<EpochMetrics>* metrics_out)
{
    prepare_out_dir(cfg);
    const DataBundle data = load_data(cfg);
    const TrainConfig tc = to_train_config(cfg);

    std::vector<EpochMetrics> metrics;
    ModelState state = train(tc, data.train, &metrics);

    emit_metrics(metrics, cfg.out_dir + "/metrics.csv");
    checkpoint_save(state, cfg.out_dir + "/final.ckpt");
    if (metrics_out)
        *metrics_out = metrics;
    return state;
}

double cmd_eval(const RunConfig& cfg)
{
    const ModelState state = load_checkpoint_for(cfg);
    const DataBundle data = load_data(cfg);
    return evaluate(state, data.test);
}

std::string cmd_generate(const RunConfig& cfg)
{
    prepare_out_dir(cfg);
    const ModelState state = load_checkpoint_for(cfg);
    const Matrix samples =
        generate(state, cfg.n_samples, RngStream{cfg.seed, StreamId::Generate});
    const int side = static_cast<int>(std::lround(std::sqrt(double(samples.cols()))));
    const std::string path = cfg.out_dir + "/samples.pgm";
    write_pgm_grid(samples, side, cfg.grid_cols, path);
    return path;
}

double cmd_impute(const RunConfig& cfg)
{
    prepare_out_dir(cfg);
    const ModelState state = load_checkpoint_for(cfg);
    const DataBundle data = load_data(cfg);

    const int side = static_cast<int>(std::lround(std::sqrt(double(data.test.dim()))));
    const Index n = std::min<Index>(cfg.impute_count, data.test.size());
    const std::vector<BoolArray> masks = masks_for(cfg, n, side);

    const RngStream eps{cfg.seed, StreamId::Epsilon};
    Matrix truth(n, data.test.dim());
    Matrix masked(n, data.test.dim());
    Matrix imputed(n, data.test.dim());

    std::ostringstream csv;
    csv << "index,mse_missing,mse_full\n";
    double mse_sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        const Vector x = data.test.images.row(i).transpose();
        RngCursor cur(substream(eps, static_cast<std::uint64_t>(i)));
        const ImputationTrace trace =
            impute(state, x, masks[static_cast<std::size_t>(i)], cfg.impute_iters, cur,
                   impute_init_mode(cfg));
        truth.row(i) = x.transpose();
        masked.row(i) = trace.iterates.front().transpose();
        imputed.row(i) = trace.iterates.back().transpose();
        const double mse = trace.mse_per_iter.back();
        mse_sum += mse;
        csv << i << ',' << format_double(mse) << ','
            << format_double(impute_mse_full(x, trace.iterates.back())) << '\n';
    }

    const int cols = std::max(1, cfg.grid_cols);
    write_pgm_grid(truth, side, cols, cfg.out_dir + "/impute_truth.pgm");
    write_pgm_grid(masked, side, cols, cfg.out_dir + "/impute_masked.pgm");
    write_pgm_grid(imputed, side, cols, cfg.out_dir + "/impute_result.pgm");
    write_text(cfg.out_dir + "/impute_mse.csv", csv.str());
    return mse_sum / static_cast<double>(n);
}

double cmd_baseline(const RunConfig& cfg)
{
    prepare_out_dir(cfg);
    const DataBundle data = load_data(cfg);

    // Unsupervised stage shares the exact C=0 training path, spending the
    // same total epoch budget a joint run would.
    TrainConfig tc = to_train_config(cfg);
    tc.epochs = tc.total_epochs();
    tc.C = 0.0;
    tc.pretrain_epochs = 0;
    std::vector<EpochMetrics> metrics;
    ModelState state = train(tc, data.train, &metrics);
    emit_metrics(metrics, cfg.out_dir + "/metrics.csv");
    checkpoint_save(state, cfg.out_dir + "/va.ckpt");

    const Matrix train_feats =
        extract_features_batch(state.phi, data.train.images, tc.feature_mode);
    state.cls.lambda =
        pegasos_train(train_feats, data.train.labels, data.train.num_classes, cfg.pegasos_reg,
                      cfg.pegasos_iters, cfg.pegasos_batch,
                      RngStream{cfg.seed, StreamId::Minibatch});
    checkpoint_save(state, cfg.out_dir + "/final.ckpt");

    const double err = evaluate(state, data.test);
    write_text(cfg.out_dir + "/error_rate.txt", format_double(err) + "\n");
    return err;
}

std::vector<CSweepRow> run_csweep(const RunConfig& cfg, const std::vector<double>& values_of_C)
{
    if (!std::is_sorted(values_of_C.begin(), values_of_C.end()))
        throw ParamError("run_csweep: C values must be sorted ascending");

    prepare_out_dir(cfg);
    const DataBundle data = load_data(cfg);

    std::vector<CSweepRow> rows;
    std::ostringstream csv;
    csv << "C,error_rate,lower_bound\n";
    for (double C : values_of_C) {
        RunConfig cell = cfg;
        cell.C = C;
        cell.out_dir = cfg.out_dir + "/C_" + format_double(C);
        try {
            fs::create_directories(cell.out_dir);
            write_text(cell.out_dir + "/config.txt", resolved_config_text(cell));

            const TrainConfig tc = to_train_config(cell);
            std::vector<EpochMetrics> metrics;
            ModelState state = train(tc, data.train, &metrics);
            emit_metrics(metrics, cell.out_dir + "/metrics.csv");

            if (C == 0.0) {
                // No hinge ever touches lambda at C=0; report the two-stage
                // figure instead, with the classifier trained post hoc.
                const Matrix feats =
                    extract_features_batch(state.phi, data.train.images, tc.feature_mode);
                state.cls.lambda = pegasos_train(
                    feats, data.train.labels, data.train.num_classes, cell.pegasos_reg,
                    cell.pegasos_iters, cell.pegasos_batch,
                    RngStream{cell.seed, StreamId::Minibatch});
            }
            checkpoint_save(state, cell.out_dir + "/final.ckpt");

            CSweepRow row;
            row.C = C;
            row.error_rate = evaluate(state, data.test);
            row.lower_bound = -mean_bound(state, tc, data.train);
            rows.push_back(row);
            csv << format_double(row.C) << ',' << format_double(row.error_rate) << ','
                << format_double(row.lower_bound) << '\n';
        } catch (const std::exception& e) {
            std::cerr << "csweep cell C=" << C << " failed: " << e.what() << "\n";
            csv << format_double(C) << ",nan,nan\n";
        }
        // Partial results are visible even if a later cell fails.
        write_text(cfg.out_dir + "/csweep.csv", csv.str());
    }
    return rows;
}

} // namespace mmdgm
