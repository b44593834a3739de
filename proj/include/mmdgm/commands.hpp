#ifndef MMDGM_COMMANDS_HPP
#define MMDGM_COMMANDS_HPP

#include "mmdgm/config.hpp"

#include <string>

namespace mmdgm {

// Train/test split resolved from the config's data source.
struct DataBundle {
    LabeledDataset train;
    LabeledDataset test;
};

DataBundle load_data(const RunConfig& cfg);

// Row of the csweep report CSV (header "C,error_rate,lower_bound";
// lower_bound is the negated mean per-sample bound).
struct CSweepRow {
    double C = 0.0;
    double error_rate = 0.0;
    double lower_bound = 0.0;
};

// Each command writes its artifacts under cfg.out_dir and returns a
// headline number where one exists (error rate or final train objective).

// Full training run; writes config.txt, metrics.csv, final.ckpt.
ModelState cmd_train(const RunConfig& cfg, std::vector<EpochMetrics>* metrics = nullptr);

// Error rate of a checkpoint on the configured test set.
double cmd_eval(const RunConfig& cfg);

// PGM grid of ancestral samples from a checkpoint.
std::string cmd_generate(const RunConfig& cfg);

// Imputation report: PGM grids (truth / masked / imputed) plus a CSV with
// per-image missing-pixel MSE (primary) and whole-image MSE (secondary).
// Returns the mean missing-pixel MSE at the final iteration.
double cmd_impute(const RunConfig& cfg);

// Two-stage baseline: unsupervised run (C forced to 0), Pegasos on the
// extracted features, then evaluation. Writes the VA checkpoint so the
// shared path with C=0 joint training can be compared bit for bit.
double cmd_baseline(const RunConfig& cfg);

// One model per C from the same seeds; partial results are still written.
std::vector<CSweepRow> run_csweep(const RunConfig& cfg, const std::vector<double>& values_of_C);

} // namespace mmdgm

#endif
