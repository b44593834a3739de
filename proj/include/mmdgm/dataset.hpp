#ifndef MMDGM_DATASET_HPP
#define MMDGM_DATASET_HPP

#include "mmdgm/rng.hpp"
#include "mmdgm/types.hpp"

#include <string>
#include <vector>

namespace mmdgm {

// Immutable after construction; rows are samples, pixels in [0,1].
struct LabeledDataset {
    Matrix images;           // N x D
    std::vector<int> labels; // values in {0..num_classes-1}
    int num_classes = 0;

    Index size() const { return images.rows(); }
    Index dim() const { return images.cols(); }
};

struct MiniBatch {
    std::vector<Index> indices;
    Matrix images; // m x D
    std::vector<int> labels;

    Index size() const { return images.rows(); }
};

// IDX ingestion (big-endian; images magic 0x00000803, labels 0x00000801).
// Pixels are scaled to [0,1] by dividing by 255.
LabeledDataset load_idx(const std::string& image_path, const std::string& label_path);

// Writes the dataset back out in IDX form, quantizing pixels to bytes with
// round(255*p). A freshly loaded dataset round-trips its payload exactly.
void save_idx(const LabeledDataset& data, const std::string& image_path,
              const std::string& label_path, int rows, int cols);

// Deterministic per-class stroke template on a side x side canvas, flattened
// row-major. Classes are 4-bit bar codes (code = c+1): bit0/bit1 horizontal
// bars at 1/4 and 3/4 height, bit2/bit3 vertical bars at 1/4 and 3/4 width.
Vector class_template(int c, int M, int side);

// Toy labeled images: class template + i.i.d. Gaussian pixel noise and a
// random shift of at most one pixel, clamped to [0,1]. noise == 0 yields the
// untouched templates.
LabeledDataset synth_toy(const RngStream& rng, int n_per_class, int M, int side,
                         double noise);

enum class BinarizeMode {
    None,
    Stochastic,     // pixel -> Bernoulli(pixel)
    Threshold,      // pixel -> 1[pixel >= 0.5]
};

LabeledDataset binarize(const LabeledDataset& data, BinarizeMode mode, const RngStream& rng);

// Fresh random permutation of {0..N-1}, deterministic in (stream seed, epoch).
std::vector<Index> epoch_permutation(Index n, const RngStream& minibatch_stream,
                                     std::uint64_t epoch);

// One epoch = the permutation chunked into ceil(N/m) batches; the last batch
// may be short. Returned batches carry copies of their rows.
std::vector<MiniBatch> minibatch_iter(const LabeledDataset& data, Index m,
                                      const RngStream& minibatch_stream,
                                      std::uint64_t epoch);

MiniBatch gather(const LabeledDataset& data, const std::vector<Index>& indices);

// Missing-value masks (true = missing).
BoolArray make_rand_drop_mask(double p, int side, const RngStream& rng,
                              std::uint64_t first_index = 0);
BoolArray make_rect_mask(int h, int w, int side);

} // namespace mmdgm

#endif
