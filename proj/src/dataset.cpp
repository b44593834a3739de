#include "mmdgm/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>

namespace mmdgm {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& path)
{
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in)
        throw IoError("truncated IDX file: " + path);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v)
{
    unsigned char buf[4] = {
        static_cast<unsigned char>(v >> 24),
        static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8),
        static_cast<unsigned char>(v),
    };
    out.write(reinterpret_cast<const char*>(buf), 4);
}

} // namespace

LabeledDataset load_idx(const std::string& image_path, const std::string& label_path)
{
    std::ifstream img(image_path, std::ios::binary);
    if (!img)
        throw IoError("cannot open IDX image file: " + image_path);
    std::ifstream lab(label_path, std::ios::binary);
    if (!lab)
        throw IoError("cannot open IDX label file: " + label_path);

    const std::uint32_t img_magic = read_u32_be(img, image_path);
    if (img_magic != kImageMagic)
        throw DataError("bad IDX image magic in " + image_path + ": got " +
                        std::to_string(img_magic));
    const std::uint32_t n_images = read_u32_be(img, image_path);
    const std::uint32_t rows = read_u32_be(img, image_path);
    const std::uint32_t cols = read_u32_be(img, image_path);

    const std::uint32_t lab_magic = read_u32_be(lab, label_path);
    if (lab_magic != kLabelMagic)
        throw DataError("bad IDX label magic in " + label_path + ": got " +
                        std::to_string(lab_magic));
    const std::uint32_t n_labels = read_u32_be(lab, label_path);

    if (n_images != n_labels)
        throw DataError("IDX image/label count mismatch: " + std::to_string(n_images) +
                        " images vs " + std::to_string(n_labels) + " labels");

    const Index n = static_cast<Index>(n_images);
    const Index d = static_cast<Index>(rows) * static_cast<Index>(cols);

    std::vector<unsigned char> pixel_buf(static_cast<std::size_t>(n * d));
    img.read(reinterpret_cast<char*>(pixel_buf.data()),
             static_cast<std::streamsize>(pixel_buf.size()));
    if (img.gcount() != static_cast<std::streamsize>(pixel_buf.size()))
        throw IoError("truncated IDX pixel payload: " + image_path);

    std::vector<unsigned char> label_buf(n_labels);
    lab.read(reinterpret_cast<char*>(label_buf.data()),
             static_cast<std::streamsize>(label_buf.size()));
    if (lab.gcount() != static_cast<std::streamsize>(label_buf.size()))
        throw IoError("truncated IDX label payload: " + label_path);

    LabeledDataset out;
    out.images.resize(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j)
            out.images(i, j) = pixel_buf[static_cast<std::size_t>(i * d + j)] / 255.0;

    out.labels.resize(static_cast<std::size_t>(n));
    int max_label = 0;
    for (Index i = 0; i < n; ++i) {
        out.labels[static_cast<std::size_t>(i)] = label_buf[static_cast<std::size_t>(i)];
        max_label = std::max(max_label, int(label_buf[static_cast<std::size_t>(i)]));
    }
    out.num_classes = max_label + 1;
    return out;
}

void save_idx(const LabeledDataset& data, const std::string& image_path,
              const std::string& label_path, int rows, int cols)
{
    if (static_cast<Index>(rows) * cols != data.dim())
        throw ParamError("save_idx: rows*cols != image dimension");

    std::ofstream img(image_path, std::ios::binary);
    if (!img)
        throw IoError("cannot write IDX image file: " + image_path);
    write_u32_be(img, kImageMagic);
    write_u32_be(img, static_cast<std::uint32_t>(data.size()));
    write_u32_be(img, static_cast<std::uint32_t>(rows));
    write_u32_be(img, static_cast<std::uint32_t>(cols));
    for (Index i = 0; i < data.size(); ++i) {
        for (Index j = 0; j < data.dim(); ++j) {
            const double p = std::clamp(data.images(i, j), 0.0, 1.0);
            const unsigned char b = static_cast<unsigned char>(std::lround(p * 255.0));
            img.write(reinterpret_cast<const char*>(&b), 1);
        }
    }
    if (!img)
        throw IoError("write failed: " + image_path);

    std::ofstream lab(label_path, std::ios::binary);
    if (!lab)
        throw IoError("cannot write IDX label file: " + label_path);
    write_u32_be(lab, kLabelMagic);
    write_u32_be(lab, static_cast<std::uint32_t>(data.size()));
    for (int y : data.labels) {
        const unsigned char b = static_cast<unsigned char>(y);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!lab)
        throw IoError("write failed: " + label_path);
}

Vector class_template(int c, int M, int side)
{
    if (side < 8)
        throw ParamError("class_template: side must be >= 8");
    if (c < 0 || c >= M || M > 10)
        throw ParamError("class_template: class out of range");

    Matrix canvas = Matrix::Zero(side, side);
    const int code = c + 1; // avoid the empty all-zero pattern
    const int thick = std::max(1, side / 7);
    const int lo = side / 4;
    const int hi = (3 * side) / 4;

    auto hbar = [&](int r0) {
        for (int r = r0; r < std::min(r0 + thick, side); ++r)
            for (int j = 0; j < side; ++j)
                canvas(r, j) = 1.0;
    };
    auto vbar = [&](int c0) {
        for (int j = c0; j < std::min(c0 + thick, side); ++j)
            for (int r = 0; r < side; ++r)
                canvas(r, j) = 1.0;
    };

    if (code & 1) hbar(lo);
    if (code & 2) hbar(hi);
    if (code & 4) vbar(lo);
    if (code & 8) vbar(hi);

    return Eigen::Map<const Vector>(canvas.data(), side * side);
}

LabeledDataset synth_toy(const RngStream& rng, int n_per_class, int M, int side,
                         double noise)
{
    if (side < 8)
        throw ParamError("synth_toy: side must be >= 8");
    if (M < 1 || M > 10)
        throw ParamError("synth_toy: class count must be in 1..10");

    const Index d = static_cast<Index>(side) * side;
    const Index n = static_cast<Index>(n_per_class) * M;

    std::vector<Matrix> templates;
    templates.reserve(static_cast<std::size_t>(M));
    for (int c = 0; c < M; ++c) {
        Vector t = class_template(c, M, side);
        templates.push_back(Eigen::Map<const Matrix>(t.data(), side, side));
    }

    LabeledDataset out;
    out.images.resize(n, d);
    out.labels.resize(static_cast<std::size_t>(n));
    out.num_classes = M;

    RngCursor cur(rng);
    Index row = 0;
    for (int c = 0; c < M; ++c) {
        for (int i = 0; i < n_per_class; ++i, ++row) {
            int dx = 0;
            int dy = 0;
            if (noise > 0.0) {
                dx = static_cast<int>(cur.uniform() * 3.0) - 1;
                dy = static_cast<int>(cur.uniform() * 3.0) - 1;
            }
            const Matrix& tpl = templates[static_cast<std::size_t>(c)];
            for (int r = 0; r < side; ++r) {
                for (int q = 0; q < side; ++q) {
                    const int sr = r - dy;
                    const int sq = q - dx;
                    double v = (sr >= 0 && sr < side && sq >= 0 && sq < side)
                                   ? tpl(sr, sq)
                                   : 0.0;
                    if (noise > 0.0)
                        v += noise * cur.normal();
                    out.images(row, r * side + q) = std::clamp(v, 0.0, 1.0);
                }
            }
            out.labels[static_cast<std::size_t>(row)] = c;
        }
    }
    return out;
}

LabeledDataset binarize(const LabeledDataset& data, BinarizeMode mode, const RngStream& rng)
{
    LabeledDataset out = data;
    if (mode == BinarizeMode::None)
        return out;

    RngCursor cur(rng);
    for (Index i = 0; i < out.size(); ++i) {
        for (Index j = 0; j < out.dim(); ++j) {
            const double p = out.images(i, j);
            if (mode == BinarizeMode::Stochastic) {
                out.images(i, j) = (cur.uniform() < p) ? 1.0 : 0.0;
            } else {
                out.images(i, j) = (p >= 0.5) ? 1.0 : 0.0;
            }
        }
    }
    return out;
}

std::vector<Index> epoch_permutation(Index n, const RngStream& minibatch_stream,
                                     std::uint64_t epoch)
{
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        perm[static_cast<std::size_t>(i)] = i;

    const RngStream s = substream(minibatch_stream, epoch);
    // Fisher-Yates keyed by draw index.
    for (Index i = n - 1; i > 0; --i) {
        const double u = s.uniform(static_cast<std::uint64_t>(i));
        const Index j = static_cast<Index>(u * static_cast<double>(i + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
}

MiniBatch gather(const LabeledDataset& data, const std::vector<Index>& indices)
{
    MiniBatch b;
    b.indices = indices;
    b.images.resize(static_cast<Index>(indices.size()), data.dim());
    b.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        b.images.row(static_cast<Index>(i)) = data.images.row(indices[i]);
        b.labels[i] = data.labels[static_cast<std::size_t>(indices[i])];
    }
    return b;
}

std::vector<MiniBatch> minibatch_iter(const LabeledDataset& data, Index m,
                                      const RngStream& minibatch_stream,
                                      std::uint64_t epoch)
{
    const Index n = data.size();
    if (m < 1 || m > n)
        throw ParamError("minibatch_iter: batch size must be in 1..N");

    const std::vector<Index> perm = epoch_permutation(n, minibatch_stream, epoch);
    std::vector<MiniBatch> batches;
    batches.reserve(static_cast<std::size_t>((n + m - 1) / m));
    for (Index start = 0; start < n; start += m) {
        const Index len = std::min(m, n - start);
        std::vector<Index> idx(perm.begin() + start, perm.begin() + start + len);
        batches.push_back(gather(data, idx));
    }
    return batches;
}

BoolArray make_rand_drop_mask(double p, int side, const RngStream& rng,
                              std::uint64_t first_index)
{
    if (p < 0.0 || p > 1.0)
        throw ParamError("make_rand_drop_mask: probability must be in [0,1]");
    const Index d = static_cast<Index>(side) * side;
    BoolArray mask(d);
    for (Index i = 0; i < d; ++i)
        mask[i] = rng.uniform(first_index + static_cast<std::uint64_t>(i)) < p;
    return mask;
}

BoolArray make_rect_mask(int h, int w, int side)
{
    if (h > side || w > side || h < 0 || w < 0)
        throw ParamError("make_rect_mask: rectangle " + std::to_string(h) + "x" +
                         std::to_string(w) + " exceeds image side " + std::to_string(side));
    const int r0 = (side - h) / 2;
    const int c0 = (side - w) / 2;
    BoolArray mask = BoolArray::Constant(static_cast<Index>(side) * side, false);
    for (int r = r0; r < r0 + h; ++r)
        for (int c = c0; c < c0 + w; ++c)
            mask[static_cast<Index>(r) * side + c] = true;
    return mask;
}

} // namespace mmdgm
