#ifndef MMDGM_RNG_HPP
#define MMDGM_RNG_HPP

#include "mmdgm/types.hpp"

#include <cmath>
#include <cstdint>

namespace mmdgm {

// Counter-based random streams. Every draw is a pure function of
// (seed, stream id, draw index), so any stochastic quantity in training
// can be replayed in isolation. No hidden generator state anywhere.

enum class StreamId : std::uint64_t {
    Init = 1,
    Minibatch = 2,
    Epsilon = 3,
    Mask = 4,
    Generate = 5,
};

// SplitMix64 finalizer: full-avalanche bijection on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct RngStream {
    std::uint64_t seed = 0;
    StreamId id = StreamId::Init;

    std::uint64_t raw(std::uint64_t index) const
    {
        const std::uint64_t origin = mix64(seed ^ mix64(static_cast<std::uint64_t>(id)));
        return mix64(origin + index * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform on the open interval (0,1); never returns an endpoint.
    double uniform(std::uint64_t index) const
    {
        return (static_cast<double>(raw(index) >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; draw i consumes uniform cells 2i, 2i+1.
    double normal(std::uint64_t index) const
    {
        const double u1 = uniform(2 * index);
        const double u2 = uniform(2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

// Folds extra key material into the seed, e.g. one stream per (epoch, batch).
inline RngStream substream(const RngStream& s, std::uint64_t a, std::uint64_t b = 0)
{
    return RngStream{mix64(mix64(s.seed ^ mix64(a)) ^ mix64(~b)), s.id};
}

// draw_standard_normal: i.i.d. N(0,1) tensor starting at `first` in the
// stream's normal-draw index space (row-major element order).
Matrix draw_standard_normal(const RngStream& s, std::uint64_t first, Index rows, Index cols);
Vector draw_standard_normal_vec(const RngStream& s, std::uint64_t first, Index n);

// Sequential view over a stream. The position is ordinary visible state
// advanced by each call; copy the cursor to fork a replayable position.
struct RngCursor {
    RngStream stream;
    std::uint64_t next = 0;

    explicit RngCursor(RngStream s, std::uint64_t start = 0) : stream(s), next(start) {}

    double uniform() { return stream.uniform(next++); }
    double normal() { return stream.normal(next++); }

    Vector normal_vector(Index n)
    {
        Vector out = draw_standard_normal_vec(stream, next, n);
        next += static_cast<std::uint64_t>(n);
        return out;
    }

    Matrix normal_matrix(Index rows, Index cols)
    {
        Matrix out = draw_standard_normal(stream, next, rows, cols);
        next += static_cast<std::uint64_t>(rows * cols);
        return out;
    }
};

} // namespace mmdgm

#endif
