#include "mmdgm/rng.hpp"

namespace mmdgm {

Matrix draw_standard_normal(const RngStream& s, std::uint64_t first, Index rows, Index cols)
{
    Matrix out(rows, cols);
    std::uint64_t k = first;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            out(i, j) = s.normal(k++);
    return out;
}

Vector draw_standard_normal_vec(const RngStream& s, std::uint64_t first, Index n)
{
    Vector out(n);
    for (Index i = 0; i < n; ++i)
        out[i] = s.normal(first + static_cast<std::uint64_t>(i));
    return out;
}

} // namespace mmdgm
