#ifndef MMDGM_PGM_HPP
#define MMDGM_PGM_HPP

#include "mmdgm/types.hpp"

#include <string>

namespace mmdgm {

// Tiles n square images (rows of `images`, each side*side pixels) into a
// binary PGM (P5, maxval 255), row-major with 1-pixel black separators.
// Pixel p maps to round(255 * clamp(p, 0, 1)).
void write_pgm_grid(const Matrix& images, int side, int cols, const std::string& path);

} // namespace mmdgm

#endif
