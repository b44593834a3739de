#include "mmdgm/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace mmdgm {

void write_pgm_grid(const Matrix& images, int side, int cols, const std::string& path)
{
    const Index n = images.rows();
    if (n < 1)
        throw ParamError("write_pgm_grid: need at least one image");
    if (static_cast<Index>(side) * side != images.cols())
        throw ParamError("write_pgm_grid: images are not side*side pixels");
    if (cols < 1)
        throw ParamError("write_pgm_grid: need at least one column");

    const int rows_img = static_cast<int>((n + cols - 1) / cols);
    const int width = cols * side + (cols - 1);
    const int height = rows_img * side + (rows_img - 1);

    std::vector<unsigned char> canvas(static_cast<std::size_t>(width) * height, 0);
    for (Index i = 0; i < n; ++i) {
        const int gr = static_cast<int>(i) / cols;
        const int gc = static_cast<int>(i) % cols;
        const int r0 = gr * (side + 1);
        const int c0 = gc * (side + 1);
        for (int r = 0; r < side; ++r) {
            for (int c = 0; c < side; ++c) {
                const double p = std::clamp(images(i, r * side + c), 0.0, 1.0);
                canvas[static_cast<std::size_t>(r0 + r) * width + (c0 + c)] =
                    static_cast<unsigned char>(std::lround(255.0 * p));
            }
        }
    }

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("write_pgm_grid: cannot open " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(canvas.data()),
              static_cast<std::streamsize>(canvas.size()));
    if (!out)
        throw IoError("write_pgm_grid: write failed for " + path);
}

} // namespace mmdgm
