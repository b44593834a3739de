#ifndef MMDGM_TESTUTIL_HPP
#define MMDGM_TESTUTIL_HPP

#include "mmdgm/optimizer.hpp"
#include "mmdgm/types.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace testutil {

// Relative error with an absolute floor so near-zero pairs compare sanely.
inline double rel_err(double a, double b, double floor = 1e-8)
{
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

// Central finite differences of a scalar function over every coordinate
// reachable through the views. Restores parameters afterwards.
inline std::vector<mmdgm::Array> fd_gradients(std::vector<mmdgm::ParamView>& views,
                                              const std::function<double()>& f,
                                              double h = 1e-5)
{
    std::vector<mmdgm::Array> grads;
    for (mmdgm::ParamView& v : views) {
        mmdgm::Array g(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double saved = v.data[i];
            v.data[i] = saved + h;
            const double fp = f();
            v.data[i] = saved - h;
            const double fm = f();
            v.data[i] = saved;
            g[i] = (fp - fm) / (2.0 * h);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

// Worst relative error between analytic gradient views and FD gradients.
inline double max_grad_rel_err(const std::vector<mmdgm::ParamView>& analytic,
                               const std::vector<mmdgm::Array>& fd, double floor = 1e-6)
{
    double worst = 0.0;
    for (std::size_t gi = 0; gi < analytic.size(); ++gi) {
        Eigen::Map<const mmdgm::Array> a(analytic[gi].data, analytic[gi].size());
        for (Eigen::Index i = 0; i < a.size(); ++i)
            worst = std::max(worst, rel_err(a[i], fd[gi][i], floor));
    }
    return worst;
}

// Minimal binary PGM (P5) reader for round-trip checks.
struct Pgm {
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::vector<unsigned char> pixels;
};

inline Pgm read_pgm(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("read_pgm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5")
        throw std::runtime_error("read_pgm: not a P5 file");
    Pgm p;
    in >> p.width >> p.height >> p.maxval;
    in.get(); // single whitespace after maxval
    p.pixels.resize(static_cast<std::size_t>(p.width) * p.height);
    in.read(reinterpret_cast<char*>(p.pixels.data()),
            static_cast<std::streamsize>(p.pixels.size()));
    if (!in)
        throw std::runtime_error("read_pgm: truncated payload");
    return p;
}

// Composite Simpson rule on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int n)
{
    if (n % 2 == 1)
        ++n;
    const double h = (b - a) / n;
    double sum = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

inline std::string temp_path(const std::string& name)
{
    return std::string("mmdgm_test_") + name;
}

} // namespace testutil

#endif
