#ifndef MMDGM_MATH_HPP
#define MMDGM_MATH_HPP

#include "mmdgm/types.hpp"

#include <cmath>

namespace mmdgm {

// Checked dense product. Eigen does the work; this is the boundary where a
// dimension mismatch turns into a diagnosable error instead of an assert.
inline Matrix matmul(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions differ, " + shape_str(a) + " * " + shape_str(b));
    return a * b;
}

enum class Act {
    Softplus,
    Sigmoid,
    Tanh,
    Identity,
};

inline double sigmoid(double x)
{
    // Split on sign so the exp never overflows.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x)
{
    return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

inline double activate_scalar(Act kind, double x)
{
    switch (kind) {
    case Act::Softplus: return softplus(x);
    case Act::Sigmoid: return sigmoid(x);
    case Act::Tanh: return std::tanh(x);
    case Act::Identity: return x;
    }
    return x;
}

inline double activate_grad_scalar(Act kind, double x)
{
    switch (kind) {
    case Act::Softplus: return sigmoid(x);
    case Act::Sigmoid: {
        const double s = sigmoid(x);
        return s * (1.0 - s);
    }
    case Act::Tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    case Act::Identity: return 1.0;
    }
    return 1.0;
}

inline Matrix activate(Act kind, const Matrix& x)
{
    return x.unaryExpr([kind](double v) { return activate_scalar(kind, v); });
}

inline Matrix activate_grad(Act kind, const Matrix& x)
{
    return x.unaryExpr([kind](double v) { return activate_grad_scalar(kind, v); });
}

} // namespace mmdgm

#endif
