#ifndef MMDGM_TYPES_HPP
#define MMDGM_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mmdgm {

// All numerics are 64-bit; gradient verification by finite differences is
// the project's master invariant and needs the headroom.
using scalar_t = double;

// Row-major storage so flat serialization (checkpoints, IDX, PGM) walks
// memory in image order.
using Matrix = Eigen::Matrix<scalar_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Array = Eigen::ArrayXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent external data (bad magic, truncation, count mismatch).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string shape_str(Index rows, Index cols)
{
    return "[" + std::to_string(rows) + " x " + std::to_string(cols) + "]";
}

inline std::string shape_str(const Matrix& a)
{
    return shape_str(a.rows(), a.cols());
}

} // namespace mmdgm

#endif
