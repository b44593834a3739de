#include "mmdgm/metrics.hpp"

#include <charconv>
#include <fstream>

namespace mmdgm {

std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void emit_metrics(const std::vector<EpochMetrics>& rows, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("emit_metrics: cannot open " + path);
    out << "epoch,objective,bound_mean,train_error,lr\n";
    for (const EpochMetrics& r : rows) {
        out << r.epoch << ',' << format_double(r.objective) << ',' << format_double(r.bound_mean)
            << ',' << format_double(r.train_error) << ',' << format_double(r.lr) << '\n';
    }
    if (!out)
        throw IoError("emit_metrics: write failed for " + path);
}

} // namespace mmdgm
