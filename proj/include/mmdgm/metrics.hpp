#ifndef MMDGM_METRICS_HPP
#define MMDGM_METRICS_HPP

#include "mmdgm/trainer.hpp"

#include <string>
#include <vector>

namespace mmdgm {

// Shortest round-trip decimal representation of a double ('.' decimal point).
std::string format_double(double v);

// CSV with header "epoch,objective,bound_mean,train_error,lr", UNIX newlines.
void emit_metrics(const std::vector<EpochMetrics>& rows, const std::string& path);

} // namespace mmdgm

#endif
