#include "nsrl/trace.hpp"

#include <string>

#include "nsrl/errors.hpp"

namespace nsrl {

std::vector<double> RunTrace::rewards() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& rec : records) out.push_back(rec.reward);
    return out;
}

void attach_benchmark(RunTrace& trace, std::span<const double> benchmark) {
    if (benchmark.size() != trace.records.size())
        throw LengthMismatch("benchmark has " + std::to_string(benchmark.size()) + " entries, trace has " +
                             std::to_string(trace.records.size()));
    for (std::size_t i = 0; i < benchmark.size(); ++i) trace.records[i].j_star = benchmark[i];
}

}  // namespace nsrl
