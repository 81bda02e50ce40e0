#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsrl/env.hpp"

namespace nsrl {

// One global time step as seen by the learner. `eta` is the estimate held
// when the step began; `j_star` stays NaN until a benchmark is attached.
struct TraceRecord {
    std::size_t t = 0;
    std::size_t state = 0;
    std::size_t action = 0;
    double reward = 0.0;
    double j_star = std::numeric_limits<double>::quiet_NaN();
    double eta = 0.0;
    std::size_t segment = 0;
    std::optional<std::size_t> arm;
};

struct RunTrace {
    std::vector<TraceRecord> records;
    std::string config_hash;
    std::uint64_t seed = 0;
    VariationBudget budget;

    std::size_t size() const { return records.size(); }
    std::vector<double> rewards() const;
};

// Copies J*_t into each record. Throws LengthMismatch.
void attach_benchmark(RunTrace& trace, std::span<const double> benchmark);

}  // namespace nsrl
