#pragma once

#include <algorithm>
#include <cstddef>

#include "rulegrad/error.hpp"

namespace rulegrad {

// Linear confidence-margin sweep from c_start down to c_stop over c_epochs
// epochs, constant at c_stop afterwards. High margins render rules vacuous,
// so lowering the margin enforces them progressively as the model firms up.
struct MarginSchedule {
    double c_start = 0.0;
    double c_stop = 0.0;
    std::size_t c_epochs = 1;

    void validate() const {
        if (c_start < 0.0 || c_stop < 0.0) {
            throw ContractError("margin schedule: margins must be >= 0");
        }
        if (c_epochs < 1) throw ContractError("margin schedule: c_epochs must be >= 1");
    }
};

// epoch may be fractional when per-step sweeping is enabled.
inline double margin_at(const MarginSchedule& s, double epoch) {
    s.validate();
    if (epoch < 0.0) throw ContractError("margin_at: epoch must be >= 0");
    const double f = std::min(epoch / static_cast<double>(s.c_epochs), 1.0);
    return s.c_start + (s.c_stop - s.c_start) * f;
}

inline double margin_at(const MarginSchedule& s, std::size_t epoch) {
    return margin_at(s, static_cast<double>(epoch));
}

} // namespace rulegrad
