#pragma once

#include <vector>

namespace matchflow {

// Discrete observation symbols for the hidden Markov model.
// All symbols lie in [0, symbol_count); the sequence is never empty.
struct ObservationSequence {
    std::vector<int> symbols;
    int symbol_count = 2;  // M

    std::size_t length() const { return symbols.size(); }
};

}  // namespace matchflow
