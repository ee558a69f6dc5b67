#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace matchflow {

// Dense row-major matrix of doubles.  Deliberately minimal: the numeric
// pipeline only needs row access and element addressing.
struct NumericMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    NumericMatrix() = default;
    NumericMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data.data() + r * cols, cols);
    }
    std::span<double> row(std::size_t r) {
        return std::span<double>(data.data() + r * cols, cols);
    }
};

}  // namespace matchflow
