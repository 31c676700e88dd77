#pragma once

#include <cassert>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ordrisk {

/// Dense row-major matrix of doubles. Rows are observations, columns predictors.
class RowMatrix {
public:
    RowMatrix() = default;

    RowMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    RowMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) throw std::invalid_argument("RowMatrix: value count does not match shape");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    double operator()(std::size_t r, std::size_t c) const noexcept {
        assert(r < rows_ && c < cols_);
        return values_[r * cols_ + c];
    }
    double& operator()(std::size_t r, std::size_t c) noexcept {
        assert(r < rows_ && c < cols_);
        return values_[r * cols_ + c];
    }

    std::span<const double> row(std::size_t r) const noexcept { return {values_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }

    std::span<const double> values() const noexcept { return values_; }

    /// New matrix holding the listed rows, in the listed order (repeats allowed).
    RowMatrix select_rows(std::span<const std::size_t> indices) const {
        RowMatrix out(indices.size(), cols_);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            const auto src = row(indices[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    /// Cell-wise equality where two NaN (missing) cells compare equal.
    friend bool operator==(const RowMatrix& a, const RowMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
        for (std::size_t i = 0; i < a.values_.size(); ++i) {
            const double x = a.values_[i];
            const double y = b.values_[i];
            if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
        }
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

} // namespace ordrisk
