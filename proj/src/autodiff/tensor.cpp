#include "supplycast/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "supplycast/errors.hpp"

namespace supplycast::ad {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("tensor of shape [" + std::to_string(rows) + ", " + std::to_string(cols) +
                         "] given " + std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::row(std::vector<double> v) {
    const auto n = v.size();
    return Tensor(1, n, std::move(v));
}

Tensor Tensor::column(std::vector<double> v) {
    const auto n = v.size();
    return Tensor(n, 1, std::move(v));
}

double Tensor::item() const {
    if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string());
    return data_[0];
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
        throw ShapeError("cannot accumulate " + other.shape_string() + " into " + shape_string());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

std::string Tensor::shape_string() const {
    return "[" + std::to_string(rows_) + ", " + std::to_string(cols_) + "]";
}

}  // namespace supplycast::ad
