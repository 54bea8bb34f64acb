#include "mrc/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "mrc/errors.hpp"

namespace mrc {

namespace {
Precision g_precision = Precision::kFloat64;

void check_extents(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
  for (std::size_t e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
  }
}
}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

void set_precision(Precision p) noexcept { g_precision = p; }
Precision precision() noexcept { return g_precision; }

double storage_round(double v) noexcept {
  if (g_precision == Precision::kFloat32) return static_cast<double>(static_cast<float>(v));
  return v;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str(shape_));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw ShapeError("expected a matrix, got " + shape_str(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw ShapeError("expected a matrix, got " + shape_str(shape_));
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape_));
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (shape_ != other.shape_) {
    throw ShapeError("cannot accumulate " + shape_str(other.shape_) + " into " + shape_str(shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Mask::Mask(Shape shape, bool fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  valid_.assign(shape_numel(shape_), fill ? 1 : 0);
}

Mask::Mask(Shape shape, std::vector<std::uint8_t> valid)
    : shape_(std::move(shape)), valid_(std::move(valid)) {
  check_extents(shape_);
  if (valid_.size() != shape_numel(shape_)) {
    throw ShapeError("mask length does not match shape " + shape_str(shape_));
  }
}

Mask Mask::outer(std::span<const std::uint8_t> row_valid, std::span<const std::uint8_t> col_valid) {
  std::vector<std::uint8_t> v(row_valid.size() * col_valid.size());
  for (std::size_t i = 0; i < row_valid.size(); ++i) {
    for (std::size_t j = 0; j < col_valid.size(); ++j) {
      v[i * col_valid.size() + j] = (row_valid[i] && col_valid[j]) ? 1 : 0;
    }
  }
  return Mask({row_valid.size(), col_valid.size()}, std::move(v));
}

Mask Mask::row(std::span<const std::uint8_t> valid) {
  return Mask({1, valid.size()}, std::vector<std::uint8_t>(valid.begin(), valid.end()));
}

}  // namespace mrc
