#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mrc {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Numeric mode of the engine. Arithmetic always runs in double; in
// kFloat32 mode parameter storage (initialisation, optimizer updates and
// checkpoints) is rounded to binary32. Gradient checks need kFloat64.
enum class Precision { kFloat64, kFloat32 };

void set_precision(Precision p) noexcept;
Precision precision() noexcept;
// Rounds to binary32 when the engine is in kFloat32 mode, identity otherwise.
double storage_round(double v) noexcept;

class PrecisionGuard {
 public:
  explicit PrecisionGuard(Precision p) : saved_(precision()) { set_precision(p); }
  ~PrecisionGuard() { set_precision(saved_); }
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  Precision saved_;
};

// Dense row-major array. Every extent is positive and
// data().size() == product(shape()).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor row(std::span<const double> values);
  static Tensor scalar(double v) { return Tensor({1, 1}, v); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Matrix view of a rank-2 tensor; throws ShapeError for other ranks.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const noexcept {
    return data_[r * shape_[1] + c];
  }
  double item() const;

  void fill(double v);
  Tensor& operator+=(const Tensor& other);

  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Validity mask with a shape; true marks a valid (unpadded) position.
class Mask {
 public:
  Mask() = default;
  Mask(Shape shape, bool fill);
  Mask(Shape shape, std::vector<std::uint8_t> valid);

  // rows x cols mask where entry (i, j) = row_valid[i] && col_valid[j].
  static Mask outer(std::span<const std::uint8_t> row_valid,
                    std::span<const std::uint8_t> col_valid);
  // 1 x n mask.
  static Mask row(std::span<const std::uint8_t> valid);

  const Shape& shape() const noexcept { return shape_; }
  bool operator[](std::size_t i) const noexcept { return valid_[i] != 0; }
  bool at(std::size_t r, std::size_t c) const noexcept {
    return valid_[r * shape_[1] + c] != 0;
  }
  std::span<const std::uint8_t> values() const noexcept { return valid_; }

 private:
  Shape shape_;
  std::vector<std::uint8_t> valid_;
};

}  // namespace mrc
