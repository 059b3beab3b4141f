#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fdl {

// Dimensions of a 4-D tensor. For filter banks `rows` is the output-channel
// axis and `cols` the input-channel axis; feature maps use rows = channels,
// cols = 1; images are (1, 1, height, width).
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t plane() const { return height * width; }
  std::size_t size() const { return rows * cols * height * width; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense row-major 4-D array of doubles. Value type; no broadcasting.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape shape, double fill = 0.0);
  Tensor4(std::size_t rows, std::size_t cols, std::size_t height, std::size_t width,
          double fill = 0.0)
      : Tensor4(Shape{rows, cols, height, width}, fill) {}
  Tensor4(Shape shape, std::vector<double> data);

  static Tensor4 image(std::size_t height, std::size_t width, double fill = 0.0) {
    return Tensor4(1, 1, height, width, fill);
  }
  // Kronecker delta of size (1,1,n,n) with the unit sample at the centre.
  static Tensor4 delta(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t r, std::size_t c, std::size_t i, std::size_t j) {
    return data_[index(r, c, i, j)];
  }
  double at(std::size_t r, std::size_t c, std::size_t i, std::size_t j) const {
    return data_[index(r, c, i, j)];
  }
  // Pixel access for images.
  double& operator()(std::size_t i, std::size_t j) { return at(0, 0, i, j); }
  double operator()(std::size_t i, std::size_t j) const { return at(0, 0, i, j); }

  std::span<double> plane(std::size_t r, std::size_t c) {
    return {data_.data() + (r * shape_.cols + c) * shape_.plane(), shape_.plane()};
  }
  std::span<const double> plane(std::size_t r, std::size_t c) const {
    return {data_.data() + (r * shape_.cols + c) * shape_.plane(), shape_.plane()};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  std::size_t index(std::size_t r, std::size_t c, std::size_t i, std::size_t j) const {
    return ((r * shape_.cols + c) * shape_.height + i) * shape_.width + j;
  }

  bool is_image() const { return shape_.rows == 1 && shape_.cols == 1; }
  bool all_finite() const;

  Tensor4& operator+=(const Tensor4& other);
  Tensor4& operator-=(const Tensor4& other);
  Tensor4& operator*=(double s);

 private:
  Shape shape_{};
  std::vector<double> data_;
};

Tensor4 operator+(Tensor4 a, const Tensor4& b);
Tensor4 operator-(Tensor4 a, const Tensor4& b);
Tensor4 operator*(Tensor4 a, double s);
Tensor4 operator*(double s, Tensor4 a);

double dot(const Tensor4& a, const Tensor4& b);
double squared_norm(const Tensor4& a);
double max_abs_diff(const Tensor4& a, const Tensor4& b);
double max_abs(const Tensor4& a);

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what);
// Throws NumericError if any element is NaN or Inf.
void require_finite(const Tensor4& t, const char* what);

}  // namespace fdl
