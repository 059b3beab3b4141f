#include "fdl/tensor.hpp"

#include <cmath>
#include <sstream>

#include "fdl/errors.hpp"

namespace fdl {

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << rows << 'x' << cols << 'x' << height << 'x' << width << ')';
  return os.str();
}

Tensor4::Tensor4(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor4::Tensor4(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

Tensor4 Tensor4::delta(std::size_t n) {
  if (n % 2 == 0) throw ConfigError("delta size must be odd");
  Tensor4 t = image(n, n);
  t(n / 2, n / 2) = 1.0;
  return t;
}

bool Tensor4::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor4& Tensor4::operator+=(const Tensor4& other) {
  require_same_shape(*this, other, "add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor4& Tensor4::operator-=(const Tensor4& other) {
  require_same_shape(*this, other, "subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor4& Tensor4::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor4 operator+(Tensor4 a, const Tensor4& b) { return a += b; }
Tensor4 operator-(Tensor4 a, const Tensor4& b) { return a -= b; }
Tensor4 operator*(Tensor4 a, double s) { return a *= s; }
Tensor4 operator*(double s, Tensor4 a) { return a *= s; }

double dot(const Tensor4& a, const Tensor4& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

double squared_norm(const Tensor4& a) { return dot(a, a); }

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double max_abs(const Tensor4& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shapes " + a.shape().str() + " and " +
                     b.shape().str() + " differ");
  }
}

void require_finite(const Tensor4& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string(what) + ": non-finite value");
}

}  // namespace fdl
