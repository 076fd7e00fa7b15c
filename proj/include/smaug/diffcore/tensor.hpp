#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smaug::diff {

using Shape = std::vector<std::size_t>;
using NodeId = std::size_t;

class Tape;

/// Raised for any shape contract violation; the message names the shapes involved.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

/// Dense row-major array of doubles. Values are immutable once created; a
/// tensor that lives on a tape additionally carries the id of the node that
/// produced it.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  /// Rank-2 tensor from nested rows (all rows must have equal length).
  static Tensor matrix(const std::vector<std::vector<double>>& rows);

  bool defined() const noexcept { return static_cast<bool>(data_); }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_ ? data_->size() : 0; }
  /// Leading extent.
  std::size_t rows() const { return shape_.at(0); }
  /// Product of all but the leading extent.
  std::size_t row_size() const { return rows() == 0 ? 0 : size() / rows(); }

  std::span<const double> data() const { return data_ ? std::span<const double>(*data_) : std::span<const double>(); }
  std::vector<double> to_vector() const { return data_ ? *data_ : std::vector<double>{}; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  Tape* tape() const noexcept { return tape_; }
  std::optional<NodeId> node() const noexcept;
  bool requires_grad() const noexcept { return tape_ != nullptr; }
  /// Same values, detached from any tape.
  Tensor detach() const;

  const std::shared_ptr<const std::vector<double>>& storage() const noexcept { return data_; }

 private:
  friend class Tape;
  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  NodeId node_ = 0;
};

/// Exact equality of shape and every value (bitwise for non-NaN values).
bool same_values(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace smaug::diff
