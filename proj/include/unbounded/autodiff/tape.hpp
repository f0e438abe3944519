#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unbounded::autodiff {

/// Elementary operations a Tape can record. `*_const` kinds carry the
/// non-recorded operand in Node::constant.
enum class OpKind : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  div,
  neg,
  add_const,  // a + c
  mul_const,  // a * c
  div_const,  // a / c
  rsub_const, // c - a
  rdiv_const, // c / a
  tanh,
  exp,
  sin,
  cos,
  pow_int,    // a^n, n stored in constant
  silu,
};

std::string_view op_name(OpKind kind);

/// Thrown when a differentiable computation reaches a primitive outside the
/// supported closed set (+, -, *, /, tanh, exp, sin, cos, integer power, silu).
class UnsupportedPrimitive : public std::logic_error {
 public:
  explicit UnsupportedPrimitive(std::string_view primitive);
  const std::string& primitive() const noexcept { return primitive_; }

 private:
  std::string primitive_;
};

class Tape;

/// Scalar whose arithmetic is recorded on a Tape. A default-constructed or
/// double-constructed TapeScalar is a constant and lives on no tape; mixing
/// it with recorded scalars records unary `*_const` nodes.
class TapeScalar {
 public:
  TapeScalar() = default;
  TapeScalar(double constant) : value_(constant) {}  // NOLINT(implicit)

  double value() const noexcept { return value_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::uint32_t node() const noexcept { return node_; }

 private:
  friend class Tape;
  TapeScalar(double value, Tape* tape, std::uint32_t node)
      : value_(value), tape_(tape), node_(node) {}

  double value_ = 0.0;
  Tape* tape_ = nullptr;
  std::uint32_t node_ = 0;
};

/// Append-only record of elementary operations for reverse accumulation.
/// Single writer; independent tapes may live on different threads.
class Tape {
 public:
  struct Node {
    OpKind kind = OpKind::leaf;
    std::uint8_t arity = 0;
    std::array<std::uint32_t, 2> parents{};
    std::array<double, 2> partials{};
    double constant = 0.0;
    double value = 0.0;
  };

  TapeScalar variable(double value);
  std::vector<TapeScalar> variables(std::span<const double> values);

  /// Appends a node. Parents must already be recorded on this tape.
  TapeScalar record(OpKind kind, std::span<const TapeScalar> parents,
                    std::span<const double> partials, double value,
                    double constant = 0.0);

  /// d(root)/d(leaf_i) by reverse accumulation. Constant leaves and leaves
  /// not on any path to root get 0. Scalars from another tape throw.
  std::vector<double> backward(const TapeScalar& root,
                               std::span<const TapeScalar> leaves) const;

  /// Recomputes every node value from the leaf values in recording order.
  std::vector<double> replay() const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t index) const { return nodes_.at(index); }
  void truncate(std::size_t size);
  void clear() noexcept { nodes_.clear(); }

  bool owns(const TapeScalar& s) const noexcept { return s.tape() == this; }

 private:
  std::vector<Node> nodes_;
};

TapeScalar operator+(const TapeScalar& a, const TapeScalar& b);
TapeScalar operator-(const TapeScalar& a, const TapeScalar& b);
TapeScalar operator*(const TapeScalar& a, const TapeScalar& b);
TapeScalar operator/(const TapeScalar& a, const TapeScalar& b);
TapeScalar operator-(const TapeScalar& a);

inline TapeScalar& operator+=(TapeScalar& a, const TapeScalar& b) { return a = a + b; }
inline TapeScalar& operator-=(TapeScalar& a, const TapeScalar& b) { return a = a - b; }
inline TapeScalar& operator*=(TapeScalar& a, const TapeScalar& b) { return a = a * b; }
inline TapeScalar& operator/=(TapeScalar& a, const TapeScalar& b) { return a = a / b; }

TapeScalar tanh(const TapeScalar& a);
TapeScalar exp(const TapeScalar& a);
TapeScalar sin(const TapeScalar& a);
TapeScalar cos(const TapeScalar& a);
TapeScalar pow(const TapeScalar& a, int n);
TapeScalar silu(const TapeScalar& a);

// Outside the supported set. Present so generic code fails loudly at run
// time with the primitive's name instead of silently dropping derivatives.
TapeScalar log(const TapeScalar& a);
TapeScalar sqrt(const TapeScalar& a);
TapeScalar abs(const TapeScalar& a);
TapeScalar atan(const TapeScalar& a);

/// silu(x) = x / (1 + e^-x) on plain doubles; shared by every evaluation path.
double silu(double x);

inline double value_of(double x) { return x; }
inline double value_of(const TapeScalar& x) { return x.value(); }

}  // namespace unbounded::autodiff
