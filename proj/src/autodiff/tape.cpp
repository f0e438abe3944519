#include "unbounded/autodiff/tape.hpp"

#include <cmath>
#include <limits>

namespace unbounded::autodiff {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::neg: return "neg";
    case OpKind::add_const: return "add_const";
    case OpKind::mul_const: return "mul_const";
    case OpKind::div_const: return "div_const";
    case OpKind::rsub_const: return "rsub_const";
    case OpKind::rdiv_const: return "rdiv_const";
    case OpKind::tanh: return "tanh";
    case OpKind::exp: return "exp";
    case OpKind::sin: return "sin";
    case OpKind::cos: return "cos";
    case OpKind::pow_int: return "pow_int";
    case OpKind::silu: return "silu";
  }
  return "unknown";
}

UnsupportedPrimitive::UnsupportedPrimitive(std::string_view primitive)
    : std::logic_error("unsupported primitive in differentiable code: " +
                       std::string(primitive)),
      primitive_(primitive) {}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double silu_prime(double x) {
  const double s = sigmoid(x);
  return s + x * s * (1.0 - s);
}

double ipow(double a, int n) {
  double r = 1.0;
  double base = a;
  unsigned m = static_cast<unsigned>(n < 0 ? -n : n);
  while (m != 0) {
    if (m & 1u) r *= base;
    base *= base;
    m >>= 1u;
  }
  return n < 0 ? 1.0 / r : r;
}

double apply(OpKind kind, double a, double b, double c) {
  switch (kind) {
    case OpKind::add: return a + b;
    case OpKind::sub: return a - b;
    case OpKind::mul: return a * b;
    case OpKind::div: return a / b;
    case OpKind::neg: return -a;
    case OpKind::add_const: return a + c;
    case OpKind::mul_const: return a * c;
    case OpKind::div_const: return a / c;
    case OpKind::rsub_const: return c - a;
    case OpKind::rdiv_const: return c / a;
    case OpKind::tanh: return std::tanh(a);
    case OpKind::exp: return std::exp(a);
    case OpKind::sin: return std::sin(a);
    case OpKind::cos: return std::cos(a);
    case OpKind::pow_int: return ipow(a, static_cast<int>(c));
    case OpKind::silu: return silu(a);
    case OpKind::leaf: break;
  }
  throw std::logic_error("apply: leaf has no forward rule");
}

Tape* common_tape(const TapeScalar& a, const TapeScalar& b) {
  if (a.tape() != nullptr && b.tape() != nullptr && a.tape() != b.tape()) {
    throw std::logic_error("TapeScalar operands were recorded on different tapes");
  }
  return a.tape() != nullptr ? a.tape() : b.tape();
}

TapeScalar unary(OpKind kind, const TapeScalar& a, double partial, double value,
                 double constant = 0.0) {
  const std::array<TapeScalar, 1> parents{a};
  const std::array<double, 1> partials{partial};
  return a.tape()->record(kind, parents, partials, value, constant);
}

TapeScalar binary(OpKind kind, const TapeScalar& a, const TapeScalar& b,
                  double pa, double pb, double value) {
  const std::array<TapeScalar, 2> parents{a, b};
  const std::array<double, 2> partials{pa, pb};
  return a.tape()->record(kind, parents, partials, value);
}

}  // namespace

TapeScalar Tape::variable(double value) {
  Node n;
  n.kind = OpKind::leaf;
  n.value = value;
  nodes_.push_back(n);
  return TapeScalar(value, this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

std::vector<TapeScalar> Tape::variables(std::span<const double> values) {
  std::vector<TapeScalar> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(variable(v));
  return out;
}

TapeScalar Tape::record(OpKind kind, std::span<const TapeScalar> parents,
                        std::span<const double> partials, double value,
                        double constant) {
  if (parents.size() != partials.size() || parents.size() > 2) {
    throw std::invalid_argument("Tape::record: parents/partials arity mismatch");
  }
  if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw std::length_error("Tape::record: tape is full");
  }
  Node n;
  n.kind = kind;
  n.arity = static_cast<std::uint8_t>(parents.size());
  n.constant = constant;
  n.value = value;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    if (parents[i].tape() != this) {
      throw std::logic_error("Tape::record: parent is not on this tape");
    }
    n.parents[i] = parents[i].node();
    n.partials[i] = partials[i];
  }
  nodes_.push_back(n);
  return TapeScalar(value, this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

std::vector<double> Tape::backward(const TapeScalar& root,
                                   std::span<const TapeScalar> leaves) const {
  std::vector<double> grad(leaves.size(), 0.0);
  for (const auto& leaf : leaves) {
    if (leaf.tape() != nullptr && leaf.tape() != this) {
      throw std::logic_error("Tape::backward: leaf belongs to a different tape");
    }
  }
  if (root.is_constant()) return grad;
  if (root.tape() != this) {
    throw std::logic_error("Tape::backward: root belongs to a different tape");
  }
  if (root.node() >= nodes_.size()) {
    throw std::out_of_range("Tape::backward: root was truncated away");
  }

  std::vector<double> adjoint(root.node() + 1, 0.0);
  adjoint[root.node()] = 1.0;
  for (std::size_t i = root.node() + 1; i-- > 0;) {
    const double a = adjoint[i];
    if (a == 0.0) continue;
    const Node& n = nodes_[i];
    for (std::uint8_t p = 0; p < n.arity; ++p) {
      adjoint[n.parents[p]] += a * n.partials[p];
    }
  }
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i].is_constant()) continue;
    if (leaves[i].node() < adjoint.size()) grad[i] = adjoint[leaves[i].node()];
  }
  return grad;
}

std::vector<double> Tape::replay() const {
  std::vector<double> values(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.kind == OpKind::leaf) {
      values[i] = n.value;
      continue;
    }
    const double a = values[n.parents[0]];
    const double b = n.arity > 1 ? values[n.parents[1]] : 0.0;
    values[i] = apply(n.kind, a, b, n.constant);
  }
  return values;
}

void Tape::truncate(std::size_t size) {
  if (size < nodes_.size()) nodes_.resize(size);
}

TapeScalar operator+(const TapeScalar& a, const TapeScalar& b) {
  common_tape(a, b);
  if (a.is_constant() && b.is_constant()) return TapeScalar(a.value() + b.value());
  if (b.is_constant()) return unary(OpKind::add_const, a, 1.0, a.value() + b.value(), b.value());
  if (a.is_constant()) return unary(OpKind::add_const, b, 1.0, a.value() + b.value(), a.value());
  return binary(OpKind::add, a, b, 1.0, 1.0, a.value() + b.value());
}

TapeScalar operator-(const TapeScalar& a, const TapeScalar& b) {
  common_tape(a, b);
  if (a.is_constant() && b.is_constant()) return TapeScalar(a.value() - b.value());
  if (b.is_constant()) return unary(OpKind::add_const, a, 1.0, a.value() - b.value(), -b.value());
  if (a.is_constant()) return unary(OpKind::rsub_const, b, -1.0, a.value() - b.value(), a.value());
  return binary(OpKind::sub, a, b, 1.0, -1.0, a.value() - b.value());
}

TapeScalar operator*(const TapeScalar& a, const TapeScalar& b) {
  common_tape(a, b);
  if (a.is_constant() && b.is_constant()) return TapeScalar(a.value() * b.value());
  if (b.is_constant()) return unary(OpKind::mul_const, a, b.value(), a.value() * b.value(), b.value());
  if (a.is_constant()) return unary(OpKind::mul_const, b, a.value(), a.value() * b.value(), a.value());
  return binary(OpKind::mul, a, b, b.value(), a.value(), a.value() * b.value());
}

TapeScalar operator/(const TapeScalar& a, const TapeScalar& b) {
  common_tape(a, b);
  const double q = a.value() / b.value();
  if (a.is_constant() && b.is_constant()) return TapeScalar(q);
  if (b.is_constant()) return unary(OpKind::div_const, a, 1.0 / b.value(), q, b.value());
  if (a.is_constant()) {
    return unary(OpKind::rdiv_const, b, -q / b.value(), q, a.value());
  }
  return binary(OpKind::div, a, b, 1.0 / b.value(), -q / b.value(), q);
}

TapeScalar operator-(const TapeScalar& a) {
  if (a.is_constant()) return TapeScalar(-a.value());
  return unary(OpKind::neg, a, -1.0, -a.value());
}

TapeScalar tanh(const TapeScalar& a) {
  const double t = std::tanh(a.value());
  if (a.is_constant()) return TapeScalar(t);
  return unary(OpKind::tanh, a, 1.0 - t * t, t);
}

TapeScalar exp(const TapeScalar& a) {
  const double e = std::exp(a.value());
  if (a.is_constant()) return TapeScalar(e);
  return unary(OpKind::exp, a, e, e);
}

TapeScalar sin(const TapeScalar& a) {
  const double s = std::sin(a.value());
  if (a.is_constant()) return TapeScalar(s);
  return unary(OpKind::sin, a, std::cos(a.value()), s);
}

TapeScalar cos(const TapeScalar& a) {
  const double c = std::cos(a.value());
  if (a.is_constant()) return TapeScalar(c);
  return unary(OpKind::cos, a, -std::sin(a.value()), c);
}

TapeScalar pow(const TapeScalar& a, int n) {
  const double v = ipow(a.value(), n);
  if (a.is_constant()) return TapeScalar(v);
  const double d = n == 0 ? 0.0 : n * ipow(a.value(), n - 1);
  return unary(OpKind::pow_int, a, d, v, static_cast<double>(n));
}

TapeScalar silu(const TapeScalar& a) {
  const double v = silu(a.value());
  if (a.is_constant()) return TapeScalar(v);
  return unary(OpKind::silu, a, silu_prime(a.value()), v);
}

TapeScalar log(const TapeScalar&) { throw UnsupportedPrimitive("log"); }
TapeScalar sqrt(const TapeScalar&) { throw UnsupportedPrimitive("sqrt"); }
TapeScalar abs(const TapeScalar&) { throw UnsupportedPrimitive("abs"); }
TapeScalar atan(const TapeScalar&) { throw UnsupportedPrimitive("atan"); }

}  // namespace unbounded::autodiff
