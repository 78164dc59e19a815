#pragma once

#include <map>
#include <memory>
#include <vector>

#include "dn/ast.hpp"
#include "dn/prims.hpp"

namespace dn {

// Width parameter of the tangent space: a natural number k, or infinity
// (tangents of unbounded support).
struct KSemantics {
  bool is_infinite = false;
  int k = 1;
  static KSemantics finite(int k) { return {false, k}; }
  static KSemantics infinite() { return {true, 0}; }
};

// Tangent vectors: dense length-k under finite semantics, sparse
// index -> coefficient (indices >= 1, zeros never stored) under infinite.
struct Tangent {
  bool infinite = false;
  std::vector<double> dense;
  std::map<int, double> sparse;

  static Tangent zero(const KSemantics& ks);
  static Tangent basis(int i, const KSemantics& ks);
  static Tangent add(const Tangent& a, const Tangent& b);
  static Tangent scale(const Tangent& t, double c);
  double coeff(int i) const;  // 1-based
  bool operator==(const Tangent& o) const;
};

struct Value;
using ValuePtr = std::shared_ptr<const Value>;

struct EnvNode;
using EnvPtr = std::shared_ptr<const EnvNode>;

enum class ValueKind { Scalar, Unit, Pair, Inl, Inr, Closure, Rolled, Tan };

struct Value {
  ValueKind kind;
  double scalar = 0.0;
  ValuePtr a, b;       // Pair parts, Inl/Inr/Rolled payload in `a`
  std::string binder;  // Closure
  TermPtr body;        // Closure
  EnvPtr env;          // Closure
  Tangent tangent;     // Tan

  explicit Value(ValueKind k) : kind(k) {}
};

ValuePtr v_scalar(double x);
ValuePtr v_unit();
ValuePtr v_pair(ValuePtr a, ValuePtr b);
ValuePtr v_inl(ValuePtr a);
ValuePtr v_inr(ValuePtr a);
ValuePtr v_roll(ValuePtr a);
ValuePtr v_tangent(Tangent t);

// Structural equality; tangents compare by coefficients, closures never
// compare equal.
bool value_eq(const ValuePtr& x, const ValuePtr& y);

// Canonical printing, e.g. (9.0, {1: 6.0}).
std::string show_value(const ValuePtr& v);

enum class BottomReason { Diverged, Undefined };

struct EvalOutcome {
  bool ok = false;
  ValuePtr value;             // when ok
  BottomReason reason = BottomReason::Diverged;
  std::string detail;         // e.g. the op symbol for Undefined

  static EvalOutcome success(ValuePtr v) { return {true, std::move(v)}; }
  static EvalOutcome bottom(BottomReason r, std::string d = {}) {
    return {false, nullptr, r, std::move(d)};
  }
};

struct EvalConfig {
  KSemantics k = KSemantics::finite(1);
  long long fuel = 1'000'000;
  const Registry* registry = &Registry::builtins();
};

// Big-step CBV evaluation of a closed term. Elimination steps consume fuel;
// running out yields Bottom(Diverged); sign at zero and out-of-domain
// primitive applications yield Bottom(Undefined).
EvalOutcome evaluate(const TermPtr& t, const EvalConfig& cfg = {});

// Applies an already evaluated function value to an argument value.
EvalOutcome apply_value(const ValuePtr& fn, const ValuePtr& arg,
                        const EvalConfig& cfg = {});

// The projection handler p_s: first s coefficients of a tangent.
std::vector<double> handler_project(const Tangent& t, int s);

// Sum of c_i * e_i under the given semantics.
Tangent tangent_of(const std::vector<double>& coeffs, const KSemantics& ks);

}  // namespace dn
