#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "dn/eval.hpp"

namespace dn {

struct Point {
  std::vector<double> coords;
  int dim() const { return static_cast<int>(coords.size()); }
};

// A constructor path through a first-order data type: 0/1 for sum branches,
// 2 for a mu-unfolding. The payload is the sequence of real slots met along
// the way (pre-order), so values of one shape flatten to points of one
// arity.
using ShapePath = std::vector<uint8_t>;

struct FlatShape {
  ShapePath path;
  int arity = 0;
};

// All constructor paths of a data type with at most `depth` mu-unfoldings
// per recursive spine. Throws std::invalid_argument on arrows/tangents.
std::vector<FlatShape> enumerate_shapes(const TypePtr& ty, int depth = 6);

// Builds the value of `ty` along `shape.path` whose real slots are `xs`.
ValuePtr shape_encode(const TypePtr& ty, const FlatShape& shape,
                      const std::vector<double>& xs);

// As shape_encode, but every real slot r becomes the dual pair (r, w) with
// its tangent from `ws` (the interleaving of x and w).
ValuePtr shape_encode_dual(const TypePtr& ty, const FlatShape& shape,
                           const std::vector<double>& xs,
                           const std::vector<Tangent>& ws);

struct Flattened {
  ShapePath path;
  std::vector<double> scalars;
};

struct FlatDual {
  ShapePath path;
  std::vector<double> primal;
  std::vector<Tangent> tangent;
};

// Type-directed-free flattening of a first-order runtime value; nullopt when
// the value contains closures or tangents.
std::optional<Flattened> flatten_value(const ValuePtr& v);

// Flattening of a value of a dual type D[tau]: real slots appear as
// (scalar, tangent) pairs.
std::optional<FlatDual> flatten_dual(const ValuePtr& v);

// A sampled program under test, already composed down to flattened points.
using FlatFn = std::function<std::optional<Flattened>(const Point&)>;

struct FdJvp {
  bool ok = false;
  ShapePath out_path;           // common shape of both probes
  std::vector<double> deriv;    // (F(x+hv) - F(x-hv)) / 2h
  std::string why;              // rejection reason when !ok
};

// Central-difference directional derivative. Rejects (ok=false) when either
// probe is undefined or the probes land in different output shapes.
FdJvp fd_jvp(const FlatFn& f, const Point& x, const Point& v,
             double h = 1e-5);

struct JacobianRecord {
  Point x;
  ShapePath out_path;
  // J[i][j] = d out_i / d x_j; l rows, s columns.
  std::vector<std::vector<double>> matrix;
  bool valid = false;
  std::string why;
};

JacobianRecord fd_jacobian(const FlatFn& f, const Point& x, double h = 1e-5);

// The interleaving iota_{n,k}: pairs coordinates with their tangents.
std::vector<std::pair<double, Tangent>> interleave(
    const Point& x, const std::vector<Tangent>& w);
std::pair<Point, std::vector<Tangent>> deinterleave(
    const std::vector<std::pair<double, Tangent>>& duals);

}  // namespace dn
