#include "dn/diffcalc.hpp"

#include <stdexcept>

namespace dn {

namespace {

// Continuation-passing enumeration so product shapes concatenate.
void shapes_k(const TypePtr& ty, int depth, FlatShape cur,
              const std::function<void(FlatShape)>& k) {
  switch (ty->kind) {
    case TypeKind::Real:
      cur.arity += 1;
      k(std::move(cur));
      return;
    case TypeKind::Unit:
      k(std::move(cur));
      return;
    case TypeKind::Void:
      return;  // no inhabitants
    case TypeKind::Sum: {
      FlatShape l = cur;
      l.path.push_back(0);
      shapes_k(ty->a, depth, std::move(l), k);
      cur.path.push_back(1);
      shapes_k(ty->b, depth, std::move(cur), k);
      return;
    }
    case TypeKind::Prod:
      shapes_k(ty->a, depth, std::move(cur), [&](FlatShape mid) {
        shapes_k(ty->b, depth, std::move(mid), k);
      });
      return;
    case TypeKind::Mu: {
      // d counts recursive descents: a list of length n uses n+1 rolls but
      // only n of them recurse, so depth d covers lengths 0..d.
      if (depth < 0) return;
      cur.path.push_back(2);
      auto unrolled = substitute_type(ty->a, ty->name, ty);
      shapes_k(unrolled, depth - 1, std::move(cur), k);
      return;
    }
    case TypeKind::Arrow:
    case TypeKind::TVar:
    case TypeKind::Tangent:
    case TypeKind::Meta:
      throw std::invalid_argument("not a closed data type: " +
                                  show_type(ty));
  }
}

struct EncodeState {
  const ShapePath& path;
  size_t pi = 0;
  const std::vector<double>* xs = nullptr;
  const std::vector<Tangent>* ws = nullptr;  // dual encoding when set
  size_t xi = 0;

  uint8_t take_code() {
    if (pi >= path.size())
      throw std::invalid_argument("shape path too short for type");
    return path[pi++];
  }
  double take_scalar() {
    if (xi >= xs->size())
      throw std::invalid_argument("point arity mismatch for shape");
    return (*xs)[xi++];
  }
};

ValuePtr encode_rec(const TypePtr& ty, EncodeState& st) {
  switch (ty->kind) {
    case TypeKind::Real: {
      size_t slot = st.xi;
      double x = st.take_scalar();
      if (st.ws) return v_pair(v_scalar(x), v_tangent((*st.ws)[slot]));
      return v_scalar(x);
    }
    case TypeKind::Unit:
      return v_unit();
    case TypeKind::Sum: {
      uint8_t c = st.take_code();
      if (c == 0) return v_inl(encode_rec(ty->a, st));
      if (c == 1) return v_inr(encode_rec(ty->b, st));
      throw std::invalid_argument("shape path does not match sum");
    }
    case TypeKind::Prod: {
      auto a = encode_rec(ty->a, st);
      auto b = encode_rec(ty->b, st);
      return v_pair(std::move(a), std::move(b));
    }
    case TypeKind::Mu: {
      if (st.take_code() != 2)
        throw std::invalid_argument("shape path does not match mu");
      auto unrolled = substitute_type(ty->a, ty->name, ty);
      return v_roll(encode_rec(unrolled, st));
    }
    default:
      throw std::invalid_argument("not a data type: " + show_type(ty));
  }
}

ValuePtr encode_top(const TypePtr& ty, const FlatShape& shape,
                    const std::vector<double>& xs,
                    const std::vector<Tangent>* ws) {
  if (static_cast<int>(xs.size()) != shape.arity)
    throw std::invalid_argument("point arity mismatch for shape");
  EncodeState st{shape.path};
  st.xs = &xs;
  st.ws = ws;
  auto v = encode_rec(ty, st);
  if (st.pi != shape.path.size() || st.xi != xs.size())
    throw std::invalid_argument("shape does not match type");
  return v;
}

bool flatten_rec(const ValuePtr& v, ShapePath& path,
                 std::vector<double>& scalars) {
  switch (v->kind) {
    case ValueKind::Scalar:
      scalars.push_back(v->scalar);
      return true;
    case ValueKind::Unit:
      return true;
    case ValueKind::Pair:
      return flatten_rec(v->a, path, scalars) &&
             flatten_rec(v->b, path, scalars);
    case ValueKind::Inl:
      path.push_back(0);
      return flatten_rec(v->a, path, scalars);
    case ValueKind::Inr:
      path.push_back(1);
      return flatten_rec(v->a, path, scalars);
    case ValueKind::Rolled:
      path.push_back(2);
      return flatten_rec(v->a, path, scalars);
    case ValueKind::Closure:
    case ValueKind::Tan:
      return false;
  }
  return false;
}

bool flatten_dual_rec(const ValuePtr& v, FlatDual& out) {
  switch (v->kind) {
    case ValueKind::Pair:
      // A dual real slot is the pair (scalar, tangent).
      if (v->a->kind == ValueKind::Scalar && v->b->kind == ValueKind::Tan) {
        out.primal.push_back(v->a->scalar);
        out.tangent.push_back(v->b->tangent);
        return true;
      }
      return flatten_dual_rec(v->a, out) && flatten_dual_rec(v->b, out);
    case ValueKind::Unit:
      return true;
    case ValueKind::Inl:
      out.path.push_back(0);
      return flatten_dual_rec(v->a, out);
    case ValueKind::Inr:
      out.path.push_back(1);
      return flatten_dual_rec(v->a, out);
    case ValueKind::Rolled:
      out.path.push_back(2);
      return flatten_dual_rec(v->a, out);
    case ValueKind::Scalar:
    case ValueKind::Closure:
    case ValueKind::Tan:
      return false;
  }
  return false;
}

}  // namespace

std::vector<FlatShape> enumerate_shapes(const TypePtr& ty, int depth) {
  std::vector<FlatShape> out;
  shapes_k(ty, depth, {}, [&](FlatShape s) { out.push_back(std::move(s)); });
  return out;
}

ValuePtr shape_encode(const TypePtr& ty, const FlatShape& shape,
                      const std::vector<double>& xs) {
  return encode_top(ty, shape, xs, nullptr);
}

ValuePtr shape_encode_dual(const TypePtr& ty, const FlatShape& shape,
                           const std::vector<double>& xs,
                           const std::vector<Tangent>& ws) {
  if (ws.size() != xs.size())
    throw std::invalid_argument("tangent count must match point arity");
  return encode_top(ty, shape, xs, &ws);
}

std::optional<Flattened> flatten_value(const ValuePtr& v) {
  Flattened f;
  if (!flatten_rec(v, f.path, f.scalars)) return std::nullopt;
  return f;
}

std::optional<FlatDual> flatten_dual(const ValuePtr& v) {
  FlatDual f;
  if (!flatten_dual_rec(v, f)) return std::nullopt;
  return f;
}

FdJvp fd_jvp(const FlatFn& f, const Point& x, const Point& v, double h) {
  if (x.dim() != v.dim())
    throw std::invalid_argument("fd_jvp: dimension mismatch");
  if (!(h > 0)) throw std::invalid_argument("fd_jvp: h must be positive");
  Point hi = x, lo = x;
  for (int i = 0; i < x.dim(); ++i) {
    hi.coords[i] += h * v.coords[i];
    lo.coords[i] -= h * v.coords[i];
  }
  auto fhi = f(hi);
  auto flo = f(lo);
  FdJvp r;
  if (!fhi || !flo) {
    r.why = "probe undefined";
    return r;
  }
  if (fhi->path != flo->path) {
    r.why = "probes straddle a branch boundary";
    return r;
  }
  r.ok = true;
  r.out_path = fhi->path;
  r.deriv.resize(fhi->scalars.size());
  for (size_t i = 0; i < r.deriv.size(); ++i)
    r.deriv[i] = (fhi->scalars[i] - flo->scalars[i]) / (2 * h);
  return r;
}

JacobianRecord fd_jacobian(const FlatFn& f, const Point& x, double h) {
  JacobianRecord rec;
  rec.x = x;
  int s = x.dim();
  std::vector<std::vector<double>> cols;
  for (int j = 0; j < s; ++j) {
    Point v;
    v.coords.assign(s, 0.0);
    v.coords[j] = 1.0;
    auto c = fd_jvp(f, x, v, h);
    if (!c.ok) {
      rec.why = c.why;
      return rec;
    }
    if (j == 0) {
      rec.out_path = c.out_path;
    } else if (c.out_path != rec.out_path) {
      rec.why = "probes straddle a branch boundary";
      return rec;
    }
    cols.push_back(std::move(c.deriv));
  }
  size_t l = s == 0 ? 0 : cols[0].size();
  if (s == 0) {
    // Nothing varies; evaluate once for the shape, zero columns.
    auto f0 = f(x);
    if (!f0) {
      rec.why = "probe undefined";
      return rec;
    }
    rec.out_path = f0->path;
    l = f0->scalars.size();
  }
  rec.matrix.assign(l, std::vector<double>(s, 0.0));
  for (int j = 0; j < s; ++j)
    for (size_t i = 0; i < l; ++i) rec.matrix[i][j] = cols[j][i];
  rec.valid = true;
  return rec;
}

std::vector<std::pair<double, Tangent>> interleave(
    const Point& x, const std::vector<Tangent>& w) {
  if (w.size() != x.coords.size())
    throw std::invalid_argument("interleave: dimension mismatch");
  std::vector<std::pair<double, Tangent>> out;
  out.reserve(w.size());
  for (size_t i = 0; i < w.size(); ++i) out.emplace_back(x.coords[i], w[i]);
  return out;
}

std::pair<Point, std::vector<Tangent>> deinterleave(
    const std::vector<std::pair<double, Tangent>>& duals) {
  Point x;
  std::vector<Tangent> w;
  for (auto& [c, t] : duals) {
    x.coords.push_back(c);
    w.push_back(t);
  }
  return {std::move(x), std::move(w)};
}

}  // namespace dn
