#include "dn/eval.hpp"

#include <cmath>
#include <stdexcept>

#include "dn/surface.hpp"

namespace dn {

// ---------------------------------------------------------------------------
// Tangents
// ---------------------------------------------------------------------------

Tangent Tangent::zero(const KSemantics& ks) {
  Tangent t;
  t.infinite = ks.is_infinite;
  if (!ks.is_infinite) t.dense.assign(ks.k, 0.0);
  return t;
}

Tangent Tangent::basis(int i, const KSemantics& ks) {
  Tangent t = zero(ks);
  if (ks.is_infinite) {
    t.sparse[i] = 1.0;
  } else if (i >= 1 && i <= ks.k) {
    t.dense[i - 1] = 1.0;
  }
  return t;
}

Tangent Tangent::add(const Tangent& a, const Tangent& b) {
  Tangent r = a;
  if (a.infinite) {
    for (auto& [i, c] : b.sparse) {
      double s = (r.sparse.count(i) ? r.sparse[i] : 0.0) + c;
      if (s == 0.0)
        r.sparse.erase(i);
      else
        r.sparse[i] = s;
    }
  } else {
    for (size_t i = 0; i < r.dense.size(); ++i) r.dense[i] += b.dense[i];
  }
  return r;
}

Tangent Tangent::scale(const Tangent& t, double c) {
  Tangent r = t;
  if (t.infinite) {
    if (c == 0.0) {
      r.sparse.clear();
    } else {
      for (auto& [i, v] : r.sparse) v *= c;
      for (auto it = r.sparse.begin(); it != r.sparse.end();)
        it = it->second == 0.0 ? r.sparse.erase(it) : std::next(it);
    }
  } else {
    for (auto& v : r.dense) v *= c;
  }
  return r;
}

double Tangent::coeff(int i) const {
  if (infinite) {
    auto it = sparse.find(i);
    return it == sparse.end() ? 0.0 : it->second;
  }
  return (i >= 1 && i <= static_cast<int>(dense.size())) ? dense[i - 1]
                                                         : 0.0;
}

bool Tangent::operator==(const Tangent& o) const {
  if (infinite != o.infinite) return false;
  return infinite ? sparse == o.sparse : dense == o.dense;
}

std::vector<double> handler_project(const Tangent& t, int s) {
  std::vector<double> out(s);
  for (int i = 1; i <= s; ++i) out[i - 1] = t.coeff(i);
  return out;
}

Tangent tangent_of(const std::vector<double>& coeffs, const KSemantics& ks) {
  Tangent t = Tangent::zero(ks);
  for (size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0.0) continue;
    int idx = static_cast<int>(i) + 1;
    if (ks.is_infinite)
      t.sparse[idx] = coeffs[i];
    else if (idx <= ks.k)
      t.dense[idx - 1] = coeffs[i];
  }
  return t;
}

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

ValuePtr v_scalar(double x) {
  auto v = std::make_shared<Value>(ValueKind::Scalar);
  v->scalar = x;
  return v;
}
ValuePtr v_unit() {
  static const ValuePtr u = std::make_shared<Value>(ValueKind::Unit);
  return u;
}
ValuePtr v_pair(ValuePtr a, ValuePtr b) {
  auto v = std::make_shared<Value>(ValueKind::Pair);
  v->a = std::move(a);
  v->b = std::move(b);
  return v;
}
ValuePtr v_inl(ValuePtr a) {
  auto v = std::make_shared<Value>(ValueKind::Inl);
  v->a = std::move(a);
  return v;
}
ValuePtr v_inr(ValuePtr a) {
  auto v = std::make_shared<Value>(ValueKind::Inr);
  v->a = std::move(a);
  return v;
}
ValuePtr v_roll(ValuePtr a) {
  auto v = std::make_shared<Value>(ValueKind::Rolled);
  v->a = std::move(a);
  return v;
}
ValuePtr v_tangent(Tangent t) {
  auto v = std::make_shared<Value>(ValueKind::Tan);
  v->tangent = std::move(t);
  return v;
}

bool value_eq(const ValuePtr& x, const ValuePtr& y) {
  if (x->kind != y->kind) return false;
  switch (x->kind) {
    case ValueKind::Scalar:
      return x->scalar == y->scalar;
    case ValueKind::Unit:
      return true;
    case ValueKind::Pair:
      return value_eq(x->a, y->a) && value_eq(x->b, y->b);
    case ValueKind::Inl:
    case ValueKind::Inr:
    case ValueKind::Rolled:
      return value_eq(x->a, y->a);
    case ValueKind::Tan:
      return x->tangent == y->tangent;
    case ValueKind::Closure:
      return false;
  }
  return false;
}

std::string show_value(const ValuePtr& v) {
  switch (v->kind) {
    case ValueKind::Scalar:
      return format_real(v->scalar);
    case ValueKind::Unit:
      return "()";
    case ValueKind::Pair:
      return "(" + show_value(v->a) + ", " + show_value(v->b) + ")";
    case ValueKind::Inl:
      return "inl " + show_value(v->a);
    case ValueKind::Inr:
      return "inr " + show_value(v->a);
    case ValueKind::Rolled:
      return "roll " + show_value(v->a);
    case ValueKind::Closure:
      return "<fun>";
    case ValueKind::Tan: {
      const Tangent& t = v->tangent;
      std::string s = "{";
      bool first = true;
      auto item = [&](int i, double c) {
        if (c == 0.0) return;
        if (!first) s += ", ";
        first = false;
        s += std::to_string(i) + ": " + format_real(c);
      };
      if (t.infinite)
        for (auto& [i, c] : t.sparse) item(i, c);
      else
        for (size_t i = 0; i < t.dense.size(); ++i)
          item(static_cast<int>(i) + 1, t.dense[i]);
      return s + "}";
    }
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Environments & the interpreter
// ---------------------------------------------------------------------------

struct EnvNode {
  std::string name;
  ValuePtr value;    // null for a rec thunk
  TermPtr rec_term;  // the Rec node, re-entered on demand
  EnvPtr rec_env;
  EnvPtr parent;
};

namespace {

EnvPtr env_bind(EnvPtr parent, std::string name, ValuePtr v) {
  auto n = std::make_shared<EnvNode>();
  n->name = std::move(name);
  n->value = std::move(v);
  n->parent = std::move(parent);
  return n;
}

EnvPtr env_bind_rec(EnvPtr parent, std::string name, TermPtr rec_term,
                    EnvPtr rec_env) {
  auto n = std::make_shared<EnvNode>();
  n->name = std::move(name);
  n->rec_term = std::move(rec_term);
  n->rec_env = std::move(rec_env);
  n->parent = std::move(parent);
  return n;
}

struct BottomExc {
  BottomReason reason;
  std::string detail;
};

class Interp {
 public:
  explicit Interp(const EvalConfig& cfg) : cfg_(cfg), fuel_(cfg.fuel) {}

  ValuePtr eval(const TermPtr& t, const EnvPtr& env) {
    switch (t->kind) {
      case TermKind::Var: {
        for (EnvPtr e = env; e; e = e->parent) {
          if (e->name != t->var) continue;
          if (e->value) return e->value;
          burn();  // unfolding recursion
          return eval(e->rec_term, e->rec_env);
        }
        throw BottomExc{BottomReason::Undefined,
                        "unbound variable " + t->var};
      }
      case TermKind::Const:
        return v_scalar(t->value);
      case TermKind::UnitVal:
        return v_unit();
      case TermKind::Let: {
        auto bound = eval(t->kids[0], env);
        return eval(t->kids[1], env_bind(env, t->var, bound));
      }
      case TermKind::PrimOp: {
        const PrimSpec* spec = cfg_.registry->find(t->var);
        if (!spec)
          throw BottomExc{BottomReason::Undefined,
                          "unknown op " + t->var};
        std::vector<double> args;
        args.reserve(t->kids.size());
        for (auto& k : t->kids) args.push_back(want_scalar(eval(k, env)));
        if (!spec->in_domain(args))
          throw BottomExc{BottomReason::Undefined, t->var};
        double r = spec->value(args);
        if (!std::isfinite(r))
          throw BottomExc{BottomReason::Undefined, t->var};
        return v_scalar(r);
      }
      case TermKind::Sign: {
        double x = want_scalar(eval(t->kids[0], env));
        if (x < 0) return v_inl(v_unit());
        if (x > 0) return v_inr(v_unit());
        throw BottomExc{BottomReason::Undefined, "sign"};
      }
      case TermKind::Inl:
        return v_inl(eval(t->kids[0], env));
      case TermKind::Inr:
        return v_inr(eval(t->kids[0], env));
      case TermKind::CaseSum: {
        auto s = eval(t->kids[0], env);
        burn();
        if (s->kind == ValueKind::Inl)
          return eval(t->kids[1], env_bind(env, t->var, s->a));
        if (s->kind == ValueKind::Inr)
          return eval(t->kids[2], env_bind(env, t->var2, s->a));
        throw BottomExc{BottomReason::Undefined, "case on non-sum"};
      }
      case TermKind::CaseVoid:
        eval(t->kids[0], env);
        throw BottomExc{BottomReason::Undefined, "absurd"};
      case TermKind::Pair:
        return v_pair(eval(t->kids[0], env), eval(t->kids[1], env));
      case TermKind::CasePair: {
        auto s = eval(t->kids[0], env);
        burn();
        if (s->kind != ValueKind::Pair)
          throw BottomExc{BottomReason::Undefined, "case on non-pair"};
        return eval(t->kids[1],
                    env_bind(env_bind(env, t->var, s->a), t->var2, s->b));
      }
      case TermKind::Lam: {
        auto v = std::make_shared<Value>(ValueKind::Closure);
        v->binder = t->var;
        v->body = t->kids[0];
        v->env = env;
        return v;
      }
      case TermKind::App: {
        auto f = eval(t->kids[0], env);
        auto a = eval(t->kids[1], env);
        return apply(f, a);
      }
      case TermKind::Iterate: {
        auto v = eval(t->kids[1], env);
        for (;;) {
          burn();
          auto step = eval(t->kids[0], env_bind(env, t->var, v));
          if (step->kind == ValueKind::Inl) {
            v = step->a;
            continue;
          }
          if (step->kind == ValueKind::Inr) return step->a;
          throw BottomExc{BottomReason::Undefined, "iterate on non-sum"};
        }
      }
      case TermKind::Rec:
        return eval(t->kids[0], env_bind_rec(env, t->var, t, env));
      case TermKind::Roll:
        return v_roll(eval(t->kids[0], env));
      case TermKind::CaseRoll: {
        auto s = eval(t->kids[0], env);
        burn();
        if (s->kind != ValueKind::Rolled)
          throw BottomExc{BottomReason::Undefined, "case on non-roll"};
        return eval(t->kids[1], env_bind(env, t->var, s->a));
      }
      case TermKind::TangentZero:
        return v_tangent(Tangent::zero(cfg_.k));
      case TermKind::TangentBasis:
        return v_tangent(Tangent::basis(t->index, cfg_.k));
      case TermKind::TangentAdd: {
        auto a = want_tangent(eval(t->kids[0], env));
        auto b = want_tangent(eval(t->kids[1], env));
        return v_tangent(Tangent::add(a, b));
      }
      case TermKind::TangentScale: {
        auto a = want_tangent(eval(t->kids[0], env));
        double c = want_scalar(eval(t->kids[1], env));
        return v_tangent(Tangent::scale(a, c));
      }
      case TermKind::TangentProj: {
        auto a = want_tangent(eval(t->kids[0], env));
        auto coeffs = handler_project(a, t->index);
        ValuePtr out = v_scalar(coeffs[0]);
        for (int i = 1; i < t->index; ++i)
          out = v_pair(out, v_scalar(coeffs[i]));
        return out;
      }
      case TermKind::IfElse: {
        double c = want_scalar(eval(t->kids[0], env));
        burn();
        if (c < 0) return eval(t->kids[1], env);
        if (c > 0) return eval(t->kids[2], env);
        throw BottomExc{BottomReason::Undefined, "sign"};
      }
      case TermKind::Fst: {
        auto s = eval(t->kids[0], env);
        burn();
        if (s->kind != ValueKind::Pair)
          throw BottomExc{BottomReason::Undefined, "fst on non-pair"};
        return s->a;
      }
      case TermKind::Snd: {
        auto s = eval(t->kids[0], env);
        burn();
        if (s->kind != ValueKind::Pair)
          throw BottomExc{BottomReason::Undefined, "snd on non-pair"};
        return s->b;
      }
    }
    throw BottomExc{BottomReason::Undefined, "bad term"};
  }

  ValuePtr apply(const ValuePtr& f, const ValuePtr& a) {
    if (f->kind != ValueKind::Closure)
      throw BottomExc{BottomReason::Undefined, "apply on non-function"};
    burn();
    return eval(f->body, env_bind(f->env, f->binder, a));
  }

 private:
  void burn() {
    if (fuel_-- <= 0) throw BottomExc{BottomReason::Diverged, "out of fuel"};
  }

  static double want_scalar(const ValuePtr& v) {
    if (v->kind != ValueKind::Scalar)
      throw BottomExc{BottomReason::Undefined, "expected real"};
    return v->scalar;
  }

  static Tangent want_tangent(const ValuePtr& v) {
    if (v->kind != ValueKind::Tan)
      throw BottomExc{BottomReason::Undefined, "expected tangent"};
    return v->tangent;
  }

  const EvalConfig& cfg_;
  long long fuel_;
};

}  // namespace

EvalOutcome evaluate(const TermPtr& t, const EvalConfig& cfg) {
  Interp in(cfg);
  try {
    return EvalOutcome::success(in.eval(t, nullptr));
  } catch (const BottomExc& b) {
    return EvalOutcome::bottom(b.reason, b.detail);
  }
}

EvalOutcome apply_value(const ValuePtr& fn, const ValuePtr& arg,
                        const EvalConfig& cfg) {
  Interp in(cfg);
  try {
    return EvalOutcome::success(in.apply(fn, arg));
  } catch (const BottomExc& b) {
    return EvalOutcome::bottom(b.reason, b.detail);
  }
}

}  // namespace dn
