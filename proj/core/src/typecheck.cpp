#include "dn/typecheck.hpp"

#include "dn/surface.hpp"

namespace dn {

namespace {

struct CheckFail {
  TypeError err;
};

class Checker {
 public:
  explicit Checker(Lang lang) : lang_(lang) {}

  TypePtr fresh_meta() {
    bindings_.push_back(nullptr);
    return t_meta(static_cast<int>(bindings_.size()) - 1);
  }

  TypePtr resolve(TypePtr t) const {
    while (t->kind == TypeKind::Meta && bindings_[t->meta_id])
      t = bindings_[t->meta_id];
    return t;
  }

  bool occurs(int id, const TypePtr& t) const {
    auto r = resolve(t);
    if (r->kind == TypeKind::Meta) return r->meta_id == id;
    if (r->a && occurs(id, r->a)) return true;
    if (r->b && occurs(id, r->b)) return true;
    return false;
  }

  void unify(const TypePtr& x, const TypePtr& y, const TermPtr& at) {
    auto a = resolve(x);
    auto b = resolve(y);
    if (a->kind == TypeKind::Meta) {
      if (b->kind == TypeKind::Meta && b->meta_id == a->meta_id) return;
      if (occurs(a->meta_id, b))
        fail("cannot construct infinite type", at);
      bindings_[a->meta_id] = b;
      return;
    }
    if (b->kind == TypeKind::Meta) {
      unify(b, a, at);
      return;
    }
    if (a->kind != b->kind) mismatch(a, b, at);
    switch (a->kind) {
      case TypeKind::Real:
      case TypeKind::Unit:
      case TypeKind::Void:
      case TypeKind::Tangent:
        return;
      case TypeKind::TVar:
        if (a->name != b->name) mismatch(a, b, at);
        return;
      case TypeKind::Prod:
      case TypeKind::Sum:
      case TypeKind::Arrow:
        unify(a->a, b->a, at);
        unify(a->b, b->b, at);
        return;
      case TypeKind::Mu:
        // Recursive types unify only up to alpha-equivalence; metas never
        // occur inside a mu (those come from ascriptions / parsed types).
        if (!type_alpha_eq(a, b)) mismatch(a, b, at);
        return;
      case TypeKind::Meta:
        return;  // unreachable
    }
  }

  TypePtr zonk(const TypePtr& t) {
    auto r = resolve(t);
    switch (r->kind) {
      case TypeKind::Meta: {
        // Leftover metas become distinct named type variables.
        auto it = meta_names_.find(r->meta_id);
        if (it != meta_names_.end()) return it->second;
        auto tv = t_tvar("t" + std::to_string(meta_names_.size()));
        meta_names_.emplace(r->meta_id, tv);
        return tv;
      }
      case TypeKind::Prod:
        return t_prod(zonk(r->a), zonk(r->b));
      case TypeKind::Sum:
        return t_sum(zonk(r->a), zonk(r->b));
      case TypeKind::Arrow:
        return t_arrow(zonk(r->a), zonk(r->b));
      case TypeKind::Mu:
        return r;  // no metas inside
      default:
        return r;
    }
  }

  [[noreturn]] void fail(const std::string& msg, const TermPtr& at) {
    std::string m = msg;
    if (at) m += " in `" + print_term(at) + "`";
    throw CheckFail{TypeError{m, at}};
  }

  [[noreturn]] void mismatch(const TypePtr& a, const TypePtr& b,
                             const TermPtr& at) {
    fail("type mismatch: " + show_type(zonk(a)) + " vs " +
             show_type(zonk(b)),
         at);
  }

  TypePtr check(const TermPtr& t, const TypeEnv& env, TypePtr expected) {
    auto ty = synth(t, env, expected);
    if (expected) unify(ty, expected, t);
    return ty;
  }

  TypePtr synth(const TermPtr& t, const TypeEnv& env,
                const TypePtr& expected) {
    switch (t->kind) {
      case TermKind::Var: {
        auto it = env.find(t->var);
        if (it == env.end()) fail("unbound variable '" + t->var + "'", t);
        return it->second;
      }
      case TermKind::Const:
        return t_real();
      case TermKind::UnitVal:
        return t_unit();
      case TermKind::Let: {
        auto bound = check(t->kids[0], env, nullptr);
        record(t, {bound});
        TypeEnv e2 = env;
        e2[t->var] = bound;
        return check(t->kids[1], e2, expected);
      }
      case TermKind::PrimOp: {
        for (auto& k : t->kids) check(k, env, t_real());
        return t_real();
      }
      case TermKind::Sign: {
        check(t->kids[0], env, t_real());
        return t_sum(t_unit(), t_unit());
      }
      case TermKind::Inl: {
        auto l = check(t->kids[0], env, nullptr);
        auto r = fresh_meta();
        if (expected && resolve(expected)->kind == TypeKind::Sum) {
          auto e = resolve(expected);
          unify(l, e->a, t);
          unify(r, e->b, t);
        }
        return t_sum(l, r);
      }
      case TermKind::Inr: {
        auto r = check(t->kids[0], env, nullptr);
        auto l = fresh_meta();
        if (expected && resolve(expected)->kind == TypeKind::Sum) {
          auto e = resolve(expected);
          unify(l, e->a, t);
          unify(r, e->b, t);
        }
        return t_sum(l, r);
      }
      case TermKind::CaseSum: {
        auto l = fresh_meta();
        auto r = fresh_meta();
        check(t->kids[0], env, t_sum(l, r));
        record(t, {l, r});
        TypeEnv el = env, er = env;
        el[t->var] = l;
        er[t->var2] = r;
        auto tl = check(t->kids[1], el, expected);
        auto tr = check(t->kids[2], er, expected);
        unify(tl, tr, t);
        return tl;
      }
      case TermKind::CaseVoid: {
        check(t->kids[0], env, t_void());
        return expected ? expected : fresh_meta();
      }
      case TermKind::Pair: {
        TypePtr ea, eb;
        if (expected && resolve(expected)->kind == TypeKind::Prod) {
          auto e = resolve(expected);
          ea = e->a;
          eb = e->b;
        }
        auto a = check(t->kids[0], env, ea);
        auto b = check(t->kids[1], env, eb);
        return t_prod(a, b);
      }
      case TermKind::CasePair: {
        auto a = fresh_meta();
        auto b = fresh_meta();
        check(t->kids[0], env, t_prod(a, b));
        record(t, {a, b});
        TypeEnv e2 = env;
        e2[t->var] = a;
        e2[t->var2] = b;
        return check(t->kids[1], e2, expected);
      }
      case TermKind::Lam: {
        TypePtr arg, res;
        if (expected && resolve(expected)->kind == TypeKind::Arrow) {
          auto e = resolve(expected);
          arg = e->a;
          res = e->b;
        } else {
          arg = fresh_meta();
        }
        record(t, {arg});
        TypeEnv e2 = env;
        e2[t->var] = arg;
        auto body = check(t->kids[0], e2, res);
        return t_arrow(arg, body);
      }
      case TermKind::App: {
        auto f = check(t->kids[0], env, nullptr);
        auto fr = resolve(f);
        if (fr->kind == TypeKind::Arrow) {
          check(t->kids[1], env, fr->a);
          return fr->b;
        }
        auto arg = check(t->kids[1], env, nullptr);
        auto res = fresh_meta();
        unify(f, t_arrow(arg, res), t);
        return res;
      }
      case TermKind::Iterate: {
        // x:tau |- body : tau + sigma, seed : tau, result sigma.
        auto tau = check(t->kids[1], env, nullptr);
        record(t, {tau});
        auto sigma = fresh_meta();
        TypeEnv e2 = env;
        e2[t->var] = tau;
        check(t->kids[0], e2, t_sum(tau, sigma));
        return sigma;
      }
      case TermKind::Rec: {
        // Recursion only at function type.
        TypePtr self;
        if (expected && resolve(expected)->kind == TypeKind::Arrow)
          self = resolve(expected);
        else
          self = t_arrow(fresh_meta(), fresh_meta());
        record(t, {self});
        TypeEnv e2 = env;
        e2[t->var] = self;
        auto body = check(t->kids[0], e2, self);
        auto r = resolve(body);
        if (r->kind != TypeKind::Arrow && r->kind != TypeKind::Meta)
          fail("rec body must have function type, got " +
                   show_type(zonk(body)),
               t);
        return self;
      }
      case TermKind::Roll: {
        TypePtr mu = t->ascription;
        if (!mu && expected) {
          auto e = resolve(expected);
          if (e->kind == TypeKind::Mu) mu = e;
        }
        if (!mu)
          fail("cannot infer recursive type of bare roll; ascribe it as "
               "roll[mu 'a. ...]",
               t);
        if (mu->kind != TypeKind::Mu)
          fail("roll ascription must be a mu-type, got " + show_type(mu), t);
        check(t->kids[0], env, substitute_type(mu->a, mu->name, mu));
        return mu;
      }
      case TermKind::CaseRoll: {
        auto s = check(t->kids[0], env, t->ascription);
        auto sr = resolve(s);
        if (sr->kind != TypeKind::Mu)
          fail("case-roll scrutinee must have a mu-type, got " +
                   show_type(zonk(s)),
               t->kids[0]);
        auto unrolled = substitute_type(sr->a, sr->name, sr);
        record(t, {unrolled});
        TypeEnv e2 = env;
        e2[t->var] = unrolled;
        return check(t->kids[1], e2, expected);
      }
      case TermKind::TangentZero:
      case TermKind::TangentBasis:
        require_target(t);
        return t_tangent();
      case TermKind::TangentAdd:
        require_target(t);
        check(t->kids[0], env, t_tangent());
        check(t->kids[1], env, t_tangent());
        return t_tangent();
      case TermKind::TangentScale:
        require_target(t);
        check(t->kids[0], env, t_tangent());
        check(t->kids[1], env, t_real());
        return t_tangent();
      case TermKind::TangentProj:
        require_target(t);
        check(t->kids[0], env, t_tangent());
        return t_real_pow(t->index);
      case TermKind::IfElse: {
        check(t->kids[0], env, t_real());
        auto a = check(t->kids[1], env, expected);
        auto b = check(t->kids[2], env, expected);
        unify(a, b, t);
        return a;
      }
      case TermKind::Fst: {
        auto a = fresh_meta();
        auto b = fresh_meta();
        check(t->kids[0], env, t_prod(a, b));
        return a;
      }
      case TermKind::Snd: {
        auto a = fresh_meta();
        auto b = fresh_meta();
        check(t->kids[0], env, t_prod(a, b));
        return b;
      }
    }
    fail("unhandled term form", t);
  }

  void require_target(const TermPtr& t) {
    if (lang_ == Lang::Source)
      fail("tangent constructs are not part of the source language", t);
  }

  void record(const TermPtr& t, std::vector<TypePtr> tys) {
    raw_binders_[t.get()] = std::move(tys);
  }

  TypingResult finish(const TypePtr& root) {
    TypingResult r;
    r.type = zonk(root);
    for (auto& [node, tys] : raw_binders_) {
      std::vector<TypePtr> z;
      z.reserve(tys.size());
      for (auto& ty : tys) z.push_back(zonk(ty));
      r.binder_types.emplace(node, std::move(z));
    }
    return r;
  }

 private:
  Lang lang_;
  std::vector<TypePtr> bindings_;
  std::map<int, TypePtr> meta_names_;
  std::map<const Term*, std::vector<TypePtr>> raw_binders_;
};

}  // namespace

InferResult infer(const TermPtr& t, Lang lang, const TypeEnv& env,
                  const TypePtr& expected) {
  Checker c(lang);
  try {
    auto ty = c.check(t, env, expected);
    return c.finish(ty);
  } catch (const CheckFail& f) {
    return f.err;
  }
}

std::string infer_show(const TermPtr& t, Lang lang) {
  auto r = infer(t, lang);
  if (auto* ok = std::get_if<TypingResult>(&r)) return show_type(ok->type);
  return "error: " + std::get<TypeError>(r).message;
}

}  // namespace dn
