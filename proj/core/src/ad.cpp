#include "dn/ad.hpp"

#include <cassert>
#include <stdexcept>

namespace dn {

TypePtr ad_transform_type(const TypePtr& ty) {
  switch (ty->kind) {
    case TypeKind::Real:
      return t_prod(t_real(), t_tangent());
    case TypeKind::Unit:
    case TypeKind::Void:
    case TypeKind::TVar:
      return ty;
    case TypeKind::Prod:
      return t_prod(ad_transform_type(ty->a), ad_transform_type(ty->b));
    case TypeKind::Sum:
      return t_sum(ad_transform_type(ty->a), ad_transform_type(ty->b));
    case TypeKind::Arrow:
      return t_arrow(ad_transform_type(ty->a), ad_transform_type(ty->b));
    case TypeKind::Mu:
      return t_mu(ty->name, ad_transform_type(ty->a));
    case TypeKind::Tangent:
    case TypeKind::Meta:
      throw std::invalid_argument(
          "ad_transform_type: not a source type: " + show_type(ty));
  }
  throw std::invalid_argument("ad_transform_type: bad type");
}

// ---------------------------------------------------------------------------
// typeproj / typezero
// ---------------------------------------------------------------------------

namespace {

// Per recursive-type binder: the (renamed) mu-type it is bound to, and the
// recursion variables for whichever coercion directions are already being
// defined in the enclosing scope.
struct MuBinding {
  TypePtr mu;
  std::string proj_var;  // empty when not in scope
  std::string zero_var;
};

using MuEnv = std::map<std::string, MuBinding>;

TermPtr coerce_fn(const TypePtr& ty, bool proj, MuEnv& env);

TermPtr mu_coerce_fn(const TypePtr& mu, bool proj, MuEnv& env) {
  // `mu` has a binder name already registered (or about to be) in env.
  const std::string& alpha = mu->name;
  std::string r = fresh_name(proj ? "prj" : "zer");
  MuBinding saved = env.count(alpha) ? env[alpha] : MuBinding{mu, "", ""};
  MuBinding cur = saved;
  cur.mu = mu;
  (proj ? cur.proj_var : cur.zero_var) = r;
  env[alpha] = cur;
  TermPtr body_fn = coerce_fn(mu->a, proj, env);
  env[alpha] = saved;
  if (saved.proj_var.empty() && saved.zero_var.empty()) env.erase(alpha);

  TypePtr roll_ty = proj ? mu : ad_transform_type(mu);
  TypePtr in_ty = proj ? ad_transform_type(mu) : mu;
  std::string x = fresh_name("w");
  std::string u = fresh_name("u");
  return m_rec(
      r, m_lam(x, m_case_roll(m_var(x), u,
                              m_roll(m_app(body_fn, m_var(u)), roll_ty),
                              in_ty)));
}

TermPtr coerce_fn(const TypePtr& ty, bool proj, MuEnv& env) {
  switch (ty->kind) {
    case TypeKind::Real: {
      std::string x = fresh_name("v");
      if (proj) {
        std::string a = fresh_name("a");
        std::string b = fresh_name("b");
        return m_lam(x, m_case_pair(m_var(x), a, b, m_var(a)));
      }
      return m_lam(x, m_pair(m_var(x), m_dzero()));
    }
    case TypeKind::Unit:
    case TypeKind::Void: {
      std::string x = fresh_name("v");
      return m_lam(x, m_var(x));
    }
    case TypeKind::Prod: {
      auto fa = coerce_fn(ty->a, proj, env);
      auto fb = coerce_fn(ty->b, proj, env);
      std::string x = fresh_name("p");
      std::string a = fresh_name("a");
      std::string b = fresh_name("b");
      return m_lam(
          x, m_case_pair(m_var(x), a, b,
                         m_pair(m_app(fa, m_var(a)), m_app(fb, m_var(b)))));
    }
    case TypeKind::Sum: {
      auto fa = coerce_fn(ty->a, proj, env);
      auto fb = coerce_fn(ty->b, proj, env);
      std::string x = fresh_name("s");
      std::string a = fresh_name("a");
      std::string b = fresh_name("b");
      return m_lam(x, m_case_sum(m_var(x), a, m_inl(m_app(fa, m_var(a))), b,
                                 m_inr(m_app(fb, m_var(b)))));
    }
    case TypeKind::Arrow: {
      // Directions swap on the argument side.
      auto farg = coerce_fn(ty->a, !proj, env);
      auto fres = coerce_fn(ty->b, proj, env);
      std::string f = fresh_name("f");
      std::string x = fresh_name("v");
      return m_lam(
          f, m_lam(x, m_app(fres, m_app(m_var(f), m_app(farg, m_var(x))))));
    }
    case TypeKind::TVar: {
      auto it = env.find(ty->name);
      if (it == env.end()) {
        // Genuinely free type variable: D[alpha] = alpha.
        std::string x = fresh_name("v");
        return m_lam(x, m_var(x));
      }
      const std::string& have = proj ? it->second.proj_var
                                     : it->second.zero_var;
      if (!have.empty()) return m_var(have);
      // The opposite direction is being defined; build this direction for
      // the same mu-type, with the enclosing recursion variable in scope.
      return mu_coerce_fn(it->second.mu, proj, env);
    }
    case TypeKind::Mu: {
      // Rename the binder apart so env keys never collide.
      std::string alpha = fresh_name(ty->name);
      auto body = substitute_type(ty->a, ty->name, t_tvar(alpha));
      return mu_coerce_fn(t_mu(alpha, body), proj, env);
    }
    case TypeKind::Tangent:
    case TypeKind::Meta:
      throw std::invalid_argument("coercion undefined for type " +
                                  show_type(ty));
  }
  throw std::invalid_argument("coerce_fn: bad type");
}

}  // namespace

TermPtr typeproj_term(const TypePtr& ty) {
  MuEnv env;
  return coerce_fn(ty, true, env);
}

TermPtr typezero_term(const TypePtr& ty) {
  MuEnv env;
  return coerce_fn(ty, false, env);
}

// ---------------------------------------------------------------------------
// The dual-numbers macro on terms
// ---------------------------------------------------------------------------

namespace {

struct AdCtx {
  const Registry& registry;
  SignMode mode;
  const std::map<const Term*, std::vector<TypePtr>>* binder_types;
  TypeEnv gamma;  // source types of variables in scope (Efficient mode)
};

TermPtr ad_rec(const TermPtr& t, AdCtx& ctx);

// Looks up the i-th recorded binder type of `t` (Efficient mode only).
TypePtr binder_type(const TermPtr& t, size_t i, const AdCtx& ctx) {
  if (!ctx.binder_types) return nullptr;
  auto it = ctx.binder_types->find(t.get());
  if (it == ctx.binder_types->end() || i >= it->second.size())
    return nullptr;
  return it->second[i];
}

TermPtr ad_with_binders(
    const TermPtr& t, AdCtx& ctx,
    const std::vector<std::pair<std::string, TypePtr>>& binders,
    const std::function<TermPtr(AdCtx&)>& build) {
  (void)t;
  TypeEnv saved = ctx.gamma;
  for (auto& [name, ty] : binders)
    if (ty) ctx.gamma[name] = ty;
  auto out = build(ctx);
  ctx.gamma = std::move(saved);
  return out;
}

TermPtr ad_sign(const TermPtr& t, AdCtx& ctx) {
  auto arg = t->kids[0];
  if (ctx.mode == SignMode::Naive) {
    auto d = ad_rec(arg, ctx);
    std::string a = fresh_name("a");
    std::string b = fresh_name("b");
    return m_sign(m_case_pair(d, a, b, m_var(a)));
  }
  // Efficient mode: keep the original scrutinee, rebinding each of its free
  // variables to the primal projection of its dual value.
  std::set<std::string> fv;
  free_vars(arg, fv);
  TermPtr body = m_sign(arg);
  // Wrap innermost-first so the lets appear in sorted order outermost-first.
  for (auto it = fv.rbegin(); it != fv.rend(); ++it) {
    auto ty_it = ctx.gamma.find(*it);
    if (ty_it == ctx.gamma.end())
      throw std::invalid_argument(
          "efficient sign mode needs the type of free variable '" + *it +
          "'; run infer() first");
    body = m_let(*it, m_app(typeproj_term(ty_it->second), m_var(*it)), body);
  }
  return body;
}

TermPtr ad_primop(const TermPtr& t, AdCtx& ctx) {
  const PrimSpec* spec = ctx.registry.find(t->var);
  if (!spec)
    throw std::invalid_argument("unknown primitive operation '" + t->var +
                                "'");
  size_t n = t->kids.size();
  std::vector<std::string> xs(n), dxs(n), ds(n);
  for (size_t i = 0; i < n; ++i) {
    xs[i] = fresh_name("x");
    dxs[i] = fresh_name("dx");
    ds[i] = fresh_name("d");
  }
  std::vector<TermPtr> args;
  for (auto& x : xs) args.push_back(m_var(x));
  std::string y = fresh_name("y");

  // (dx1 <*> d1) <+> ... <+> (dxn <*> dn)
  TermPtr tangent;
  for (size_t i = 0; i < n; ++i) {
    auto piece = m_dscale(m_var(dxs[i]), m_var(ds[i]));
    tangent = tangent ? m_dadd(tangent, piece) : piece;
  }
  if (!tangent) tangent = m_dzero();

  TermPtr body = m_pair(m_var(y), tangent);
  for (size_t i = n; i-- > 0;) {
    // Partial derivative term over canonical names x1..xn, instantiated.
    TermPtr partial = spec->partials[i];
    for (size_t j = 0; j < n; ++j)
      partial = substitute(partial, "x" + std::to_string(j + 1),
                           m_var(xs[j]));
    body = m_let(ds[i], partial, body);
  }
  body = m_let(y, m_op(t->var, args), body);
  for (size_t i = n; i-- > 0;)
    body = m_case_pair(ad_rec(t->kids[i], ctx), xs[i], dxs[i], body);
  return body;
}

TermPtr ad_rec(const TermPtr& t, AdCtx& ctx) {
  switch (t->kind) {
    case TermKind::Var:
      return t;
    case TermKind::Const:
      return m_pair(m_const(t->value), m_dzero());
    case TermKind::UnitVal:
      return t;
    case TermKind::PrimOp:
      return ad_primop(t, ctx);
    case TermKind::Sign:
      return ad_sign(t, ctx);
    case TermKind::Let: {
      auto bound = ad_rec(t->kids[0], ctx);
      auto body = ad_with_binders(
          t, ctx, {{t->var, binder_type(t, 0, ctx)}},
          [&](AdCtx& c) { return ad_rec(t->kids[1], c); });
      return m_let(t->var, bound, body);
    }
    case TermKind::Inl:
      return m_inl(ad_rec(t->kids[0], ctx));
    case TermKind::Inr:
      return m_inr(ad_rec(t->kids[0], ctx));
    case TermKind::CaseSum: {
      auto s = ad_rec(t->kids[0], ctx);
      auto l = ad_with_binders(
          t, ctx, {{t->var, binder_type(t, 0, ctx)}},
          [&](AdCtx& c) { return ad_rec(t->kids[1], c); });
      auto r = ad_with_binders(
          t, ctx, {{t->var2, binder_type(t, 1, ctx)}},
          [&](AdCtx& c) { return ad_rec(t->kids[2], c); });
      return m_case_sum(s, t->var, l, t->var2, r);
    }
    case TermKind::CaseVoid:
      return m_case_void(ad_rec(t->kids[0], ctx));
    case TermKind::Pair:
      return m_pair(ad_rec(t->kids[0], ctx), ad_rec(t->kids[1], ctx));
    case TermKind::CasePair: {
      auto s = ad_rec(t->kids[0], ctx);
      auto body = ad_with_binders(
          t, ctx,
          {{t->var, binder_type(t, 0, ctx)},
           {t->var2, binder_type(t, 1, ctx)}},
          [&](AdCtx& c) { return ad_rec(t->kids[1], c); });
      return m_case_pair(s, t->var, t->var2, body);
    }
    case TermKind::Lam: {
      auto body = ad_with_binders(
          t, ctx, {{t->var, binder_type(t, 0, ctx)}},
          [&](AdCtx& c) { return ad_rec(t->kids[0], c); });
      return m_lam(t->var, body);
    }
    case TermKind::App:
      return m_app(ad_rec(t->kids[0], ctx), ad_rec(t->kids[1], ctx));
    case TermKind::Iterate: {
      auto seed = ad_rec(t->kids[1], ctx);
      auto body = ad_with_binders(
          t, ctx, {{t->var, binder_type(t, 0, ctx)}},
          [&](AdCtx& c) { return ad_rec(t->kids[0], c); });
      return m_iterate(body, t->var, seed);
    }
    case TermKind::Rec: {
      auto body = ad_with_binders(
          t, ctx, {{t->var, binder_type(t, 0, ctx)}},
          [&](AdCtx& c) { return ad_rec(t->kids[0], c); });
      return m_rec(t->var, body);
    }
    case TermKind::Roll: {
      TypePtr asc =
          t->ascription ? ad_transform_type(t->ascription) : nullptr;
      return m_roll(ad_rec(t->kids[0], ctx), asc);
    }
    case TermKind::CaseRoll: {
      auto s = ad_rec(t->kids[0], ctx);
      auto body = ad_with_binders(
          t, ctx, {{t->var, binder_type(t, 0, ctx)}},
          [&](AdCtx& c) { return ad_rec(t->kids[1], c); });
      TypePtr asc =
          t->ascription ? ad_transform_type(t->ascription) : nullptr;
      return m_case_roll(s, t->var, body, asc);
    }
    case TermKind::IfElse:
    case TermKind::Fst:
    case TermKind::Snd: {
      // Sugar transforms homomorphically too; desugaring commutes.
      auto copy = std::make_shared<Term>(*t);
      for (auto& k : copy->kids) k = ad_rec(k, ctx);
      return copy;
    }
    case TermKind::TangentZero:
    case TermKind::TangentAdd:
    case TermKind::TangentScale:
    case TermKind::TangentBasis:
    case TermKind::TangentProj:
      throw std::invalid_argument(
          "ad_transform applies to source terms only");
  }
  throw std::invalid_argument("ad_transform: bad term");
}

}  // namespace

TermPtr ad_transform(const TermPtr& t, const Registry& registry,
                     SignMode mode,
                     const std::map<const Term*, std::vector<TypePtr>>*
                         binder_types,
                     const TypeEnv& free_var_types) {
  AdCtx ctx{registry, mode, binder_types, free_var_types};
  return ad_rec(t, ctx);
}

TermPtr wrap_term(int s) {
  if (s < 1) throw std::invalid_argument("wrap_term: s must be >= 1");
  // wrap(x, i) dualizes a real^i value, slots numbered 1..i left to right.
  std::function<TermPtr(TermPtr, int)> wrap = [&](TermPtr x,
                                                  int i) -> TermPtr {
    if (i == 1) return m_pair(x, m_dbasis(1));
    std::string a = fresh_name("h");
    std::string b = fresh_name("t");
    return m_case_pair(
        x, a, b,
        m_pair(wrap(m_var(a), i - 1), m_pair(m_var(b), m_dbasis(i))));
  };
  std::string x = fresh_name("in");
  return m_lam(x, wrap(m_var(x), s));
}

}  // namespace dn
