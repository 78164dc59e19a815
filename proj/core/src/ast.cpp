#include "dn/ast.hpp"

#include <atomic>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dn {

// ---------------------------------------------------------------------------
// Type constructors
// ---------------------------------------------------------------------------

namespace {
TypePtr leaf(TypeKind k) {
  static const auto real = std::make_shared<Type>(TypeKind::Real);
  static const auto unit = std::make_shared<Type>(TypeKind::Unit);
  static const auto voidt = std::make_shared<Type>(TypeKind::Void);
  static const auto tangent = std::make_shared<Type>(TypeKind::Tangent);
  switch (k) {
    case TypeKind::Real: return real;
    case TypeKind::Unit: return unit;
    case TypeKind::Void: return voidt;
    case TypeKind::Tangent: return tangent;
    default: throw std::logic_error("leaf: not a leaf kind");
  }
}

TypePtr binop(TypeKind k, TypePtr a, TypePtr b) {
  auto t = std::make_shared<Type>(k);
  t->a = std::move(a);
  t->b = std::move(b);
  return t;
}
}  // namespace

TypePtr t_real() { return leaf(TypeKind::Real); }
TypePtr t_unit() { return leaf(TypeKind::Unit); }
TypePtr t_void() { return leaf(TypeKind::Void); }
TypePtr t_tangent() { return leaf(TypeKind::Tangent); }
TypePtr t_prod(TypePtr a, TypePtr b) {
  return binop(TypeKind::Prod, std::move(a), std::move(b));
}
TypePtr t_sum(TypePtr a, TypePtr b) {
  return binop(TypeKind::Sum, std::move(a), std::move(b));
}
TypePtr t_arrow(TypePtr a, TypePtr b) {
  return binop(TypeKind::Arrow, std::move(a), std::move(b));
}
TypePtr t_tvar(std::string name) {
  auto t = std::make_shared<Type>(TypeKind::TVar);
  t->name = std::move(name);
  return t;
}
TypePtr t_mu(std::string binder, TypePtr body) {
  auto t = std::make_shared<Type>(TypeKind::Mu);
  t->name = std::move(binder);
  t->a = std::move(body);
  return t;
}
TypePtr t_meta(int id) {
  auto t = std::make_shared<Type>(TypeKind::Meta);
  t->meta_id = id;
  return t;
}

TypePtr t_real_pow(int n) {
  if (n < 1) throw std::invalid_argument("t_real_pow: n must be >= 1");
  TypePtr acc = t_real();
  for (int i = 1; i < n; ++i) acc = t_prod(acc, t_real());
  return acc;
}

// ---------------------------------------------------------------------------
// Type operations
// ---------------------------------------------------------------------------

namespace {
bool type_alpha_eq_rec(const TypePtr& a, const TypePtr& b,
                       std::map<std::string, std::string>& ab,
                       std::map<std::string, std::string>& ba) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TypeKind::Real:
    case TypeKind::Unit:
    case TypeKind::Void:
    case TypeKind::Tangent:
      return true;
    case TypeKind::Meta:
      return a->meta_id == b->meta_id;
    case TypeKind::TVar: {
      auto it = ab.find(a->name);
      auto it2 = ba.find(b->name);
      if (it == ab.end() && it2 == ba.end()) return a->name == b->name;
      return it != ab.end() && it2 != ba.end() && it->second == b->name &&
             it2->second == a->name;
    }
    case TypeKind::Prod:
    case TypeKind::Sum:
    case TypeKind::Arrow:
      return type_alpha_eq_rec(a->a, b->a, ab, ba) &&
             type_alpha_eq_rec(a->b, b->b, ab, ba);
    case TypeKind::Mu: {
      auto sab = ab, sba = ba;
      sab[a->name] = b->name;
      sba[b->name] = a->name;
      return type_alpha_eq_rec(a->a, b->a, sab, sba);
    }
  }
  return false;
}
}  // namespace

bool type_alpha_eq(const TypePtr& a, const TypePtr& b) {
  std::map<std::string, std::string> ab, ba;
  return type_alpha_eq_rec(a, b, ab, ba);
}

TypePtr substitute_type(const TypePtr& ty, const std::string& tvar,
                        const TypePtr& replacement) {
  switch (ty->kind) {
    case TypeKind::Real:
    case TypeKind::Unit:
    case TypeKind::Void:
    case TypeKind::Tangent:
    case TypeKind::Meta:
      return ty;
    case TypeKind::TVar:
      return ty->name == tvar ? replacement : ty;
    case TypeKind::Prod:
      return t_prod(substitute_type(ty->a, tvar, replacement),
                    substitute_type(ty->b, tvar, replacement));
    case TypeKind::Sum:
      return t_sum(substitute_type(ty->a, tvar, replacement),
                   substitute_type(ty->b, tvar, replacement));
    case TypeKind::Arrow:
      return t_arrow(substitute_type(ty->a, tvar, replacement),
                     substitute_type(ty->b, tvar, replacement));
    case TypeKind::Mu: {
      if (ty->name == tvar) return ty;  // binder shadows
      std::set<std::string> fv;
      free_type_vars(replacement, fv);
      if (fv.count(ty->name)) {
        // rename binder to avoid capture
        std::string fresh = fresh_name(ty->name);
        TypePtr body = substitute_type(ty->a, ty->name, t_tvar(fresh));
        return t_mu(fresh, substitute_type(body, tvar, replacement));
      }
      return t_mu(ty->name, substitute_type(ty->a, tvar, replacement));
    }
  }
  return ty;
}

void free_type_vars(const TypePtr& ty, std::set<std::string>& out) {
  switch (ty->kind) {
    case TypeKind::TVar:
      out.insert(ty->name);
      return;
    case TypeKind::Prod:
    case TypeKind::Sum:
    case TypeKind::Arrow:
      free_type_vars(ty->a, out);
      free_type_vars(ty->b, out);
      return;
    case TypeKind::Mu: {
      std::set<std::string> inner;
      free_type_vars(ty->a, inner);
      inner.erase(ty->name);
      out.insert(inner.begin(), inner.end());
      return;
    }
    default:
      return;
  }
}

namespace {
bool type_mentions(const TypePtr& ty, TypeKind k) {
  if (ty->kind == k) return true;
  if (ty->a && type_mentions(ty->a, k)) return true;
  if (ty->b && type_mentions(ty->b, k)) return true;
  return false;
}
}  // namespace

bool type_mentions_tangent(const TypePtr& ty) {
  return type_mentions(ty, TypeKind::Tangent);
}
bool type_mentions_arrow(const TypePtr& ty) {
  return type_mentions(ty, TypeKind::Arrow);
}
bool type_mentions_meta(const TypePtr& ty) {
  return type_mentions(ty, TypeKind::Meta);
}

std::string show_type(const TypePtr& ty) {
  // Precedence: -> (0, right assoc) < + (1) < * (2) < atom (3).
  struct Printer {
    static void go(const TypePtr& t, int prec, std::string& out) {
      switch (t->kind) {
        case TypeKind::Real: out += "real"; return;
        case TypeKind::Unit: out += "unit"; return;
        case TypeKind::Void: out += "void"; return;
        case TypeKind::Tangent: out += "tangent"; return;
        case TypeKind::TVar: out += "'" + t->name; return;
        case TypeKind::Meta:
          out += "?" + std::to_string(t->meta_id);
          return;
        case TypeKind::Arrow: {
          bool p = prec > 0;
          if (p) out += "(";
          go(t->a, 1, out);
          out += " -> ";
          go(t->b, 0, out);
          if (p) out += ")";
          return;
        }
        case TypeKind::Sum: {
          bool p = prec > 1;
          if (p) out += "(";
          go(t->a, 2, out);
          out += " + ";
          go(t->b, 1, out);
          if (p) out += ")";
          return;
        }
        case TypeKind::Prod: {
          bool p = prec > 2;
          if (p) out += "(";
          go(t->a, 3, out);
          out += " * ";
          go(t->b, 2, out);
          if (p) out += ")";
          return;
        }
        case TypeKind::Mu: {
          bool p = prec > 0;
          if (p) out += "(";
          out += "mu '" + t->name + ". ";
          go(t->a, 0, out);
          if (p) out += ")";
          return;
        }
      }
    }
  };
  std::string out;
  Printer::go(ty, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Term constructors
// ---------------------------------------------------------------------------

namespace {
std::shared_ptr<Term> node(TermKind k) { return std::make_shared<Term>(k); }
}  // namespace

TermPtr m_var(std::string name) {
  auto t = node(TermKind::Var);
  t->var = std::move(name);
  return t;
}
TermPtr m_let(std::string var, TermPtr bound, TermPtr body) {
  auto t = node(TermKind::Let);
  t->var = std::move(var);
  t->kids = {std::move(bound), std::move(body)};
  return t;
}
TermPtr m_const(double c) {
  auto t = node(TermKind::Const);
  t->value = c;
  return t;
}
TermPtr m_op(std::string sym, std::vector<TermPtr> args) {
  auto t = node(TermKind::PrimOp);
  t->var = std::move(sym);
  t->kids = std::move(args);
  return t;
}
TermPtr m_sign(TermPtr a) {
  auto t = node(TermKind::Sign);
  t->kids = {std::move(a)};
  return t;
}
TermPtr m_inl(TermPtr a) {
  auto t = node(TermKind::Inl);
  t->kids = {std::move(a)};
  return t;
}
TermPtr m_inr(TermPtr a) {
  auto t = node(TermKind::Inr);
  t->kids = {std::move(a)};
  return t;
}
TermPtr m_case_sum(TermPtr scrut, std::string lb, TermPtr l, std::string rb,
                   TermPtr r) {
  auto t = node(TermKind::CaseSum);
  t->var = std::move(lb);
  t->var2 = std::move(rb);
  t->kids = {std::move(scrut), std::move(l), std::move(r)};
  return t;
}
TermPtr m_case_void(TermPtr scrut) {
  auto t = node(TermKind::CaseVoid);
  t->kids = {std::move(scrut)};
  return t;
}
TermPtr m_unit() { return node(TermKind::UnitVal); }
TermPtr m_pair(TermPtr a, TermPtr b) {
  auto t = node(TermKind::Pair);
  t->kids = {std::move(a), std::move(b)};
  return t;
}
TermPtr m_case_pair(TermPtr scrut, std::string fb, std::string sb,
                    TermPtr body) {
  auto t = node(TermKind::CasePair);
  t->var = std::move(fb);
  t->var2 = std::move(sb);
  t->kids = {std::move(scrut), std::move(body)};
  return t;
}
TermPtr m_lam(std::string binder, TermPtr body) {
  auto t = node(TermKind::Lam);
  t->var = std::move(binder);
  t->kids = {std::move(body)};
  return t;
}
TermPtr m_app(TermPtr f, TermPtr arg) {
  auto t = node(TermKind::App);
  t->kids = {std::move(f), std::move(arg)};
  return t;
}
TermPtr m_iterate(TermPtr body, std::string binder, TermPtr seed) {
  auto t = node(TermKind::Iterate);
  t->var = std::move(binder);
  t->kids = {std::move(body), std::move(seed)};
  return t;
}
TermPtr m_rec(std::string binder, TermPtr body) {
  auto t = node(TermKind::Rec);
  t->var = std::move(binder);
  t->kids = {std::move(body)};
  return t;
}
TermPtr m_roll(TermPtr a, TypePtr ascription) {
  auto t = node(TermKind::Roll);
  t->kids = {std::move(a)};
  t->ascription = std::move(ascription);
  return t;
}
TermPtr m_case_roll(TermPtr scrut, std::string binder, TermPtr body,
                    TypePtr ascription) {
  auto t = node(TermKind::CaseRoll);
  t->ascription = std::move(ascription);
  t->var = std::move(binder);
  t->kids = {std::move(scrut), std::move(body)};
  return t;
}
TermPtr m_dzero() { return node(TermKind::TangentZero); }
TermPtr m_dadd(TermPtr a, TermPtr b) {
  auto t = node(TermKind::TangentAdd);
  t->kids = {std::move(a), std::move(b)};
  return t;
}
TermPtr m_dscale(TermPtr tangent, TermPtr scalar) {
  auto t = node(TermKind::TangentScale);
  t->kids = {std::move(tangent), std::move(scalar)};
  return t;
}
TermPtr m_dbasis(int i) {
  auto t = node(TermKind::TangentBasis);
  t->index = i;
  return t;
}
TermPtr m_dproj(int i, TermPtr a) {
  auto t = node(TermKind::TangentProj);
  t->index = i;
  t->kids = {std::move(a)};
  return t;
}
TermPtr m_if(TermPtr c, TermPtr th, TermPtr el) {
  auto t = node(TermKind::IfElse);
  t->kids = {std::move(c), std::move(th), std::move(el)};
  return t;
}
TermPtr m_fst(TermPtr a) {
  auto t = node(TermKind::Fst);
  t->kids = {std::move(a)};
  return t;
}
TermPtr m_snd(TermPtr a) {
  auto t = node(TermKind::Snd);
  t->kids = {std::move(a)};
  return t;
}

std::string fresh_name(const std::string& base) {
  static std::atomic<uint64_t> counter{0};
  std::string stem = base;
  auto tick = stem.find('\'');
  if (tick != std::string::npos) stem = stem.substr(0, tick);
  if (stem.empty() || stem == "_") stem = "v";
  return stem + "\'" + std::to_string(counter.fetch_add(1));
}

// ---------------------------------------------------------------------------
// Free variables and substitution
// ---------------------------------------------------------------------------

namespace {
struct BinderInfo {
  // For each kid index, the binders scoping that kid.
  static std::vector<std::string> binders_for(const Term& t, size_t kid) {
    switch (t.kind) {
      case TermKind::Let:
        return kid == 1 ? std::vector<std::string>{t.var}
                        : std::vector<std::string>{};
      case TermKind::CaseSum:
        if (kid == 1) return {t.var};
        if (kid == 2) return {t.var2};
        return {};
      case TermKind::CasePair:
        return kid == 1 ? std::vector<std::string>{t.var, t.var2}
                        : std::vector<std::string>{};
      case TermKind::Lam:
        return {t.var};
      case TermKind::Rec:
        return {t.var};
      case TermKind::Iterate:
        return kid == 0 ? std::vector<std::string>{t.var}
                        : std::vector<std::string>{};
      case TermKind::CaseRoll:
        return kid == 1 ? std::vector<std::string>{t.var}
                        : std::vector<std::string>{};
      default:
        return {};
    }
  }
};

void free_vars_rec(const TermPtr& t, std::set<std::string>& bound,
                   std::set<std::string>& out) {
  if (t->kind == TermKind::Var) {
    if (!bound.count(t->var)) out.insert(t->var);
    return;
  }
  for (size_t i = 0; i < t->kids.size(); ++i) {
    auto bs = BinderInfo::binders_for(*t, i);
    std::vector<std::string> added;
    for (auto& b : bs)
      if (bound.insert(b).second) added.push_back(b);
    free_vars_rec(t->kids[i], bound, out);
    for (auto& b : added) bound.erase(b);
  }
}

// Rebuild node with new kids (shallow copy of everything else).
TermPtr with_kids(const Term& t, std::vector<TermPtr> kids) {
  auto n = std::make_shared<Term>(t.kind);
  n->var = t.var;
  n->var2 = t.var2;
  n->value = t.value;
  n->index = t.index;
  n->ascription = t.ascription;
  n->kids = std::move(kids);
  return n;
}

// Rename binder slot `which` (0 = var, 1 = var2) of node `t` to `to`,
// renaming occurrences in the kids it scopes.
TermPtr rename_binder(const TermPtr& t, int which, const std::string& to) {
  auto n = std::make_shared<Term>(*t);
  const std::string from = which == 0 ? t->var : t->var2;
  if (which == 0)
    n->var = to;
  else
    n->var2 = to;
  for (size_t i = 0; i < t->kids.size(); ++i) {
    auto bs = BinderInfo::binders_for(*t, i);
    bool scoped = false;
    for (auto& b : bs)
      if (b == from) scoped = true;
    // After renaming `which`, check that slot's new binder list: the other
    // binder of a CasePair may shadow.
    if (scoped) {
      // If the other binder in the same slot equals `from`, the occurrence is
      // bound by it only if it comes later; our binders are distinct in
      // well-formed terms, treat equal names as shadowing (no rename).
      bool shadowed = false;
      if (t->kind == TermKind::CasePair && which == 0 && t->var2 == from)
        shadowed = false;  // both bind, but distinct names enforced by parser
      if (!shadowed)
        n->kids[i] = substitute(t->kids[i], from, m_var(to));
    }
  }
  return n;
}
}  // namespace

void free_vars(const TermPtr& t, std::set<std::string>& out) {
  std::set<std::string> bound;
  free_vars_rec(t, bound, out);
}

bool is_free_in(const std::string& name, const TermPtr& t) {
  std::set<std::string> fv;
  free_vars(t, fv);
  return fv.count(name) > 0;
}

TermPtr substitute(const TermPtr& t, const std::string& var,
                   const TermPtr& replacement) {
  if (t->kind == TermKind::Var)
    return t->var == var ? replacement : t;
  if (t->kids.empty()) return t;

  std::set<std::string> repl_fv;
  free_vars(replacement, repl_fv);

  TermPtr cur = t;
  // Rename binders that would capture free variables of the replacement, or
  // that shadow `var` in a slot we must not descend into (handled below).
  auto maybe_rename = [&](int which) {
    const std::string& b = which == 0 ? cur->var : cur->var2;
    if (b != var && repl_fv.count(b) && is_free_in(var, cur)) {
      cur = rename_binder(cur, which, fresh_name(b));
    }
  };
  switch (cur->kind) {
    case TermKind::Let:
    case TermKind::Lam:
    case TermKind::Rec:
    case TermKind::Iterate:
    case TermKind::CaseRoll:
      maybe_rename(0);
      break;
    case TermKind::CaseSum:
    case TermKind::CasePair:
      maybe_rename(0);
      maybe_rename(1);
      break;
    default:
      break;
  }

  std::vector<TermPtr> kids;
  kids.reserve(cur->kids.size());
  bool changed = cur != t;
  for (size_t i = 0; i < cur->kids.size(); ++i) {
    auto bs = BinderInfo::binders_for(*cur, i);
    bool shadowed = false;
    for (auto& b : bs)
      if (b == var) shadowed = true;
    TermPtr k =
        shadowed ? cur->kids[i] : substitute(cur->kids[i], var, replacement);
    changed = changed || k != cur->kids[i];
    kids.push_back(std::move(k));
  }
  if (!changed) return t;
  return with_kids(*cur, std::move(kids));
}

// ---------------------------------------------------------------------------
// Alpha equivalence
// ---------------------------------------------------------------------------

namespace {
struct NameEnv {
  std::map<std::string, std::string> ab, ba;
};

bool alpha_eq_rec(const TermPtr& a, const TermPtr& b, NameEnv env);

bool same_var(const std::string& x, const std::string& y, const NameEnv& env) {
  auto it = env.ab.find(x);
  auto it2 = env.ba.find(y);
  if (it == env.ab.end() && it2 == env.ba.end()) return x == y;
  return it != env.ab.end() && it2 != env.ba.end() && it->second == y &&
         it2->second == x;
}

NameEnv bind(NameEnv env, const std::string& x, const std::string& y) {
  env.ab[x] = y;
  env.ba[y] = x;
  return env;
}

bool alpha_eq_rec(const TermPtr& a, const TermPtr& b, NameEnv env) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TermKind::Var:
      return same_var(a->var, b->var, env);
    case TermKind::Const:
      return a->value == b->value;
    case TermKind::PrimOp:
      if (a->var != b->var || a->kids.size() != b->kids.size()) return false;
      break;
    case TermKind::TangentBasis:
    case TermKind::TangentProj:
      if (a->index != b->index) return false;
      break;
    case TermKind::Roll:
    case TermKind::CaseRoll:
      if ((a->ascription == nullptr) != (b->ascription == nullptr))
        return false;
      if (a->ascription && !type_alpha_eq(a->ascription, b->ascription))
        return false;
      break;
    default:
      break;
  }
  if (a->kids.size() != b->kids.size()) return false;
  for (size_t i = 0; i < a->kids.size(); ++i) {
    auto bsa = BinderInfo::binders_for(*a, i);
    auto bsb = BinderInfo::binders_for(*b, i);
    if (bsa.size() != bsb.size()) return false;
    NameEnv e = env;
    for (size_t j = 0; j < bsa.size(); ++j) e = bind(e, bsa[j], bsb[j]);
    if (!alpha_eq_rec(a->kids[i], b->kids[i], e)) return false;
  }
  return true;
}
}  // namespace

bool alpha_eq(const TermPtr& a, const TermPtr& b) {
  return alpha_eq_rec(a, b, NameEnv{});
}

// ---------------------------------------------------------------------------
// Values, desugaring, beta rewriting
// ---------------------------------------------------------------------------

bool is_value(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Var:
    case TermKind::Const:
    case TermKind::UnitVal:
    case TermKind::Lam:
    case TermKind::TangentZero:
    case TermKind::TangentBasis:
      return true;
    case TermKind::Pair:
      return is_value(t->kids[0]) && is_value(t->kids[1]);
    case TermKind::Inl:
    case TermKind::Inr:
    case TermKind::Roll:
      return is_value(t->kids[0]);
    default:
      return false;
  }
}

TermPtr desugar(const TermPtr& t, const DesugarOptions& opts) {
  std::vector<TermPtr> kids;
  kids.reserve(t->kids.size());
  bool changed = false;
  for (auto& k : t->kids) {
    auto d = desugar(k, opts);
    changed = changed || d != k;
    kids.push_back(std::move(d));
  }
  TermPtr cur = changed ? with_kids(*t, std::move(kids)) : t;

  switch (cur->kind) {
    case TermKind::IfElse: {
      std::string l = fresh_name("_"), r = fresh_name("_");
      return m_case_sum(m_sign(cur->kids[0]), l, cur->kids[1], r,
                        cur->kids[2]);
    }
    case TermKind::Fst: {
      std::string x = fresh_name("x"), y = fresh_name("_");
      return m_case_pair(cur->kids[0], x, y, m_var(x));
    }
    case TermKind::Snd: {
      std::string x = fresh_name("_"), y = fresh_name("y");
      return m_case_pair(cur->kids[0], x, y, m_var(y));
    }
    case TermKind::Iterate: {
      if (!opts.expand_iterate) return cur;
      // (rec z. \x. case body of inl x' -> z x' | inr x'' -> x'') seed
      std::string z = fresh_name("loop");
      std::string xp = fresh_name(cur->var);
      std::string xpp = fresh_name(cur->var);
      TermPtr lam = m_lam(
          cur->var,
          m_case_sum(cur->kids[0], xp, m_app(m_var(z), m_var(xp)), xpp,
                     m_var(xpp)));
      return m_app(m_rec(z, lam), cur->kids[1]);
    }
    case TermKind::Rec: {
      if (!opts.expand_rec) return cur;
      // rec x. t  =  let body = \w. \a. let x = (unroll w) w in t a
      //              in body (roll body)
      std::string body = fresh_name("body");
      std::string w = fresh_name("w");
      std::string a = fresh_name("a");
      // unroll w applied back to w: case-roll w of roll u -> u w
      std::string u = fresh_name("u");
      TermPtr self = m_case_roll(m_var(w), u, m_app(m_var(u), m_var(w)));
      TermPtr inner =
          m_lam(w, m_lam(a, m_let(cur->var, self,
                                  m_app(cur->kids[0], m_var(a)))));
      return m_let(body, inner,
                   m_app(m_var(body), m_roll(m_var(body))));
    }
    default:
      return cur;
  }
}

namespace {
// Try to contract the redex at the root. nullptr if none.
TermPtr contract(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Let:
      if (is_value(t->kids[0]))
        return substitute(t->kids[1], t->var, t->kids[0]);
      return nullptr;
    case TermKind::App:
      if (t->kids[0]->kind == TermKind::Lam && is_value(t->kids[1]))
        return substitute(t->kids[0]->kids[0], t->kids[0]->var, t->kids[1]);
      return nullptr;
    case TermKind::CaseSum: {
      const auto& s = t->kids[0];
      if (s->kind == TermKind::Inl && is_value(s->kids[0]))
        return substitute(t->kids[1], t->var, s->kids[0]);
      if (s->kind == TermKind::Inr && is_value(s->kids[0]))
        return substitute(t->kids[2], t->var2, s->kids[0]);
      return nullptr;
    }
    case TermKind::CasePair: {
      const auto& s = t->kids[0];
      if (s->kind == TermKind::Pair && is_value(s)) {
        auto body = substitute(t->kids[1], t->var, s->kids[0]);
        return substitute(body, t->var2, s->kids[1]);
      }
      return nullptr;
    }
    case TermKind::CaseRoll: {
      const auto& s = t->kids[0];
      if (s->kind == TermKind::Roll && is_value(s->kids[0]))
        return substitute(t->kids[1], t->var, s->kids[0]);
      return nullptr;
    }
    default:
      return nullptr;
  }
}
}  // namespace

TermPtr beta_step(const TermPtr& t) {
  if (auto r = contract(t)) return r;
  for (size_t i = 0; i < t->kids.size(); ++i) {
    if (auto r = beta_step(t->kids[i])) {
      auto kids = t->kids;
      kids[i] = r;
      return with_kids(*t, std::move(kids));
    }
  }
  return nullptr;
}

TermPtr beta_normalize(const TermPtr& t, int max_steps) {
  TermPtr cur = t;
  for (int i = 0; i < max_steps; ++i) {
    auto next = beta_step(cur);
    if (!next) return cur;
    cur = next;
  }
  return cur;
}

bool term_uses_target_constructs(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::TangentZero:
    case TermKind::TangentAdd:
    case TermKind::TangentScale:
    case TermKind::TangentBasis:
    case TermKind::TangentProj:
      return true;
    default:
      break;
  }
  if (t->ascription && type_mentions_tangent(t->ascription))
    return true;
  for (auto& k : t->kids)
    if (term_uses_target_constructs(k)) return true;
  return false;
}

}  // namespace dn
