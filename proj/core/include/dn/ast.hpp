#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dn {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

enum class TypeKind {
  Real,
  Unit,
  Void,
  Prod,
  Sum,
  Arrow,
  TVar,
  Mu,
  Tangent,  // target language only
  Meta,     // unification variable, produced by the typechecker
};

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
  TypeKind kind;
  TypePtr a;         // Prod/Sum/Arrow left, Mu body
  TypePtr b;         // Prod/Sum/Arrow right
  std::string name;  // TVar name, Mu binder
  int meta_id = 0;

  explicit Type(TypeKind k) : kind(k) {}
};

TypePtr t_real();
TypePtr t_unit();
TypePtr t_void();
TypePtr t_tangent();
TypePtr t_prod(TypePtr a, TypePtr b);
TypePtr t_sum(TypePtr a, TypePtr b);
TypePtr t_arrow(TypePtr a, TypePtr b);
TypePtr t_tvar(std::string name);
TypePtr t_mu(std::string binder, TypePtr body);
TypePtr t_meta(int id);

// real^n as left-nested products: real^1 = real, real^{n+1} = real^n * real.
TypePtr t_real_pow(int n);

bool type_alpha_eq(const TypePtr& a, const TypePtr& b);
TypePtr substitute_type(const TypePtr& ty, const std::string& tvar,
                        const TypePtr& replacement);
void free_type_vars(const TypePtr& ty, std::set<std::string>& out);
bool type_mentions_tangent(const TypePtr& ty);
bool type_mentions_arrow(const TypePtr& ty);
bool type_mentions_meta(const TypePtr& ty);
std::string show_type(const TypePtr& ty);

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

enum class TermKind {
  Var,       // var
  Let,       // var = binder; kids = {bound, body}
  Const,     // value
  PrimOp,    // var = op symbol; kids = args
  Sign,      // kids = {arg}
  Inl,       // kids = {arg}
  Inr,       // kids = {arg}
  CaseSum,   // var = left binder, var2 = right binder; kids = {scrut, l, r}
  CaseVoid,  // kids = {scrut}
  UnitVal,
  Pair,      // kids = {fst, snd}
  CasePair,  // var = fst binder, var2 = snd binder; kids = {scrut, body}
  Lam,       // var = binder; kids = {body}
  App,       // kids = {fun, arg}
  Iterate,   // var = binder; kids = {body, seed}
  Rec,       // var = binder; kids = {body}
  Roll,      // kids = {arg}; optional mu-type ascription
  CaseRoll,  // var = binder; kids = {scrut, body}; optional scrutinee
             // mu-type ascription (machine-generated terms only)
  // Target-language tangent constructs.
  TangentZero,
  TangentAdd,    // kids = {l, r}
  TangentScale,  // kids = {tangent, scalar}
  TangentBasis,  // index
  TangentProj,   // index; kids = {arg}
  // Sugar, removed by desugar().
  IfElse,  // kids = {cond, then, else}
  Fst,     // kids = {arg}
  Snd,     // kids = {arg}
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  TermKind kind;
  std::string var;
  std::string var2;
  double value = 0.0;
  int index = 0;
  TypePtr ascription;  // Roll / CaseRoll only
  std::vector<TermPtr> kids;

  explicit Term(TermKind k) : kind(k) {}
};

TermPtr m_var(std::string name);
TermPtr m_let(std::string var, TermPtr bound, TermPtr body);
TermPtr m_const(double c);
TermPtr m_op(std::string sym, std::vector<TermPtr> args);
TermPtr m_sign(TermPtr t);
TermPtr m_inl(TermPtr t);
TermPtr m_inr(TermPtr t);
TermPtr m_case_sum(TermPtr scrut, std::string lb, TermPtr l, std::string rb,
                   TermPtr r);
TermPtr m_case_void(TermPtr scrut);
TermPtr m_unit();
TermPtr m_pair(TermPtr a, TermPtr b);
TermPtr m_case_pair(TermPtr scrut, std::string fb, std::string sb,
                    TermPtr body);
TermPtr m_lam(std::string binder, TermPtr body);
TermPtr m_app(TermPtr f, TermPtr arg);
TermPtr m_iterate(TermPtr body, std::string binder, TermPtr seed);
TermPtr m_rec(std::string binder, TermPtr body);
TermPtr m_roll(TermPtr t, TypePtr ascription = nullptr);
TermPtr m_case_roll(TermPtr scrut, std::string binder, TermPtr body,
                    TypePtr ascription = nullptr);
TermPtr m_dzero();
TermPtr m_dadd(TermPtr a, TermPtr b);
TermPtr m_dscale(TermPtr tangent, TermPtr scalar);
TermPtr m_dbasis(int i);
TermPtr m_dproj(int i, TermPtr t);
TermPtr m_if(TermPtr c, TermPtr t, TermPtr e);
TermPtr m_fst(TermPtr t);
TermPtr m_snd(TermPtr t);

// Fresh names append a globally unique ML-style tick suffix (x'42).
std::string fresh_name(const std::string& base);

void free_vars(const TermPtr& t, std::set<std::string>& out);
bool is_free_in(const std::string& name, const TermPtr& t);

// Capture-avoiding substitution of `replacement` for free occurrences of
// `var` in `t`.
TermPtr substitute(const TermPtr& t, const std::string& var,
                   const TermPtr& replacement);

bool alpha_eq(const TermPtr& a, const TermPtr& b);

// Syntactic value forms (variables, constants, tuples of values, ...).
bool is_value(const TermPtr& t);

struct DesugarOptions {
  bool expand_iterate = false;  // iterate -> rec
  bool expand_rec = false;      // rec -> roll / case-roll
};

// Expands if/fst/snd into core forms; optionally expands iterate and rec.
// Rec expansion needs the binder's arrow type when a roll ascription should
// be attached; without it the roll is left bare (fine for evaluation).
TermPtr desugar(const TermPtr& t, const DesugarOptions& opts = {});

// One leftmost value-beta rewrite; nullptr when no redex fires.
TermPtr beta_step(const TermPtr& t);

// beta_step until fixpoint, at most `max_steps` rewrites.
TermPtr beta_normalize(const TermPtr& t, int max_steps = 1000);

bool term_uses_target_constructs(const TermPtr& t);

}  // namespace dn
