#pragma once

#include "dn/ast.hpp"
#include "dn/prims.hpp"
#include "dn/typecheck.hpp"

namespace dn {

enum class SignMode { Naive, Efficient };

// Dual-numbers transform on types: real becomes real * tangent, every other
// constructor maps homomorphically (mu bodies included, type variables are
// fixed points).
TypePtr ad_transform_type(const TypePtr& ty);

// Dual-numbers transform on terms. Efficient sign mode rewrites the
// scrutinee's free variables back to their primal parts, which needs their
// source types: pass the binder-type table produced by infer() on the same
// term object, plus the types of any free variables.
TermPtr ad_transform(const TermPtr& t, const Registry& registry,
                     SignMode mode = SignMode::Naive,
                     const std::map<const Term*, std::vector<TypePtr>>*
                         binder_types = nullptr,
                     const TypeEnv& free_var_types = {});

// Coercions between a type and its dual image (mutually defined, swapping
// roles under function arrows):
//   typeproj_term(ty): a closed function term of type D[ty] -> ty
//   typezero_term(ty): a closed function term of type ty -> D[ty]
// Recursive types are handled with term-level recursion.
TermPtr typeproj_term(const TypePtr& ty);
TermPtr typezero_term(const TypePtr& ty);

// The reverse-mode entry wrapper at fan-in s: a function term of type
// real^s -> D[real^s] seeding slot i with the i-th basis tangent.
TermPtr wrap_term(int s);

}  // namespace dn
