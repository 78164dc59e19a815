#pragma once

#include <map>
#include <variant>
#include <vector>

#include "dn/ast.hpp"

namespace dn {

enum class Lang { Source, Target };

struct TypeError {
  std::string message;
  TermPtr at;  // offending subterm, may be null
};

struct TypingResult {
  TypePtr type;
  // Binder types per node, zonked, in binder order (var then var2).
  // Keyed by the original Term node pointer.
  std::map<const Term*, std::vector<TypePtr>> binder_types;
};

using InferResult = std::variant<TypingResult, TypeError>;

using TypeEnv = std::map<std::string, TypePtr>;

// Syntax-directed monomorphic inference. `roll` needs its ascription (or an
// expected type flowing from an annotation) whenever the mu-type is not
// otherwise determined. Source mode rejects tangent constructs.
InferResult infer(const TermPtr& t, Lang lang, const TypeEnv& env = {},
                  const TypePtr& expected = nullptr);

// Convenience: type of a closed term, or the error message.
std::string infer_show(const TermPtr& t, Lang lang);

}  // namespace dn
