#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "dn/ast.hpp"

namespace dn {

// A primitive operation op : real^n -> real with its domain and the terms
// for its partial derivatives. Each partial is a source term over the free
// variables x1..xn denoting d(op)/d(xi).
struct PrimSpec {
  std::string symbol;
  int arity = 1;
  std::function<bool(const std::vector<double>&)> in_domain;
  std::function<double(const std::vector<double>&)> value;
  std::vector<TermPtr> partials;  // size == arity
};

class Registry {
 public:
  void add(PrimSpec spec);
  const PrimSpec* find(const std::string& symbol) const;
  std::vector<std::string> symbols() const;

  static const Registry& builtins();

 private:
  std::map<std::string, PrimSpec> specs_;
};

}  // namespace dn
