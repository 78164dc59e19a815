#include "dn/prims.hpp"

#include <cmath>

namespace dn {

void Registry::add(PrimSpec spec) {
  auto sym = spec.symbol;
  specs_.insert_or_assign(sym, std::move(spec));
}

const PrimSpec* Registry::find(const std::string& symbol) const {
  auto it = specs_.find(symbol);
  return it == specs_.end() ? nullptr : &it->second;
}

std::vector<std::string> Registry::symbols() const {
  std::vector<std::string> out;
  for (auto& [k, _] : specs_) out.push_back(k);
  return out;
}

namespace {

TermPtr x1() { return m_var("x1"); }
TermPtr x2() { return m_var("x2"); }
TermPtr lit(double c) { return m_const(c); }
TermPtr op2(const char* s, TermPtr a, TermPtr b) {
  return m_op(s, {std::move(a), std::move(b)});
}
TermPtr op1(const char* s, TermPtr a) { return m_op(s, {std::move(a)}); }

bool total(const std::vector<double>&) { return true; }

Registry make_builtins() {
  Registry r;
  r.add({"add", 2, total, [](auto& a) { return a[0] + a[1]; },
         {lit(1.0), lit(1.0)}});
  r.add({"sub", 2, total, [](auto& a) { return a[0] - a[1]; },
         {lit(1.0), lit(-1.0)}});
  r.add({"mul", 2, total, [](auto& a) { return a[0] * a[1]; },
         {x2(), x1()}});
  r.add({"div", 2, [](auto& a) { return a[1] != 0.0; },
         [](auto& a) { return a[0] / a[1]; },
         {op2("div", lit(1.0), x2()),
          op1("neg", op2("div", x1(), op2("mul", x2(), x2())))}});
  r.add({"neg", 1, total, [](auto& a) { return -a[0]; }, {lit(-1.0)}});
  r.add({"exp", 1, total, [](auto& a) { return std::exp(a[0]); },
         {op1("exp", x1())}});
  r.add({"log", 1, [](auto& a) { return a[0] > 0.0; },
         [](auto& a) { return std::log(a[0]); },
         {op2("div", lit(1.0), x1())}});
  r.add({"sin", 1, total, [](auto& a) { return std::sin(a[0]); },
         {op1("cos", x1())}});
  r.add({"cos", 1, total, [](auto& a) { return std::cos(a[0]); },
         {op1("neg", op1("sin", x1()))}});
  r.add({"sqrt", 1, [](auto& a) { return a[0] > 0.0; },
         [](auto& a) { return std::sqrt(a[0]); },
         {op2("div", lit(1.0), op2("mul", lit(2.0), op1("sqrt", x1())))}});
  return r;
}

}  // namespace

const Registry& Registry::builtins() {
  static const Registry r = make_builtins();
  return r;
}

}  // namespace dn
