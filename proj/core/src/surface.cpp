#include "dn/surface.hpp"

#include <cassert>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dn {

namespace {

const std::set<std::string> kKeywords = {
    "let",  "letrec", "in",     "fun",  "rec",    "if",   "then",
    "else", "case",   "of",     "inl",  "inr",    "absurd", "sign",
    "iterate", "from", "roll",  "mu",   "dzero",  "dbasis", "dproj",
    "real", "unit",   "void",   "tangent",
    // primitive operation names are reserved
    "add",  "sub",    "mul",    "div",  "neg",    "exp",  "log",
    "sin",  "cos",    "sqrt",
};

const std::map<std::string, int> kOpArity = {
    {"add", 2}, {"sub", 2}, {"mul", 2}, {"div", 2}, {"neg", 1},
    {"exp", 1}, {"log", 1}, {"sin", 1}, {"cos", 1}, {"sqrt", 1},
};

struct Token {
  enum Kind { Ident, TVarTok, Number, Sym, Kw, End } kind;
  std::string text;
  double num = 0;
  int line = 1, col = 1;
};

struct ParseFail {
  ParseError err;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : src_(s) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg, const Token& at) const {
    throw ParseFail{ParseError{msg, at.line, at.col}};
  }

 private:
  void advance() {
    skip_ws();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::End;
      tok_.text = "<end of input>";
      return;
    }
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_' || src_[pos_] == '\''))
        bump();
      tok_.text = src_.substr(start, pos_ - start);
      tok_.kind = kKeywords.count(tok_.text) ? Token::Kw : Token::Ident;
      return;
    }
    if (c == '\'') {
      bump();
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_' || src_[pos_] == '\''))
        bump();
      if (pos_ == start)
        throw ParseFail{
            ParseError{"expected type variable name after '", line_, col_}};
      tok_.kind = Token::TVarTok;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    // multi-char symbols first
    static const char* multi[] = {"<+>", "<*>", "->", nullptr};
    for (int i = 0; multi[i]; ++i) {
      size_t n = std::strlen(multi[i]);
      if (src_.compare(pos_, n, multi[i]) == 0) {
        tok_.kind = Token::Sym;
        tok_.text = multi[i];
        for (size_t j = 0; j < n; ++j) bump();
        return;
      }
    }
    static const std::string singles = "()[]{}|,=+-*/.";
    if (singles.find(c) != std::string::npos) {
      tok_.kind = Token::Sym;
      tok_.text = std::string(1, c);
      bump();
      return;
    }
    throw ParseFail{ParseError{
        std::string("unexpected character '") + c + "'", line_, col_}};
  }

  void lex_number() {
    size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_])))
      bump();
    if (pos_ < src_.size() && src_[pos_] == '.' && pos_ + 1 < src_.size() &&
        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      bump();
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        bump();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      size_t save = pos_;
      bump();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
        bump();
      if (pos_ < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          bump();
      } else {
        pos_ = save;  // not an exponent; leave 'e...' for the next token
      }
    }
    tok_.kind = Token::Number;
    tok_.text = src_.substr(start, pos_ - start);
    tok_.num = std::strtod(tok_.text.c_str(), nullptr);
  }

  void skip_ws() {
    for (;;) {
      while (pos_ < src_.size() &&
             std::isspace(static_cast<unsigned char>(src_[pos_])))
        bump();
      if (pos_ + 1 < src_.size() && src_[pos_] == '-' &&
          src_[pos_ + 1] == '-') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
        continue;
      }
      break;
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(const std::string& s) : lex_(s) {}

  TermPtr parse_term_all() {
    auto t = term();
    expect_end();
    return t;
  }

  TypePtr parse_type_all() {
    auto t = type();
    expect_end();
    return t;
  }

 private:
  Lexer lex_;

  bool at_sym(const std::string& s) {
    return lex_.peek().kind == Token::Sym && lex_.peek().text == s;
  }
  bool at_kw(const std::string& s) {
    return lex_.peek().kind == Token::Kw && lex_.peek().text == s;
  }
  Token eat_sym(const std::string& s) {
    if (!at_sym(s))
      lex_.fail("expected '" + s + "' but found '" + lex_.peek().text + "'",
                lex_.peek());
    return lex_.next();
  }
  Token eat_kw(const std::string& s) {
    if (!at_kw(s))
      lex_.fail("expected '" + s + "' but found '" + lex_.peek().text + "'",
                lex_.peek());
    return lex_.next();
  }
  void expect_end() {
    if (lex_.peek().kind != Token::End)
      lex_.fail("unexpected trailing input '" + lex_.peek().text + "'",
                lex_.peek());
  }

  std::string ident() {
    const Token& t = lex_.peek();
    if (t.kind != Token::Ident)
      lex_.fail("expected identifier but found '" + t.text + "'", t);
    return lex_.next().text;
  }

  // Pattern binder: identifier or wildcard.
  std::string binder() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Ident) return lex_.next().text;
    lex_.fail("expected binder but found '" + t.text + "'", t);
  }

  int nat_index() {
    const Token& t = lex_.peek();
    if (t.kind != Token::Number || t.text.find('.') != std::string::npos ||
        t.text.find('e') != std::string::npos ||
        t.text.find('E') != std::string::npos)
      lex_.fail("expected integer index but found '" + t.text + "'", t);
    int i = static_cast<int>(lex_.next().num);
    if (i < 1) lex_.fail("index must be >= 1", t);
    return i;
  }

  // ----- terms ---------------------------------------------------------

  TermPtr term() {
    if (at_kw("let")) {
      lex_.next();
      std::string x = binder();
      eat_sym("=");
      auto bound = term();
      eat_kw("in");
      auto body = term();
      return m_let(x, bound, body);
    }
    if (at_kw("letrec")) {
      // letrec f x = e1 in e2  ==  let f = rec f -> fun x -> e1 in e2
      lex_.next();
      std::string f = binder();
      std::string x = binder();
      eat_sym("=");
      auto e1 = term();
      eat_kw("in");
      auto e2 = term();
      return m_let(f, m_rec(f, m_lam(x, e1)), e2);
    }
    if (at_kw("fun")) {
      lex_.next();
      std::string x = binder();
      eat_sym("->");
      return m_lam(x, term());
    }
    if (at_kw("rec")) {
      lex_.next();
      std::string x = binder();
      eat_sym("->");
      return m_rec(x, term());
    }
    if (at_kw("if")) {
      lex_.next();
      auto c = term();
      eat_kw("then");
      auto t1 = term();
      eat_kw("else");
      auto t2 = term();
      return m_if(c, t1, t2);
    }
    if (at_kw("iterate")) {
      lex_.next();
      auto body = term();
      eat_kw("from");
      std::string x = binder();
      eat_sym("=");
      auto seed = term();
      return m_iterate(body, x, seed);
    }
    if (at_kw("case")) return case_term();
    return dadd_expr();
  }

  TermPtr case_term() {
    eat_kw("case");
    auto scrut = term();
    eat_kw("of");
    eat_sym("{");
    if (at_kw("inl")) {
      lex_.next();
      std::string lb = binder();
      eat_sym("->");
      auto l = term();
      eat_sym("|");
      eat_kw("inr");
      std::string rb = binder();
      eat_sym("->");
      auto r = term();
      eat_sym("}");
      if (lb == "_") lb = fresh_name("_");
      if (rb == "_") rb = fresh_name("_");
      return m_case_sum(scrut, lb, l, rb, r);
    }
    if (at_kw("roll")) {
      lex_.next();
      TypePtr asc;
      if (at_sym("[")) {
        lex_.next();
        asc = type();
        eat_sym("]");
      }
      std::string b = binder();
      eat_sym("->");
      auto body = term();
      eat_sym("}");
      if (b == "_") b = fresh_name("_");
      return m_case_roll(scrut, b, body, asc);
    }
    if (at_sym("(")) {
      lex_.next();
      std::string a = binder();
      eat_sym(",");
      std::string b = binder();
      eat_sym(")");
      eat_sym("->");
      auto body = term();
      eat_sym("}");
      if (a == "_") a = fresh_name("_");
      if (b == "_") b = fresh_name("_");
      if (a == b) lex_.fail("pair pattern binders must be distinct",
                            lex_.peek());
      return m_case_pair(scrut, a, b, body);
    }
    lex_.fail("expected case branch ('inl', 'roll' or '(')", lex_.peek());
  }

  TermPtr dadd_expr() {
    auto t = dscale_expr();
    while (at_sym("<+>")) {
      lex_.next();
      t = m_dadd(t, dscale_expr());
    }
    return t;
  }

  TermPtr dscale_expr() {
    auto t = add_expr();
    while (at_sym("<*>")) {
      lex_.next();
      t = m_dscale(t, add_expr());
    }
    return t;
  }

  TermPtr add_expr() {
    auto t = mul_expr();
    for (;;) {
      if (at_sym("+")) {
        lex_.next();
        t = m_op("add", {t, mul_expr()});
      } else if (at_sym("-")) {
        lex_.next();
        t = m_op("sub", {t, mul_expr()});
      } else {
        return t;
      }
    }
  }

  TermPtr mul_expr() {
    auto t = prefix_expr();
    for (;;) {
      if (at_sym("*")) {
        lex_.next();
        t = m_op("mul", {t, prefix_expr()});
      } else if (at_sym("/")) {
        lex_.next();
        t = m_op("div", {t, prefix_expr()});
      } else {
        return t;
      }
    }
  }

  // Prefix constructs bind the whole following application chain:
  // `inl f x` parses as `inl (f x)`.
  TermPtr prefix_expr() {
    if (at_sym("-")) {
      Token minus = lex_.next();
      if (lex_.peek().kind == Token::Number) {
        return m_const(-lex_.next().num);
      }
      (void)minus;
      return m_op("neg", {prefix_expr()});
    }
    if (at_kw("sign")) {
      lex_.next();
      return m_sign(prefix_expr());
    }
    if (at_kw("inl")) {
      lex_.next();
      return m_inl(prefix_expr());
    }
    if (at_kw("inr")) {
      lex_.next();
      return m_inr(prefix_expr());
    }
    if (at_kw("absurd")) {
      lex_.next();
      return m_case_void(prefix_expr());
    }
    if (at_kw("roll")) {
      lex_.next();
      TypePtr asc;
      if (at_sym("[")) {
        lex_.next();
        asc = type();
        eat_sym("]");
      }
      return m_roll(prefix_expr(), asc);
    }
    if (at_kw("dproj")) {
      lex_.next();
      int i = nat_index();
      return m_dproj(i, prefix_expr());
    }
    // fst / snd appear as reserved? they are not keywords; treat idents
    // "fst"/"snd" specially so they read as projections.
    if (lex_.peek().kind == Token::Ident &&
        (lex_.peek().text == "fst" || lex_.peek().text == "snd")) {
      bool first = lex_.next().text == "fst";
      auto arg = prefix_expr();
      return first ? m_fst(arg) : m_snd(arg);
    }
    return app_expr();
  }

  TermPtr app_expr() {
    auto t = atom();
    for (;;) {
      if (starts_atom()) {
        t = m_app(t, atom());
      } else {
        return t;
      }
    }
  }

  bool starts_atom() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Ident || t.kind == Token::Number) return true;
    if (t.kind == Token::Sym && t.text == "(") return true;
    if (t.kind == Token::Kw &&
        (t.text == "dzero" || t.text == "dbasis" || kOpArity.count(t.text)))
      return true;
    return false;
  }

  TermPtr atom() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Number) return m_const(lex_.next().num);
    if (t.kind == Token::Ident) return m_var(lex_.next().text);
    if (t.kind == Token::Kw && t.text == "dzero") {
      lex_.next();
      return m_dzero();
    }
    if (t.kind == Token::Kw && t.text == "dbasis") {
      lex_.next();
      return m_dbasis(nat_index());
    }
    if (t.kind == Token::Kw && kOpArity.count(t.text)) {
      std::string op = lex_.next().text;
      int arity = kOpArity.at(op);
      eat_sym("(");
      std::vector<TermPtr> args;
      if (!at_sym(")")) {
        args.push_back(term());
        while (at_sym(",")) {
          lex_.next();
          args.push_back(term());
        }
      }
      eat_sym(")");
      if (static_cast<int>(args.size()) != arity)
        lex_.fail("operation '" + op + "' expects " + std::to_string(arity) +
                      " arguments",
                  t);
      return m_op(op, std::move(args));
    }
    if (at_sym("(")) {
      lex_.next();
      if (at_sym(")")) {
        lex_.next();
        return m_unit();
      }
      auto e = term();
      if (at_sym(",")) {
        lex_.next();
        auto e2 = term();
        eat_sym(")");
        return m_pair(e, e2);
      }
      eat_sym(")");
      return e;
    }
    lex_.fail("expected expression but found '" + t.text + "'", t);
  }

  // ----- types ---------------------------------------------------------

  TypePtr type() {  // arrow level, right assoc
    if (at_kw("mu")) {
      lex_.next();
      const Token& tv = lex_.peek();
      if (tv.kind != Token::TVarTok)
        lex_.fail("expected type variable after 'mu'", tv);
      std::string name = lex_.next().text;
      eat_sym(".");
      return t_mu(name, type());
    }
    auto a = sum_type();
    if (at_sym("->")) {
      lex_.next();
      return t_arrow(a, type());
    }
    return a;
  }

  TypePtr sum_type() {
    auto a = prod_type();
    while (at_sym("+")) {
      lex_.next();
      a = t_sum(a, prod_type());
    }
    return a;
  }

  TypePtr prod_type() {
    auto a = type_atom();
    while (at_sym("*")) {
      lex_.next();
      a = t_prod(a, type_atom());
    }
    return a;
  }

  TypePtr type_atom() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Kw) {
      if (t.text == "real") return lex_.next(), t_real();
      if (t.text == "unit") return lex_.next(), t_unit();
      if (t.text == "void") return lex_.next(), t_void();
      if (t.text == "tangent") return lex_.next(), t_tangent();
      if (t.text == "mu") return type();
    }
    if (t.kind == Token::TVarTok) return t_tvar(lex_.next().text);
    if (at_sym("(")) {
      lex_.next();
      auto ty = type();
      eat_sym(")");
      return ty;
    }
    lex_.fail("expected type but found '" + t.text + "'", t);
  }
};

}  // namespace

ParseTermResult parse_term(const SourceFile& src) {
  try {
    Parser p(src.text);
    return p.parse_term_all();
  } catch (const ParseFail& f) {
    return f.err;
  }
}

ParseTypeResult parse_type(const SourceFile& src) {
  try {
    Parser p(src.text);
    return p.parse_type_all();
  } catch (const ParseFail& f) {
    return f.err;
  }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

std::string format_real(double x) {
  if (std::isnan(x)) return "0.0";  // literals never carry NaN
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos)
    s += ".0";
  return s;
}

namespace {

// Precedence levels for printing, mirroring the parser:
// 0 low (let/fun/case/...), 1 <+>, 2 <*>, 3 +/-, 4 */div, 5 prefix, 6 app,
// 7 atom.
void print_rec(const TermPtr& t, int prec, std::string& out);

void wrap(const TermPtr& t, int mine, int prec, const char* body,
          std::string& out) {
  (void)t;
  if (prec > mine) {
    out += "(";
    out += body;
    out += ")";
  } else {
    out += body;
  }
}

void print_low(const TermPtr& t, int prec, const std::string& body,
               std::string& out) {
  (void)t;
  if (prec > 0) {
    out += "(";
    out += body;
    out += ")";
  } else {
    out += body;
  }
}

std::string show(const TermPtr& t, int prec) {
  std::string s;
  print_rec(t, prec, s);
  return s;
}

void print_rec(const TermPtr& t, int prec, std::string& out) {
  switch (t->kind) {
    case TermKind::Var:
      out += t->var;
      return;
    case TermKind::Const: {
      double v = t->value;
      if (v < 0 || (v == 0 && std::signbit(v))) {
        std::string s = "-" + format_real(-v);
        wrap(t, 5, prec, s.c_str(), out);
      } else {
        out += format_real(v);
      }
      return;
    }
    case TermKind::UnitVal:
      out += "()";
      return;
    case TermKind::Pair:
      out += "(" + show(t->kids[0], 0) + ", " + show(t->kids[1], 0) + ")";
      return;
    case TermKind::Let:
      print_low(t, prec,
                "let " + t->var + " = " + show(t->kids[0], 0) + " in " +
                    show(t->kids[1], 0),
                out);
      return;
    case TermKind::Lam:
      print_low(t, prec, "fun " + t->var + " -> " + show(t->kids[0], 0),
                out);
      return;
    case TermKind::Rec:
      print_low(t, prec, "rec " + t->var + " -> " + show(t->kids[0], 0),
                out);
      return;
    case TermKind::Iterate:
      print_low(t, prec,
                "iterate " + show(t->kids[0], 0) + " from " + t->var + " = " +
                    show(t->kids[1], 0),
                out);
      return;
    case TermKind::IfElse:
      print_low(t, prec,
                "if " + show(t->kids[0], 0) + " then " + show(t->kids[1], 0) +
                    " else " + show(t->kids[2], 0),
                out);
      return;
    case TermKind::CaseSum:
      print_low(t, prec,
                "case " + show(t->kids[0], 0) + " of { inl " + t->var +
                    " -> " + show(t->kids[1], 0) + " | inr " + t->var2 +
                    " -> " + show(t->kids[2], 0) + " }",
                out);
      return;
    case TermKind::CasePair:
      print_low(t, prec,
                "case " + show(t->kids[0], 0) + " of { (" + t->var + ", " +
                    t->var2 + ") -> " + show(t->kids[1], 0) + " }",
                out);
      return;
    case TermKind::CaseRoll: {
      std::string head = "roll";
      if (t->ascription) head += "[" + show_type(t->ascription) + "]";
      print_low(t, prec,
                "case " + show(t->kids[0], 0) + " of { " + head + " " +
                    t->var + " -> " + show(t->kids[1], 0) + " }",
                out);
      return;
    }
    case TermKind::CaseVoid: {
      std::string s = "absurd " + show(t->kids[0], 6);
      wrap(t, 5, prec, s.c_str(), out);
      return;
    }
    case TermKind::Sign: {
      std::string s = "sign " + show(t->kids[0], 6);
      wrap(t, 5, prec, s.c_str(), out);
      return;
    }
    case TermKind::Inl: {
      std::string s = "inl " + show(t->kids[0], 6);
      wrap(t, 5, prec, s.c_str(), out);
      return;
    }
    case TermKind::Inr: {
      std::string s = "inr " + show(t->kids[0], 6);
      wrap(t, 5, prec, s.c_str(), out);
      return;
    }
    case TermKind::Fst: {
      std::string s = "fst " + show(t->kids[0], 6);
      wrap(t, 5, prec, s.c_str(), out);
      return;
    }
    case TermKind::Snd: {
      std::string s = "snd " + show(t->kids[0], 6);
      wrap(t, 5, prec, s.c_str(), out);
      return;
    }
    case TermKind::Roll: {
      std::string s = "roll";
      if (t->ascription) s += "[" + show_type(t->ascription) + "]";
      s += " " + show(t->kids[0], 6);
      wrap(t, 5, prec, s.c_str(), out);
      return;
    }
    case TermKind::TangentProj: {
      std::string s =
          "dproj " + std::to_string(t->index) + " " + show(t->kids[0], 6);
      wrap(t, 5, prec, s.c_str(), out);
      return;
    }
    case TermKind::App: {
      std::string s = show(t->kids[0], 6) + " " + show(t->kids[1], 7);
      wrap(t, 6, prec, s.c_str(), out);
      return;
    }
    case TermKind::PrimOp: {
      const std::string& op = t->var;
      if (op == "add" || op == "sub") {
        std::string s = show(t->kids[0], 3) + (op == "add" ? " + " : " - ") +
                        show(t->kids[1], 4);
        wrap(t, 3, prec, s.c_str(), out);
        return;
      }
      if (op == "mul" || op == "div") {
        std::string s = show(t->kids[0], 4) + (op == "mul" ? " * " : " / ") +
                        show(t->kids[1], 5);
        wrap(t, 4, prec, s.c_str(), out);
        return;
      }
      std::string s = op + "(";
      for (size_t i = 0; i < t->kids.size(); ++i) {
        if (i) s += ", ";
        s += show(t->kids[i], 0);
      }
      s += ")";
      out += s;
      return;
    }
    case TermKind::TangentZero:
      out += "dzero";
      return;
    case TermKind::TangentBasis:
      out += "dbasis " + std::to_string(t->index);
      return;
    case TermKind::TangentAdd: {
      std::string s = show(t->kids[0], 1) + " <+> " + show(t->kids[1], 2);
      wrap(t, 1, prec, s.c_str(), out);
      return;
    }
    case TermKind::TangentScale: {
      std::string s = show(t->kids[0], 2) + " <*> " + show(t->kids[1], 3);
      wrap(t, 2, prec, s.c_str(), out);
      return;
    }
  }
}

}  // namespace

std::string print_term(const TermPtr& t) { return show(t, 0); }

}  // namespace dn
