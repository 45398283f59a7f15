#include "contact_hj/expr.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <vector>

namespace contact_hj {

enum class Op { kConst, kVar, kNeg, kAdd, kSub, kMul, kDiv, kPow, kFunc };
enum class Fn { kExp, kLog, kSin, kCos, kSqrt, kAtan, kAbs };

struct Expr::Node {
  Op op = Op::kConst;
  double value = 0.0;  // kConst
  int axis = 0;        // kVar
  Fn fn = Fn::kExp;    // kFunc
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr MakeConst(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::kConst;
  n->value = v;
  return n;
}

NodePtr MakeVar(int axis) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::kVar;
  n->axis = axis;
  return n;
}

bool IsConst(const NodePtr& n, double v) { return n->op == Op::kConst && n->value == v; }

// Light constant folding keeps derivative trees readable.
NodePtr MakeBinary(Op op, NodePtr a, NodePtr b) {
  if (a->op == Op::kConst && b->op == Op::kConst) {
    switch (op) {
      case Op::kAdd: return MakeConst(a->value + b->value);
      case Op::kSub: return MakeConst(a->value - b->value);
      case Op::kMul: return MakeConst(a->value * b->value);
      case Op::kDiv: return MakeConst(a->value / b->value);
      case Op::kPow: return MakeConst(std::pow(a->value, b->value));
      default: break;
    }
  }
  switch (op) {
    case Op::kAdd:
      if (IsConst(a, 0.0)) return b;
      if (IsConst(b, 0.0)) return a;
      break;
    case Op::kSub:
      if (IsConst(b, 0.0)) return a;
      break;
    case Op::kMul:
      if (IsConst(a, 0.0) || IsConst(b, 0.0)) return MakeConst(0.0);
      if (IsConst(a, 1.0)) return b;
      if (IsConst(b, 1.0)) return a;
      break;
    case Op::kDiv:
      if (IsConst(a, 0.0)) return MakeConst(0.0);
      if (IsConst(b, 1.0)) return a;
      break;
    case Op::kPow:
      if (IsConst(b, 1.0)) return a;
      if (IsConst(b, 0.0)) return MakeConst(1.0);
      break;
    default:
      break;
  }
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr MakeNeg(NodePtr a) {
  if (a->op == Op::kConst) return MakeConst(-a->value);
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::kNeg;
  n->lhs = std::move(a);
  return n;
}

NodePtr MakeFunc(Fn fn, NodePtr a) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::kFunc;
  n->fn = fn;
  n->lhs = std::move(a);
  return n;
}

double Eval(const Expr::Node& n, const Point& x) {
  switch (n.op) {
    case Op::kConst: return n.value;
    case Op::kVar: return x[n.axis];
    case Op::kNeg: return -Eval(*n.lhs, x);
    case Op::kAdd: return Eval(*n.lhs, x) + Eval(*n.rhs, x);
    case Op::kSub: return Eval(*n.lhs, x) - Eval(*n.rhs, x);
    case Op::kMul: return Eval(*n.lhs, x) * Eval(*n.rhs, x);
    case Op::kDiv: return Eval(*n.lhs, x) / Eval(*n.rhs, x);
    case Op::kPow: {
      const double base = Eval(*n.lhs, x);
      if (n.rhs->op == Op::kConst && n.rhs->value == 2.0) return base * base;
      return std::pow(base, Eval(*n.rhs, x));
    }
    case Op::kFunc: {
      const double a = Eval(*n.lhs, x);
      switch (n.fn) {
        case Fn::kExp: return std::exp(a);
        case Fn::kLog: return std::log(a);
        case Fn::kSin: return std::sin(a);
        case Fn::kCos: return std::cos(a);
        case Fn::kSqrt: return std::sqrt(a);
        case Fn::kAtan: return std::atan(a);
        case Fn::kAbs: return std::abs(a);
      }
    }
  }
  return 0.0;
}

bool Depends(const Expr::Node& n, int axis) {
  switch (n.op) {
    case Op::kConst: return false;
    case Op::kVar: return n.axis == axis;
    case Op::kNeg:
    case Op::kFunc: return Depends(*n.lhs, axis);
    default: return Depends(*n.lhs, axis) || Depends(*n.rhs, axis);
  }
}

NodePtr Diff(const NodePtr& n, int axis) {
  switch (n->op) {
    case Op::kConst: return MakeConst(0.0);
    case Op::kVar: return MakeConst(n->axis == axis ? 1.0 : 0.0);
    case Op::kNeg: return MakeNeg(Diff(n->lhs, axis));
    case Op::kAdd: return MakeBinary(Op::kAdd, Diff(n->lhs, axis), Diff(n->rhs, axis));
    case Op::kSub: return MakeBinary(Op::kSub, Diff(n->lhs, axis), Diff(n->rhs, axis));
    case Op::kMul:
      return MakeBinary(Op::kAdd, MakeBinary(Op::kMul, Diff(n->lhs, axis), n->rhs),
                        MakeBinary(Op::kMul, n->lhs, Diff(n->rhs, axis)));
    case Op::kDiv: {
      // (a/b)' = (a' b - a b') / b^2
      auto num = MakeBinary(Op::kSub, MakeBinary(Op::kMul, Diff(n->lhs, axis), n->rhs),
                            MakeBinary(Op::kMul, n->lhs, Diff(n->rhs, axis)));
      return MakeBinary(Op::kDiv, num, MakeBinary(Op::kPow, n->rhs, MakeConst(2.0)));
    }
    case Op::kPow: {
      if (!Depends(*n->rhs, 0) && !Depends(*n->rhs, 1)) {
        // (a^k)' = k a^(k-1) a'
        auto k = n->rhs;
        auto km1 = MakeBinary(Op::kSub, k, MakeConst(1.0));
        return MakeBinary(Op::kMul, MakeBinary(Op::kMul, k, MakeBinary(Op::kPow, n->lhs, km1)),
                          Diff(n->lhs, axis));
      }
      // (a^b)' = a^b (b' log a + b a'/a)
      auto term1 = MakeBinary(Op::kMul, Diff(n->rhs, axis), MakeFunc(Fn::kLog, n->lhs));
      auto term2 =
          MakeBinary(Op::kDiv, MakeBinary(Op::kMul, n->rhs, Diff(n->lhs, axis)), n->lhs);
      return MakeBinary(Op::kMul, n, MakeBinary(Op::kAdd, term1, term2));
    }
    case Op::kFunc: {
      auto inner = Diff(n->lhs, axis);
      const auto& a = n->lhs;
      NodePtr outer;
      switch (n->fn) {
        case Fn::kExp: outer = n; break;
        case Fn::kLog: outer = MakeBinary(Op::kDiv, MakeConst(1.0), a); break;
        case Fn::kSin: outer = MakeFunc(Fn::kCos, a); break;
        case Fn::kCos: outer = MakeNeg(MakeFunc(Fn::kSin, a)); break;
        case Fn::kSqrt:
          outer = MakeBinary(Op::kDiv, MakeConst(0.5), n);
          break;
        case Fn::kAtan:
          outer = MakeBinary(Op::kDiv, MakeConst(1.0),
                             MakeBinary(Op::kAdd, MakeConst(1.0),
                                        MakeBinary(Op::kPow, a, MakeConst(2.0))));
          break;
        case Fn::kAbs:
          // sign(a) written as a / abs(a); undefined at the kink.
          outer = MakeBinary(Op::kDiv, a, n);
          break;
      }
      return MakeBinary(Op::kMul, outer, inner);
    }
  }
  return MakeConst(0.0);
}

const char* FnName(Fn fn) {
  switch (fn) {
    case Fn::kExp: return "exp";
    case Fn::kLog: return "log";
    case Fn::kSin: return "sin";
    case Fn::kCos: return "cos";
    case Fn::kSqrt: return "sqrt";
    case Fn::kAtan: return "atan";
    case Fn::kAbs: return "abs";
  }
  return "?";
}

void Print(const Expr::Node& n, std::ostringstream& os) {
  switch (n.op) {
    case Op::kConst: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      if (n.value < 0) {
        os << '(' << buf << ')';
      } else {
        os << buf;
      }
      return;
    }
    case Op::kVar: os << (n.axis == 0 ? 'x' : 'y'); return;
    case Op::kNeg: os << "(-"; Print(*n.lhs, os); os << ')'; return;
    case Op::kFunc: os << FnName(n.fn) << '('; Print(*n.lhs, os); os << ')'; return;
    default: break;
  }
  const char* sym = n.op == Op::kAdd   ? "+"
                    : n.op == Op::kSub ? "-"
                    : n.op == Op::kMul ? "*"
                    : n.op == Op::kDiv ? "/"
                                       : "^";
  os << '(';
  Print(*n.lhs, os);
  os << ' ' << sym << ' ';
  Print(*n.rhs, os);
  os << ')';
}

std::string ToText(const NodePtr& n) {
  std::ostringstream os;
  Print(*n, os);
  return os.str();
}

// Recursive-descent parser:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr Run() {
    auto n = ParseExpr();
    SkipSpace();
    if (pos_ != text_.size()) Fail("unexpected trailing input");
    return n;
  }

 private:
  [[noreturn]] void Fail(const std::string& what) const {
    throw ModelError("expression '" + std::string(text_) + "': " + what + " at offset " +
                     std::to_string(pos_));
  }

  void SkipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool Accept(char c) {
    SkipSpace();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr ParseExpr() {
    auto lhs = ParseTerm();
    while (true) {
      if (Accept('+')) {
        lhs = MakeBinary(Op::kAdd, lhs, ParseTerm());
      } else if (Accept('-')) {
        lhs = MakeBinary(Op::kSub, lhs, ParseTerm());
      } else {
        return lhs;
      }
    }
  }

  NodePtr ParseTerm() {
    auto lhs = ParseUnary();
    while (true) {
      if (Accept('*')) {
        lhs = MakeBinary(Op::kMul, lhs, ParseUnary());
      } else if (Accept('/')) {
        lhs = MakeBinary(Op::kDiv, lhs, ParseUnary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr ParseUnary() {
    if (Accept('-')) return MakeNeg(ParseUnary());
    if (Accept('+')) return ParseUnary();
    return ParsePower();
  }

  NodePtr ParsePower() {
    auto base = ParseAtom();
    if (Accept('^')) return MakeBinary(Op::kPow, base, ParseUnary());
    return base;
  }

  NodePtr ParseAtom() {
    SkipSpace();
    if (pos_ >= text_.size()) Fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = ParseExpr();
      if (!Accept(')')) Fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(text_.substr(pos_));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) Fail("bad number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      return MakeConst(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view ident = text_.substr(start, pos_ - start);
      if (ident == "x") return MakeVar(0);
      if (ident == "y") return MakeVar(1);
      if (ident == "pi") return MakeConst(std::numbers::pi);
      Fn fn;
      if (ident == "exp") {
        fn = Fn::kExp;
      } else if (ident == "log") {
        fn = Fn::kLog;
      } else if (ident == "sin") {
        fn = Fn::kSin;
      } else if (ident == "cos") {
        fn = Fn::kCos;
      } else if (ident == "sqrt") {
        fn = Fn::kSqrt;
      } else if (ident == "atan" || ident == "arctan") {
        fn = Fn::kAtan;
      } else if (ident == "abs") {
        fn = Fn::kAbs;
      } else {
        pos_ = start;
        Fail("unknown identifier '" + std::string(ident) + "'");
      }
      if (!Accept('(')) Fail("expected '(' after function name");
      auto arg = ParseExpr();
      if (!Accept(')')) Fail("expected ')'");
      return MakeFunc(fn, arg);
    }
    Fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr::Expr() : Expr(MakeConst(0.0)) {}

Expr::Expr(std::shared_ptr<const Node> root) : root_(std::move(root)), text_(ToText(root_)) {}

Expr Expr::Parse(std::string_view text) {
  Expr e(Parser(text).Run());
  e.text_ = std::string(text);
  return e;
}

Expr Expr::Constant(double value) { return Expr(MakeConst(value)); }

Expr Expr::Variable(int axis) { return Expr(MakeVar(axis)); }

double Expr::operator()(const Point& x) const { return Eval(*root_, x); }

Expr Expr::Derivative(int axis) const { return Expr(Diff(root_, axis)); }

bool Expr::IsConstant() const { return !Depends(*root_, 0) && !Depends(*root_, 1); }

bool Expr::DependsOn(int axis) const { return Depends(*root_, axis); }

std::string FormatPoint(const Point& x, int dim) {
  char buf[64];
  if (dim == 1) {
    std::snprintf(buf, sizeof buf, "(%.6g)", x[0]);
  } else {
    std::snprintf(buf, sizeof buf, "(%.6g, %.6g)", x[0], x[1]);
  }
  return buf;
}

}  // namespace contact_hj
