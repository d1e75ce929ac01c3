#include "mpst/syntax.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace mpst {

bool Value::operator==(const Value& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Var: return name == o.name;
    case Kind::Unit: return true;
    case Kind::Int: return i == o.i;
    case Kind::Bool: return b == o.b;
  }
  return false;
}

bool Value::operator<(const Value& o) const {
  if (kind != o.kind) return kind < o.kind;
  switch (kind) {
    case Kind::Var: return name < o.name;
    case Kind::Unit: return false;
    case Kind::Int: return i < o.i;
    case Kind::Bool: return b < o.b;
  }
  return false;
}

std::optional<Ground> constant_ground(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Unit: return Ground::Unit;
    case Value::Kind::Int: return Ground::Int;
    case Value::Kind::Bool: return Ground::Bool;
    default: return std::nullopt;
  }
}

std::string to_string(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Var: return v.name;
    case Value::Kind::Unit: return "()";
    case Value::Kind::Int: return std::to_string(v.i);
    case Value::Kind::Bool: return v.b ? "true" : "false";
  }
  return "?";
}

namespace {

std::shared_ptr<Computation> node(CompKind k) {
  auto c = std::make_shared<Computation>();
  c->kind = k;
  return c;
}

}  // namespace

Comp c_return(Value v) {
  auto c = node(CompKind::Return);
  c->vals = {std::move(v)};
  return c;
}

Comp c_let(std::string x, Comp bound, Comp body) {
  auto c = node(CompKind::Let);
  c->name = std::move(x);
  c->first = std::move(bound);
  c->second = std::move(body);
  return c;
}

Comp c_binop(CompKind op, Value a, Value b) {
  auto c = node(op);
  c->vals = {std::move(a), std::move(b)};
  return c;
}

Comp c_if(Value v, Comp then_c, Comp else_c) {
  auto c = node(CompKind::If);
  c->vals = {std::move(v)};
  c->first = std::move(then_c);
  c->second = std::move(else_c);
  return c;
}

Comp c_send(std::string label, Value v, std::string peer, Comp cont) {
  auto c = node(CompKind::Send);
  c->name = std::move(label);
  c->vals = {std::move(v)};
  c->peer = std::move(peer);
  c->first = std::move(cont);
  return c;
}

Comp c_recv(std::string peer, std::vector<Arm> arms) {
  auto c = node(CompKind::Recv);
  c->peer = std::move(peer);
  c->arms = std::move(arms);
  return c;
}

Comp c_letrec(std::string f, std::vector<Param> params, Ground result, std::optional<GradeAnnotation> grade,
              Comp body, Comp scope) {
  auto c = node(CompKind::LetRec);
  c->name = std::move(f);
  c->params = std::move(params);
  c->result = result;
  c->grade = std::move(grade);
  c->first = std::move(body);
  c->second = std::move(scope);
  return c;
}

Comp c_apply(std::string f, std::vector<Value> args) {
  auto c = node(CompKind::Apply);
  c->name = std::move(f);
  c->vals = std::move(args);
  return c;
}

Comp c_ascribe(Comp inner, Type t) {
  auto c = node(CompKind::Ascribe);
  c->first = std::move(inner);
  c->ascription = std::move(t);
  return c;
}

namespace {

Value subst_val(const Value& v, const std::map<std::string, Value>& m) {
  if (v.kind != Value::Kind::Var) return v;
  auto it = m.find(v.name);
  return it == m.end() ? v : it->second;
}

std::map<std::string, Value> without(const std::map<std::string, Value>& m, const std::string& x) {
  if (!m.count(x)) return m;
  auto r = m;
  r.erase(x);
  return r;
}

}  // namespace

Comp substitute_values(const Comp& c, const std::map<std::string, Value>& m) {
  if (m.empty()) return c;
  auto out = std::make_shared<Computation>(*c);
  for (auto& v : out->vals) v = subst_val(v, m);
  switch (c->kind) {
    case CompKind::Let:
      out->first = substitute_values(c->first, m);
      out->second = substitute_values(c->second, without(m, c->name));
      break;
    case CompKind::If:
      out->first = substitute_values(c->first, m);
      out->second = substitute_values(c->second, m);
      break;
    case CompKind::Send:
    case CompKind::Ascribe:
      out->first = substitute_values(c->first, m);
      break;
    case CompKind::Recv:
      for (auto& a : out->arms) a.body = substitute_values(a.body, without(m, a.binder));
      break;
    case CompKind::LetRec: {
      auto inner = m;
      for (const auto& p : c->params) inner.erase(p.name);
      out->first = substitute_values(c->first, inner);
      out->second = substitute_values(c->second, m);
      break;
    }
    default: break;
  }
  return out;
}

Comp substitute_value(const Comp& c, const std::string& x, const Value& v) {
  return substitute_values(c, {{x, v}});
}

namespace {

void collect_vars(const Comp& c, const std::set<std::string>& bound, std::set<std::string>& out) {
  for (const auto& v : c->vals)
    if (v.kind == Value::Kind::Var && !bound.count(v.name)) out.insert(v.name);
  switch (c->kind) {
    case CompKind::Let: {
      collect_vars(c->first, bound, out);
      auto b = bound;
      b.insert(c->name);
      collect_vars(c->second, b, out);
      break;
    }
    case CompKind::If:
      collect_vars(c->first, bound, out);
      collect_vars(c->second, bound, out);
      break;
    case CompKind::Send:
    case CompKind::Ascribe:
      collect_vars(c->first, bound, out);
      break;
    case CompKind::Recv:
      for (const auto& a : c->arms) {
        auto b = bound;
        b.insert(a.binder);
        collect_vars(a.body, b, out);
      }
      break;
    case CompKind::LetRec: {
      auto b = bound;
      for (const auto& p : c->params) b.insert(p.name);
      collect_vars(c->first, b, out);
      collect_vars(c->second, bound, out);
      break;
    }
    default: break;
  }
}

}  // namespace

std::set<std::string> free_value_vars(const Comp& c) {
  std::set<std::string> out;
  collect_vars(c, {}, out);
  return out;
}

namespace {

void print(const Comp& c, std::ostringstream& os) {
  switch (c->kind) {
    case CompKind::Return: os << "return " << to_string(c->vals[0]); return;
    case CompKind::Let:
      os << "let " << c->name << " = ";
      print(c->first, os);
      os << " in ";
      print(c->second, os);
      return;
    case CompKind::Add:
    case CompKind::Sub:
    case CompKind::Less: {
      const char* op = c->kind == CompKind::Add ? " + " : c->kind == CompKind::Sub ? " - " : " < ";
      os << to_string(c->vals[0]) << op << to_string(c->vals[1]);
      return;
    }
    case CompKind::If:
      os << "if " << to_string(c->vals[0]) << " then ";
      print(c->first, os);
      os << " else ";
      print(c->second, os);
      return;
    case CompKind::Send:
      os << "send " << c->name << '(' << to_string(c->vals[0]) << ") to " << c->peer << "; ";
      print(c->first, os);
      return;
    case CompKind::Recv: {
      os << "recv from " << c->peer << " {";
      bool first = true;
      for (const auto& a : c->arms) {
        if (!first) os << ", ";
        first = false;
        os << a.label << '(' << a.binder << ':' << ground_name(a.payload) << ") -> ";
        print(a.body, os);
      }
      os << '}';
      return;
    }
    case CompKind::LetRec: {
      os << "letrec " << c->name << '(';
      for (std::size_t i = 0; i < c->params.size(); ++i)
        os << (i ? ", " : "") << c->params[i].name << ':' << ground_name(c->params[i].ground);
      os << ") : " << ground_name(c->result);
      if (c->grade) os << " grade " << c->grade->var << ". " << to_string(c->grade->body);
      os << " = ";
      print(c->first, os);
      os << " in ";
      print(c->second, os);
      return;
    }
    case CompKind::Apply:
      os << c->name << '(';
      for (std::size_t i = 0; i < c->vals.size(); ++i) os << (i ? ", " : "") << to_string(c->vals[i]);
      os << ')';
      return;
    case CompKind::Ascribe:
      os << '(';
      print(c->first, os);
      os << " : " << to_string(c->ascription) << ')';
      return;
  }
}

// Walks the term tracking, for each enclosing letrec name, whether a send or
// receive separates the current position from that letrec's body root.
std::optional<Diagnostic> check_guarded(const Comp& c, std::map<std::string, bool>& guarded) {
  switch (c->kind) {
    case CompKind::Apply: {
      auto it = guarded.find(c->name);
      if (it != guarded.end() && !it->second)
        return Diagnostic{"guarded-recursion",
                          "recursive call to " + c->name + " at " + std::to_string(c->pos.line) + ":" +
                              std::to_string(c->pos.col) + " is not under a send or recv",
                          to_string(c)};
      return std::nullopt;
    }
    case CompKind::Send:
    case CompKind::Recv: {
      auto saved = guarded;
      for (auto& kv : guarded) kv.second = true;
      std::optional<Diagnostic> d;
      if (c->kind == CompKind::Send) d = check_guarded(c->first, guarded);
      else
        for (const auto& a : c->arms)
          if ((d = check_guarded(a.body, guarded))) break;
      guarded = saved;
      return d;
    }
    case CompKind::LetRec: {
      auto saved = guarded;
      guarded[c->name] = false;
      auto d = check_guarded(c->first, guarded);
      guarded = saved;
      if (d) return d;
      // In the scope, the name refers to this definition and calls need no guard.
      auto scope = guarded;
      scope.erase(c->name);
      return check_guarded(c->second, scope);
    }
    case CompKind::Let:
    case CompKind::If: {
      if (auto d = check_guarded(c->first, guarded)) return d;
      return check_guarded(c->second, guarded);
    }
    case CompKind::Ascribe: return check_guarded(c->first, guarded);
    default: return std::nullopt;
  }
}

// ---- lexer ----

enum class Tok { Ident, Int, Sym, Eof };

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char ch = src[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance(1);
      continue;
    }
    if (ch == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    SourcePos pos{line, col};
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '\''))
        ++j;
      out.push_back({Tok::Ident, src.substr(i, j - i), pos});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Tok::Int, src.substr(i, j - i), pos});
      advance(j - i);
      continue;
    }
    if (ch == '-' && i + 1 < src.size() && src[i + 1] == '>') {
      out.push_back({Tok::Sym, "->", pos});
      advance(2);
      continue;
    }
    static const std::string symbols = "+-<&.,;:(){}=@";
    if (symbols.find(ch) != std::string::npos) {
      out.push_back({Tok::Sym, std::string(1, ch), pos});
      advance(1);
      continue;
    }
    throw SyntaxError(std::string("unexpected character '") + ch + "'", pos);
  }
  out.push_back({Tok::Eof, "", SourcePos{line, col}});
  return out;
}

const std::set<std::string>& keywords() {
  static const std::set<std::string> k = {"return", "let",  "in",    "if",     "then",  "else",
                                          "send",   "to",   "recv",  "from",   "letrec", "grade",
                                          "rec",    "end",  "true",  "false",  "unit",  "bool",
                                          "int",    "global", "participant"};
  return k;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : toks_(lex(src)) {}

  bool at_eof() const { return peek().kind == Tok::Eof; }

  void expect_eof() {
    if (!at_eof()) fail("unexpected '" + peek().text + "'");
  }

  Program program() {
    Program p;
    while (!at_eof()) {
      if (accept_kw("global")) {
        std::string name = ident();
        expect("=");
        Global g = gtype();
        expect(";");
        for (const auto& [n, _] : p.globals)
          if (n == name) fail("global " + name + " declared twice");
        p.globals.emplace_back(name, g);
      } else if (peek_kw("participant")) {
        SourcePos pos = peek().pos;
        next();
        ParticipantDecl d;
        d.pos = pos;
        d.name = ident();
        expect(":");
        if (peek().kind == Tok::Ident && !keywords().count(peek().text) && peek(1).text == "@") {
          d.type.global = ident();
          expect("@");
          d.type.role = ident();
        } else {
          d.type.type = stype();
        }
        expect("=");
        d.body = comp();
        expect(";");
        for (const auto& o : p.participants)
          if (o.name == d.name) throw SyntaxError("participant " + d.name + " declared twice", pos);
        p.participants.push_back(std::move(d));
      } else {
        fail("expected 'global' or 'participant'");
      }
    }
    return p;
  }

  Type stype() {
    const Token& t = peek();
    if (accept_kw("end")) return end_type();
    if (accept_kw("rec")) {
      std::string x = ident();
      expect(".");
      return rec(x, stype());
    }
    if (t.kind == Tok::Sym && (t.text == "+" || t.text == "&")) {
      bool is_int = t.text == "+";
      next();
      std::string peer = ident();
      expect("{");
      Branches bs;
      std::set<std::string> seen;
      do {
        SourcePos pos = peek().pos;
        std::string label = ident();
        if (!seen.insert(label).second) throw SyntaxError("label " + label + " appears twice", pos);
        expect("(");
        Ground g = ground();
        expect(")");
        expect(".");
        bs.push_back({label, g, stype()});
      } while (accept(","));
      expect("}");
      return is_int ? internal(peer, std::move(bs)) : external(peer, std::move(bs));
    }
    return var(ident());
  }

  Global gtype() {
    if (accept_kw("end")) return g_end();
    if (accept_kw("rec")) {
      std::string x = ident();
      expect(".");
      return g_rec(x, gtype());
    }
    std::string a = ident();
    if (!accept("->")) return g_var(a);
    std::string b = ident();
    expect("{");
    std::vector<GlobalBranch> bs;
    std::set<std::string> seen;
    if (peek().text == "}") fail("communication needs at least one branch");
    do {
      SourcePos pos = peek().pos;
      std::string label = ident();
      if (!seen.insert(label).second) throw SyntaxError("label " + label + " appears twice", pos);
      expect("(");
      Ground g = ground();
      expect(")");
      expect(".");
      bs.push_back({label, g, gtype()});
    } while (accept(","));
    expect("}");
    return g_comm(a, b, std::move(bs));
  }

  Comp comp() {
    SourcePos pos = peek().pos;
    Comp c = comp_inner();
    std::const_pointer_cast<Computation>(c)->pos = pos;
    return c;
  }

 private:
  Comp comp_inner() {
    const Token& t = peek();
    if (accept_kw("return")) return c_return(value());
    if (accept_kw("let")) {
      std::string x = ident();
      expect("=");
      Comp bound = comp();
      expect_kw("in");
      return c_let(x, bound, comp());
    }
    if (accept_kw("if")) {
      Value v = value();
      expect_kw("then");
      Comp a = comp();
      expect_kw("else");
      return c_if(v, a, comp());
    }
    if (accept_kw("send")) {
      std::string label = ident();
      expect("(");
      Value v = value();
      expect(")");
      expect_kw("to");
      std::string peer = ident();
      expect(";");
      return c_send(label, v, peer, comp());
    }
    if (accept_kw("recv")) {
      expect_kw("from");
      std::string peer = ident();
      expect("{");
      if (peek().text == "}") fail("receive needs at least one arm (empty choice)");
      std::vector<Arm> arms;
      std::set<std::string> seen;
      do {
        SourcePos pos = peek().pos;
        Arm a;
        a.label = ident();
        if (!seen.insert(a.label).second) throw SyntaxError("label " + a.label + " appears twice", pos);
        expect("(");
        a.binder = ident();
        expect(":");
        a.payload = ground();
        expect(")");
        expect("->");
        a.body = comp();
        arms.push_back(std::move(a));
      } while (accept(","));
      expect("}");
      return c_recv(peer, std::move(arms));
    }
    if (accept_kw("letrec")) {
      std::string f = ident();
      expect("(");
      std::vector<Param> params;
      if (peek().text != ")") {
        do {
          Param p;
          p.name = ident();
          expect(":");
          p.ground = ground();
          params.push_back(p);
        } while (accept(","));
      }
      expect(")");
      expect(":");
      Ground result = ground();
      std::optional<GradeAnnotation> grade;
      if (accept_kw("grade")) {
        GradeAnnotation g;
        g.var = ident();
        expect(".");
        g.body = stype();
        grade = g;
      }
      expect("=");
      Comp body = comp();
      expect_kw("in");
      return c_letrec(f, std::move(params), result, std::move(grade), body, comp());
    }
    if (t.kind == Tok::Sym && t.text == "(" && peek(1).text != ")") {
      next();
      Comp inner = comp();
      expect(":");
      Type ty = stype();
      expect(")");
      return c_ascribe(inner, ty);
    }
    if (t.kind == Tok::Ident && !keywords().count(t.text) && peek(1).text == "(") {
      std::string f = ident();
      expect("(");
      std::vector<Value> args;
      if (peek().text != ")") {
        do args.push_back(value());
        while (accept(","));
      }
      expect(")");
      return c_apply(f, std::move(args));
    }
    Value a = value();
    const Token& op = peek();
    CompKind kind;
    if (op.text == "+") kind = CompKind::Add;
    else if (op.text == "-") kind = CompKind::Sub;
    else if (op.text == "<") kind = CompKind::Less;
    else fail("expected an operator after value " + to_string(a));
    next();
    Value b = value();
    return c_binop(kind, a, b);
  }

  Value value() {
    const Token& t = peek();
    if (t.kind == Tok::Sym && t.text == "(" && peek(1).text == ")") {
      next();
      next();
      return Value::unit();
    }
    if (t.kind == Tok::Sym && t.text == "-" && peek(1).kind == Tok::Int) {
      next();
      return Value::integer(-parse_int(next()));
    }
    if (t.kind == Tok::Int) return Value::integer(parse_int(next()));
    if (accept_kw("true")) return Value::boolean(true);
    if (accept_kw("false")) return Value::boolean(false);
    return Value::variable(ident());
  }

  std::int64_t parse_int(const Token& t) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(t.text, &used);
      return v;
    } catch (const std::exception&) {
      throw SyntaxError("integer literal out of range: " + t.text, t.pos);
    }
  }

  Ground ground() {
    const Token& t = peek();
    if (t.kind == Tok::Ident)
      if (auto g = ground_from_name(t.text)) {
        next();
        return *g;
      }
    fail("expected a ground type (unit, bool or int)");
  }

  std::string ident() {
    const Token& t = peek();
    if (t.kind != Tok::Ident || keywords().count(t.text)) fail("expected an identifier");
    return next().text;
  }

  const Token& peek(std::size_t k = 0) const {
    std::size_t j = std::min(pos_ + k, toks_.size() - 1);
    return toks_[j];
  }

  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  bool accept(const std::string& sym) {
    if (peek().kind == Tok::Sym && peek().text == sym) {
      next();
      return true;
    }
    return false;
  }

  bool peek_kw(const std::string& kw) const { return peek().kind == Tok::Ident && peek().text == kw; }

  bool accept_kw(const std::string& kw) {
    if (!peek_kw(kw)) return false;
    next();
    return true;
  }

  void expect(const std::string& sym) {
    if (!accept(sym)) fail("expected '" + sym + "'");
  }

  void expect_kw(const std::string& kw) {
    if (!accept_kw(kw)) fail("expected '" + kw + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    std::string found = t.kind == Tok::Eof ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(msg + ", found " + found, t.pos);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(const Comp& c) {
  std::ostringstream os;
  print(c, os);
  return os.str();
}

std::optional<Diagnostic> guarded_recursion_check(const Comp& c) {
  std::map<std::string, bool> guarded;
  return check_guarded(c, guarded);
}

const Global* Program::find_global(const std::string& name) const {
  for (const auto& [n, g] : globals)
    if (n == name) return &g;
  return nullptr;
}

const ParticipantDecl* Program::find_participant(const std::string& name) const {
  for (const auto& p : participants)
    if (p.name == name) return &p;
  return nullptr;
}

Program parse_program(const std::string& src) {
  Parser p(src);
  return p.program();
}

Comp parse_computation(const std::string& src) {
  Parser p(src);
  Comp c = p.comp();
  p.expect_eof();
  return c;
}

Type parse_session_type(const std::string& src) {
  Parser p(src);
  Type t = p.stype();
  p.expect_eof();
  return t;
}

Global parse_global_type(const std::string& src) {
  Parser p(src);
  Global g = p.gtype();
  p.expect_eof();
  return g;
}

std::string to_string(const Program& p) {
  std::ostringstream os;
  for (const auto& [name, g] : p.globals) os << "global " << name << " = " << to_string(g) << ";\n";
  for (const auto& d : p.participants) {
    os << "participant " << d.name << " : ";
    if (d.type.type) os << to_string(d.type.type);
    else os << d.type.global << " @ " << d.type.role;
    os << " = " << to_string(d.body) << ";\n";
  }
  return os.str();
}

}  // namespace mpst
