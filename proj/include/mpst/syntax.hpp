#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpst/global_type.hpp"
#include "mpst/session_type.hpp"

namespace mpst {

struct SourcePos {
  int line = 0;
  int col = 0;
};

struct Value {
  enum class Kind { Var, Unit, Int, Bool } kind = Kind::Unit;
  std::string name;
  std::int64_t i = 0;
  bool b = false;

  static Value variable(std::string x) { return Value{Kind::Var, std::move(x), 0, false}; }
  static Value unit() { return Value{}; }
  static Value integer(std::int64_t n) { return Value{Kind::Int, "", n, false}; }
  static Value boolean(bool v) { return Value{Kind::Bool, "", 0, v}; }

  bool is_constant() const { return kind != Kind::Var; }
  bool operator==(const Value& o) const;
  bool operator!=(const Value& o) const { return !(*this == o); }
  bool operator<(const Value& o) const;
};

// Ground type of a constant; nullopt for variables.
std::optional<Ground> constant_ground(const Value& v);
std::string to_string(const Value& v);

enum class CompKind { Return, Let, Add, Sub, Less, If, Send, Recv, LetRec, Apply, Ascribe };

struct Computation;
using Comp = std::shared_ptr<const Computation>;

struct Arm {
  std::string label;
  std::string binder;
  Ground payload;
  Comp body;
};

struct Param {
  std::string name;
  Ground ground;
};

struct GradeAnnotation {
  std::string var;  // the variable standing for a recursive call
  Type body;
};

struct Computation {
  CompKind kind = CompKind::Return;
  // Let: bound variable. Send: label. LetRec / Apply: function name.
  std::string name;
  std::string peer;  // Send target, Recv source
  std::vector<Value> vals;
  // Let: bound, body. If: then, else. Send: continuation.
  // LetRec: function body, scope. Ascribe: inner.
  Comp first;
  Comp second;
  std::vector<Arm> arms;
  std::vector<Param> params;
  Ground result = Ground::Unit;
  std::optional<GradeAnnotation> grade;
  Type ascription;
  SourcePos pos;
};

Comp c_return(Value v);
Comp c_let(std::string x, Comp bound, Comp body);
Comp c_binop(CompKind op, Value a, Value b);
Comp c_if(Value v, Comp then_c, Comp else_c);
Comp c_send(std::string label, Value v, std::string peer, Comp cont);
Comp c_recv(std::string peer, std::vector<Arm> arms);
Comp c_letrec(std::string f, std::vector<Param> params, Ground result, std::optional<GradeAnnotation> grade,
              Comp body, Comp scope);
Comp c_apply(std::string f, std::vector<Value> args);
Comp c_ascribe(Comp inner, Type t);

// Replaces free occurrences of the variable x.
Comp substitute_value(const Comp& c, const std::string& x, const Value& v);
Comp substitute_values(const Comp& c, const std::map<std::string, Value>& bindings);

std::set<std::string> free_value_vars(const Comp& c);

std::string to_string(const Comp& c);

struct SyntaxError : std::runtime_error {
  SyntaxError(const std::string& msg, SourcePos p)
      : std::runtime_error(std::to_string(p.line) + ":" + std::to_string(p.col) + ": " + msg), pos(p) {}
  SourcePos pos;
};

// Recursive calls must sit under a send or a receive inside their own body.
std::optional<Diagnostic> guarded_recursion_check(const Comp& c);

struct TypeRef {
  Type type;                   // explicit local type
  std::string global, role;    // or the projection `global @ role`
};

struct ParticipantDecl {
  std::string name;
  TypeRef type;
  Comp body;
  SourcePos pos;
};

struct Program {
  std::vector<std::pair<std::string, Global>> globals;
  std::vector<ParticipantDecl> participants;

  const Global* find_global(const std::string& name) const;
  const ParticipantDecl* find_participant(const std::string& name) const;
};

Program parse_program(const std::string& src);
Comp parse_computation(const std::string& src);
Type parse_session_type(const std::string& src);
Global parse_global_type(const std::string& src);

std::string to_string(const Program& p);

}  // namespace mpst
