// Declaration printer and structural comparison for round-trip checks.
#include <sstream>

#include "reflexbridge/parser.hpp"

namespace reflexbridge {

namespace {

std::string decl_literal(const Scalar& s) {
  std::string text = format_scalar(s);
  switch (scalar_kind(s)) {
    case TypeKind::I32: return text.substr(0, text.size() - 3);
    case TypeKind::I64: return text.substr(0, text.size() - 3) + "L";
    case TypeKind::F32: return text.substr(0, text.size() - 3) + "f";
    case TypeKind::F64: return text.substr(0, text.size() - 3);
    default: return text;
  }
}

void print_expr_into(const Expr& e, std::ostringstream& os) {
  switch (e.kind) {
    case ExprKind::Literal:
      os << decl_literal(e.literal);
      return;
    case ExprKind::Ref:
      os << e.name;
      return;
    case ExprKind::Index:
      print_expr_into(*e.operands[0], os);
      os << '[';
      print_expr_into(*e.operands[1], os);
      os << ", ";
      print_expr_into(*e.operands[2], os);
      os << ']';
      return;
    case ExprKind::Dim:
      print_expr_into(*e.operands[0], os);
      os << (e.axis == 0 ? ".rows" : ".cols");
      return;
    case ExprKind::Binary:
      os << '(';
      print_expr_into(*e.operands[0], os);
      os << ' ' << binop_symbol(e.op) << ' ';
      print_expr_into(*e.operands[1], os);
      os << ')';
      return;
    case ExprKind::Neg:
      os << "(-";
      print_expr_into(*e.operands[0], os);
      os << ')';
      return;
    case ExprKind::Cast:
      os << render_type(e.type) << '(';
      print_expr_into(*e.operands[0], os);
      os << ')';
      return;
    case ExprKind::Call:
    case ExprKind::MethodCall: {
      std::size_t first_arg = 0;
      if (e.kind == ExprKind::MethodCall) {
        print_expr_into(*e.operands[0], os);
        os << '.';
        first_arg = 1;
      }
      os << e.name;
      if (e.has_targs) os << '<' << render_types(e.targs) << '>';
      os << '(';
      for (std::size_t i = first_arg; i < e.operands.size(); ++i) {
        if (i > first_arg) os << ", ";
        print_expr_into(*e.operands[i], os);
      }
      os << ')';
      return;
    }
    case ExprKind::Member:
      print_expr_into(*e.operands[0], os);
      os << '.' << e.name;
      return;
    case ExprKind::Construct:
      os << render_type(e.type) << "{}";
      return;
  }
}

void print_params(const std::vector<Param>& params, std::ostringstream& os) {
  os << '(';
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) os << ", ";
    os << render_type(params[i].type) << ' ' << params[i].name;
  }
  os << ')';
}

void print_body(const Body& body, std::ostringstream& os) {
  os << " {";
  for (const auto& s : body) {
    if (s.kind == StmtKind::Let) {
      os << ' ' << (s.declared ? render_type(*s.declared) : std::string("auto")) << ' ' << s.name << " = "
         << print_expr(*s.value) << ';';
    } else if (s.kind == StmtKind::Return) {
      os << " return " << print_expr(*s.value) << ';';
    }
  }
  os << " }";
}

void print_function(const std::string& name, const Signature& sig, const Body& body, std::ostringstream& os) {
  os << render_type(sig.result) << ' ' << name;
  print_params(sig.params, os);
  print_body(body, os);
}

void print_template_header(const std::vector<std::string>& params, bool variadic, std::ostringstream& os) {
  os << "template<";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) os << ", ";
    os << "class " << (variadic && i + 1 == params.size() ? "... " : "") << params[i];
  }
  os << "> ";
}

void print_pattern(const std::string& name, const ClassPattern& p, std::ostringstream& os) {
  print_template_header(p.params, p.variadic, os);
  os << (p.is_struct ? "struct " : "class ") << name;
  if (p.is_specialization) os << '<' << render_types(p.spec_args) << '>';
  if (!p.defined) {
    os << ";\n";
    return;
  }
  os << " {\n";
  if (!p.is_struct) os << "public:\n";
  for (const auto& m : p.members) {
    os << "  ";
    if (m.kind == MemberDecl::Kind::Data) {
      os << render_type(m.type) << ' ' << m.name;
      if (m.init) os << " = " << print_expr(*m.init);
      os << ";\n";
    } else {
      print_function(m.name, m.signature, *m.body, os);
      os << '\n';
    }
  }
  os << "};\n";
}

void print_entity(const Engine& engine, const Entity& e, std::ostringstream& os, const std::string& indent) {
  switch (e.kind) {
    case EntityKind::Namespace:
      os << indent << "namespace " << e.name << " {\n";
      for (EntityId c : e.children) print_entity(engine, engine.entity(c), os, indent);
      os << indent << "}\n";
      return;
    case EntityKind::OverloadSet:
      for (EntityId c : e.children) print_entity(engine, engine.entity(c), os, indent);
      return;
    case EntityKind::Function:
    case EntityKind::Method:
      os << indent;
      print_function(e.name, *e.signature, *e.body, os);
      os << '\n';
      return;
    case EntityKind::FunctionTemplate:
      os << indent;
      print_template_header(e.template_info->params, false, os);
      print_function(e.name, *e.signature, *e.body, os);
      os << '\n';
      return;
    case EntityKind::DataMember:
      os << indent << render_type(*e.member_type) << ' ' << e.name;
      if (e.member_init) os << " = " << print_expr(*e.member_init);
      os << ";\n";
      return;
    case EntityKind::Class:
      os << indent << (e.is_struct ? "struct " : "class ") << e.name << " {\n";
      if (!e.is_struct) os << indent << "public:\n";
      for (EntityId c : e.children) print_entity(engine, engine.entity(c), os, indent + "  ");
      os << indent << "};\n";
      return;
    case EntityKind::ClassTemplate: {
      const auto& info = *e.template_info;
      os << indent;
      print_pattern(e.name, info.primary, os);
      for (const auto& spec : info.specializations) {
        os << indent;
        print_pattern(e.name, spec, os);
      }
      return;
    }
    case EntityKind::Instantiation:
      os << indent << "// instantiation " << e.qualified_name << '\n';
      if (e.instantiation->is_class) {
        for (EntityId c : e.children) print_entity(engine, engine.entity(c), os, indent + "  ");
      } else {
        os << indent;
        print_function(e.qualified_name, *e.signature, *e.body, os);
        os << '\n';
      }
      return;
  }
}

bool patterns_equal(const ClassPattern& a, const ClassPattern& b) {
  if (a.params != b.params || a.variadic != b.variadic || a.is_specialization != b.is_specialization ||
      a.spec_args != b.spec_args || a.defined != b.defined || a.is_struct != b.is_struct ||
      a.members.size() != b.members.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.members.size(); ++i) {
    const auto& x = a.members[i];
    const auto& y = b.members[i];
    if (x.kind != y.kind || x.name != y.name || x.type != y.type || x.signature != y.signature) return false;
    if (bool(x.init) != bool(y.init) || (x.init && !expr_equal(*x.init, *y.init))) return false;
    if (bool(x.body) != bool(y.body) || (x.body && !stmts_equal(*x.body, *y.body))) return false;
  }
  return true;
}

}  // namespace

std::string print_expr(const Expr& e) {
  std::ostringstream os;
  print_expr_into(e, os);
  return os.str();
}

std::string print_decl(const Engine& engine, EntityId id) {
  std::ostringstream os;
  print_entity(engine, engine.entity(id), os, "");
  return os.str();
}

bool entities_equal(const Engine& a, EntityId ea, const Engine& b, EntityId eb) {
  const Entity& x = a.entity(ea);
  const Entity& y = b.entity(eb);
  if (x.kind != y.kind || x.name != y.name || x.qualified_name != y.qualified_name || x.is_struct != y.is_struct ||
      x.signature != y.signature || x.member_type != y.member_type || x.children.size() != y.children.size()) {
    return false;
  }
  if (bool(x.body) != bool(y.body) || (x.body && !stmts_equal(*x.body, *y.body))) return false;
  if (bool(x.member_init) != bool(y.member_init) || (x.member_init && !expr_equal(*x.member_init, *y.member_init))) {
    return false;
  }
  if (bool(x.template_info) != bool(y.template_info)) return false;
  if (x.template_info) {
    const auto& ti = *x.template_info;
    const auto& tj = *y.template_info;
    if (ti.params != tj.params || ti.is_variadic != tj.is_variadic ||
        ti.specializations.size() != tj.specializations.size()) {
      return false;
    }
    if (x.kind == EntityKind::ClassTemplate && !patterns_equal(ti.primary, tj.primary)) return false;
    for (std::size_t i = 0; i < ti.specializations.size(); ++i) {
      if (!patterns_equal(ti.specializations[i], tj.specializations[i])) return false;
    }
  }
  for (std::size_t i = 0; i < x.children.size(); ++i) {
    if (!entities_equal(a, x.children[i], b, y.children[i])) return false;
  }
  return true;
}

}  // namespace reflexbridge
