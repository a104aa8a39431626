#include "reflexbridge/specializer.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "detail.hpp"
#include "reflexbridge/conversions.hpp"

namespace reflexbridge {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& message, std::optional<SourceSpan> span = std::nullopt) {
  throw Error(code, message, span);
}

// -- substitution -------------------------------------------------------------

struct Bindings {
  std::map<std::string, TypeRef> single;
  std::string pack_name;
  std::vector<TypeRef> pack;
  std::uint64_t nodes = 0;

  std::vector<TypeRef> list(const std::vector<TypeRef>& ts) {
    std::vector<TypeRef> out;
    for (const auto& t : ts) {
      if (t.kind() == TypeKind::TemplateParam && t.is_pack()) {
        if (t.name() != pack_name) fail(ErrorCode::SubstitutionFailure, "unbound pack '" + t.name() + "'");
        out.insert(out.end(), pack.begin(), pack.end());
      } else {
        out.push_back(type(t));
      }
    }
    return out;
  }

  TypeRef type(const TypeRef& t) {
    switch (t.kind()) {
      case TypeKind::TemplateParam: {
        if (t.is_pack()) fail(ErrorCode::SubstitutionFailure, "pack '" + t.name() + "' expanded outside an argument list");
        auto it = single.find(t.name());
        if (it == single.end()) fail(ErrorCode::SubstitutionFailure, "unbound template parameter '" + t.name() + "'");
        return it->second;
      }
      case TypeKind::Instantiation:
        return TypeRef::instantiation(t.entity(), t.name(), list(t.args()));
      case TypeKind::Array2D:
        return TypeRef::array2d(type(t.element()));
      default:
        return t;
    }
  }

  ExprPtr expr(const ExprPtr& e) {
    if (!e) return e;
    auto out = std::make_shared<Expr>(*e);
    ++nodes;
    if (e->kind == ExprKind::Cast || e->kind == ExprKind::Construct) out->type = type(e->type);
    if (e->kind == ExprKind::Cast && !out->type.is_scalar()) {
      fail(ErrorCode::SubstitutionFailure, "conversion to non-scalar type " + render_type(out->type), e->span);
    }
    if (e->has_targs) out->targs = list(e->targs);
    for (auto& op : out->operands) op = expr(op);
    return out;
  }

  Stmt stmt(const Stmt& s) {
    Stmt out = s;
    if (s.declared) out.declared = type(*s.declared);
    out.value = expr(s.value);
    out.begin = expr(s.begin);
    out.body = body(s.body);
    return out;
  }

  Body body(const Body& b) {
    Body out;
    out.reserve(b.size());
    for (const auto& s : b) out.push_back(stmt(s));
    return out;
  }

  Signature signature(const Signature& s) {
    Signature out = s;
    for (auto& p : out.params) p.type = type(p.type);
    out.result = type(s.result);
    return out;
  }
};

std::optional<Bindings> match_pattern(const ClassPattern& p, const std::vector<TypeRef>& targs) {
  Bindings b;
  if (!p.is_specialization) {
    if (p.variadic || targs.size() != p.params.size()) return std::nullopt;
    for (std::size_t i = 0; i < targs.size(); ++i) b.single[p.params[i]] = targs[i];
    return b;
  }
  std::size_t i = 0;
  for (const auto& pat : p.spec_args) {
    if (pat.kind() == TypeKind::TemplateParam && pat.is_pack()) {
      b.pack_name = pat.name();
      b.pack.assign(targs.begin() + static_cast<std::ptrdiff_t>(i), targs.end());
      i = targs.size();
      continue;
    }
    if (i >= targs.size()) return std::nullopt;
    if (pat.kind() == TypeKind::TemplateParam) {
      auto [it, inserted] = b.single.emplace(pat.name(), targs[i]);
      if (!inserted && !(it->second == targs[i])) return std::nullopt;
    } else if (!(pat == targs[i])) {
      return std::nullopt;
    }
    ++i;
  }
  if (i != targs.size()) return std::nullopt;
  return b;
}

bool is_method_like(const Engine& engine, EntityId id) { return owning_record(engine, id) != kNoEntity; }

// -- instantiation ------------------------------------------------------------

class Instantiator {
 public:
  explicit Instantiator(Engine& engine) : engine_(engine) {}

  EntityId any(EntityId tmpl, const std::vector<TypeRef>& targs, bool top) {
    const Entity& t = engine_.entity(tmpl);
    if (t.kind == EntityKind::ClassTemplate) return record(tmpl, targs, top);
    if (t.kind == EntityKind::FunctionTemplate) return function(tmpl, targs, top);
    fail(ErrorCode::KindMismatch, "'" + t.qualified_name + "' is not a template");
  }

  void ensure(const TypeRef& t) {
    if (t.kind() == TypeKind::Instantiation) {
      EntityId tmpl = t.entity();
      if (tmpl == kNoEntity) tmpl = engine_.lookup(t.name()).id;
      record(tmpl, t.args(), false);
    }
  }

  EntityId record(EntityId tmpl_id, const std::vector<TypeRef>& targs, bool top) {
    const Entity& tmpl = engine_.entity(tmpl_id);
    if (tmpl.kind != EntityKind::ClassTemplate) {
      fail(ErrorCode::KindMismatch, "'" + tmpl.qualified_name + "' is not a class template");
    }
    for (const auto& a : targs) {
      if (a.is_dependent()) fail(ErrorCode::SubstitutionFailure, "template arguments must be concrete");
    }
    const std::string key = render_type(TypeRef::instantiation(tmpl_id, tmpl.qualified_name, targs));
    if (auto hit = engine_.find_instantiation(key)) {
      if (top) ++engine_.stats().cache_hits;
      return *hit;
    }
    if (!active_.insert(key).second) fail(ErrorCode::SubstitutionFailure, "recursive instantiation of '" + key + "'");
    struct Guard {
      std::set<std::string>& s;
      std::string k;
      ~Guard() { s.erase(k); }
    } guard{active_, key};

    // Innermost first: arguments, then member types, then this one.
    for (const auto& a : targs) ensure(a);

    const TemplateInfo& info = *tmpl.template_info;
    const ClassPattern* chosen = nullptr;
    Bindings b;
    for (const auto& spec : info.specializations) {
      if (auto m = match_pattern(spec, targs)) {
        chosen = &spec;
        b = std::move(*m);
        break;
      }
    }
    if (!chosen) {
      if (!info.is_variadic && targs.size() != info.params.size()) {
        fail(ErrorCode::ArityMismatch, "'" + tmpl.qualified_name + "' expects " + std::to_string(info.params.size()) +
                                           " template argument(s), got " + std::to_string(targs.size()));
      }
      auto m = match_pattern(info.primary, targs);
      if (!info.primary.defined || !m) fail(ErrorCode::SubstitutionFailure, "no definition matches '" + key + "'");
      chosen = &info.primary;
      b = std::move(*m);
    }

    std::vector<MemberDecl> members;
    members.reserve(chosen->members.size());
    for (const auto& m : chosen->members) {
      MemberDecl out = m;
      ++b.nodes;
      if (m.kind == MemberDecl::Kind::Data) {
        out.type = b.type(m.type);
        out.init = b.expr(m.init);
        if (out.type.is_record()) {
          if (out.init) fail(ErrorCode::SubstitutionFailure, "initializer for class-typed member '" + m.name + "'", m.span);
          ensure(out.type);
        } else if (!out.type.is_scalar()) {
          fail(ErrorCode::SubstitutionFailure, "member '" + m.name + "' has type " + render_type(out.type), m.span);
        }
      } else {
        out.signature = b.signature(m.signature);
        check_scalar_signature(out.signature, m.name, m.span);
        out.body = std::make_shared<const Body>(b.body(*m.body));
      }
      members.push_back(std::move(out));
    }

    Entity e;
    e.name = tmpl.name + "<" + render_types(targs) + ">";
    e.qualified_name = key;
    e.kind = EntityKind::Instantiation;
    e.parent = tmpl.parent;
    e.is_struct = chosen->is_struct;
    e.span = chosen->span;
    e.instantiation = InstantiationInfo{tmpl_id, targs, true};
    const EntityId id = engine_.add_entity(std::move(e));
    register_class_members(engine_, members, key, id);
    engine_.record_instantiation(key, id);
    note(tmpl_id, key, b.nodes + 1);
    return id;
  }

  EntityId function(EntityId tmpl_id, const std::vector<TypeRef>& targs, bool top) {
    const Entity& tmpl = engine_.entity(tmpl_id);
    const auto& info = *tmpl.template_info;
    if (targs.size() != info.params.size()) {
      fail(ErrorCode::ArityMismatch, "'" + tmpl.name + "' expects " + std::to_string(info.params.size()) +
                                         " template argument(s), got " + std::to_string(targs.size()));
    }
    for (const auto& a : targs) {
      if (!a.is_scalar()) {
        fail(ErrorCode::SubstitutionFailure,
             "'" + tmpl.name + "' cannot be instantiated with non-scalar type " + render_type(a));
      }
    }
    Bindings b;
    b.single[info.params.front()] = targs.front();
    Signature sig = b.signature(*tmpl.signature);
    check_scalar_signature(sig, tmpl.name, tmpl.span);

    const Entity* parent = tmpl.parent != kNoEntity ? &engine_.entity(tmpl.parent) : nullptr;
    const bool in_set = parent && parent->kind == EntityKind::OverloadSet;
    std::string suffix = "<" + render_types(targs) + ">";
    if (in_set) suffix += "(" + render_types(sig.param_types()) + ")";
    const std::string key = (in_set ? parent->qualified_name : tmpl.qualified_name) + suffix;
    if (auto hit = engine_.find_instantiation(key)) {
      if (top) ++engine_.stats().cache_hits;
      return *hit;
    }
    auto body = std::make_shared<const Body>(b.body(*tmpl.body));

    Entity e;
    e.name = (in_set ? parent->name : tmpl.name) + suffix;
    e.qualified_name = key;
    e.kind = EntityKind::Instantiation;
    e.parent = tmpl.parent;
    e.span = tmpl.span;
    e.signature = std::move(sig);
    e.body = std::move(body);
    e.instantiation = InstantiationInfo{tmpl_id, targs, false};
    const EntityId id = engine_.add_entity(std::move(e));
    engine_.record_instantiation(key, id);
    note(tmpl_id, key, b.nodes + 1);
    return id;
  }

 private:
  static void check_scalar_signature(const Signature& sig, const std::string& name, const SourceSpan& span) {
    for (const auto& p : sig.params) {
      if (!p.type.is_scalar()) {
        fail(ErrorCode::SubstitutionFailure,
             "parameter '" + p.name + "' of '" + name + "' has unsupported type " + render_type(p.type), span);
      }
    }
    if (!sig.result.is_scalar()) {
      fail(ErrorCode::SubstitutionFailure, "'" + name + "' has unsupported return type " + render_type(sig.result),
           span);
    }
  }

  void note(EntityId tmpl, const std::string& key, std::uint64_t nodes) {
    auto& st = engine_.stats();
    ++st.total_instantiations;
    ++st.per_template[tmpl];
    st.node_count += nodes;
    st.order_log.push_back(key);
  }

  Engine& engine_;
  std::set<std::string> active_;
};

// -- overload ranking ---------------------------------------------------------

struct Candidate {
  EntityId entity = kNoEntity;
  std::optional<std::vector<TypeRef>> targs;
  std::vector<TypeRef> params;
  TypeRef result;
  int worst = 0;
};

std::optional<int> worst_rank(const std::vector<TypeRef>& params, const std::vector<TypeRef>& args) {
  if (params.size() != args.size()) return std::nullopt;
  int worst = 0;
  for (std::size_t i = 0; i < args.size(); ++i) {
    auto r = conversion_rank(args[i], params[i]);
    if (!r) return std::nullopt;
    worst = std::max(worst, static_cast<int>(*r));
  }
  return worst;
}

std::optional<Candidate> make_candidate(const Engine& engine, EntityId id, const std::vector<TypeRef>& args,
                                        const std::optional<std::vector<TypeRef>>& explicit_targs) {
  const Entity& c = engine.entity(id);
  if (c.kind == EntityKind::FunctionTemplate) {
    std::vector<TypeRef> targs;
    if (explicit_targs) {
      if (explicit_targs->size() != c.template_info->params.size()) return std::nullopt;
      targs = *explicit_targs;
    } else {
      try {
        targs = deduce(engine, id, args);
      } catch (const Error&) {
        return std::nullopt;
      }
    }
    for (const auto& t : targs) {
      if (!t.is_scalar()) return std::nullopt;
    }
    Bindings b;
    b.single[c.template_info->params.front()] = targs.front();
    const Signature sig = b.signature(*c.signature);
    auto w = worst_rank(sig.param_types(), args);
    if (!w) return std::nullopt;
    return Candidate{id, std::move(targs), sig.param_types(), sig.result, *w};
  }
  if (explicit_targs || !c.signature) return std::nullopt;
  auto w = worst_rank(c.signature->param_types(), args);
  if (!w) return std::nullopt;
  return Candidate{id, std::nullopt, c.signature->param_types(), c.signature->result, *w};
}

std::string display_name(const Engine& engine, EntityId id) {
  const Entity& e = engine.entity(id);
  if (e.kind == EntityKind::FunctionTemplate || (e.signature && e.kind != EntityKind::Instantiation)) {
    std::string base = e.qualified_name;
    if (auto pos = base.find('('); pos != std::string::npos) base.erase(pos);
    if (e.kind == EntityKind::FunctionTemplate && base.find('<') == std::string::npos) {
      base += "<" + e.template_info->params.front() + ">";
    }
    return base + "(" + render_types(e.signature->param_types()) + ")";
  }
  return e.qualified_name;
}

CallSignature finish(Engine& engine, const Candidate& c, EntityId origin) {
  CallSignature sig;
  sig.callable_id = c.targs ? instantiate(engine, c.entity, *c.targs) : c.entity;
  sig.param_types = c.params;
  sig.return_type = c.result;
  sig.origin = origin;
  return sig;
}

// -- typing -------------------------------------------------------------------

struct Poisoned {};

struct BodyCache {
  std::unordered_map<EntityId, std::unique_ptr<TypedBody>> done;
  std::unordered_set<EntityId> active;
};

void ensure_typed(Engine& engine, EntityId callable);

/// Type inference over one kernel or one function body.
class Typer {
 public:
  Typer(Engine& engine, NodeTypes& types, CallBindings& calls, EntityId context, EntityId self_record)
      : engine_(engine), types_(types), calls_(calls), context_(context), self_(self_record) {
    scopes_.emplace_back();
  }

  void push() { scopes_.emplace_back(); }
  void pop() { scopes_.pop_back(); }
  void declare(const std::string& name, std::optional<TypeRef> t) { scopes_.back()[name] = std::move(t); }

  std::optional<std::optional<TypeRef>> local(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (auto f = it->find(name); f != it->end()) return f->second;
    }
    return std::nullopt;
  }

  TypeRef expr(const Expr& e) {
    TypeRef t = compute(e);
    types_[&e] = t;
    return t;
  }

  /// Type of a scalar local for assignment; TypeError if absent or not scalar.
  TypeRef assignable(const std::string& name, const SourceSpan& span) {
    auto t = local(name);
    if (!t) fail(ErrorCode::TypeError, "assignment to undeclared local '" + name + "'", span);
    if (!*t) throw Poisoned{};
    if (!(*t)->is_scalar()) fail(ErrorCode::TypeError, "cannot assign to '" + name + "' of type " + render_type(**t), span);
    return **t;
  }

 private:
  TypeRef compute(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Literal:
        return scalar_type(e.literal);
      case ExprKind::Ref: {
        if (auto t = local(e.name)) {
          if (!*t) throw Poisoned{};
          return **t;
        }
        if (self_ != kNoEntity) {
          if (auto m = engine_.find_child(self_, e.name); m && engine_.entity(*m).kind == EntityKind::DataMember) {
            return *engine_.entity(*m).member_type;
          }
        }
        fail(ErrorCode::TypeError, "use of undeclared name '" + e.name + "'", e.span);
      }
      case ExprKind::Index: {
        const TypeRef a = expr(*e.operands[0]);
        if (a.kind() != TypeKind::Array2D) fail(ErrorCode::TypeError, "subscript of non-array " + render_type(a), e.span);
        for (int k = 1; k <= 2; ++k) {
          const TypeRef i = expr(*e.operands[k]);
          if (!i.is_integer()) fail(ErrorCode::TypeError, "array index must be an integer, got " + render_type(i), e.span);
        }
        return a.element();
      }
      case ExprKind::Dim: {
        const TypeRef a = expr(*e.operands[0]);
        if (a.kind() != TypeKind::Array2D) fail(ErrorCode::TypeError, "dimension of non-array " + render_type(a), e.span);
        return TypeRef::i64();
      }
      case ExprKind::Binary: {
        const TypeRef l = expr(*e.operands[0]);
        const TypeRef r = expr(*e.operands[1]);
        auto t = arithmetic_result(l, r);
        if (!t) {
          fail(ErrorCode::TypeError, "invalid operands to '" + std::string(binop_symbol(e.op)) + "': " + render_type(l) +
                                         " and " + render_type(r), e.span);
        }
        return e.op == BinOp::Lt ? TypeRef::bool_() : *t;
      }
      case ExprKind::Neg: {
        const TypeRef v = expr(*e.operands[0]);
        if (!v.is_scalar()) fail(ErrorCode::TypeError, "invalid operand to unary '-': " + render_type(v), e.span);
        return negation_result(v);
      }
      case ExprKind::Cast: {
        const TypeRef v = expr(*e.operands[0]);
        if (!v.is_scalar() || !e.type.is_scalar()) {
          fail(ErrorCode::TypeError, "cannot convert " + render_type(v) + " to " + render_type(e.type), e.span);
        }
        return e.type;
      }
      case ExprKind::Call: {
        std::vector<TypeRef> args = operand_types(e, 0);
        auto callee = lookup_callee(engine_, context_, e.name);
        if (!callee) fail(ErrorCode::NotFound, "'" + e.name + "' not found", e.span);
        if (is_method_like(engine_, *callee) && owning_record(engine_, *callee) != self_) {
          fail(ErrorCode::TypeError, "method '" + e.name + "' called without an object", e.span);
        }
        return bind(e, *callee, args);
      }
      case ExprKind::Member: {
        const EntityId rec = record_of(expr(*e.operands[0]), e);
        auto m = engine_.find_child(rec, e.name);
        if (!m || engine_.entity(*m).kind != EntityKind::DataMember) {
          fail(ErrorCode::TypeError, "'" + engine_.entity(rec).qualified_name + "' has no data member '" + e.name + "'",
               e.span);
        }
        return *engine_.entity(*m).member_type;
      }
      case ExprKind::MethodCall: {
        const EntityId rec = record_of(expr(*e.operands[0]), e);
        std::vector<TypeRef> args = operand_types(e, 1);
        auto m = engine_.find_child(rec, e.name);
        if (!m || !is_method_like(engine_, *m)) {
          fail(ErrorCode::TypeError, "'" + engine_.entity(rec).qualified_name + "' has no method '" + e.name + "'",
               e.span);
        }
        return bind(e, *m, args);
      }
      case ExprKind::Construct: {
        const EntityId rec = require_record(engine_, e.type);
        check_defaults(rec, e.span);
        return engine_.type_of(rec);
      }
    }
    fail(ErrorCode::TypeError, "unknown expression", e.span);
  }

  std::vector<TypeRef> operand_types(const Expr& e, std::size_t first) {
    std::vector<TypeRef> out;
    for (std::size_t i = first; i < e.operands.size(); ++i) out.push_back(expr(*e.operands[i]));
    return out;
  }

  EntityId record_of(const TypeRef& t, const Expr& e) {
    if (!t.is_record()) fail(ErrorCode::TypeError, "member access on non-class type " + render_type(t), e.span);
    return require_record(engine_, t);
  }

  TypeRef bind(const Expr& e, EntityId callee, const std::vector<TypeRef>& args) {
    std::optional<std::vector<TypeRef>> targs;
    if (e.has_targs) {
      targs.emplace();
      for (const auto& t : e.targs) targs->push_back(engine_.resolve_type(t));
    }
    CallSignature sig;
    try {
      sig = select_callable(engine_, callee, args, targs);
      ensure_typed(engine_, sig.callable_id);
    } catch (const Error& err) {
      if (err.span()) throw;
      throw Error(err.code(), err.message(), e.span, err.root_code());
    }
    calls_[&e] = sig;
    return sig.return_type;
  }

  void check_defaults(EntityId rec, const SourceSpan& span) {
    for (EntityId m : engine_.data_members(rec)) {
      const TypeRef& t = *engine_.entity(m).member_type;
      if (t.is_record()) {
        check_defaults(require_record(engine_, t), span);
        continue;
      }
      try {
        member_default(engine_, m);
      } catch (const Error& err) {
        throw Error(ErrorCode::TypeError, "member '" + engine_.entity(m).qualified_name + "': " + err.message(), span,
                    err.root_code());
      }
    }
  }

  Engine& engine_;
  NodeTypes& types_;
  CallBindings& calls_;
  EntityId context_;
  EntityId self_;
  // A local mapped to nullopt failed to type; uses of it are skipped silently.
  std::vector<std::unordered_map<std::string, std::optional<TypeRef>>> scopes_;
};

void require_convertible(const TypeRef& from, const TypeRef& to, const std::string& what, const SourceSpan& span) {
  if (!implicitly_convertible(from, to)) {
    fail(ErrorCode::TypeError, "cannot convert " + render_type(from) + " to " + render_type(to) + " in " + what, span);
  }
}

/// Types the statements of a kernel, collecting one error per failing statement.
class KernelTyper {
 public:
  KernelTyper(Typer& typer, std::optional<TypeRef> declared_result)
      : t_(typer), declared_(std::move(declared_result)) {}

  void stmts(const std::vector<Stmt>& body) {
    for (const auto& s : body) stmt(s);
  }

  std::vector<Error> errors;
  std::optional<TypeRef> result;

 private:
  void stmt(const Stmt& s) {
    if (s.kind == StmtKind::For) {
      guarded([&] {
        for (const ExprPtr& bound : {s.begin, s.value}) {
          const TypeRef b = t_.expr(*bound);
          if (!b.is_integer()) fail(ErrorCode::TypeError, "loop bound must be an integer, got " + render_type(b), bound->span);
        }
      });
      t_.push();
      t_.declare(s.name, TypeRef::i64());
      stmts(s.body);
      t_.pop();
      return;
    }
    const bool ok = guarded([&] {
      switch (s.kind) {
        case StmtKind::Let: {
          const TypeRef v = t_.expr(*s.value);
          if (s.value->kind == ExprKind::Construct) {
            t_.declare(s.name, v);
            return;
          }
          if (!v.is_scalar()) fail(ErrorCode::TypeError, "local '" + s.name + "' must be a scalar", s.span);
          if (s.declared) {
            if (!s.declared->is_scalar()) fail(ErrorCode::TypeError, "local '" + s.name + "' must be a scalar", s.span);
            require_convertible(v, *s.declared, "initialization of '" + s.name + "'", s.span);
            t_.declare(s.name, *s.declared);
          } else {
            t_.declare(s.name, v);
          }
          return;
        }
        case StmtKind::Assign: {
          const TypeRef target = t_.assignable(s.name, s.span);
          const TypeRef v = t_.expr(*s.value);
          TypeRef r = v;
          if (s.assign_op != AssignOp::Set) {
            auto common = arithmetic_result(target, v);
            if (!common) {
              fail(ErrorCode::TypeError, "invalid operands " + render_type(target) + " and " + render_type(v), s.span);
            }
            r = *common;
          }
          require_convertible(r, target, "assignment to '" + s.name + "'", s.span);
          return;
        }
        case StmtKind::Return: {
          const TypeRef v = t_.expr(*s.value);
          if (!v.is_scalar()) fail(ErrorCode::TypeError, "kernels return scalars, got " + render_type(v), s.span);
          if (declared_) {
            require_convertible(v, *declared_, "return", s.span);
            result = *declared_;
          } else {
            result = v;
          }
          return;
        }
        case StmtKind::For:
          return;
      }
    });
    if (!ok && s.kind == StmtKind::Let) t_.declare(s.name, std::nullopt);
  }

  template <class F>
  bool guarded(F&& f) {
    try {
      f();
      return true;
    } catch (const Poisoned&) {
      return false;
    } catch (const Error& e) {
      errors.push_back(e);
      return false;
    }
  }

  Typer& t_;
  std::optional<TypeRef> declared_;
};

void ensure_typed(Engine& engine, EntityId callable) {
  auto& cache = engine.extension<BodyCache>();
  if (cache.done.count(callable) || cache.active.count(callable)) return;
  typed_body(engine, callable);
}

Scalar const_eval(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Literal: return e.literal;
    case ExprKind::Neg: return eval_negate(const_eval(*e.operands[0]));
    case ExprKind::Binary: return eval_binary(e.op, const_eval(*e.operands[0]), const_eval(*e.operands[1]));
    case ExprKind::Cast: return convert_scalar(const_eval(*e.operands[0]), e.type.kind());
    default:
      throw Error(ErrorCode::UnsupportedConstruct, "member initializers must be constant expressions", e.span);
  }
}

}  // namespace

const TypeRef& TypedKernel::type_of(const Expr& e) const {
  auto it = node_types.find(&e);
  if (it == node_types.end()) throw Error(ErrorCode::LoweringError, "untyped expression node", e.span);
  return it->second;
}

const CallSignature& TypedKernel::binding(const Expr& e) const {
  auto it = call_bindings.find(&e);
  if (it == call_bindings.end()) throw Error(ErrorCode::LoweringError, "unbound call site", e.span);
  return it->second;
}

std::vector<TypeRef> deduce(const Engine& engine, EntityId tmpl, const std::vector<TypeRef>& arg_types) {
  const Entity& t = engine.entity(tmpl);
  if (t.kind != EntityKind::FunctionTemplate) {
    fail(ErrorCode::KindMismatch, "'" + t.qualified_name + "' is not a function template");
  }
  const auto& params = t.signature->params;
  if (arg_types.size() != params.size()) {
    fail(ErrorCode::DeductionFailure, "'" + t.name + "' takes " + std::to_string(params.size()) + " argument(s), got " +
                                          std::to_string(arg_types.size()));
  }
  const std::string& tp = t.template_info->params.front();
  std::optional<TypeRef> bound;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const TypeRef& p = params[i].type;
    if (p.kind() == TypeKind::TemplateParam && p.name() == tp) {
      if (!arg_types[i].is_scalar()) {
        fail(ErrorCode::DeductionFailure, "cannot deduce '" + tp + "' from " + render_type(arg_types[i]));
      }
      if (bound && !(*bound == arg_types[i])) {
        fail(ErrorCode::DeductionFailure, "conflicting deductions for '" + tp + "': " + render_type(*bound) + " and " +
                                              render_type(arg_types[i]));
      }
      bound = arg_types[i];
    } else if (p.is_dependent()) {
      fail(ErrorCode::DeductionFailure, "only the direct '" + tp + "' pattern is deduced");
    }
  }
  if (!bound) fail(ErrorCode::DeductionFailure, "cannot deduce '" + tp + "'");
  return {*bound};
}

EntityId instantiate(Engine& engine, EntityId tmpl, const std::vector<TypeRef>& targs) {
  return Instantiator(engine).any(tmpl, targs, true);
}

EntityId require_record(Engine& engine, const TypeRef& record) {
  const TypeRef t = engine.resolve_type(record);
  if (t.kind() == TypeKind::Class) return t.entity();
  if (t.kind() == TypeKind::Instantiation) {
    if (auto id = engine.find_instantiation(t)) return *id;
    return Instantiator(engine).record(t.entity(), t.args(), false);
  }
  fail(ErrorCode::TypeError, render_type(t) + " is not a class type");
}

CallSignature resolve_overload(Engine& engine, EntityId set, const std::vector<TypeRef>& arg_types,
                               const std::optional<std::vector<TypeRef>>& explicit_targs) {
  const Entity& s = engine.entity(set);
  if (s.kind != EntityKind::OverloadSet) fail(ErrorCode::KindMismatch, "'" + s.qualified_name + "' is not an overload set");
  std::vector<Candidate> viable;
  for (EntityId c : s.children) {
    if (auto cand = make_candidate(engine, c, arg_types, explicit_targs)) viable.push_back(std::move(*cand));
  }
  const std::string call = s.qualified_name + "(" + render_types(arg_types) + ")";
  if (viable.empty()) fail(ErrorCode::NoViableOverload, "no viable overload for " + call);
  int best = viable.front().worst;
  for (const auto& c : viable) best = std::min(best, c.worst);
  std::vector<const Candidate*> winners;
  for (const auto& c : viable) {
    if (c.worst == best) winners.push_back(&c);
  }
  if (winners.size() > 1) {
    std::string names;
    for (const auto* w : winners) names += (names.empty() ? "" : ", ") + display_name(engine, w->entity);
    fail(ErrorCode::AmbiguousOverload, "ambiguous call " + call + ": candidates " + names);
  }
  return finish(engine, *winners.front(), set);
}

CallSignature select_callable(Engine& engine, EntityId target, const std::vector<TypeRef>& arg_types,
                              const std::optional<std::vector<TypeRef>>& explicit_targs) {
  ++engine.counters().resolutions;
  const Entity& e = engine.entity(target);
  const std::string call = e.qualified_name + "(" + render_types(arg_types) + ")";
  switch (e.kind) {
    case EntityKind::OverloadSet:
      return resolve_overload(engine, target, arg_types, explicit_targs);
    case EntityKind::FunctionTemplate: {
      if (explicit_targs && explicit_targs->size() != e.template_info->params.size()) {
        fail(ErrorCode::ArityMismatch, "'" + e.name + "' expects " + std::to_string(e.template_info->params.size()) +
                                           " template argument(s), got " + std::to_string(explicit_targs->size()));
      }
      if (!explicit_targs) deduce(engine, target, arg_types);
      auto cand = make_candidate(engine, target, arg_types, explicit_targs);
      if (!cand) fail(ErrorCode::NoViableOverload, "no viable call " + call);
      return finish(engine, *cand, target);
    }
    case EntityKind::Function:
    case EntityKind::Method:
    case EntityKind::Instantiation: {
      if (!e.is_function_like()) break;
      if (explicit_targs) fail(ErrorCode::NoViableOverload, "'" + e.qualified_name + "' is not a template");
      auto cand = make_candidate(engine, target, arg_types, std::nullopt);
      if (!cand) fail(ErrorCode::NoViableOverload, "no viable call " + call);
      return finish(engine, *cand, target);
    }
    default:
      break;
  }
  fail(ErrorCode::KindMismatch, "'" + e.qualified_name + "' (" + std::string(entity_kind_name(e.kind)) +
                                    ") is not callable");
}

std::optional<EntityId> lookup_callee(const Engine& engine, EntityId from, const std::string& name) {
  if (from == kNoEntity || name.find("::") != std::string::npos) return engine.find(name);
  for (EntityId cur = engine.entity(from).parent; cur != kNoEntity; cur = engine.entity(cur).parent) {
    const Entity& scope = engine.entity(cur);
    if (scope.kind == EntityKind::Namespace || scope.is_record()) {
      if (auto id = engine.find(scope.qualified_name + "::" + name)) return id;
    }
  }
  return engine.find(name);
}

EntityId owning_record(const Engine& engine, EntityId callable) {
  EntityId p = engine.entity(callable).parent;
  if (p != kNoEntity && engine.entity(p).kind == EntityKind::OverloadSet) p = engine.entity(p).parent;
  if (p != kNoEntity && engine.entity(p).is_record()) return p;
  return kNoEntity;
}

TypedKernel type_kernel(Engine& engine, const KernelAST& kernel, const std::vector<TypeRef>& param_types) {
  TypedKernel tk;
  tk.kernel = kernel;
  if (param_types.size() != kernel.params.size()) {
    throw Error(ErrorCode::ArityMismatch,
                "kernel '" + kernel.name + "' takes " + std::to_string(kernel.params.size()) + " argument(s), got " +
                    std::to_string(param_types.size()),
                kernel.span);
  }
  // Argument binding fails the same way on both paths, before any typing.
  Typer typer(engine, tk.node_types, tk.call_bindings, kNoEntity, kNoEntity);
  for (std::size_t i = 0; i < param_types.size(); ++i) {
    const auto& p = kernel.params[i];
    const TypeRef given = engine.resolve_type(param_types[i]);
    if (!given.is_scalar() && given.kind() != TypeKind::Array2D) {
      throw Error(ErrorCode::TagMismatch, "parameter '" + p.name + "' must be a scalar or array", p.span);
    }
    if (p.type && !(engine.resolve_type(*p.type) == given)) {
      throw Error(ErrorCode::TagMismatch,
                  "parameter '" + p.name + "' expects " + render_type(*p.type) + ", got " + render_type(given), p.span);
    }
    tk.param_types.push_back(given);
    typer.declare(p.name, given);
  }
  std::vector<Error> errors;
  std::optional<TypeRef> declared;
  if (kernel.result) declared = engine.resolve_type(*kernel.result);
  KernelTyper kt(typer, declared);
  kt.stmts(kernel.body);
  errors.insert(errors.end(), kt.errors.begin(), kt.errors.end());
  if (!errors.empty()) {
    std::string message = "in kernel '" + kernel.name + "': ";
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (i) message += "; ";
      const auto& e = errors[i];
      // The first position is the error's own span.
      if (i && e.span()) message += std::to_string(e.span()->line) + ":" + std::to_string(e.span()->column) + ": ";
      message += std::string(error_code_name(e.root_code())) + ": " + e.message();
    }
    throw Error(ErrorCode::TypeError, message, errors.front().span(), errors.front().root_code());
  }
  if (!kt.result) throw Error(ErrorCode::TypeError, "kernel '" + kernel.name + "' has no return", kernel.span);
  tk.result_type = *kt.result;
  return tk;
}

const TypedBody& typed_body(Engine& engine, EntityId callable) {
  auto& cache = engine.extension<BodyCache>();
  if (auto it = cache.done.find(callable); it != cache.done.end()) return *it->second;
  const Entity& fn = engine.entity(callable);
  if (!fn.is_function_like() || !fn.body) {
    fail(ErrorCode::KindMismatch, "'" + fn.qualified_name + "' is not a concrete function");
  }
  if (!cache.active.insert(callable).second) {
    fail(ErrorCode::LoweringError, "body of '" + fn.qualified_name + "' is being typed");
  }
  struct Guard {
    std::unordered_set<EntityId>& s;
    EntityId id;
    ~Guard() { s.erase(id); }
  } guard{cache.active, callable};

  auto tb = std::make_unique<TypedBody>();
  tb->callable = callable;
  tb->self_record = owning_record(engine, callable);
  tb->signature = *fn.signature;
  tb->body = fn.body;
  Typer typer(engine, tb->node_types, tb->call_bindings, callable, tb->self_record);
  for (const auto& p : fn.signature->params) typer.declare(p.name, p.type);
  try {
    for (const auto& s : *fn.body) {
      const TypeRef v = typer.expr(*s.value);
      if (s.kind == StmtKind::Let) {
        const TypeRef t = s.declared ? *s.declared : v;
        if (!t.is_scalar()) fail(ErrorCode::TypeError, "local '" + s.name + "' must be a scalar", s.span);
        require_convertible(v, t, "initialization of '" + s.name + "'", s.span);
        typer.declare(s.name, t);
      } else if (s.kind == StmtKind::Return) {
        require_convertible(v, fn.signature->result, "return from '" + fn.qualified_name + "'", s.span);
      }
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::TypeError, "in '" + fn.qualified_name + "': " + e.message(), e.span(), e.root_code());
  }
  const TypedBody& out = *tb;
  cache.done.emplace(callable, std::move(tb));
  return out;
}

Scalar member_default(Engine& engine, EntityId data_member) {
  const Entity& m = engine.entity(data_member);
  if (m.kind != EntityKind::DataMember) fail(ErrorCode::KindMismatch, "'" + m.qualified_name + "' is not a data member");
  const TypeRef& t = *m.member_type;
  if (!t.is_scalar()) fail(ErrorCode::TypeError, "'" + m.qualified_name + "' is not a scalar member");
  if (!m.member_init) return zero_scalar(t.kind());
  return convert_implicit(const_eval(*m.member_init), t);
}

InstantiationStats stats(Engine& engine, bool reset) {
  InstantiationStats snapshot = engine.stats();
  if (reset) {
    engine.stats() = InstantiationStats{};
    engine.counters() = RuntimeCounters{};
  }
  return snapshot;
}

}  // namespace reflexbridge
