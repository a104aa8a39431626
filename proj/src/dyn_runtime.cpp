#include "reflexbridge/dyn_runtime.hpp"

#include <unordered_map>

#include "reflexbridge/conversions.hpp"
#include "reflexbridge/specializer.hpp"

namespace reflexbridge {

namespace {

BinOp assign_binop(AssignOp op) {
  switch (op) {
    case AssignOp::Add: return BinOp::Add;
    case AssignOp::Sub: return BinOp::Sub;
    case AssignOp::Mul: return BinOp::Mul;
    default: return BinOp::Div;
  }
}

struct Return {
  BoxedValue value;
};

/// One activation of the interpreter: a kernel run or a bound-body call.
class Interp {
 public:
  Interp(Engine& engine, EntityId context, InstancePtr self, int depth)
      : engine_(engine), counters_(engine.counters()), context_(context), self_(std::move(self)), depth_(depth) {}

  void bind(const std::string& name, BoxedValue v) { env_[name] = std::move(v); }

  BoxedValue boxed(const Scalar& s) {
    ++counters_.boxings;
    return box(s);
  }

  Scalar unboxed(const BoxedValue& b, const SourceSpan& span) {
    if (!b.is_scalar()) {
      throw Error(ErrorCode::TypeError, "expected a scalar, got " + render_type(b.type()), span);
    }
    ++counters_.unboxings;
    return b.scalar();
  }

  std::int64_t index_value(const Expr& e) {
    const BoxedValue v = eval(e);
    if (v.tag() != BoxTag::I32 && v.tag() != BoxTag::I64) {
      throw Error(ErrorCode::TypeError, "array index must be an integer, got " + render_type(v.type()), e.span);
    }
    ++counters_.unboxings;
    return std::get<std::int64_t>(convert_scalar(v.scalar(), TypeKind::I64));
  }

  BoxedValue eval(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Literal:
        return boxed(e.literal);
      case ExprKind::Ref: {
        if (auto it = env_.find(e.name); it != env_.end()) return it->second;
        if (self_) {
          if (auto it = self_->slots.find(e.name); it != self_->slots.end()) return it->second;
        }
        throw Error(ErrorCode::TypeError, "use of undeclared name '" + e.name + "'", e.span);
      }
      case ExprKind::Index: {
        const BoxedValue a = eval(*e.operands[0]);
        if (a.tag() != BoxTag::Arr) throw Error(ErrorCode::TypeError, "subscript of non-array", e.span);
        const std::int64_t i = index_value(*e.operands[1]);
        const std::int64_t j = index_value(*e.operands[2]);
        ++counters_.unboxings;
        return boxed(a.array()->at(i, j));
      }
      case ExprKind::Dim: {
        const BoxedValue a = eval(*e.operands[0]);
        if (a.tag() != BoxTag::Arr) throw Error(ErrorCode::TypeError, "dimension of non-array", e.span);
        ++counters_.unboxings;
        const auto& arr = *a.array();
        return boxed(static_cast<std::int64_t>(e.axis == 0 ? arr.rows() : arr.cols()));
      }
      case ExprKind::Binary: {
        const Scalar l = unboxed(eval(*e.operands[0]), e.span);
        const Scalar r = unboxed(eval(*e.operands[1]), e.span);
        return boxed(eval_binary(e.op, l, r));
      }
      case ExprKind::Neg:
        return boxed(eval_negate(unboxed(eval(*e.operands[0]), e.span)));
      case ExprKind::Cast: {
        const Scalar v = unboxed(eval(*e.operands[0]), e.span);
        if (!e.type.is_scalar()) throw Error(ErrorCode::TypeError, "conversion to non-scalar type", e.span);
        return boxed(convert_scalar(v, e.type.kind()));
      }
      case ExprKind::Call: {
        std::vector<BoxedValue> args = eval_args(e, 0);
        auto callee = lookup_callee(engine_, context_, e.name);
        if (!callee) throw Error(ErrorCode::NotFound, "'" + e.name + "' not found", e.span);
        std::optional<std::vector<TypeRef>> targs;
        if (e.has_targs) {
          targs.emplace();
          for (const auto& t : e.targs) targs->push_back(engine_.resolve_type(t));
        }
        InstancePtr receiver;
        if (owning_record(engine_, *callee) != kNoEntity) {
          if (!self_ || owning_record(engine_, *callee) != self_->cls) {
            throw Error(ErrorCode::TypeError, "method '" + e.name + "' called without an object", e.span);
          }
          receiver = self_;
        }
        return at(e, [&] { return invoke(*callee, receiver, args, targs); });
      }
      case ExprKind::Member: {
        const InstancePtr obj = instance(*e.operands[0]);
        auto it = obj->slots.find(e.name);
        if (it == obj->slots.end()) {
          throw Error(ErrorCode::TypeError, "'" + render_type(obj->type) + "' has no data member '" + e.name + "'",
                      e.span);
        }
        return it->second;
      }
      case ExprKind::MethodCall: {
        const InstancePtr obj = instance(*e.operands[0]);
        std::vector<BoxedValue> args = eval_args(e, 1);
        auto m = engine_.find_child(obj->cls, e.name);
        if (!m || owning_record(engine_, *m) == kNoEntity) {
          throw Error(ErrorCode::TypeError, "'" + render_type(obj->type) + "' has no method '" + e.name + "'", e.span);
        }
        return at(e, [&] { return invoke(*m, obj, args, std::nullopt); });
      }
      case ExprKind::Construct:
        ++counters_.boxings;
        return box(construct_instance(engine_, e.type));
    }
    throw Error(ErrorCode::TypeError, "unknown expression", e.span);
  }

  BoxedValue invoke(EntityId target, const InstancePtr& self, const std::vector<BoxedValue>& args,
                    const std::optional<std::vector<TypeRef>>& targs) {
    std::vector<TypeRef> types;
    types.reserve(args.size());
    for (const auto& a : args) types.push_back(a.type());
    const CallSignature sig = select_callable(engine_, target, types, targs);
    if (depth_ + 1 > kMaxCallDepth) throw Error(ErrorCode::EvalError, "call depth limit exceeded");
    const Entity& fn = engine_.entity(sig.callable_id);
    ++counters_.invocations;
    Interp callee(engine_, sig.callable_id, self, depth_ + 1);
    for (std::size_t i = 0; i < args.size(); ++i) {
      ++counters_.unboxings;
      callee.bind(fn.signature->params[i].name, callee.boxed(unbox(args[i], sig.param_types[i])));
    }
    for (const auto& s : *fn.body) {
      const BoxedValue v = callee.eval(*s.value);
      if (s.kind == StmtKind::Return) {
        return callee.boxed(convert_implicit(callee.unboxed(v, s.span), sig.return_type));
      }
      if (s.declared) {
        callee.bind(s.name, callee.boxed(convert_implicit(callee.unboxed(v, s.span), *s.declared)));
      } else {
        callee.bind(s.name, v);
      }
    }
    throw Error(ErrorCode::EvalError, "'" + fn.qualified_name + "' has no return");
  }

  /// Runs kernel statements; returns true once a return statement has run.
  bool run(const std::vector<Stmt>& body, const std::optional<TypeRef>& result, BoxedValue& out) {
    for (const auto& s : body) {
      switch (s.kind) {
        case StmtKind::Let: {
          BoxedValue v = eval(*s.value);
          if (s.value->kind != ExprKind::Construct) {
            const Scalar x = unboxed(v, s.span);
            v = boxed(s.declared ? convert_implicit(x, *s.declared) : x);
          }
          bind(s.name, std::move(v));
          break;
        }
        case StmtKind::For: {
          const std::int64_t lo = index_value(*s.begin);
          const std::int64_t hi = index_value(*s.value);
          for (std::int64_t i = lo; i < hi; ++i) {
            bind(s.name, boxed(i));
            if (run(s.body, result, out)) return true;
          }
          env_.erase(s.name);
          for (const auto& inner : s.body) {
            if (inner.kind == StmtKind::Let) env_.erase(inner.name);
          }
          break;
        }
        case StmtKind::Assign: {
          auto it = env_.find(s.name);
          if (it == env_.end()) throw Error(ErrorCode::TypeError, "assignment to undeclared '" + s.name + "'", s.span);
          const Scalar cur = unboxed(it->second, s.span);
          Scalar v = unboxed(eval(*s.value), s.span);
          if (s.assign_op != AssignOp::Set) v = eval_binary(assign_binop(s.assign_op), cur, v);
          env_[s.name] = boxed(convert_implicit(v, scalar_type(cur)));
          break;
        }
        case StmtKind::Return: {
          const Scalar v = unboxed(eval(*s.value), s.span);
          out = boxed(result ? convert_implicit(v, *result) : v);
          return true;
        }
      }
    }
    return false;
  }

 private:
  std::vector<BoxedValue> eval_args(const Expr& e, std::size_t first) {
    std::vector<BoxedValue> args;
    args.reserve(e.operands.size() - first);
    for (std::size_t i = first; i < e.operands.size(); ++i) args.push_back(eval(*e.operands[i]));
    return args;
  }

  InstancePtr instance(const Expr& e) {
    const BoxedValue v = eval(e);
    if (v.tag() != BoxTag::Inst) {
      throw Error(ErrorCode::TypeError, "member access on non-class value of type " + render_type(v.type()), e.span);
    }
    ++counters_.unboxings;
    return v.instance();
  }

  template <class F>
  BoxedValue at(const Expr& e, F&& f) {
    try {
      return f();
    } catch (const Error& err) {
      if (err.span()) throw;
      throw Error(err.code(), err.message(), e.span, err.root_code());
    }
  }

  Engine& engine_;
  RuntimeCounters& counters_;
  EntityId context_;
  InstancePtr self_;
  int depth_;
  std::unordered_map<std::string, BoxedValue> env_;
};

}  // namespace

BoxedValue dyn_call(Engine& engine, EntityId target, const std::vector<BoxedValue>& args,
                    const std::optional<std::vector<TypeRef>>& explicit_targs) {
  InstancePtr self;
  if (EntityId rec = owning_record(engine, target); rec != kNoEntity) {
    self = construct_instance(engine, engine.type_of(rec));
  }
  return Interp(engine, kNoEntity, nullptr, 0).invoke(target, self, args, explicit_targs);
}

BoxedValue dyn_call_method(Engine& engine, EntityId target, const InstancePtr& self,
                           const std::vector<BoxedValue>& args) {
  if (!self || owning_record(engine, target) != self->cls) {
    throw Error(ErrorCode::TypeError, "'" + engine.entity(target).qualified_name + "' needs a receiver of its class");
  }
  return Interp(engine, kNoEntity, nullptr, 0).invoke(target, self, args, std::nullopt);
}

InstancePtr construct_instance(Engine& engine, const TypeRef& type) {
  const EntityId rec = require_record(engine, type);
  auto inst = std::make_shared<Instance>();
  inst->cls = rec;
  inst->type = engine.type_of(rec);
  for (EntityId m : engine.data_members(rec)) {
    const Entity& member = engine.entity(m);
    ++engine.counters().boxings;
    if (member.member_type->is_record()) {
      inst->slots.emplace(member.name, box(construct_instance(engine, *member.member_type)));
    } else {
      inst->slots.emplace(member.name, box(member_default(engine, m)));
    }
  }
  return inst;
}

BoxedValue run_kernel_dynamic(Engine& engine, const KernelAST& kernel, const std::vector<BoxedValue>& args) {
  if (args.size() != kernel.params.size()) {
    throw Error(ErrorCode::ArityMismatch, "kernel '" + kernel.name + "' takes " + std::to_string(kernel.params.size()) +
                                              " argument(s), got " + std::to_string(args.size()));
  }
  Interp interp(engine, kNoEntity, nullptr, 0);
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& p = kernel.params[i];
    if (p.type && !(engine.resolve_type(*p.type) == args[i].type())) {
      throw Error(ErrorCode::TagMismatch,
                  "parameter '" + p.name + "' expects " + render_type(*p.type) + ", got " + render_type(args[i].type()),
                  p.span);
    }
    interp.bind(p.name, args[i]);
  }
  std::optional<TypeRef> result;
  if (kernel.result) result = engine.resolve_type(*kernel.result);
  BoxedValue out;
  if (!interp.run(kernel.body, result, out)) {
    throw Error(ErrorCode::EvalError, "kernel '" + kernel.name + "' finished without returning", kernel.span);
  }
  return out;
}

}  // namespace reflexbridge
