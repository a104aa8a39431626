#include "reflexbridge/executor.hpp"

#include <array>
#include <functional>
#include <unordered_map>

#include "reflexbridge/conversions.hpp"
#include "reflexbridge/dyn_runtime.hpp"

namespace reflexbridge {

struct Object;

union Slot {
  bool b;
  std::int32_t i32;
  std::int64_t i64;
  float f32;
  double f64;
  Object* obj;
  const Array2D* arr;
};

struct Object {
  std::vector<Slot> slots;
};

struct RecordLayout {
  std::vector<Slot> defaults;
  std::vector<std::pair<std::size_t, const RecordLayout*>> nested;
};

struct Frame {
  Slot* locals;
  Object* self;
  int depth;
};

using Thunk = std::function<Slot(const Frame&)>;

inline constexpr std::size_t kMaxLocals = 32;

struct CompiledFunction {
  std::string name;
  std::size_t nparams = 0;
  std::vector<std::pair<std::size_t, Thunk>> lets;
  Thunk result;
  std::uint64_t* invocations = nullptr;
};

namespace {

[[noreturn]] void broken(const std::string& message) { throw Error(ErrorCode::LoweringError, message); }

template <class T>
T read(const Slot& s) {
  if constexpr (std::is_same_v<T, bool>) return s.b;
  else if constexpr (std::is_same_v<T, std::int32_t>) return s.i32;
  else if constexpr (std::is_same_v<T, std::int64_t>) return s.i64;
  else if constexpr (std::is_same_v<T, float>) return s.f32;
  else return s.f64;
}

template <class T>
Slot make(T v) {
  Slot s{};
  if constexpr (std::is_same_v<T, bool>) s.b = v;
  else if constexpr (std::is_same_v<T, std::int32_t>) s.i32 = v;
  else if constexpr (std::is_same_v<T, std::int64_t>) s.i64 = v;
  else if constexpr (std::is_same_v<T, float>) s.f32 = v;
  else s.f64 = v;
  return s;
}

template <class T>
struct Tag {
  using type = T;
};

template <class F>
decltype(auto) dispatch(TypeKind k, F&& f) {
  switch (k) {
    case TypeKind::Bool: return f(Tag<bool>{});
    case TypeKind::I32: return f(Tag<std::int32_t>{});
    case TypeKind::I64: return f(Tag<std::int64_t>{});
    case TypeKind::F32: return f(Tag<float>{});
    case TypeKind::F64: return f(Tag<double>{});
    default: broken("non-scalar type in scalar dispatch");
  }
}

Slot to_slot(const Scalar& s) {
  return std::visit([](auto v) { return make(v); }, s);
}

Scalar from_slot(const Slot& s, TypeKind k) {
  return dispatch(k, [&](auto tag) -> Scalar { return read<typename decltype(tag)::type>(s); });
}

using ConvFn = Slot (*)(Slot);

template <class To, class From>
Slot convert_slot(Slot s) {
  return make<To>(convert_value<To>(read<From>(s)));
}

ConvFn conversion(TypeKind from, TypeKind to) {
  return dispatch(from, [&](auto f) {
    return dispatch(to, [&](auto t) -> ConvFn {
      return &convert_slot<typename decltype(t)::type, typename decltype(f)::type>;
    });
  });
}

// -- records ------------------------------------------------------------------

struct LayoutTable {
  std::unordered_map<EntityId, std::unique_ptr<RecordLayout>> layouts;
};

const RecordLayout& layout_for(Engine& engine, EntityId rec) {
  auto& table = engine.extension<LayoutTable>().layouts;
  if (auto it = table.find(rec); it != table.end()) return *it->second;
  auto layout = std::make_unique<RecordLayout>();
  const auto members = engine.data_members(rec);
  layout->defaults.resize(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Entity& m = engine.entity(members[i]);
    if (m.member_type->is_record()) {
      layout->nested.emplace_back(i, &layout_for(engine, require_record(engine, *m.member_type)));
    } else {
      layout->defaults[i] = to_slot(member_default(engine, members[i]));
    }
  }
  const RecordLayout& out = *layout;
  table.emplace(rec, std::move(layout));
  return out;
}

struct Arena {
  std::vector<std::unique_ptr<Object>> objects;

  Object* build(const RecordLayout& layout) {
    auto obj = std::make_unique<Object>();
    obj->slots = layout.defaults;
    for (const auto& [slot, nested] : layout.nested) obj->slots[slot].obj = build(*nested);
    objects.push_back(std::move(obj));
    return objects.back().get();
  }
};

std::optional<std::size_t> slot_index(const Engine& engine, EntityId rec, const std::string& name) {
  const auto members = engine.data_members(rec);
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (engine.entity(members[i]).name == name) return i;
  }
  return std::nullopt;
}

EntityId record_id(Engine& engine, const TypeRef& t) { return require_record(engine, t); }

// -- closures -----------------------------------------------------------------

Slot invoke(const CompiledFunction& f, const Slot* args, Object* self, int depth) {
  if (depth > kMaxCallDepth) throw Error(ErrorCode::EvalError, "call depth limit exceeded");
  ++*f.invocations;
  std::array<Slot, kMaxLocals> locals;
  for (std::size_t i = 0; i < f.nparams; ++i) locals[i] = args[i];
  const Frame frame{locals.data(), self, depth};
  for (const auto& [index, init] : f.lets) locals[index] = init(frame);
  return f.result(frame);
}

struct ClosureTable {
  std::unordered_map<EntityId, std::unique_ptr<CompiledFunction>> fns;
};

const CompiledFunction& compiled(Engine& engine, EntityId callable);

Thunk convert_thunk(Thunk inner, const TypeRef& from, const TypeRef& to) {
  if (from == to) return inner;
  const ConvFn fn = conversion(from.kind(), to.kind());
  return [inner = std::move(inner), fn](const Frame& f) { return fn(inner(f)); };
}

template <class T>
Thunk binop_thunk(BinOp op, Thunk l, Thunk r) {
  switch (op) {
    case BinOp::Add:
      return [l, r](const Frame& f) {
        const T a = read<T>(l(f));
        const T b = read<T>(r(f));
        return make<T>(apply_binop<T>(BinOp::Add, a, b));
      };
    case BinOp::Sub:
      return [l, r](const Frame& f) {
        const T a = read<T>(l(f));
        const T b = read<T>(r(f));
        return make<T>(apply_binop<T>(BinOp::Sub, a, b));
      };
    case BinOp::Mul:
      return [l, r](const Frame& f) {
        const T a = read<T>(l(f));
        const T b = read<T>(r(f));
        return make<T>(apply_binop<T>(BinOp::Mul, a, b));
      };
    case BinOp::Div:
      return [l, r](const Frame& f) {
        const T a = read<T>(l(f));
        const T b = read<T>(r(f));
        return make<T>(apply_binop<T>(BinOp::Div, a, b));
      };
    case BinOp::Lt:
      return [l, r](const Frame& f) {
        const T a = read<T>(l(f));
        const T b = read<T>(r(f));
        return make<bool>(a < b);
      };
  }
  broken("unknown binary operator");
}

/// Compiles one typed body into closures over a frame of untagged slots.
class BodyCompiler {
 public:
  BodyCompiler(Engine& engine, const TypedBody& tb, CompiledFunction& out) : engine_(engine), tb_(tb), out_(out) {}

  void run() {
    const auto& params = tb_.signature.params;
    out_.nparams = params.size();
    for (const auto& p : params) declare(p.name);
    for (const auto& s : *tb_.body) {
      Thunk v = expr(*s.value);
      if (s.kind == StmtKind::Return) {
        out_.result = convert_thunk(std::move(v), type(*s.value), tb_.signature.result);
        return;
      }
      const TypeRef t = s.declared ? *s.declared : type(*s.value);
      Thunk init = convert_thunk(std::move(v), type(*s.value), t);
      out_.lets.emplace_back(declare(s.name), std::move(init));
    }
    broken("body of '" + out_.name + "' has no return");
  }

 private:
  std::size_t declare(const std::string& name) {
    const std::size_t index = locals_.size();
    if (index >= kMaxLocals) {
      throw Error(ErrorCode::UnsupportedConstruct, "'" + out_.name + "' has more than " + std::to_string(kMaxLocals) +
                                                       " parameters and locals");
    }
    locals_[name] = index;
    return index;
  }

  const TypeRef& type(const Expr& e) const {
    auto it = tb_.node_types.find(&e);
    if (it == tb_.node_types.end()) broken("untyped node in '" + out_.name + "'");
    return it->second;
  }

  const CallSignature& binding(const Expr& e) const {
    auto it = tb_.call_bindings.find(&e);
    if (it == tb_.call_bindings.end()) broken("unbound call in '" + out_.name + "'");
    return it->second;
  }

  std::vector<Thunk> args(const Expr& e, std::size_t first, const CallSignature& sig) {
    std::vector<Thunk> out;
    for (std::size_t i = first; i < e.operands.size(); ++i) {
      out.push_back(convert_thunk(expr(*e.operands[i]), type(*e.operands[i]), sig.param_types[i - first]));
    }
    return out;
  }

  Thunk expr(const Expr& e) {
    const TypeRef& t = type(e);
    switch (e.kind) {
      case ExprKind::Literal: {
        const Slot s = to_slot(e.literal);
        return [s](const Frame&) { return s; };
      }
      case ExprKind::Ref: {
        if (auto it = locals_.find(e.name); it != locals_.end()) {
          const std::size_t i = it->second;
          return [i](const Frame& f) { return f.locals[i]; };
        }
        if (tb_.self_record == kNoEntity) broken("unknown name '" + e.name + "'");
        auto slot = slot_index(engine_, tb_.self_record, e.name);
        if (!slot) broken("unknown member '" + e.name + "'");
        const std::size_t k = *slot;
        return [k](const Frame& f) { return f.self->slots[k]; };
      }
      case ExprKind::Binary: {
        Thunk l = convert_thunk(expr(*e.operands[0]), type(*e.operands[0]), arith(e));
        Thunk r = convert_thunk(expr(*e.operands[1]), type(*e.operands[1]), arith(e));
        return dispatch(arith(e).kind(), [&](auto tag) {
          return binop_thunk<typename decltype(tag)::type>(e.op, std::move(l), std::move(r));
        });
      }
      case ExprKind::Neg: {
        Thunk v = convert_thunk(expr(*e.operands[0]), type(*e.operands[0]), t);
        return dispatch(t.kind(), [&](auto tag) -> Thunk {
          using T = typename decltype(tag)::type;
          return [v](const Frame& f) { return make<T>(apply_neg<T>(read<T>(v(f)))); };
        });
      }
      case ExprKind::Cast:
        return convert_thunk(expr(*e.operands[0]), type(*e.operands[0]), t);
      case ExprKind::Call:
      case ExprKind::MethodCall: {
        const CallSignature& sig = binding(e);
        const bool method = e.kind == ExprKind::MethodCall;
        const CompiledFunction* callee = &compiled(engine_, sig.callable_id);
        std::vector<Thunk> argv = args(e, method ? 1 : 0, sig);
        Thunk receiver;
        if (method) {
          receiver = expr(*e.operands[0]);
        } else if (owning_record(engine_, sig.callable_id) != kNoEntity) {
          receiver = [](const Frame& f) {
            Slot s{};
            s.obj = f.self;
            return s;
          };
        }
        return [callee, argv = std::move(argv), receiver = std::move(receiver)](const Frame& f) {
          Object* self = receiver ? receiver(f).obj : nullptr;
          std::array<Slot, kMaxLocals> a;
          for (std::size_t i = 0; i < argv.size(); ++i) a[i] = argv[i](f);
          return invoke(*callee, a.data(), self, f.depth + 1);
        };
      }
      case ExprKind::Member: {
        Thunk obj = expr(*e.operands[0]);
        auto slot = slot_index(engine_, record_id(engine_, type(*e.operands[0])), e.name);
        if (!slot) broken("unknown member '" + e.name + "'");
        const std::size_t k = *slot;
        return [obj = std::move(obj), k](const Frame& f) { return obj(f).obj->slots[k]; };
      }
      default:
        broken("expression kind not allowed in a function body");
    }
  }

  TypeRef arith(const Expr& e) const {
    auto t = arithmetic_result(type(*e.operands[0]), type(*e.operands[1]));
    if (!t) broken("untypable arithmetic in '" + out_.name + "'");
    return *t;
  }

  Engine& engine_;
  const TypedBody& tb_;
  CompiledFunction& out_;
  std::unordered_map<std::string, std::size_t> locals_;
};

const CompiledFunction& compiled(Engine& engine, EntityId callable) {
  auto& fns = engine.extension<ClosureTable>().fns;
  if (auto it = fns.find(callable); it != fns.end()) return *it->second;
  const TypedBody& tb = typed_body(engine, callable);
  auto fn = std::make_unique<CompiledFunction>();
  fn->name = engine.entity(callable).qualified_name;
  fn->invocations = &engine.counters().invocations;
  CompiledFunction& out = *fn;
  fns.emplace(callable, std::move(fn));
  try {
    BodyCompiler(engine, tb, out).run();
  } catch (...) {
    fns.erase(callable);
    throw;
  }
  return out;
}

// -- register machine ---------------------------------------------------------

enum class XOp : std::uint8_t {
  Const, Param, Index, Rows, Cols,
  AddI32, AddI64, AddF32, AddF64,
  SubI32, SubI64, SubF32, SubF64,
  MulI32, MulI64, MulF32, MulF64,
  DivI32, DivI64, DivF32, DivF64,
  LtI32, LtI64, LtF32, LtF64,
  NegI32, NegI64, NegF32, NegF64,
  Convert, Move, Call, Member, Method, Construct, Jump, BranchFalse, Return,
};

int numeric_offset(TypeKind k) {
  switch (k) {
    case TypeKind::I32: return 0;
    case TypeKind::I64: return 1;
    case TypeKind::F32: return 2;
    case TypeKind::F64: return 3;
    default: broken("arithmetic on non-numeric type");
  }
}

XOp arith_op(BinOp op, TypeKind k) {
  XOp base = XOp::AddI32;
  switch (op) {
    case BinOp::Add: base = XOp::AddI32; break;
    case BinOp::Sub: base = XOp::SubI32; break;
    case BinOp::Mul: base = XOp::MulI32; break;
    case BinOp::Div: base = XOp::DivI32; break;
    case BinOp::Lt: base = XOp::LtI32; break;
  }
  return static_cast<XOp>(static_cast<int>(base) + numeric_offset(k));
}

struct XInstr {
  XOp op = XOp::Return;
  int dst = 0;
  int a = 0;
  int b = 0;
  int c = 0;
  Slot k{};
  ConvFn conv = nullptr;
  const CompiledFunction* fn = nullptr;
  const RecordLayout* layout = nullptr;
  std::vector<int> args;
  std::size_t target = 0;
};

}  // namespace

struct LoadedKernel::Impl {
  std::vector<XInstr> code;
  std::size_t nregs = 0;
  std::vector<TypeRef> param_types;
  TypeRef result_type;
  std::string name;
};

LoadedKernel::LoadedKernel(Engine& engine, const TypedIR& ir) : impl_(std::make_unique<Impl>()) {
  verify(engine, ir);
  impl_->nregs = ir.registers.size();
  impl_->param_types = ir.param_types;
  impl_->result_type = ir.result_type;
  impl_->name = ir.kernel;
  auto reg_kind = [&](int r) { return ir.registers[static_cast<std::size_t>(r)].kind(); };
  for (const Instr& in : ir.code) {
    XInstr x;
    x.dst = in.dst;
    if (!in.src.empty()) x.a = in.src[0];
    if (in.src.size() > 1) x.b = in.src[1];
    if (in.src.size() > 2) x.c = in.src[2];
    switch (in.op) {
      case Opcode::LoadConst:
        x.op = XOp::Const;
        x.k = to_slot(in.constant);
        break;
      case Opcode::LoadParam:
        x.op = XOp::Param;
        x.a = in.index;
        break;
      case Opcode::LoadIndex: x.op = XOp::Index; break;
      case Opcode::LoadDim: x.op = in.index == 0 ? XOp::Rows : XOp::Cols; break;
      case Opcode::BinOp: x.op = arith_op(in.binop, reg_kind(in.src[0])); break;
      case Opcode::Neg:
        x.op = static_cast<XOp>(static_cast<int>(XOp::NegI32) + numeric_offset(reg_kind(in.src[0])));
        break;
      case Opcode::Convert:
        x.op = XOp::Convert;
        x.conv = conversion(reg_kind(in.src[0]), reg_kind(in.dst));
        break;
      case Opcode::Move: x.op = XOp::Move; break;
      case Opcode::CallDirect:
      case Opcode::MethodCall:
        x.op = in.op == Opcode::CallDirect ? XOp::Call : XOp::Method;
        x.fn = &compiled(engine, in.callee);
        x.args.assign(in.src.begin() + (in.op == Opcode::MethodCall ? 1 : 0), in.src.end());
        if (x.args.size() > kMaxLocals) broken("too many call arguments");
        break;
      case Opcode::MemberRead:
        x.op = XOp::Member;
        x.b = in.index;
        break;
      case Opcode::Construct:
        x.op = XOp::Construct;
        x.layout = &layout_for(engine, record_id(engine, ir.registers[static_cast<std::size_t>(in.dst)]));
        break;
      case Opcode::Jump:
        x.op = XOp::Jump;
        x.target = ir.labels.at(in.label);
        break;
      case Opcode::Branch:
        x.op = XOp::BranchFalse;
        x.target = ir.labels.at(in.label);
        break;
      case Opcode::Return: x.op = XOp::Return; break;
    }
    impl_->code.push_back(std::move(x));
  }
}

LoadedKernel::~LoadedKernel() = default;
LoadedKernel::LoadedKernel(LoadedKernel&&) noexcept = default;
LoadedKernel& LoadedKernel::operator=(LoadedKernel&&) noexcept = default;

NativeValue LoadedKernel::run(const std::vector<NativeValue>& args) const {
  const Impl& k = *impl_;
  if (args.size() != k.param_types.size()) {
    throw Error(ErrorCode::ArityMismatch, "kernel '" + k.name + "' takes " + std::to_string(k.param_types.size()) +
                                              " argument(s), got " + std::to_string(args.size()));
  }
  std::vector<Slot> params(args.size());
  for (std::size_t i = 0; i < args.size(); ++i) {
    const TypeRef& want = k.param_types[i];
    if (const auto* s = std::get_if<Scalar>(&args[i])) {
      if (!(scalar_type(*s) == want)) {
        throw Error(ErrorCode::TagMismatch, "argument " + std::to_string(i) + " expects " + render_type(want) +
                                                ", got " + render_type(scalar_type(*s)));
      }
      params[i] = to_slot(*s);
    } else {
      const ArrayPtr& a = std::get<ArrayPtr>(args[i]);
      if (want.kind() != TypeKind::Array2D || !a) {
        throw Error(ErrorCode::TagMismatch, "argument " + std::to_string(i) + " expects " + render_type(want));
      }
      params[i].arr = a.get();
    }
  }

  std::vector<Slot> regs(k.nregs);
  Slot* R = regs.data();
  Arena arena;
  const XInstr* code = k.code.data();
  std::size_t pc = 0;
  for (;;) {
    const XInstr& in = code[pc++];
    switch (in.op) {
      case XOp::Const: R[in.dst] = in.k; break;
      case XOp::Param: R[in.dst] = params[static_cast<std::size_t>(in.a)]; break;
      case XOp::Index: R[in.dst].f64 = R[in.a].arr->at(R[in.b].i64, R[in.c].i64); break;
      case XOp::Rows: R[in.dst].i64 = static_cast<std::int64_t>(R[in.a].arr->rows()); break;
      case XOp::Cols: R[in.dst].i64 = static_cast<std::int64_t>(R[in.a].arr->cols()); break;
#define RB_ARITH(NAME, OP)                                                                          \
  case XOp::NAME##I32: R[in.dst].i32 = apply_binop<std::int32_t>(OP, R[in.a].i32, R[in.b].i32); break; \
  case XOp::NAME##I64: R[in.dst].i64 = apply_binop<std::int64_t>(OP, R[in.a].i64, R[in.b].i64); break; \
  case XOp::NAME##F32: R[in.dst].f32 = apply_binop<float>(OP, R[in.a].f32, R[in.b].f32); break;       \
  case XOp::NAME##F64: R[in.dst].f64 = apply_binop<double>(OP, R[in.a].f64, R[in.b].f64); break;
      RB_ARITH(Add, BinOp::Add)
      RB_ARITH(Sub, BinOp::Sub)
      RB_ARITH(Mul, BinOp::Mul)
      RB_ARITH(Div, BinOp::Div)
#undef RB_ARITH
      case XOp::LtI32: R[in.dst].b = R[in.a].i32 < R[in.b].i32; break;
      case XOp::LtI64: R[in.dst].b = R[in.a].i64 < R[in.b].i64; break;
      case XOp::LtF32: R[in.dst].b = R[in.a].f32 < R[in.b].f32; break;
      case XOp::LtF64: R[in.dst].b = R[in.a].f64 < R[in.b].f64; break;
      case XOp::NegI32: R[in.dst].i32 = apply_neg(R[in.a].i32); break;
      case XOp::NegI64: R[in.dst].i64 = apply_neg(R[in.a].i64); break;
      case XOp::NegF32: R[in.dst].f32 = -R[in.a].f32; break;
      case XOp::NegF64: R[in.dst].f64 = -R[in.a].f64; break;
      case XOp::Convert: R[in.dst] = in.conv(R[in.a]); break;
      case XOp::Move: R[in.dst] = R[in.a]; break;
      case XOp::Call:
      case XOp::Method: {
        std::array<Slot, kMaxLocals> argv;
        for (std::size_t i = 0; i < in.args.size(); ++i) argv[i] = R[in.args[i]];
        Object* self = in.op == XOp::Method ? R[in.a].obj : nullptr;
        R[in.dst] = invoke(*in.fn, argv.data(), self, 1);
        break;
      }
      case XOp::Member: R[in.dst] = R[in.a].obj->slots[static_cast<std::size_t>(in.b)]; break;
      case XOp::Construct: R[in.dst].obj = arena.build(*in.layout); break;
      case XOp::Jump: pc = in.target; break;
      case XOp::BranchFalse:
        if (!R[in.a].b) pc = in.target;
        break;
      case XOp::Return: return from_slot(R[in.a], k.result_type.kind());
    }
  }
}

NativeValue execute(Engine& engine, const TypedIR& ir, const std::vector<NativeValue>& args) {
  return LoadedKernel(engine, ir).run(args);
}

}  // namespace reflexbridge
