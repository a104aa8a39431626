#include "reflexbridge/lowerer.hpp"

#include <sstream>
#include <unordered_map>

#include "reflexbridge/conversions.hpp"

namespace reflexbridge {

namespace {

[[noreturn]] void broken(const std::string& message) { throw Error(ErrorCode::LoweringError, message); }

std::string_view binop_name(BinOp op) {
  switch (op) {
    case BinOp::Add: return "add";
    case BinOp::Sub: return "sub";
    case BinOp::Mul: return "mul";
    case BinOp::Div: return "div";
    case BinOp::Lt: return "lt";
  }
  return "?";
}

BinOp assign_binop(AssignOp op) {
  switch (op) {
    case AssignOp::Add: return BinOp::Add;
    case AssignOp::Sub: return BinOp::Sub;
    case AssignOp::Mul: return BinOp::Mul;
    default: return BinOp::Div;
  }
}

const Entity* record_entity(const Engine& engine, const TypeRef& t) {
  std::optional<EntityId> id;
  if (t.kind() == TypeKind::Class) {
    id = t.entity() != kNoEntity ? std::optional<EntityId>(t.entity()) : engine.find(t.name());
  } else if (t.kind() == TypeKind::Instantiation) {
    id = engine.find_instantiation(t);
  }
  if (!id) return nullptr;
  const Entity& e = engine.entity(*id);
  return e.is_record() ? &e : nullptr;
}

std::optional<int> slot_of(const Engine& engine, const Entity& rec, const std::string& member) {
  const auto members = engine.data_members(rec.id);
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (engine.entity(members[i]).name == member) return static_cast<int>(i);
  }
  return std::nullopt;
}

class Lowerer {
 public:
  Lowerer(Engine& engine, const TypedKernel& tk) : engine_(engine), tk_(tk) {}

  TypedIR run() {
    ir_.kernel = tk_.kernel.name;
    ir_.param_types = tk_.param_types;
    ir_.result_type = tk_.result_type;
    scopes_.emplace_back();
    for (std::size_t i = 0; i < tk_.kernel.params.size(); ++i) {
      ir_.param_names.push_back(tk_.kernel.params[i].name);
      Instr in;
      in.op = Opcode::LoadParam;
      in.dst = reg(tk_.param_types[i]);
      in.index = static_cast<int>(i);
      in.name = tk_.kernel.params[i].name;
      emit(std::move(in));
      scopes_.back()[tk_.kernel.params[i].name] = ir_.code.back().dst;
    }
    stmts(tk_.kernel.body);
    return std::move(ir_);
  }

 private:
  int reg(const TypeRef& t) {
    ir_.registers.push_back(t);
    return static_cast<int>(ir_.registers.size() - 1);
  }

  void emit(Instr in) { ir_.code.push_back(std::move(in)); }

  int emit_value(Opcode op, const TypeRef& t, std::vector<int> src) {
    Instr in;
    in.op = op;
    in.dst = reg(t);
    in.src = std::move(src);
    emit(std::move(in));
    return ir_.code.back().dst;
  }

  int coerce(int r, const TypeRef& to) {
    if (ir_.registers[static_cast<std::size_t>(r)] == to) return r;
    return emit_value(Opcode::Convert, to, {r});
  }

  int constant(const Scalar& s) {
    Instr in;
    in.op = Opcode::LoadConst;
    in.dst = reg(scalar_type(s));
    in.constant = s;
    emit(std::move(in));
    return ir_.code.back().dst;
  }

  std::string new_label() { return "L" + std::to_string(next_label_++); }
  void place(const std::string& label) { ir_.labels[label] = ir_.code.size(); }

  int local(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (auto f = it->find(name); f != it->end()) return f->second;
    }
    broken("unknown local '" + name + "'");
  }

  int binop(BinOp op, int l, int r, const SourceSpan& span) {
    auto t = arithmetic_result(ir_.registers[static_cast<std::size_t>(l)], ir_.registers[static_cast<std::size_t>(r)]);
    if (!t) broken("untypable binary operation at " + std::to_string(span.line) + ":" + std::to_string(span.column));
    l = coerce(l, *t);
    r = coerce(r, *t);
    Instr in;
    in.op = Opcode::BinOp;
    in.binop = op;
    in.dst = reg(op == BinOp::Lt ? TypeRef::bool_() : *t);
    in.src = {l, r};
    emit(std::move(in));
    return ir_.code.back().dst;
  }

  std::vector<int> call_args(const Expr& e, std::size_t first, const CallSignature& sig) {
    std::vector<int> out;
    for (std::size_t i = first; i < e.operands.size(); ++i) {
      out.push_back(coerce(expr(*e.operands[i]), sig.param_types[i - first]));
    }
    return out;
  }

  int expr(const Expr& e) {
    const TypeRef& t = tk_.type_of(e);
    switch (e.kind) {
      case ExprKind::Literal:
        return constant(e.literal);
      case ExprKind::Ref:
        return local(e.name);
      case ExprKind::Index: {
        const int a = expr(*e.operands[0]);
        const int i = coerce(expr(*e.operands[1]), TypeRef::i64());
        const int j = coerce(expr(*e.operands[2]), TypeRef::i64());
        return emit_value(Opcode::LoadIndex, t, {a, i, j});
      }
      case ExprKind::Dim: {
        const int a = expr(*e.operands[0]);
        const int d = emit_value(Opcode::LoadDim, t, {a});
        ir_.code.back().index = e.axis;
        return d;
      }
      case ExprKind::Binary: {
        const int l = expr(*e.operands[0]);
        const int r = expr(*e.operands[1]);
        return binop(e.op, l, r, e.span);
      }
      case ExprKind::Neg:
        return emit_value(Opcode::Neg, t, {coerce(expr(*e.operands[0]), t)});
      case ExprKind::Cast:
        return coerce(expr(*e.operands[0]), t);
      case ExprKind::Call: {
        const CallSignature& sig = tk_.binding(e);
        std::vector<int> args = call_args(e, 0, sig);
        const int d = emit_value(Opcode::CallDirect, sig.return_type, std::move(args));
        ir_.code.back().callee = sig.callable_id;
        ir_.code.back().name = engine_.entity(sig.callable_id).qualified_name;
        return d;
      }
      case ExprKind::Member: {
        const int obj = expr(*e.operands[0]);
        const Entity* rec = record_entity(engine_, ir_.registers[static_cast<std::size_t>(obj)]);
        if (!rec) broken("member read on unknown record");
        auto slot = slot_of(engine_, *rec, e.name);
        if (!slot) broken("no slot '" + e.name + "'");
        const int d = emit_value(Opcode::MemberRead, t, {obj});
        ir_.code.back().index = *slot;
        ir_.code.back().name = e.name;
        return d;
      }
      case ExprKind::MethodCall: {
        const CallSignature& sig = tk_.binding(e);
        std::vector<int> src{expr(*e.operands[0])};
        for (int a : call_args(e, 1, sig)) src.push_back(a);
        const int d = emit_value(Opcode::MethodCall, sig.return_type, std::move(src));
        ir_.code.back().callee = sig.callable_id;
        ir_.code.back().name = engine_.entity(sig.callable_id).qualified_name;
        return d;
      }
      case ExprKind::Construct: {
        const int d = emit_value(Opcode::Construct, t, {});
        ir_.code.back().name = render_type(t);
        return d;
      }
    }
    broken("unknown expression kind");
  }

  void move_into(int dst, int src) {
    Instr in;
    in.op = Opcode::Move;
    in.dst = dst;
    in.src = {src};
    emit(std::move(in));
  }

  void stmts(const std::vector<Stmt>& body) {
    for (const auto& s : body) stmt(s);
  }

  void stmt(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::Let: {
        const int v = expr(*s.value);
        if (s.value->kind == ExprKind::Construct) {
          scopes_.back()[s.name] = v;
          return;
        }
        const TypeRef t = s.declared ? *s.declared : ir_.registers[static_cast<std::size_t>(v)];
        const int c = coerce(v, t);
        const int slot = reg(t);
        move_into(slot, c);
        scopes_.back()[s.name] = slot;
        return;
      }
      case StmtKind::Assign: {
        const int target = local(s.name);
        const TypeRef t = ir_.registers[static_cast<std::size_t>(target)];
        int v = expr(*s.value);
        if (s.assign_op != AssignOp::Set) v = binop(assign_binop(s.assign_op), target, v, s.span);
        move_into(target, coerce(v, t));
        return;
      }
      case StmtKind::For: {
        const int lo = coerce(expr(*s.begin), TypeRef::i64());
        const int hi = coerce(expr(*s.value), TypeRef::i64());
        const int i = reg(TypeRef::i64());
        move_into(i, lo);
        const std::string head = new_label();
        const std::string exit = new_label();
        place(head);
        const int cond = binop(BinOp::Lt, i, hi, s.span);
        Instr br;
        br.op = Opcode::Branch;
        br.src = {cond};
        br.label = exit;
        emit(std::move(br));
        scopes_.emplace_back();
        scopes_.back()[s.name] = i;
        stmts(s.body);
        scopes_.pop_back();
        const int one = constant(std::int64_t{1});
        move_into(i, binop(BinOp::Add, i, one, s.span));
        Instr jump;
        jump.op = Opcode::Jump;
        jump.label = head;
        emit(std::move(jump));
        place(exit);
        return;
      }
      case StmtKind::Return: {
        const int v = coerce(expr(*s.value), tk_.result_type);
        Instr in;
        in.op = Opcode::Return;
        in.src = {v};
        emit(std::move(in));
        return;
      }
    }
  }

  Engine& engine_;
  const TypedKernel& tk_;
  TypedIR ir_;
  std::vector<std::unordered_map<std::string, int>> scopes_;
  int next_label_ = 0;
};

class Verifier {
 public:
  Verifier(const Engine& engine, const TypedIR& ir) : engine_(engine), ir_(ir) {}

  void run() {
    if (ir_.param_types.size() != ir_.param_names.size()) broken("parameter name/type count mismatch");
    for (const auto& [label, at] : ir_.labels) {
      if (at >= ir_.code.size()) broken("label " + label + " points past the end");
    }
    for (const auto& t : ir_.registers) {
      if (t.is_dependent()) broken("register of dependent type " + render_type(t));
    }
    if (ir_.code.empty() || ir_.code.back().op != Opcode::Return) broken("code does not end in ret");
    for (std::size_t pc = 0; pc < ir_.code.size(); ++pc) {
      try {
        instr(ir_.code[pc]);
      } catch (const Error& e) {
        broken("instruction " + std::to_string(pc) + " (" + std::string(opcode_name(ir_.code[pc].op)) +
               "): " + e.message());
      }
    }
  }

 private:
  const TypeRef& type(int r) const {
    if (r < 0 || static_cast<std::size_t>(r) >= ir_.registers.size()) broken("register r" + std::to_string(r));
    return ir_.registers[static_cast<std::size_t>(r)];
  }

  void arity(const Instr& in, std::size_t n, bool has_dst) const {
    if (in.src.size() != n) broken("expected " + std::to_string(n) + " operand(s)");
    if (has_dst) type(in.dst);
    for (int r : in.src) type(r);
  }

  static void expect(bool ok, const std::string& what) {
    if (!ok) broken(what);
  }

  static bool numeric(const TypeRef& t) { return t.is_integer() || t.is_floating(); }

  void check_call(const Instr& in, std::size_t first) const {
    const Entity& fn = engine_.entity(in.callee);
    expect(fn.is_function_like(), "callee is not a concrete function");
    const auto params = fn.signature->param_types();
    expect(params.size() + first == in.src.size(), "argument count");
    for (std::size_t i = 0; i < params.size(); ++i) {
      expect(type(in.src[i + first]) == params[i], "argument " + std::to_string(i) + " has type " +
                                                        render_type(type(in.src[i + first])) + ", expected " +
                                                        render_type(params[i]));
    }
    expect(type(in.dst) == fn.signature->result, "result type");
  }

  void instr(const Instr& in) const {
    switch (in.op) {
      case Opcode::LoadConst:
        arity(in, 0, true);
        expect(type(in.dst) == scalar_type(in.constant), "constant type");
        return;
      case Opcode::LoadParam:
        arity(in, 0, true);
        expect(in.index >= 0 && static_cast<std::size_t>(in.index) < ir_.param_types.size(), "parameter index");
        expect(type(in.dst) == ir_.param_types[static_cast<std::size_t>(in.index)], "parameter type");
        return;
      case Opcode::LoadIndex:
        arity(in, 3, true);
        expect(type(in.src[0]).kind() == TypeKind::Array2D, "subscript of non-array");
        expect(type(in.src[1]) == TypeRef::i64() && type(in.src[2]) == TypeRef::i64(), "index type");
        expect(type(in.dst) == type(in.src[0]).element(), "element type");
        return;
      case Opcode::LoadDim:
        arity(in, 1, true);
        expect(type(in.src[0]).kind() == TypeKind::Array2D, "dimension of non-array");
        expect(in.index == 0 || in.index == 1, "axis");
        expect(type(in.dst) == TypeRef::i64(), "dimension type");
        return;
      case Opcode::BinOp:
        arity(in, 2, true);
        expect(numeric(type(in.src[0])) && type(in.src[0]) == type(in.src[1]), "operand types");
        expect(type(in.dst) == (in.binop == BinOp::Lt ? TypeRef::bool_() : type(in.src[0])), "result type");
        return;
      case Opcode::Neg:
        arity(in, 1, true);
        expect(numeric(type(in.src[0])) && type(in.dst) == type(in.src[0]), "operand type");
        return;
      case Opcode::Convert:
        arity(in, 1, true);
        expect(type(in.src[0]).is_scalar() && type(in.dst).is_scalar(), "conversion between non-scalars");
        return;
      case Opcode::Move:
        arity(in, 1, true);
        expect(type(in.dst) == type(in.src[0]), "move between different types");
        return;
      case Opcode::CallDirect:
        for (int r : in.src) type(r);
        type(in.dst);
        check_call(in, 0);
        return;
      case Opcode::MemberRead: {
        arity(in, 1, true);
        const Entity* rec = record_entity(engine_, type(in.src[0]));
        expect(rec != nullptr, "member read on non-record");
        const auto members = engine_.data_members(rec->id);
        expect(in.index >= 0 && static_cast<std::size_t>(in.index) < members.size(), "slot index");
        expect(type(in.dst) == *engine_.entity(members[static_cast<std::size_t>(in.index)]).member_type, "slot type");
        return;
      }
      case Opcode::MethodCall: {
        expect(!in.src.empty(), "method call without receiver");
        for (int r : in.src) type(r);
        type(in.dst);
        const Entity* rec = record_entity(engine_, type(in.src[0]));
        expect(rec != nullptr, "method call on non-record");
        EntityId owner = engine_.entity(in.callee).parent;
        if (owner != kNoEntity && engine_.entity(owner).kind == EntityKind::OverloadSet) owner = engine_.entity(owner).parent;
        expect(owner == rec->id, "receiver type does not own the method");
        check_call(in, 1);
        return;
      }
      case Opcode::Construct:
        arity(in, 0, true);
        expect(record_entity(engine_, type(in.dst)) != nullptr, "construct of non-record");
        return;
      case Opcode::Jump:
        arity(in, 0, false);
        expect(ir_.labels.count(in.label) > 0, "unknown label " + in.label);
        return;
      case Opcode::Branch:
        arity(in, 1, false);
        expect(type(in.src[0]) == TypeRef::bool_(), "branch on non-bool");
        expect(ir_.labels.count(in.label) > 0, "unknown label " + in.label);
        return;
      case Opcode::Return:
        arity(in, 1, false);
        expect(type(in.src[0]) == ir_.result_type, "return type");
        return;
    }
    broken("unknown opcode");
  }

  const Engine& engine_;
  const TypedIR& ir_;
};

std::string literal_text(const Scalar& s) {
  std::string text = format_scalar(s);
  if (s.index() != 0) text.resize(text.size() - 3);
  return text;
}

std::string regs(const std::vector<int>& rs, std::size_t first) {
  std::string out;
  for (std::size_t i = first; i < rs.size(); ++i) {
    if (i > first) out += ", ";
    out += "r" + std::to_string(rs[i]);
  }
  return out;
}

}  // namespace

std::string_view opcode_name(Opcode op) {
  switch (op) {
    case Opcode::LoadConst: return "const";
    case Opcode::LoadParam: return "param";
    case Opcode::LoadIndex: return "index";
    case Opcode::LoadDim: return "dim";
    case Opcode::BinOp: return "binop";
    case Opcode::Neg: return "neg";
    case Opcode::Convert: return "convert";
    case Opcode::Move: return "move";
    case Opcode::CallDirect: return "call";
    case Opcode::MemberRead: return "member";
    case Opcode::MethodCall: return "method";
    case Opcode::Construct: return "construct";
    case Opcode::Jump: return "jump";
    case Opcode::Branch: return "brfalse";
    case Opcode::Return: return "ret";
  }
  return "?";
}

TypedIR lower(Engine& engine, const TypedKernel& tk) {
  TypedIR ir = Lowerer(engine, tk).run();
  verify(engine, ir);
  return ir;
}

void verify(const Engine& engine, const TypedIR& ir) { Verifier(engine, ir).run(); }

std::string dump_ir(const TypedIR& ir) {
  std::map<std::size_t, std::string> at;
  for (const auto& [label, pc] : ir.labels) at[pc] = label;
  std::ostringstream os;
  for (std::size_t pc = 0; pc < ir.code.size(); ++pc) {
    const Instr& in = ir.code[pc];
    if (auto it = at.find(pc); it != at.end()) os << it->second << ": ";
    if (in.dst >= 0) {
      os << 'r' << in.dst << ':' << render_type(ir.registers[static_cast<std::size_t>(in.dst)]) << " = ";
    }
    switch (in.op) {
      case Opcode::LoadConst: os << "const " << literal_text(in.constant); break;
      case Opcode::LoadParam: os << "param " << in.index << ' ' << in.name; break;
      case Opcode::LoadIndex: os << "index r" << in.src[0] << '[' << regs(in.src, 1) << ']'; break;
      case Opcode::LoadDim: os << "dim r" << in.src[0] << (in.index == 0 ? ".rows" : ".cols"); break;
      case Opcode::BinOp: os << binop_name(in.binop) << ' ' << regs(in.src, 0); break;
      case Opcode::Neg: os << "neg r" << in.src[0]; break;
      case Opcode::Convert: os << "convert r" << in.src[0]; break;
      case Opcode::Move: os << "move r" << in.src[0]; break;
      case Opcode::CallDirect:
        os << "call #" << to_underlying(in.callee) << ' ' << in.name << '(' << regs(in.src, 0) << ')';
        break;
      case Opcode::MemberRead: os << "member r" << in.src[0] << '.' << in.name << " [" << in.index << ']'; break;
      case Opcode::MethodCall:
        os << "method #" << to_underlying(in.callee) << ' ' << in.name << " r" << in.src[0] << '(' << regs(in.src, 1)
           << ')';
        break;
      case Opcode::Construct: os << "construct " << in.name; break;
      case Opcode::Jump: os << "jump " << in.label; break;
      case Opcode::Branch: os << "brfalse r" << in.src[0] << ", " << in.label; break;
      case Opcode::Return: os << "ret r" << in.src[0]; break;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace reflexbridge
