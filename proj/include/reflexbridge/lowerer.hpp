// lowerer.hpp - typed register IR for specialized kernels.
//
// Every register has one type fixed at lowering time; the verifier checks
// each instruction's operand and result types before anything runs. There
// are no boxing instructions: values stay native from entry to return.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "reflexbridge/engine.hpp"
#include "reflexbridge/specializer.hpp"

namespace reflexbridge {

enum class Opcode : std::uint8_t {
  LoadConst,   // dst = constant
  LoadParam,   // dst = param[index]
  LoadIndex,   // dst = src0[src1, src2]
  LoadDim,     // dst = src0.rows (index 0) or .cols (index 1)
  BinOp,       // dst = src0 op src1
  Neg,         // dst = -src0
  Convert,     // dst = dst_type(src0)
  Move,        // dst = src0
  CallDirect,  // dst = callee(src...)
  MemberRead,  // dst = src0.slots[index]
  MethodCall,  // dst = src0.callee(src1...)
  Construct,   // dst = new record of dst's type
  Jump,        // goto label
  Branch,      // if !src0 goto label
  Return,      // return src0
};

std::string_view opcode_name(Opcode op);

struct Instr {
  Opcode op = Opcode::Return;
  int dst = -1;
  std::vector<int> src;
  Scalar constant;
  BinOp binop = BinOp::Add;
  int index = 0;
  EntityId callee = kNoEntity;
  std::string label;
  std::string name;  // callee or member name, for listings
};

struct TypedIR {
  std::string kernel;
  std::vector<std::string> param_names;
  std::vector<TypeRef> param_types;
  TypeRef result_type;
  std::vector<TypeRef> registers;
  std::vector<Instr> code;
  std::map<std::string, std::size_t> labels;
};

/// Translates a typed kernel into verified IR. Throws LoweringError if the
/// typed kernel is inconsistent.
TypedIR lower(Engine& engine, const TypedKernel& tk);

/// Type-checks every instruction; throws LoweringError on the first violation.
void verify(const Engine& engine, const TypedIR& ir);

/// One instruction per line, `L<n>: ` before instructions that are jump targets.
std::string dump_ir(const TypedIR& ir);

}  // namespace reflexbridge
