// specializer.hpp - the typing step: overload resolution, deduction, memoized
// template instantiation and whole-kernel type inference.
#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "reflexbridge/ast.hpp"
#include "reflexbridge/engine.hpp"

namespace reflexbridge {

/// A fully resolved call target.
struct CallSignature {
  EntityId callable_id = kNoEntity;  // concrete Function, Method or function Instantiation
  std::vector<TypeRef> param_types;  // excluding the receiver of a method
  TypeRef return_type;
  EntityId origin = kNoEntity;  // overload set or template the target came from, else the target itself

  friend bool operator==(const CallSignature&, const CallSignature&) = default;
};

using NodeTypes = std::unordered_map<const Expr*, TypeRef>;
using CallBindings = std::unordered_map<const Expr*, CallSignature>;

struct TypedKernel {
  KernelAST kernel;  // shares expression nodes with the parsed kernel
  std::vector<TypeRef> param_types;
  TypeRef result_type;
  NodeTypes node_types;
  CallBindings call_bindings;

  const TypeRef& type_of(const Expr& e) const;
  const CallSignature& binding(const Expr& e) const;
};

/// Typing of one concrete function or method body.
struct TypedBody {
  EntityId callable = kNoEntity;
  EntityId self_record = kNoEntity;  // methods only
  Signature signature;
  BodyPtr body;
  NodeTypes node_types;
  CallBindings call_bindings;
};

CallSignature resolve_overload(Engine& engine, EntityId set, const std::vector<TypeRef>& arg_types,
                               const std::optional<std::vector<TypeRef>>& explicit_targs = std::nullopt);

/// Binds the single type parameter of `tmpl` from exact argument types.
std::vector<TypeRef> deduce(const Engine& engine, EntityId tmpl, const std::vector<TypeRef>& arg_types);

/// Memoized instantiation of a class or function template. A cache hit
/// increments cache_hits; a miss instantiates nested types innermost first.
EntityId instantiate(Engine& engine, EntityId tmpl, const std::vector<TypeRef>& targs);

/// Makes sure a record type has its entity, instantiating if needed.
/// Returns the record entity id.
EntityId require_record(Engine& engine, const TypeRef& record);

/// The single call-target selection used by typing and by the dynamic path.
/// `target` may be a function, method, function template, overload set or
/// function instantiation. Increments the resolutions counter.
CallSignature select_callable(Engine& engine, EntityId target, const std::vector<TypeRef>& arg_types,
                              const std::optional<std::vector<TypeRef>>& explicit_targs = std::nullopt);

/// Finds the callee named `name` as seen from the body of `from` (a
/// function, method or instantiation): the enclosing class first, then the
/// enclosing namespace, then the global scope. `from` = kNoEntity looks up
/// `name` as written.
std::optional<EntityId> lookup_callee(const Engine& engine, EntityId from, const std::string& name);

/// Record that owns a method (or method overload child), else kNoEntity.
EntityId owning_record(const Engine& engine, EntityId callable);

TypedKernel type_kernel(Engine& engine, const KernelAST& kernel, const std::vector<TypeRef>& param_types);

/// Types a concrete body once; cached per callable for the engine's lifetime.
const TypedBody& typed_body(Engine& engine, EntityId callable);

/// Initial value of a scalar data member: its constant initializer converted
/// to the member type, or zero.
Scalar member_default(Engine& engine, EntityId data_member);

/// Snapshot of the instantiation statistics. With `reset`, statistics and
/// runtime counters are zeroed afterwards; the instantiation cache is kept.
InstantiationStats stats(Engine& engine, bool reset = false);

}  // namespace reflexbridge
