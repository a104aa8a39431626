// dyn_runtime.hpp - the boxed slow path: per-call dispatch and a
// tree-walking kernel interpreter.
//
// Every intermediate value is a BoxedValue, every call resolves its target
// (overload ranking, deduction, instantiation-cache lookup) again, and names
// are looked up in hash maps on each use.
#pragma once

#include <optional>
#include <vector>

#include "reflexbridge/ast.hpp"
#include "reflexbridge/engine.hpp"
#include "reflexbridge/value.hpp"

namespace reflexbridge {

/// Maximum nesting of bound calls on either path; deeper calls raise EvalError.
inline constexpr int kMaxCallDepth = 256;

/// Calls a bound function, overload set, function template or method. A
/// method target is invoked on a default-constructed receiver.
BoxedValue dyn_call(Engine& engine, EntityId target, const std::vector<BoxedValue>& args,
                    const std::optional<std::vector<TypeRef>>& explicit_targs = std::nullopt);

/// Calls a method (or method overload set) on `self`.
BoxedValue dyn_call_method(Engine& engine, EntityId target, const InstancePtr& self,
                           const std::vector<BoxedValue>& args);

/// Default construction: scalar members from their initializers, class-typed
/// members constructed recursively.
InstancePtr construct_instance(Engine& engine, const TypeRef& type);

BoxedValue run_kernel_dynamic(Engine& engine, const KernelAST& kernel, const std::vector<BoxedValue>& args);

}  // namespace reflexbridge
