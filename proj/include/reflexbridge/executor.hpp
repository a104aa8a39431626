// executor.hpp - unboxed evaluation of verified IR.
//
// Loading resolves every call target once, to a closure compiled from the
// callee's typed body and cached per callable id in the engine. Running uses
// a flat register file of untagged slots.
#pragma once

#include <memory>
#include <vector>

#include "reflexbridge/lowerer.hpp"
#include "reflexbridge/value.hpp"

namespace reflexbridge {

struct CompiledFunction;
struct RecordLayout;

class LoadedKernel {
 public:
  /// Verifies `ir` and binds its call sites. `engine` must outlive the kernel.
  LoadedKernel(Engine& engine, const TypedIR& ir);
  ~LoadedKernel();
  LoadedKernel(LoadedKernel&&) noexcept;
  LoadedKernel& operator=(LoadedKernel&&) noexcept;

  /// Arguments must match the parameter types exactly (TagMismatch otherwise).
  NativeValue run(const std::vector<NativeValue>& args) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// load followed by run.
NativeValue execute(Engine& engine, const TypedIR& ir, const std::vector<NativeValue>& args);

}  // namespace reflexbridge
