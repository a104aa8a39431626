// detail.hpp - helpers shared between library translation units.
#pragma once

#include <string>
#include <vector>

#include "reflexbridge/engine.hpp"

namespace reflexbridge {

/// Registers data members and methods of a substituted class body under `scope`.
void register_class_members(Engine& engine, const std::vector<MemberDecl>& members, const std::string& scope,
                            EntityId parent);

}  // namespace reflexbridge
