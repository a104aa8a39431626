// parser.hpp - recursive-descent parsers for the declaration subset (.hxx)
// and the kernel language (.krn).
//
// Declarations accepted:
//   - free functions `R f(P p, ...) { [T x = e;]* return e; }` and overloads
//   - function templates with one type parameter
//   - `struct`/`class` with data members (optionally initialized) and methods
//   - class templates with one type parameter
//   - variadic class templates in exactly the recursive-tuple shape:
//       template<class... Ts> struct Tuple;
//       template<class T, class... Rest> struct Tuple<T, Rest...> { ... };
//       template<> struct Tuple<> { ... };
//   - one level of `namespace`
//
// Kernel language:
//   kernel name(a: array2d<f64>, n: i64) -> f64 {
//     let acc = 0.0;
//     S s;
//     for i in 0..a.rows { acc += f(a[i, i]) + s.x; }
//     return acc;
//   }
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "reflexbridge/ast.hpp"
#include "reflexbridge/engine.hpp"

namespace reflexbridge {

/// Parses `source` and registers its declarations into `engine`. Returns the
/// ids of the new top-level entities in declaration order. Nothing is
/// registered if any error is raised.
std::vector<EntityId> parse_translation_unit(Engine& engine, std::string_view source);

/// Parses exactly one kernel.
KernelAST parse_kernel(std::string_view source);

/// Parses a file of zero or more kernels.
std::vector<KernelAST> parse_kernels(std::string_view source);

/// Parses a canonical (or C++-spelled) type and binds names against `engine`.
TypeRef parse_type(std::string_view text, const Engine& engine);

/// Parses a scalar literal such as `7i64`, `1.5f32`, `2.0`, `3`, `true`.
/// Unsuffixed integers are i64, unsuffixed floats f64.
Scalar parse_scalar_literal(std::string_view text);

/// Declaration text for `e`; re-parsing it yields a structurally equal entity.
std::string print_decl(const Engine& engine, EntityId e);

std::string print_expr(const Expr& e);

/// Compares two entities (possibly from different engines) by kind, name,
/// signatures, bodies, template patterns and children. Ids are ignored.
bool entities_equal(const Engine& a, EntityId ea, const Engine& b, EntityId eb);

}  // namespace reflexbridge
