#pragma once

#include "c4v/tree.hpp"
#include "c4v/types.hpp"

namespace c4v {

// Two instances are treated as identical when every pixel differs by less
// than this and the labels agree; prevents infinite-depth chains on
// duplicate images.
inline constexpr double kIdenticalEps = 1e-9;

/// Incrementally absorb one instance: categorize it down the tree, choosing
/// at each branch the restructuring operator (add / create / merge / split)
/// that maximizes information-theoretic category utility, updating
/// statistics along the path.
void ifit(Tree& tree, const Instance& instance);

}  // namespace c4v
