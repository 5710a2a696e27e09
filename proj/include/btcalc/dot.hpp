#pragma once

#include "btcalc/decision.hpp"
#include "btcalc/tree.hpp"

#include <string>

namespace btcalc {

/// Deterministic DOT rendering: nodes in preorder-id order, sequence nodes
/// labeled with an arrow, fallbacks with a question mark, conditions as
/// ovals; double-stroked nodes get doubled peripheries.
std::string export_tree_dot(const Tree& t);

std::string export_ds_dot(const DecisionStructure& ds);

std::string export_decomposition_dot(const Decomposition& d);

} // namespace btcalc
