#pragma once

#include "btcalc/tree.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace btcalc {

/// Labeled directed graph re-traversed from the source each cycle to select
/// a controller. At most one outgoing edge per (node, label).
struct DecisionStructure {
    int source = 0;
    std::vector<std::string> labels;          // label names, e.g. {"S","F"}
    std::vector<std::string> node_names;
    std::vector<int> node_refs;               // BT leaf id when compiled, else -1
    std::vector<std::vector<int>> out;        // [node][label] -> target, -1 = no edge

    int node_count() const { return int(node_names.size()); }
    int label_count() const { return int(labels.size()); }
    int edge_count() const;
    void add_node(std::string name, int ref = -1);
    void add_edge(int from, int label, int to);
};

/// DS over the tree's leaves with labels {S, F}: an edge follows where the
/// tick hands over when that leaf reports the label's status. Executing the
/// DS picks the same controller as the tick's active leaf on every running
/// state; on terminal states the walk ends on a leaf reporting the root's
/// status.
DecisionStructure compile_to_ds(const Tree& t);

inline constexpr int kLabelSuccess = 0;
inline constexpr int kLabelFailure = 1;

/// node -> label index, or nullopt when the node's status has no transition.
using StatusOracle = std::function<std::optional<int>(int)>;

/// Walks from the source following returned labels until one has no outgoing
/// edge. A walk longer than the node count means the DS cycles under this
/// oracle.
int execute_ds(const DecisionStructure& ds, const StatusOracle& oracle);

/// The oracle induced by a tree state: leaf S/F map to edge labels, Running
/// stops the walk. Nodes are translated through the DS's leaf references.
StatusOracle tree_oracle(const DecisionStructure& ds, const Tree& t, StateIndex s);

/// execute_ds under the tree oracle, returning the chosen BT leaf id.
int execute_ds_on_state(const DecisionStructure& ds, const Tree& t, StateIndex s);

// ---------------------------------------------------------------------------
// Modules and the modular decomposition (node sets as bitmasks; brute force
// behind a subset-enumeration guard).

inline constexpr int kMaxDsNodes = 14;

using NodeMask = std::uint32_t;

/// All node subsets satisfying the module conditions: the induced subgraph is
/// a DS whose source receives every external in-arc, and any label leaving
/// the set leaves from every member toward one common target.
std::vector<NodeMask> find_modules(const DecisionStructure& ds);

bool is_module(const DecisionStructure& ds, NodeMask mask);

struct Decomposition {
    struct Block {
        NodeMask members = 0;
        bool leaf = false;                   // single node
        DecisionStructure quotient;          // internal blocks only
        std::vector<Block> children;
    };
    Block root;

    void collect_quotients(std::vector<const DecisionStructure*>& out) const;
};

/// Recursive maximal modular partition: partition into maximal proper strong
/// modules, quotient, recurse into multi-node blocks. Ties are broken toward
/// fewer blocks, then lexicographically smallest masks.
Decomposition module_decomposition(const DecisionStructure& ds);

/// Linearly independent undirected cycles plus one:
/// E - V + (components of the underlying undirected multigraph) + 1.
int cyclomatic(const DecisionStructure& ds);

/// Maximum cyclomatic complexity over the quotient graphs of the modular
/// decomposition.
int essential_complexity(const DecisionStructure& ds);

bool is_bt_equivalent(const DecisionStructure& ds);

} // namespace btcalc
