#include "btcalc/decision.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace btcalc {

int DecisionStructure::edge_count() const {
    int n = 0;
    for (const auto& row : out)
        for (int target : row)
            n += target >= 0;
    return n;
}

void DecisionStructure::add_node(std::string name, int ref) {
    node_names.push_back(std::move(name));
    node_refs.push_back(ref);
    out.emplace_back(labels.size(), -1);
}

void DecisionStructure::add_edge(int from, int label, int to) {
    if (out.at(from).at(label) >= 0)
        throw Error("node already has an outgoing edge for this label");
    out[from][label] = to;
}

namespace {

int leftmost_leaf(const Tree& t, int id) {
    while (t.node(id).is_interior())
        id = t.node(id).children.front();
    return id;
}

/// Where the tick hands over when subtree `id` reports `status`: the next
/// sibling's leftmost leaf, or -1 when the status reaches the root.
int handover(const Tree& t, int id, Status status) {
    while (t.node(id).parent != -1) {
        const Node& parent = t.node(t.node(id).parent);
        const bool advances = (parent.kind == NodeKind::Sequence && status == Status::Success) ||
                              (parent.kind == NodeKind::Fallback && status == Status::Failure);
        if (advances) {
            const auto it = std::find(parent.children.begin(), parent.children.end(), id);
            if (it + 1 != parent.children.end())
                return leftmost_leaf(t, *(it + 1));
        }
        id = parent.id;
    }
    return -1;
}

} // namespace

DecisionStructure compile_to_ds(const Tree& t) {
    DecisionStructure ds;
    ds.labels = {"S", "F"};

    const auto leaves = t.leaves();
    std::vector<int> ds_index(t.node_count(), -1);
    for (int leaf : leaves) {
        ds_index[leaf] = ds.node_count();
        ds.add_node(auto_name(t, leaf), leaf);
    }
    ds.source = ds_index[leftmost_leaf(t, 0)];

    for (int leaf : leaves) {
        const int s_target = handover(t, leaf, Status::Success);
        const int f_target = handover(t, leaf, Status::Failure);
        if (s_target >= 0)
            ds.add_edge(ds_index[leaf], kLabelSuccess, ds_index[s_target]);
        if (f_target >= 0)
            ds.add_edge(ds_index[leaf], kLabelFailure, ds_index[f_target]);
    }
    return ds;
}

int execute_ds(const DecisionStructure& ds, const StatusOracle& oracle) {
    int node = ds.source;
    for (int hops = 0; hops <= ds.node_count(); ++hops) {
        const std::optional<int> label = oracle(node);
        if (!label)
            return node;
        const int next = ds.out[node][*label];
        if (next < 0)
            return node;
        node = next;
    }
    throw Error("decision structure walk exceeded the node count (cycle under this oracle)");
}

StatusOracle tree_oracle(const DecisionStructure& ds, const Tree& t, StateIndex s) {
    return [&ds, &t, s](int ds_node) -> std::optional<int> {
        const Node& n = t.node(ds.node_refs[ds_node]);
        if (eval_predicate(t.model(), n.success, s))
            return kLabelSuccess;
        if (eval_predicate(t.model(), n.failure, s))
            return kLabelFailure;
        return std::nullopt;
    };
}

int execute_ds_on_state(const DecisionStructure& ds, const Tree& t, StateIndex s) {
    return ds.node_refs[execute_ds(ds, tree_oracle(ds, t, s))];
}

// ---------------------------------------------------------------------------

namespace {

bool reaches_all(const DecisionStructure& ds, NodeMask mask, int start) {
    NodeMask seen = NodeMask(1) << start;
    std::vector<int> stack{start};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int label = 0; label < ds.label_count(); ++label) {
            const int w = ds.out[v][label];
            if (w < 0 || !((mask >> w) & 1) || ((seen >> w) & 1))
                continue;
            seen |= NodeMask(1) << w;
            stack.push_back(w);
        }
    }
    return seen == mask;
}

} // namespace

bool is_module(const DecisionStructure& ds, NodeMask mask) {
    if (mask == 0)
        return false;
    const int n = ds.node_count();

    // Entry point: the global source when inside, else the common target of
    // external in-arcs.
    int entry = -1;
    if ((mask >> ds.source) & 1) {
        entry = ds.source;
    } else {
        for (int v = 0; v < n; ++v) {
            if ((mask >> v) & 1)
                continue;
            for (int label = 0; label < ds.label_count(); ++label) {
                const int w = ds.out[v][label];
                if (w >= 0 && ((mask >> w) & 1)) {
                    if (entry != -1 && entry != w)
                        return false;
                    entry = w;
                }
            }
        }
        if (entry < 0)
            return false; // unreachable slice
    }
    // External in-arcs must all hit the entry.
    for (int v = 0; v < n; ++v) {
        if ((mask >> v) & 1)
            continue;
        for (int label = 0; label < ds.label_count(); ++label) {
            const int w = ds.out[v][label];
            if (w >= 0 && ((mask >> w) & 1) && w != entry)
                return false;
        }
    }
    if (!reaches_all(ds, mask, entry))
        return false;

    // Label-consistent exits: if label r leaves the set anywhere, it leaves
    // everywhere, toward one shared target.
    for (int label = 0; label < ds.label_count(); ++label) {
        int exit_target = -1;
        bool exits = false;
        for (int v = 0; v < n; ++v) {
            if (!((mask >> v) & 1))
                continue;
            const int w = ds.out[v][label];
            if (w >= 0 && !((mask >> w) & 1)) {
                if (exits && exit_target != w)
                    return false;
                exits = true;
                exit_target = w;
            }
        }
        if (!exits)
            continue;
        for (int v = 0; v < n; ++v) {
            if (!((mask >> v) & 1))
                continue;
            const int w = ds.out[v][label];
            if (w < 0)
                return false;
            if (!((mask >> w) & 1) && w != exit_target)
                return false;
        }
    }
    return true;
}

std::vector<NodeMask> find_modules(const DecisionStructure& ds) {
    const int n = ds.node_count();
    if (n > kMaxDsNodes)
        throw Error("decision structure too large for subset enumeration (guard: " +
                    std::to_string(kMaxDsNodes) + " nodes)");
    std::vector<NodeMask> out;
    const NodeMask full = NodeMask((std::uint64_t(1) << n) - 1);
    for (NodeMask mask = 1; mask <= full; ++mask)
        if (is_module(ds, mask))
            out.push_back(mask);
    return out;
}

namespace {

bool overlaps(NodeMask a, NodeMask b) {
    const NodeMask common = a & b;
    return common != 0 && common != a && common != b;
}

std::vector<NodeMask> strong_modules(const std::vector<NodeMask>& modules) {
    std::vector<NodeMask> out;
    for (NodeMask a : modules) {
        bool strong = true;
        for (NodeMask b : modules)
            if (overlaps(a, b)) {
                strong = false;
                break;
            }
        if (strong)
            out.push_back(a);
    }
    return out;
}

/// Partition of `full` into proper strong modules with the fewest blocks,
/// lexicographically smallest block masks as the tie break. The singleton
/// modules guarantee a partition exists.
std::vector<NodeMask> best_partition(const std::vector<NodeMask>& strong, NodeMask full) {
    std::vector<NodeMask> proper;
    for (NodeMask m : strong)
        if (m != full)
            proper.push_back(m);
    std::sort(proper.begin(), proper.end());

    // Exact cover by DP over submasks: blocks[m] = chosen block covering the
    // lowest unset... here lowest set bit of m.
    std::vector<int> best(full + 1, -1);
    std::vector<NodeMask> choice(full + 1, 0);
    best[0] = 0;
    for (NodeMask m = 1; m <= full; ++m) {
        const int low = std::countr_zero(m);
        for (NodeMask block : proper) {
            if (!((block >> low) & 1) || (block & ~m))
                continue;
            const NodeMask rest = m & ~block;
            if (best[rest] < 0)
                continue;
            if (best[m] < 0 || best[rest] + 1 < best[m] ||
                (best[rest] + 1 == best[m] && block < choice[m])) {
                best[m] = best[rest] + 1;
                choice[m] = block;
            }
        }
    }
    std::vector<NodeMask> blocks;
    for (NodeMask m = full; m;) {
        blocks.push_back(choice[m]);
        m &= ~choice[m];
    }
    std::sort(blocks.begin(), blocks.end());
    return blocks;
}

std::vector<NodeMask> maximal_proper_strong(const std::vector<NodeMask>& strong, NodeMask full) {
    std::vector<NodeMask> proper;
    for (NodeMask m : strong)
        if (m != full)
            proper.push_back(m);
    std::vector<NodeMask> maximal;
    for (NodeMask a : proper) {
        bool is_max = true;
        for (NodeMask b : proper)
            if (a != b && (a & b) == a) {
                is_max = false;
                break;
            }
        if (is_max)
            maximal.push_back(a);
    }
    std::sort(maximal.begin(), maximal.end());
    return maximal;
}

bool is_partition(const std::vector<NodeMask>& blocks, NodeMask full) {
    NodeMask acc = 0;
    for (NodeMask b : blocks) {
        if (acc & b)
            return false;
        acc |= b;
    }
    return acc == full;
}

DecisionStructure induced_ds(const DecisionStructure& ds, NodeMask mask, int entry) {
    DecisionStructure sub;
    sub.labels = ds.labels;
    std::vector<int> index(ds.node_count(), -1);
    for (int v = 0; v < ds.node_count(); ++v) {
        if (!((mask >> v) & 1))
            continue;
        index[v] = sub.node_count();
        sub.add_node(ds.node_names[v], ds.node_refs[v]);
    }
    for (int v = 0; v < ds.node_count(); ++v) {
        if (!((mask >> v) & 1))
            continue;
        for (int label = 0; label < ds.label_count(); ++label) {
            const int w = ds.out[v][label];
            if (w >= 0 && ((mask >> w) & 1))
                sub.add_edge(index[v], label, index[w]);
        }
    }
    sub.source = index[entry];
    return sub;
}

int block_entry(const DecisionStructure& ds, NodeMask mask) {
    if ((mask >> ds.source) & 1)
        return ds.source;
    for (int v = 0; v < ds.node_count(); ++v) {
        if ((mask >> v) & 1)
            continue;
        for (int label = 0; label < ds.label_count(); ++label) {
            const int w = ds.out[v][label];
            if (w >= 0 && ((mask >> w) & 1))
                return w;
        }
    }
    throw Error("block has no entry point");
}

DecisionStructure quotient_ds(const DecisionStructure& ds, const std::vector<NodeMask>& blocks) {
    DecisionStructure q;
    q.labels = ds.labels;
    std::vector<int> block_of(ds.node_count(), -1);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (int v = 0; v < ds.node_count(); ++v)
            if ((blocks[b] >> v) & 1)
                block_of[v] = int(b);
        std::string name;
        for (int v = 0; v < ds.node_count(); ++v)
            if ((blocks[b] >> v) & 1)
                name += (name.empty() ? "" : "+") + ds.node_names[v];
        q.add_node(std::move(name));
    }
    q.source = block_of[ds.source];
    for (int v = 0; v < ds.node_count(); ++v)
        for (int label = 0; label < ds.label_count(); ++label) {
            const int w = ds.out[v][label];
            if (w < 0 || block_of[v] == block_of[w])
                continue;
            if (q.out[block_of[v]][label] < 0)
                q.add_edge(block_of[v], label, block_of[w]);
            else if (q.out[block_of[v]][label] != block_of[w])
                throw Error("quotient is not a decision structure (label fans out)");
        }
    return q;
}

Decomposition::Block decompose(const DecisionStructure& ds, NodeMask members) {
    Decomposition::Block block;
    block.members = members;
    if (ds.node_count() == 1) {
        block.leaf = true;
        return block;
    }

    const auto modules = find_modules(ds);
    const auto strong = strong_modules(modules);
    const NodeMask full = NodeMask((std::uint64_t(1) << ds.node_count()) - 1);
    std::vector<NodeMask> blocks = maximal_proper_strong(strong, full);
    if (!is_partition(blocks, full))
        blocks = best_partition(strong, full);

    block.quotient = quotient_ds(ds, blocks);
    for (NodeMask b : blocks) {
        // Map the block's member mask back to the original node set.
        NodeMask original = 0;
        int idx = 0;
        for (int v = 0; v < kMaxDsNodes + 1; ++v)
            if ((members >> v) & 1) {
                if ((b >> idx) & 1)
                    original |= NodeMask(1) << v;
                ++idx;
            }
        block.children.push_back(
            decompose(induced_ds(ds, b, block_entry(ds, b)), original));
    }
    return block;
}

} // namespace

Decomposition module_decomposition(const DecisionStructure& ds) {
    if (ds.node_count() > kMaxDsNodes)
        throw Error("decision structure too large for subset enumeration (guard: " +
                    std::to_string(kMaxDsNodes) + " nodes)");
    Decomposition d;
    const NodeMask full = NodeMask((std::uint64_t(1) << ds.node_count()) - 1);
    d.root = decompose(ds, full);
    return d;
}

void Decomposition::collect_quotients(std::vector<const DecisionStructure*>& out) const {
    std::vector<const Block*> stack{&root};
    while (!stack.empty()) {
        const Block* b = stack.back();
        stack.pop_back();
        if (!b->leaf)
            out.push_back(&b->quotient);
        for (const auto& c : b->children)
            stack.push_back(&c);
    }
}

int cyclomatic(const DecisionStructure& ds) {
    const int n = ds.node_count();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (parent[v] != v)
            v = parent[v] = parent[parent[v]];
        return v;
    };
    int edges = 0;
    for (int v = 0; v < n; ++v)
        for (int label = 0; label < ds.label_count(); ++label) {
            const int w = ds.out[v][label];
            if (w < 0)
                continue;
            ++edges; // parallel edges and self loops all count
            parent[find(v)] = find(w);
        }
    int components = 0;
    for (int v = 0; v < n; ++v)
        components += find(v) == v;
    return edges - n + components + 1;
}

int essential_complexity(const DecisionStructure& ds) {
    if (ds.node_count() == 1)
        return 1;
    const Decomposition d = module_decomposition(ds);
    std::vector<const DecisionStructure*> quotients;
    d.collect_quotients(quotients);
    int best = 1;
    for (const auto* q : quotients)
        best = std::max(best, cyclomatic(*q));
    return best;
}

bool is_bt_equivalent(const DecisionStructure& ds) { return essential_complexity(ds) == 1; }

} // namespace btcalc
