#include "btcalc/dot.hpp"

#include "btcalc/dsl.hpp"

#include <sstream>

namespace btcalc {

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out;
}

} // namespace

std::string export_tree_dot(const Tree& t) {
    std::ostringstream out;
    out << "digraph bt {\n";
    out << "  node [fontname=\"Helvetica\"];\n";
    for (const auto& n : t.nodes()) {
        std::string label;
        std::string shape = "box";
        switch (n.kind) {
        case NodeKind::Sequence:
            label = "\xe2\x86\x92"; // arrow
            break;
        case NodeKind::Fallback:
            label = "?";
            break;
        case NodeKind::Condition:
            label = predicate_to_string(t.model(), n.success);
            shape = "ellipse";
            break;
        case NodeKind::Leaf:
            label = t.model().actions()[n.action].id;
            break;
        }
        if (!n.name.empty())
            label = n.name + "\\n(" + std::to_string(n.id) + ") " + label;
        else
            label = "(" + std::to_string(n.id) + ") " + label;
        out << "  n" << n.id << " [label=\"" << dot_escape(label) << "\", shape=" << shape;
        if (n.double_stroked)
            out << ", peripheries=2";
        out << "];\n";
    }
    for (const auto& n : t.nodes())
        for (int c : n.children)
            out << "  n" << n.id << " -> n" << c << ";\n";
    out << "}\n";
    return out.str();
}

std::string export_ds_dot(const DecisionStructure& ds) {
    std::ostringstream out;
    out << "digraph ds {\n";
    out << "  node [shape=box, fontname=\"Helvetica\"];\n";
    for (int v = 0; v < ds.node_count(); ++v) {
        out << "  n" << v << " [label=\"" << dot_escape(ds.node_names[v]) << "\"";
        if (v == ds.source)
            out << ", penwidth=2";
        out << "];\n";
    }
    for (int v = 0; v < ds.node_count(); ++v)
        for (int label = 0; label < ds.label_count(); ++label)
            if (ds.out[v][label] >= 0)
                out << "  n" << v << " -> n" << ds.out[v][label] << " [label=\""
                    << dot_escape(ds.labels[label]) << "\"];\n";
    out << "}\n";
    return out.str();
}

namespace {

void block_dot(const Decomposition::Block& block, std::ostream& out, int& cluster, int depth) {
    const std::string pad(std::size_t(depth) * 2, ' ');
    if (block.leaf) {
        out << pad << "leaf_" << block.members << " [label=\"" << block.members << "\"];\n";
        return;
    }
    const int self = cluster++;
    out << pad << "subgraph cluster_" << self << " {\n";
    out << pad << "  label=\"quotient " << self << "\";\n";
    for (int v = 0; v < block.quotient.node_count(); ++v)
        out << pad << "  q" << self << "_" << v << " [label=\""
            << dot_escape(block.quotient.node_names[v]) << "\"];\n";
    for (int v = 0; v < block.quotient.node_count(); ++v)
        for (int label = 0; label < block.quotient.label_count(); ++label)
            if (block.quotient.out[v][label] >= 0)
                out << pad << "  q" << self << "_" << v << " -> q" << self << "_"
                    << block.quotient.out[v][label] << " [label=\""
                    << dot_escape(block.quotient.labels[label]) << "\"];\n";
    for (const auto& child : block.children)
        block_dot(child, out, cluster, depth + 1);
    out << pad << "}\n";
}

} // namespace

std::string export_decomposition_dot(const Decomposition& d) {
    std::ostringstream out;
    out << "digraph decomposition {\n";
    out << "  node [shape=box, fontname=\"Helvetica\"];\n";
    int cluster = 0;
    block_dot(d.root, out, cluster, 1);
    out << "}\n";
    return out.str();
}

} // namespace btcalc
