#include "btcalc/regions.hpp"

#include "btcalc/sweep.hpp"

namespace btcalc {

const char* to_string(ViolationKind k) {
    switch (k) {
    case ViolationKind::TripleOverlap:
        return "triple-overlap";
    case ViolationKind::TripleGap:
        return "triple-gap";
    case ViolationKind::ChildrenOverlap:
        return "children-overlap";
    case ViolationKind::ChildrenGap:
        return "children-gap";
    case ViolationKind::LeafOverlap:
        return "leaf-overlap";
    case ViolationKind::LeafGap:
        return "leaf-gap";
    }
    return "?";
}

std::vector<RegionTriple> compute_status_regions(const Tree& t) {
    const WorldModel& m = t.model();
    std::vector<RegionTriple> out(t.node_count());

    // Children first: ids are preorder, so walking backwards visits children
    // before their parents.
    for (int id = t.node_count() - 1; id >= 0; --id) {
        const Node& n = t.node(id);
        RegionTriple& triple = out[id];
        switch (n.kind) {
        case NodeKind::Condition: {
            triple.success = region_from_predicate(m, n.success);
            triple.failure = ~triple.success;
            triple.running = Region(m);
            break;
        }
        case NodeKind::Leaf: {
            triple.success = region_from_predicate(m, n.success);
            triple.failure = region_from_predicate(m, n.failure);
            triple.running = ~(triple.success | triple.failure);
            break;
        }
        case NodeKind::Sequence: {
            RegionTriple acc = out[n.children[0]];
            for (std::size_t k = 1; k < n.children.size(); ++k) {
                const RegionTriple& c = out[n.children[k]];
                acc.failure = acc.failure | (acc.success & c.failure);
                acc.running = acc.running | (acc.success & c.running);
                acc.success = acc.success & c.success;
            }
            triple = std::move(acc);
            break;
        }
        case NodeKind::Fallback: {
            RegionTriple acc = out[n.children[0]];
            for (std::size_t k = 1; k < n.children.size(); ++k) {
                const RegionTriple& c = out[n.children[k]];
                acc.success = acc.success | (acc.failure & c.success);
                acc.running = acc.running | (acc.failure & c.running);
                acc.failure = acc.failure & c.failure;
            }
            triple = std::move(acc);
            break;
        }
        }
    }
    return out;
}

std::vector<Region> compute_influence_regions(const Tree& t,
                                              const std::vector<RegionTriple>& triples,
                                              const Region* external) {
    const WorldModel& m = t.model();
    std::vector<Region> out(t.node_count());
    out[0] = external ? *external : Region(m, true);

    for (int id = 1; id < t.node_count(); ++id) {
        const Node& n = t.node(id);
        if (n.left_sibling < 0) {
            out[id] = out[n.parent];
            continue;
        }
        const Node& parent = t.node(n.parent);
        const RegionTriple& elder = triples[n.left_sibling];
        out[id] = out[n.left_sibling] &
                  (parent.kind == NodeKind::Sequence ? elder.success : elder.failure);
    }
    return out;
}

std::vector<Region> compute_operating_regions(const Tree& t,
                                              const std::vector<RegionTriple>& triples,
                                              const std::vector<Region>& influence) {
    std::vector<Region> out(t.node_count());
    for (int id = 0; id < t.node_count(); ++id)
        out[id] = influence[id] & triples[id].running;
    return out;
}

RegionMap compute_regions(const Tree& t, const Region* external) {
    RegionMap map;
    map.triples = compute_status_regions(t);
    map.influence = compute_influence_regions(t, map.triples, external);
    map.operating = compute_operating_regions(t, map.triples, map.influence);
    return map;
}

PartitionReport verify_partition(const Tree& t) { return verify_partition(t, compute_regions(t)); }

PartitionReport verify_partition(const Tree& t, const RegionMap& map) {
    PartitionReport report;
    const Region full(t.model(), true);

    for (int id = 0; id < t.node_count(); ++id) {
        const RegionTriple& tri = map.triples[id];
        const Region sf = tri.success & tri.failure;
        const Region sr = tri.success & tri.running;
        const Region fr = tri.failure & tri.running;
        if (!sf.empty())
            report.violations.push_back({ViolationKind::TripleOverlap, id, id, *sf.first()});
        if (!sr.empty())
            report.violations.push_back({ViolationKind::TripleOverlap, id, id, *sr.first()});
        if (!fr.empty())
            report.violations.push_back({ViolationKind::TripleOverlap, id, id, *fr.first()});
        const Region gap = full - (tri.success | tri.failure | tri.running);
        if (!gap.empty())
            report.violations.push_back({ViolationKind::TripleGap, id, -1, *gap.first()});
    }

    for (int id = 0; id < t.node_count(); ++id) {
        const Node& n = t.node(id);
        if (!n.is_interior())
            continue;
        Region cover(t.model());
        for (std::size_t a = 0; a < n.children.size(); ++a) {
            for (std::size_t b = a + 1; b < n.children.size(); ++b) {
                const Region overlap = map.operating[n.children[a]] & map.operating[n.children[b]];
                if (!overlap.empty())
                    report.violations.push_back({ViolationKind::ChildrenOverlap, n.children[a],
                                                 n.children[b], *overlap.first()});
            }
            cover |= map.operating[n.children[a]];
        }
        if (!(cover == map.operating[id])) {
            const Region diff =
                (cover - map.operating[id]) | (map.operating[id] - cover);
            report.violations.push_back({ViolationKind::ChildrenGap, id, -1, *diff.first()});
        }
    }

    const auto leaves = t.leaves();
    Region leaf_cover(t.model());
    for (std::size_t a = 0; a < leaves.size(); ++a) {
        for (std::size_t b = a + 1; b < leaves.size(); ++b) {
            const Region overlap = map.operating[leaves[a]] & map.operating[leaves[b]];
            if (!overlap.empty())
                report.violations.push_back(
                    {ViolationKind::LeafOverlap, leaves[a], leaves[b], *overlap.first()});
        }
        leaf_cover |= map.operating[leaves[a]];
    }
    if (!(leaf_cover == map.operating[0])) {
        const Region diff = (leaf_cover - map.operating[0]) | (map.operating[0] - leaf_cover);
        report.violations.push_back({ViolationKind::LeafGap, 0, -1, *diff.first()});
    }

    for (const auto& v : report.violations) {
        switch (v.kind) {
        case ViolationKind::TripleOverlap:
        case ViolationKind::TripleGap:
            report.triples_ok = false;
            break;
        case ViolationKind::ChildrenOverlap:
        case ViolationKind::ChildrenGap:
            report.parent_child_ok = false;
            break;
        case ViolationKind::LeafOverlap:
        case ViolationKind::LeafGap:
            report.leaf_ok = false;
            break;
        }
    }
    return report;
}

LevelCheck validate_level(const Tree&, const RegionMap& map, const std::vector<int>& level) {
    LevelCheck check;
    Region cover = map.triples[0].success | map.triples[0].failure;
    for (std::size_t a = 0; a < level.size(); ++a) {
        for (std::size_t b = a + 1; b < level.size(); ++b) {
            const Region overlap = map.operating[level[a]] & map.operating[level[b]];
            if (!overlap.empty())
                return {false, true, *overlap.first()};
        }
        cover |= map.operating[level[a]];
    }
    const Region uncovered = ~cover;
    if (!uncovered.empty())
        return {false, false, *uncovered.first()};
    return check;
}

} // namespace btcalc
