#pragma once

#include "btcalc/cbf.hpp"
#include "btcalc/expr.hpp"
#include "btcalc/model.hpp"
#include "btcalc/tree.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace btcalc {

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::string message;
    int line = 0; // 1-based
    int col = 0;  // 1-based

    std::string render() const;
};

struct TreeDecl {
    std::string name;
    NodeSpec root;

    bool operator==(const TreeDecl&) const = default;
};

struct GoalsDecl {
    std::string name;
    std::vector<Predicate> goals;

    bool operator==(const GoalsDecl&) const = default;
};

struct CheckDecl {
    std::string name;
    std::string tree;
    std::vector<int> level;    // node ids; empty = all leaves
    std::vector<int> labeling; // node ids in label order; empty = level order
    std::optional<Predicate> cbar;

    bool operator==(const CheckDecl&) const = default;
};

struct CbfScenario {
    std::string name;
    int state_dim = 0;
    int control_dim = 0;
    std::vector<double> lo, hi;
    std::vector<Expr> dynamics; // state_dim expressions, affine in controls
    std::vector<Expr> barriers; // priority order
    double alpha = 1.0;
    std::vector<Expr> nominal;  // control_dim expressions over the state
    std::vector<double> start;
};

bool scenario_equal(const CbfScenario& a, const CbfScenario& b);

/// One model per document; every other item resolves against it.
struct Document {
    std::shared_ptr<WorldModel> model;
    std::string model_name;
    std::vector<TreeDecl> trees;
    std::vector<GoalsDecl> goals;
    std::vector<CheckDecl> checks;
    std::vector<CbfScenario> cbfs;

    const TreeDecl* find_tree(const std::string& name) const;
    const GoalsDecl* find_goals(const std::string& name) const;
    const CheckDecl* find_check(const std::string& name) const;
    const CbfScenario* find_cbf(const std::string& name) const;
};

struct ParseResult {
    Document doc;
    std::vector<Diagnostic> diagnostics;

    bool ok() const {
        for (const auto& d : diagnostics)
            if (d.severity == Diagnostic::Severity::Error)
                return false;
        return true;
    }
};

/// Never throws: lexical, syntactic and resolution problems come back as
/// spanned diagnostics; the document holds whatever parsed cleanly.
ParseResult parse(std::string_view text);

/// Canonical form: model, then trees, goals, checks, cbf scenarios.
/// parse(serialize(d)) is structurally equal to d, and serialize is a fixed
/// point over its own output.
std::string serialize(const Document& doc);

bool structurally_equal(const Document& a, const Document& b);

std::string predicate_to_string(const WorldModel& m, const Predicate& p);

/// Resolves a parsed tree into an analyzed Tree over the document's model.
Tree build_tree(const Document& doc, const std::string& tree_name);

/// Instantiates the evaluable control-affine problem; rejects dynamics that
/// fail an affineness spot check.
CbfProblem build_cbf_problem(const CbfScenario& scenario);

} // namespace btcalc
