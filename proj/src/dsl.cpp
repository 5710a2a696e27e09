#include "btcalc/dsl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace btcalc {

std::string Diagnostic::render() const {
    std::ostringstream out;
    out << line << ":" << col << ": "
        << (severity == Severity::Error ? "error: " : "warning: ") << message;
    return out.str();
}

namespace {

struct Token {
    enum Kind { Ident, Int, Float, Str, Punct, End } kind = End;
    std::string text;
    double num = 0;
    long long int_val = 0;
    int line = 1, col = 1;
};

class Lexer {
public:
    Lexer(std::string_view src, std::vector<Diagnostic>& diags) : src_(src), diags_(diags) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            if (pos_ >= src_.size()) {
                out.push_back({Token::End, "", 0, 0, line_, col_});
                return out;
            }
            const char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                out.push_back(ident());
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                out.push_back(number());
            } else if (c == '"') {
                out.push_back(string_token());
            } else {
                out.push_back(punct());
            }
        }
    }

private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n')
                    advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                return;
            }
        }
    }

    Token ident() {
        Token t{Token::Ident, "", 0, 0, line_, col_};
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            t.text += src_[pos_];
            advance();
        }
        return t;
    }

    Token number() {
        Token t{Token::Int, "", 0, 0, line_, col_};
        bool is_float = false;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                t.text += c;
                advance();
            } else if (c == '.' && pos_ + 1 < src_.size() &&
                       std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
                is_float = true;
                t.text += c;
                advance();
            } else if ((c == 'e' || c == 'E') && pos_ + 1 < src_.size() &&
                       (std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) ||
                        src_[pos_ + 1] == '-' || src_[pos_ + 1] == '+')) {
                is_float = true;
                t.text += c;
                advance();
                if (src_[pos_] == '-' || src_[pos_] == '+') {
                    t.text += src_[pos_];
                    advance();
                }
            } else {
                break;
            }
        }
        try {
            if (is_float) {
                t.kind = Token::Float;
                t.num = std::stod(t.text);
            } else {
                t.int_val = std::stoll(t.text);
                t.num = double(t.int_val);
            }
        } catch (const std::exception&) {
            diags_.push_back({Diagnostic::Severity::Error, "bad numeric literal '" + t.text + "'",
                              t.line, t.col});
            t.kind = Token::Int;
            t.int_val = 0;
        }
        return t;
    }

    Token string_token() {
        Token t{Token::Str, "", 0, 0, line_, col_};
        advance(); // opening quote
        while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') {
            t.text += src_[pos_];
            advance();
        }
        if (pos_ < src_.size() && src_[pos_] == '"')
            advance();
        else
            diags_.push_back(
                {Diagnostic::Severity::Error, "unterminated string literal", t.line, t.col});
        return t;
    }

    Token punct() {
        Token t{Token::Punct, "", 0, 0, line_, col_};
        const char c = src_[pos_];
        advance();
        t.text = std::string(1, c);
        auto two = [&](char next, const char* joined) {
            if (pos_ < src_.size() && src_[pos_] == next) {
                advance();
                t.text = joined;
            }
        };
        switch (c) {
        case ':':
            two('=', ":=");
            break;
        case '=':
            two('=', "==");
            break;
        case '&':
            two('&', "&&");
            break;
        case '|':
            two('|', "||");
            break;
        default:
            break;
        }
        if (std::string("{}()[];,:=!+-*^&|").find(c) == std::string::npos)
            diags_.push_back({Diagnostic::Severity::Error,
                              "unexpected character '" + std::string(1, c) + "'", t.line, t.col});
        return t;
    }

    std::string_view src_;
    std::vector<Diagnostic>& diags_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

struct ParseBail {}; // internal: unwound to the item level for recovery

class Parser {
public:
    Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diags)
        : tokens_(std::move(tokens)), diags_(diags) {}

    Document run() {
        while (!at_end()) {
            const Token& t = peek();
            try {
                if (t.kind != Token::Ident) {
                    error_here("expected a top-level item (model, action, tree, goals, check, cbf)");
                    throw ParseBail{};
                }
                if (t.text == "model")
                    parse_model();
                else if (t.text == "action")
                    parse_action();
                else if (t.text == "tree")
                    parse_tree();
                else if (t.text == "goals")
                    parse_goals();
                else if (t.text == "check")
                    parse_check();
                else if (t.text == "cbf")
                    parse_cbf();
                else {
                    error_here("unknown item '" + t.text + "'");
                    throw ParseBail{};
                }
            } catch (const ParseBail&) {
                recover();
            }
        }
        finish_model();
        return std::move(doc_);
    }

private:
    bool at_end() const { return tokens_[pos_].kind == Token::End; }
    const Token& peek(int ahead = 0) const {
        return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
    }
    const Token& take() { return tokens_[at_end() ? pos_ : pos_++]; }

    void error_here(const std::string& message) {
        const Token& t = peek();
        diags_.push_back({Diagnostic::Severity::Error, message, t.line, t.col});
    }

    [[noreturn]] void fail(const std::string& message) {
        error_here(message);
        throw ParseBail{};
    }

    void recover() {
        static const char* tops[] = {"model", "action", "tree", "goals", "check", "cbf"};
        while (!at_end()) {
            const Token& t = peek();
            if (t.kind == Token::Ident)
                for (const char* k : tops)
                    if (t.text == k)
                        return;
            ++pos_;
        }
    }

    bool accept_punct(const char* p) {
        if (peek().kind == Token::Punct && peek().text == p) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_punct(const char* p) {
        if (!accept_punct(p))
            fail(std::string("expected '") + p + "'");
    }

    std::string expect_ident(const char* what) {
        if (peek().kind != Token::Ident)
            fail(std::string("expected ") + what);
        return take().text;
    }

    void expect_keyword(const char* kw) {
        if (peek().kind != Token::Ident || peek().text != kw)
            fail(std::string("expected '") + kw + "'");
        ++pos_;
    }

    bool accept_keyword(const char* kw) {
        if (peek().kind == Token::Ident && peek().text == kw) {
            ++pos_;
            return true;
        }
        return false;
    }

    long long expect_int() {
        if (peek().kind != Token::Int)
            fail("expected an integer");
        return take().int_val;
    }

    double expect_number() {
        bool negative = false;
        if (peek().kind == Token::Punct && peek().text == "-") {
            ++pos_;
            negative = true;
        }
        if (peek().kind != Token::Int && peek().kind != Token::Float)
            fail("expected a number");
        const double v = take().num;
        return negative ? -v : v;
    }

    WorldModel& model_for_edit() {
        if (!building_)
            fail("no model declared yet");
        return *building_;
    }

    const WorldModel& model_for_read() {
        if (!building_)
            fail("no model declared yet");
        return *building_;
    }

    void finish_model() {
        if (!building_)
            return;
        try {
            if (!building_->finalized())
                building_->finalize();
        } catch (const Error& e) {
            diags_.push_back({Diagnostic::Severity::Error, e.what(), 1, 1});
        }
        doc_.model = building_;
    }

    // --- items ------------------------------------------------------------

    void parse_model() {
        expect_keyword("model");
        const std::string name = expect_ident("model name");
        if (building_) {
            error_here("only one model per document; '" + name + "' ignored");
            // Still parse the block to keep the cursor sane.
        }
        auto model = std::make_shared<WorldModel>();
        expect_punct("{");
        while (!accept_punct("}")) {
            if (at_end())
                fail("unterminated model block");
            const std::string var = expect_ident("variable name");
            expect_punct(":");
            try {
                if (accept_keyword("bool")) {
                    model->add_bool(var);
                } else if (accept_keyword("enum")) {
                    expect_punct("{");
                    std::vector<std::string> values;
                    values.push_back(expect_ident("enum value"));
                    while (accept_punct(","))
                        values.push_back(expect_ident("enum value"));
                    expect_punct("}");
                    model->add_enum(var, std::move(values));
                } else {
                    fail("expected 'bool' or 'enum'");
                }
            } catch (const Error& e) {
                error_here(e.what());
            }
            expect_punct(";");
        }
        if (!building_) {
            try {
                model->finalize();
            } catch (const Error& e) {
                diags_.push_back({Diagnostic::Severity::Error, e.what(), 1, 1});
            }
            building_ = std::move(model);
            doc_.model_name = name;
        }
    }

    std::pair<int, int> expect_value(int var) {
        // Returns (var, value-index); var < 0 means unresolved.
        const WorldModel& m = model_for_read();
        if (var < 0)
            return {-1, -1};
        const auto& dom = m.variables()[var].values;
        std::string value;
        if (peek().kind == Token::Ident)
            value = take().text;
        else
            fail("expected a domain value");
        const auto it = std::find(dom.begin(), dom.end(), value);
        if (it == dom.end())
            fail("value '" + value + "' not in the domain of '" + m.variables()[var].name + "'");
        return {var, int(it - dom.begin())};
    }

    int expect_variable() {
        const Token& t = peek();
        const std::string name = expect_ident("variable name");
        const int var = model_for_read().variable_index(name);
        if (var < 0) {
            diags_.push_back({Diagnostic::Severity::Error, "unknown variable '" + name + "'",
                              t.line, t.col});
            throw ParseBail{};
        }
        return var;
    }

    Predicate parse_pred() { return parse_or(); }

    Predicate parse_or() {
        Predicate p = parse_and();
        while (accept_punct("||"))
            p = Predicate::disj(std::move(p), parse_and());
        return p;
    }

    Predicate parse_and() {
        Predicate p = parse_unary();
        while (accept_punct("&&"))
            p = Predicate::conj(std::move(p), parse_unary());
        return p;
    }

    Predicate parse_unary() {
        if (accept_punct("!"))
            return Predicate::negate(parse_unary());
        if (accept_punct("(")) {
            Predicate p = parse_pred();
            expect_punct(")");
            return p;
        }
        if (accept_keyword("true"))
            return Predicate::constant(true);
        if (accept_keyword("false"))
            return Predicate::constant(false);
        const int var = expect_variable();
        if (accept_punct("==")) {
            if (accept_keyword("true"))
                return Predicate::equals(var, 1);
            if (accept_keyword("false"))
                return Predicate::equals(var, 0);
            return Predicate::equals(var, expect_value(var).second);
        }
        if (!model_for_read().variables()[var].is_bool)
            fail("enum variable '" + model_for_read().variables()[var].name +
                 "' needs '== value'");
        return Predicate::var_true(var);
    }

    void parse_action() {
        expect_keyword("action");
        ActionSpec spec;
        spec.id = expect_ident("action name");
        expect_punct("{");
        bool have_effect = false;
        while (!accept_punct("}")) {
            if (at_end())
                fail("unterminated action block");
            if (accept_keyword("pre")) {
                expect_punct(":");
                spec.preconditions.push_back(parse_pred());
                expect_punct(";");
            } else if (accept_keyword("post")) {
                expect_punct(":");
                spec.post = parse_pred();
                expect_punct(";");
            } else if (accept_keyword("effect")) {
                expect_punct(":");
                spec.assigns.push_back(parse_assign());
                while (accept_punct(","))
                    spec.assigns.push_back(parse_assign());
                expect_punct(";");
                have_effect = true;
            } else {
                fail("expected 'pre', 'effect' or 'post'");
            }
        }
        if (!have_effect)
            error_here("action '" + spec.id + "' has no effect clause");
        try {
            model_for_edit().add_action(std::move(spec));
        } catch (const Error& e) {
            error_here(e.what());
        }
    }

    int parse_literal_value(int var) {
        const WorldModel& m = model_for_read();
        if (m.variables()[var].is_bool) {
            if (accept_keyword("true"))
                return 1;
            if (accept_keyword("false"))
                return 0;
        }
        return expect_value(var).second;
    }

    Assignment parse_assign() {
        Assignment a;
        a.var = expect_variable();
        expect_punct(":=");
        if (accept_keyword("if")) {
            a.condition = parse_pred();
            expect_keyword("then");
            a.then_value = parse_literal_value(a.var);
            expect_keyword("else");
            a.else_value = parse_literal_value(a.var);
        } else {
            a.then_value = parse_literal_value(a.var);
        }
        return a;
    }

    void parse_tree() {
        expect_keyword("tree");
        TreeDecl decl;
        decl.name = expect_ident("tree name");
        expect_punct("=");
        decl.root = parse_node();
        accept_punct(";");
        doc_.trees.push_back(std::move(decl));
    }

    NodeSpec parse_node() {
        if (accept_keyword("name")) {
            if (peek().kind != Token::Str)
                fail("expected a quoted name");
            const std::string name = take().text;
            NodeSpec n = parse_node();
            n.name = name;
            return n;
        }
        const bool is_seq = peek().kind == Token::Ident && peek().text == "seq";
        const bool is_fall = peek().kind == Token::Ident && peek().text == "fall";
        if (is_seq || is_fall) {
            ++pos_;
            const NodeKind kind = is_seq ? NodeKind::Sequence : NodeKind::Fallback;
            const Token& open = peek();
            expect_punct("(");
            std::vector<NodeSpec> children;
            children.push_back(parse_node());
            while (accept_punct(","))
                children.push_back(parse_node());
            expect_punct(")");
            if (children.size() < 2)
                diags_.push_back({Diagnostic::Severity::Error,
                                  "interior nodes need at least 2 children", open.line, open.col});
            NodeSpec n;
            n.kind = kind;
            n.children = std::move(children);
            return n;
        }
        if (accept_keyword("cond")) {
            expect_punct("(");
            NodeSpec n = NodeSpec::condition(parse_pred());
            expect_punct(")");
            return n;
        }
        if (accept_keyword("act")) {
            expect_punct("(");
            NodeSpec n = NodeSpec::leaf(expect_ident("action name"));
            while (accept_punct(",")) {
                const std::string which = expect_ident("'S' or 'F'");
                expect_punct("=");
                if (which == "S")
                    n.success = parse_pred();
                else if (which == "F")
                    n.failure = parse_pred();
                else
                    fail("expected 'S' or 'F'");
            }
            expect_punct(")");
            if (model_for_read().action_index(n.action) < 0)
                error_here("unknown action '" + n.action + "'");
            return n;
        }
        fail("expected a node (seq, fall, cond, act, name)");
    }

    void parse_goals() {
        expect_keyword("goals");
        GoalsDecl decl;
        decl.name = expect_ident("goals name");
        expect_punct("=");
        expect_punct("[");
        decl.goals.push_back(parse_pred());
        while (accept_punct(","))
            decl.goals.push_back(parse_pred());
        expect_punct("]");
        accept_punct(";");
        doc_.goals.push_back(std::move(decl));
    }

    void parse_check() {
        expect_keyword("check");
        CheckDecl decl;
        decl.name = expect_ident("check name");
        expect_punct("{");
        while (!accept_punct("}")) {
            if (at_end())
                fail("unterminated check block");
            if (accept_keyword("tree")) {
                expect_punct(":");
                decl.tree = expect_ident("tree name");
            } else if (accept_keyword("level")) {
                expect_punct(":");
                decl.level.push_back(int(expect_int()));
                while (accept_punct(","))
                    decl.level.push_back(int(expect_int()));
            } else if (accept_keyword("labeling")) {
                expect_punct(":");
                decl.labeling.push_back(int(expect_int()));
                while (accept_punct(","))
                    decl.labeling.push_back(int(expect_int()));
            } else if (accept_keyword("cbar")) {
                expect_punct(":");
                decl.cbar = parse_pred();
            } else {
                fail("expected 'tree', 'level', 'labeling' or 'cbar'");
            }
            expect_punct(";");
        }
        if (decl.tree.empty())
            error_here("check '" + decl.name + "' names no tree");
        doc_.checks.push_back(std::move(decl));
    }

    // --- cbf scenarios -----------------------------------------------------

    Expr parse_expr(int n, int m) { return parse_expr_add(n, m); }

    Expr parse_expr_add(int n, int m) {
        Expr e = parse_expr_mul(n, m);
        while (true) {
            if (accept_punct("+"))
                e = Expr::add(std::move(e), parse_expr_mul(n, m));
            else if (accept_punct("-"))
                e = Expr::sub(std::move(e), parse_expr_mul(n, m));
            else
                return e;
        }
    }

    Expr parse_expr_mul(int n, int m) {
        Expr e = parse_expr_factor(n, m);
        while (accept_punct("*"))
            e = Expr::mul(std::move(e), parse_expr_factor(n, m));
        return e;
    }

    Expr parse_expr_factor(int n, int m) {
        if (accept_punct("-")) {
            Expr inner = parse_expr_factor(n, m);
            if (inner.kind == Expr::Const)
                return Expr::constant(-inner.value); // keep literals canonical
            return Expr::neg(std::move(inner));
        }
        Expr base = parse_expr_base(n, m);
        if (accept_punct("^")) {
            const long long k = expect_int();
            if (k < 0 || k > 8)
                fail("power must lie in 0..8");
            return Expr::pow(std::move(base), int(k));
        }
        return base;
    }

    Expr parse_expr_base(int n, int m) {
        if (accept_punct("(")) {
            Expr e = parse_expr(n, m);
            expect_punct(")");
            return e;
        }
        if (peek().kind == Token::Int || peek().kind == Token::Float)
            return Expr::constant(take().num);
        if (peek().kind == Token::Ident) {
            const Token& t = peek();
            const std::string sym = take().text;
            if (sym.size() >= 2 && (sym[0] == 'x' || sym[0] == 'u')) {
                bool digits = true;
                for (std::size_t i = 1; i < sym.size(); ++i)
                    digits = digits && std::isdigit(static_cast<unsigned char>(sym[i]));
                if (digits) {
                    const int idx = std::stoi(sym.substr(1)) - 1;
                    const int limit = sym[0] == 'x' ? n : m;
                    if (idx < 0 || idx >= limit) {
                        diags_.push_back({Diagnostic::Severity::Error,
                                          "symbol '" + sym + "' out of range", t.line, t.col});
                        throw ParseBail{};
                    }
                    return sym[0] == 'x' ? Expr::state(idx) : Expr::control(idx);
                }
            }
            diags_.push_back({Diagnostic::Severity::Error,
                              "expected x1..xn, u1..um or a constant, got '" + sym + "'", t.line,
                              t.col});
            throw ParseBail{};
        }
        fail("expected an arithmetic expression");
    }

    void parse_cbf() {
        expect_keyword("cbf");
        CbfScenario s;
        s.name = expect_ident("scenario name");
        expect_punct("{");
        while (!accept_punct("}")) {
            if (at_end())
                fail("unterminated cbf block");
            if (accept_keyword("dim")) {
                expect_punct(":");
                s.state_dim = int(expect_int());
                expect_punct(",");
                s.control_dim = int(expect_int());
                expect_punct(";");
            } else if (accept_keyword("box")) {
                expect_punct(":");
                do {
                    s.lo.push_back(expect_number());
                    s.hi.push_back(expect_number());
                } while (accept_punct(","));
                expect_punct(";");
            } else if (accept_keyword("dynamics")) {
                expect_punct(":");
                do
                    s.dynamics.push_back(parse_expr(s.state_dim, s.control_dim));
                while (accept_punct(","));
                expect_punct(";");
            } else if (accept_keyword("barrier")) {
                expect_punct(":");
                Expr e = parse_expr(s.state_dim, 0); // barriers are state-only
                s.barriers.push_back(std::move(e));
                expect_punct(";");
            } else if (accept_keyword("alpha")) {
                expect_punct(":");
                s.alpha = expect_number();
                expect_punct(";");
            } else if (accept_keyword("nominal")) {
                expect_punct(":");
                do
                    s.nominal.push_back(parse_expr(s.state_dim, 0));
                while (accept_punct(","));
                expect_punct(";");
            } else if (accept_keyword("start")) {
                expect_punct(":");
                do
                    s.start.push_back(expect_number());
                while (accept_punct(","));
                expect_punct(";");
            } else {
                fail("expected dim, box, dynamics, barrier, alpha, nominal or start");
            }
        }
        if (int(s.lo.size()) != s.control_dim)
            error_here("box needs one lo/hi pair per control dimension");
        if (int(s.dynamics.size()) != s.state_dim)
            error_here("dynamics needs one expression per state dimension");
        if (s.barriers.empty())
            error_here("scenario needs at least one barrier");
        if (int(s.nominal.size()) != s.control_dim)
            error_here("nominal needs one expression per control dimension");
        if (!s.start.empty() && int(s.start.size()) != s.state_dim)
            error_here("start needs one value per state dimension");
        if (s.start.empty())
            s.start.assign(std::size_t(std::max(s.state_dim, 0)), 0.0);
        doc_.cbfs.push_back(std::move(s));
    }

    std::vector<Token> tokens_;
    std::vector<Diagnostic>& diags_;
    std::size_t pos_ = 0;
    Document doc_;
    std::shared_ptr<WorldModel> building_;
};

} // namespace

ParseResult parse(std::string_view text) {
    ParseResult result;
    Lexer lexer(text, result.diagnostics);
    Parser parser(lexer.run(), result.diagnostics);
    result.doc = parser.run();
    return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

int pred_precedence(const Predicate& p) {
    switch (p.kind) {
    case PredKind::Or:
        return 1;
    case PredKind::And:
        return 2;
    default:
        return 3;
    }
}

void pred_out(const WorldModel& m, const Predicate& p, std::ostream& out, int parent_prec) {
    const int prec = pred_precedence(p);
    const bool parens = prec < parent_prec;
    if (parens)
        out << "(";
    switch (p.kind) {
    case PredKind::True:
        out << "true";
        break;
    case PredKind::False:
        out << "false";
        break;
    case PredKind::Var:
        out << m.variables()[p.var].name;
        break;
    case PredKind::Eq:
        out << m.variables()[p.var].name << " == " << m.variables()[p.var].values[p.value];
        break;
    case PredKind::Not:
        out << "!";
        pred_out(m, p.args[0], out, 4);
        break;
    case PredKind::And:
        pred_out(m, p.args[0], out, 2);
        out << " && ";
        pred_out(m, p.args[1], out, 3);
        break;
    case PredKind::Or:
        pred_out(m, p.args[0], out, 1);
        out << " || ";
        pred_out(m, p.args[1], out, 2);
        break;
    }
    if (parens)
        out << ")";
}

void node_out(const WorldModel& m, const NodeSpec& n, std::ostream& out, int indent) {
    const std::string pad(std::size_t(indent) * 2, ' ');
    out << pad;
    if (!n.name.empty())
        out << "name \"" << n.name << "\" ";
    switch (n.kind) {
    case NodeKind::Sequence:
    case NodeKind::Fallback: {
        out << (n.kind == NodeKind::Sequence ? "seq(" : "fall(") << "\n";
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            node_out(m, n.children[i], out, indent + 1);
            out << (i + 1 < n.children.size() ? ",\n" : "\n");
        }
        out << pad << ")";
        break;
    }
    case NodeKind::Condition:
        out << "cond(";
        pred_out(m, *n.success, out, 0);
        out << ")";
        break;
    case NodeKind::Leaf: {
        out << "act(" << n.action;
        // Defaults (S = declared post, F = never) are left implicit.
        const int action = m.action_index(n.action);
        const Predicate default_s = action >= 0 && m.actions()[action].post
                                        ? *m.actions()[action].post
                                        : Predicate::constant(false);
        const bool s_default = !n.success || *n.success == default_s;
        const bool f_default = !n.failure || *n.failure == Predicate::constant(false);
        if (!s_default || !f_default) {
            out << ", S = ";
            pred_out(m, n.success ? *n.success : default_s, out, 0);
            out << ", F = ";
            pred_out(m, n.failure ? *n.failure : Predicate::constant(false), out, 0);
        }
        out << ")";
        break;
    }
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

} // namespace

std::string predicate_to_string(const WorldModel& m, const Predicate& p) {
    std::ostringstream out;
    pred_out(m, p, out, 0);
    return out.str();
}

std::string serialize(const Document& doc) {
    std::ostringstream out;
    const WorldModel* m = doc.model.get();

    if (m) {
        out << "model " << (doc.model_name.empty() ? "world" : doc.model_name) << " {\n";
        for (const auto& v : m->variables()) {
            out << "  " << v.name << ": ";
            if (v.is_bool) {
                out << "bool";
            } else {
                out << "enum { ";
                for (std::size_t i = 0; i < v.values.size(); ++i)
                    out << (i ? ", " : "") << v.values[i];
                out << " }";
            }
            out << ";\n";
        }
        out << "}\n";

        for (const auto& a : m->actions()) {
            out << "\naction " << a.id << " {\n";
            for (const auto& pre : a.preconditions)
                out << "  pre: " << predicate_to_string(*m, pre) << ";\n";
            out << "  effect: ";
            for (std::size_t i = 0; i < a.assigns.size(); ++i) {
                const auto& asg = a.assigns[i];
                if (i)
                    out << ", ";
                out << m->variables()[asg.var].name << " := ";
                if (asg.condition) {
                    out << "if " << predicate_to_string(*m, *asg.condition) << " then "
                        << m->variables()[asg.var].values[asg.then_value] << " else "
                        << m->variables()[asg.var].values[asg.else_value];
                } else {
                    out << m->variables()[asg.var].values[asg.then_value];
                }
            }
            out << ";\n";
            if (a.post)
                out << "  post: " << predicate_to_string(*m, *a.post) << ";\n";
            out << "}\n";
        }
    }

    for (const auto& t : doc.trees) {
        out << "\ntree " << t.name << " =\n";
        node_out(*m, t.root, out, 1);
        out << "\n";
    }

    for (const auto& g : doc.goals) {
        out << "\ngoals " << g.name << " = [";
        for (std::size_t i = 0; i < g.goals.size(); ++i)
            out << (i ? ", " : "") << predicate_to_string(*m, g.goals[i]);
        out << "]\n";
    }

    for (const auto& c : doc.checks) {
        out << "\ncheck " << c.name << " {\n";
        out << "  tree: " << c.tree << ";\n";
        auto idlist = [&](const char* key, const std::vector<int>& ids) {
            if (ids.empty())
                return;
            out << "  " << key << ": ";
            for (std::size_t i = 0; i < ids.size(); ++i)
                out << (i ? ", " : "") << ids[i];
            out << ";\n";
        };
        idlist("level", c.level);
        idlist("labeling", c.labeling);
        if (c.cbar)
            out << "  cbar: " << predicate_to_string(*m, *c.cbar) << ";\n";
        out << "}\n";
    }

    for (const auto& s : doc.cbfs) {
        out << "\ncbf " << s.name << " {\n";
        out << "  dim: " << s.state_dim << ", " << s.control_dim << ";\n";
        out << "  box: ";
        for (std::size_t i = 0; i < s.lo.size(); ++i)
            out << (i ? ", " : "") << format_double(s.lo[i]) << " " << format_double(s.hi[i]);
        out << ";\n";
        out << "  dynamics: ";
        for (std::size_t i = 0; i < s.dynamics.size(); ++i)
            out << (i ? ", " : "") << expr_to_string(s.dynamics[i]);
        out << ";\n";
        for (const auto& b : s.barriers)
            out << "  barrier: " << expr_to_string(b) << ";\n";
        out << "  alpha: " << format_double(s.alpha) << ";\n";
        out << "  nominal: ";
        for (std::size_t i = 0; i < s.nominal.size(); ++i)
            out << (i ? ", " : "") << expr_to_string(s.nominal[i]);
        out << ";\n";
        out << "  start: ";
        for (std::size_t i = 0; i < s.start.size(); ++i)
            out << (i ? ", " : "") << format_double(s.start[i]);
        out << ";\n";
        out << "}\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------

namespace {

bool node_equal(const NodeSpec& a, const NodeSpec& b) {
    if (a.kind != b.kind || a.name != b.name || a.action != b.action)
        return false;
    if ((a.success.has_value() != b.success.has_value()) ||
        (a.success && !(*a.success == *b.success)))
        return false;
    if ((a.failure.has_value() != b.failure.has_value()) ||
        (a.failure && !(*a.failure == *b.failure)))
        return false;
    if (a.children.size() != b.children.size())
        return false;
    for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!node_equal(a.children[i], b.children[i]))
            return false;
    return true;
}

bool expr_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind || a.index != b.index || a.power != b.power ||
        a.args.size() != b.args.size())
        return false;
    if (a.kind == Expr::Const && a.value != b.value)
        return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!expr_equal(a.args[i], b.args[i]))
            return false;
    return true;
}

bool assignment_equal(const Assignment& a, const Assignment& b) {
    return a.var == b.var && a.then_value == b.then_value &&
           (a.condition.has_value() == b.condition.has_value()) &&
           (!a.condition || (*a.condition == *b.condition && a.else_value == b.else_value));
}

bool model_equal(const WorldModel* a, const WorldModel* b) {
    if (!a || !b)
        return a == b;
    if (a->variables().size() != b->variables().size() ||
        a->actions().size() != b->actions().size())
        return false;
    for (std::size_t i = 0; i < a->variables().size(); ++i) {
        const auto& va = a->variables()[i];
        const auto& vb = b->variables()[i];
        if (va.name != vb.name || va.values != vb.values || va.is_bool != vb.is_bool)
            return false;
    }
    for (std::size_t i = 0; i < a->actions().size(); ++i) {
        const auto& aa = a->actions()[i];
        const auto& ab = b->actions()[i];
        if (aa.id != ab.id || aa.preconditions != ab.preconditions ||
            aa.assigns.size() != ab.assigns.size())
            return false;
        for (std::size_t k = 0; k < aa.assigns.size(); ++k)
            if (!assignment_equal(aa.assigns[k], ab.assigns[k]))
                return false;
        if (aa.post.has_value() != ab.post.has_value() || (aa.post && !(*aa.post == *ab.post)))
            return false;
    }
    return true;
}

} // namespace

bool scenario_equal(const CbfScenario& a, const CbfScenario& b) {
    if (a.name != b.name || a.state_dim != b.state_dim || a.control_dim != b.control_dim ||
        a.lo != b.lo || a.hi != b.hi || a.alpha != b.alpha || a.start != b.start)
        return false;
    auto vec_equal = [](const std::vector<Expr>& x, const std::vector<Expr>& y) {
        if (x.size() != y.size())
            return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!expr_equal(x[i], y[i]))
                return false;
        return true;
    };
    return vec_equal(a.dynamics, b.dynamics) && vec_equal(a.barriers, b.barriers) &&
           vec_equal(a.nominal, b.nominal);
}

bool structurally_equal(const Document& a, const Document& b) {
    if (!model_equal(a.model.get(), b.model.get()))
        return false;
    if (a.model_name != b.model_name)
        return false;
    if (a.trees.size() != b.trees.size() || a.goals.size() != b.goals.size() ||
        a.checks.size() != b.checks.size() || a.cbfs.size() != b.cbfs.size())
        return false;
    for (std::size_t i = 0; i < a.trees.size(); ++i)
        if (a.trees[i].name != b.trees[i].name || !node_equal(a.trees[i].root, b.trees[i].root))
            return false;
    for (std::size_t i = 0; i < a.goals.size(); ++i)
        if (!(a.goals[i] == b.goals[i]))
            return false;
    for (std::size_t i = 0; i < a.checks.size(); ++i)
        if (!(a.checks[i] == b.checks[i]))
            return false;
    for (std::size_t i = 0; i < a.cbfs.size(); ++i)
        if (!scenario_equal(a.cbfs[i], b.cbfs[i]))
            return false;
    return true;
}

const TreeDecl* Document::find_tree(const std::string& name) const {
    for (const auto& t : trees)
        if (t.name == name)
            return &t;
    return nullptr;
}

const GoalsDecl* Document::find_goals(const std::string& name) const {
    for (const auto& g : goals)
        if (g.name == name)
            return &g;
    return nullptr;
}

const CheckDecl* Document::find_check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

const CbfScenario* Document::find_cbf(const std::string& name) const {
    for (const auto& c : cbfs)
        if (c.name == name)
            return &c;
    return nullptr;
}

Tree build_tree(const Document& doc, const std::string& tree_name) {
    const TreeDecl* decl = doc.find_tree(tree_name);
    if (!decl)
        throw Error("tree '" + tree_name + "' not found in document");
    if (!doc.model)
        throw Error("document has no model");
    return Tree::build(doc.model, decl->root, decl->name);
}

CbfProblem build_cbf_problem(const CbfScenario& s) {
    CbfProblem p;
    p.state_dim = s.state_dim;
    p.control_dim = s.control_dim;
    p.u_lo = s.lo;
    p.u_hi = s.hi;
    p.kappa = s.alpha;

    const auto dynamics = s.dynamics;
    const int n = s.state_dim;
    const int m = s.control_dim;
    p.drift = [dynamics, m](const Vec& x) {
        const Vec u0(m, 0.0);
        Vec out;
        out.reserve(dynamics.size());
        for (const auto& e : dynamics)
            out.push_back(eval_expr(e, x, u0));
        return out;
    };
    p.control_matrix = [dynamics, n, m](const Vec& x) {
        const Vec u0(m, 0.0);
        std::vector<Vec> g(n, Vec(m, 0.0));
        for (int r = 0; r < n; ++r) {
            const double base = eval_expr(dynamics[r], x, u0);
            for (int c = 0; c < m; ++c) {
                Vec e(m, 0.0);
                e[c] = 1.0;
                g[r][c] = eval_expr(dynamics[r], x, e) - base;
            }
        }
        return g;
    };

    // Affineness spot check: f(x, u) must match g0(x) + G(x)u on a grid of
    // non-basis controls.
    {
        Vec x(n, 0.37);
        for (int r = 0; r < n; ++r)
            x[r] += 0.11 * r;
        const Vec g0 = p.drift(x);
        const auto G = p.control_matrix(x);
        for (int probe = 0; probe < 3; ++probe) {
            Vec u(m);
            for (int c = 0; c < m; ++c)
                u[c] = 0.5 + 0.31 * c + 0.17 * probe;
            for (int r = 0; r < n; ++r) {
                double affine = g0[r];
                for (int c = 0; c < m; ++c)
                    affine += G[r][c] * u[c];
                const double exact = eval_expr(dynamics[r], x, u);
                if (std::fabs(affine - exact) > 1e-6 * std::max(1.0, std::fabs(exact)))
                    throw Error("scenario '" + s.name + "': dynamics row " + std::to_string(r + 1) +
                                " is not affine in the controls");
            }
        }
    }

    for (std::size_t b = 0; b < s.barriers.size(); ++b) {
        Barrier barrier;
        barrier.name = "h" + std::to_string(b + 1);
        const Expr h = s.barriers[b];
        barrier.h = [h](const Vec& x) { return eval_expr(h, x, {}); };
        std::vector<Expr> grads;
        for (int i = 0; i < n; ++i)
            grads.push_back(diff_state(h, i));
        barrier.grad = [grads](const Vec& x) {
            Vec out;
            out.reserve(grads.size());
            for (const auto& g : grads)
                out.push_back(eval_expr(g, x, {}));
            return out;
        };
        p.barriers.push_back(std::move(barrier));
    }

    const auto nominal = s.nominal;
    p.nominals.push_back([nominal](const Vec& x) {
        Vec out;
        out.reserve(nominal.size());
        for (const auto& e : nominal)
            out.push_back(eval_expr(e, x, {}));
        return out;
    });
    return p;
}

} // namespace btcalc
