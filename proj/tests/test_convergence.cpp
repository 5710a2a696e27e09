#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include "btcalc/convergence.hpp"
#include "btcalc/sweep.hpp"

#include <cmath>

using namespace btcalc;
using namespace btcalc::testing;

namespace {

Region var_region(const Tree& t, const char* name, bool value = true) {
    const int var = t.model().variable_index(name);
    REQUIRE(var >= 0);
    const Region r = region_from_predicate(t.model(), Predicate::var_true(var));
    return value ? r : ~r;
}

} // namespace

TEST_CASE("constraint sets of the three-goal mission") {
    const Document doc = load_document("delivery_sequence.bt");
    const Tree t = build_tree(doc, "mission");
    const RegionMap map = compute_regions(t);
    const ConvergenceProblem p = make_problem(t, {1, 2, 3});
    const auto ci = build_ci(p, map);

    const Region safe = var_region(t, "in_safe_area");
    const Region goal = var_region(t, "object_at_goal");

    CHECK(ci[0] == Region(t.model(), true));
    CHECK(ci[1] == safe);
    CHECK(ci[2] == (safe & goal));

    // last label: operating region plus the success region
    CHECK(ci[2] == ((map.operating[3] | map.triples[0].success) & p.cbar));
}

TEST_CASE("invariance checking") {
    const Document doc = load_document("delivery_sequence.bt");
    const Tree t = build_tree(doc, "mission");
    const RegionMap map = compute_regions(t);
    const ConvergenceProblem p = make_problem(t, {1, 2, 3});
    const auto ci = build_ci(p, map);

    for (int i = 0; i < 3; ++i)
        CHECK(check_invariance(p, map, ci, i).pass);

    // vacuous on an empty operating region
    ConvergenceProblem q = make_problem(t, {1, 2, 3});
    RegionMap empty_map = map;
    empty_map.operating[2] = Region(t.model());
    CHECK(check_invariance(q, empty_map, ci, 1).pass);
}

TEST_CASE("invariance failure carries a witness transition") {
    // deliver_object variant that leaves the safe area: C_2 = safe breaks.
    auto m = std::make_shared<WorldModel>();
    m->add_bool("in_safe_area");
    m->add_bool("object_at_goal");
    ActionSpec safe;
    safe.id = "move_to_safe";
    safe.assigns.push_back({0, 1, -1, std::nullopt});
    safe.post = Predicate::var_true(0);
    m->add_action(std::move(safe));
    ActionSpec rogue;
    rogue.id = "deliver_rogue";
    rogue.assigns.push_back({1, 1, -1, std::nullopt});
    rogue.assigns.push_back({0, 0, -1, std::nullopt}); // wanders out while delivering
    rogue.post = Predicate::var_true(1);
    m->add_action(std::move(rogue));
    m->finalize();

    const Tree t = Tree::build(
        m, NodeSpec::sequence({NodeSpec::leaf("move_to_safe"), NodeSpec::leaf("deliver_rogue")}),
        "rogue");
    const RegionMap map = compute_regions(t);
    const ConvergenceProblem p = make_problem(t, {1, 2});
    const auto ci = build_ci(p, map);

    const InvarianceCheck check = check_invariance(p, map, ci, 1);
    CHECK(!check.pass);
    CHECK(ci[1].test(check.witness_state));
    CHECK(!ci[1].test(check.witness_successor));
}

TEST_CASE("dwell bounds") {
    // one-shot exit
    {
        const Document doc = load_document("delivery_sequence.bt");
        const Tree t = build_tree(doc, "mission");
        const RegionMap map = compute_regions(t);
        const ConvergenceProblem p = make_problem(t, {1, 2, 3});
        for (int i = 0; i < 3; ++i) {
            const DwellCheck d = check_dwell(p, map, i);
            CHECK(d.pass);
            CHECK(d.tau == 1);
        }
    }
    // two-bit saturating counter: three in-region steps before leaving
    {
        auto m = std::make_shared<WorldModel>();
        m->add_bool("b0");
        m->add_bool("b1");
        const Predicate b0 = Predicate::var_true(0);
        const Predicate b1 = Predicate::var_true(1);
        ActionSpec inc;
        inc.id = "increment";
        inc.assigns.push_back(
            {0, 1, 0, Predicate::disj(Predicate::conj(b0, b1), Predicate::negate(b0))});
        inc.assigns.push_back({1, 1, 0, Predicate::disj(b0, b1)});
        m->add_action(std::move(inc));
        m->finalize();
        const Predicate at_max = Predicate::conj(b0, b1);
        const Tree t = Tree::build(
            m, NodeSpec::fallback({NodeSpec::condition(at_max),
                                   NodeSpec::leaf("increment", at_max,
                                                  Predicate::constant(false))}),
            "counter");
        const RegionMap map = compute_regions(t);
        const ConvergenceProblem p = make_problem(t, {2});
        const DwellCheck d = check_dwell(p, map, 0);
        CHECK(d.pass);
        CHECK(d.tau == 3);
    }
    // self loop inside the region
    {
        auto m = std::make_shared<WorldModel>();
        m->add_bool("x");
        ActionSpec noop;
        noop.id = "noop";
        m->add_action(std::move(noop));
        m->finalize();
        const Tree t = Tree::build(
            m,
            NodeSpec::fallback({NodeSpec::condition(Predicate::var_true(0)),
                                NodeSpec::leaf("noop")}),
            "stuck");
        const RegionMap map = compute_regions(t);
        const ConvergenceProblem p = make_problem(t, {2});
        const DwellCheck d = check_dwell(p, map, 0);
        CHECK(!d.pass);
        CHECK(!d.cycle.empty());
    }
}

TEST_CASE("theorem holds on the three-goal mission") {
    const Document doc = load_document("delivery_sequence.bt");
    const Tree t = build_tree(doc, "mission");
    const ConvergenceProblem p = make_problem(t, {1, 2, 3});
    const ConvergenceCertificate cert = check_theorem(p);

    CHECK(cert.verdict == Verdict::Proven);
    CHECK(cert.bound_sum == 3);
    CHECK(cert.bound_nmax == 3);
    CHECK(cert.conclusion_ok);
    CHECK(cert.conclusion_worst_steps <= 3);
}

TEST_CASE("theorem catches a safety-breaking action") {
    // replace the docking action with one that leaves the safe area
    const std::string text = read_file(data_path("delivery_sequence.bt"));
    const std::string mutated_text = [&] {
        const std::string needle = "effect: robot_at_charger := true;";
        std::string s = text;
        s.replace(s.find(needle), needle.size(),
                  "effect: robot_at_charger := true, in_safe_area := false;");
        return s;
    }();
    ParseResult mutated = parse(mutated_text);
    REQUIRE(mutated.ok());
    const Tree t = build_tree(mutated.doc, "mission");
    const ConvergenceCertificate cert = check_theorem(make_problem(t, {1, 2, 3}));

    CHECK(cert.verdict == Verdict::Failed);
    bool some_witness = false;
    for (const auto& inv : cert.invariance)
        some_witness = some_witness || !inv.pass;
    CHECK(some_witness);
}

TEST_CASE("standard sequence closed forms") {
    const Document doc = load_document("delivery_sequence.bt");
    const Tree t = build_tree(doc, "mission");
    const Region cbar(t.model(), true);
    const SequenceSets sets = standard_sequence_sets(t, cbar);

    CHECK(sets.c[0] == cbar); // empty intersection is the full space
    CHECK(sets.c[2] == (var_region(t, "in_safe_area") & var_region(t, "object_at_goal")));

    // closed form agrees with the generic construction
    const RegionMap map = compute_regions(t);
    const auto ci = build_ci(make_problem(t, {1, 2, 3}), map);
    for (int i = 0; i < 3; ++i) {
        CHECK(sets.c[i] == ci[i]);
        CHECK(sets.operating[i] == map.operating[i + 1]);
    }
}

TEST_CASE("standard sequence equals the generic sets on random never-failing sequences") {
    Rng rng(53);
    for (int round = 0; round < 40; ++round) {
        auto model = random_model(rng, 5, 4);
        const int n = rand_int(rng, 2, 5);
        std::vector<NodeSpec> leaves;
        std::vector<int> labeling;
        for (int i = 0; i < n; ++i) {
            leaves.push_back(NodeSpec::leaf(model->actions()[rand_int(rng, 0, 3)].id,
                                            random_predicate(rng, 5),
                                            Predicate::constant(false)));
            labeling.push_back(i + 1);
        }
        const Tree t = Tree::build(model, NodeSpec::sequence(std::move(leaves)), "rand-seq");
        const Region cbar = region_from_predicate(*model, random_predicate(rng, 5));
        if (cbar.empty())
            continue;
        const SequenceSets sets = standard_sequence_sets(t, cbar);
        const auto ci = build_ci(make_problem(t, labeling, cbar), compute_regions(t));
        for (int i = 0; i < n; ++i)
            CHECK(sets.c[i] == ci[i]);
    }
}

TEST_CASE("implicit sequence on the pick-and-place fallback") {
    const Document doc = load_document("pick_place.bt");
    const Tree t = build_tree(doc, "implicit");
    const Region holding = var_region(t, "holding_object");
    const Region at_goal = var_region(t, "object_at_goal");
    const Region cbar = holding | ~at_goal;

    const ImplicitSets sets = implicit_sequence_sets(t, cbar);
    REQUIRE(sets.labeling.size() == 2);
    CHECK(sets.labeling[0] == 2); // label 1: rightmost child (get object)
    CHECK(sets.labeling[1] == 1);

    CHECK(sets.operating[0] == (~holding & ~at_goal));
    CHECK(sets.c_hat[1] == holding);
    CHECK(sets.hypothesis[0].holds);
    CHECK(sets.hypothesis[0].witness_label == 2);
    CHECK(sets.c_hat_subset_ci[0]);
    CHECK(sets.c_hat_subset_ci[1]);

    // and the full theorem goes through with this labeling
    const ConvergenceCertificate cert = check_theorem(make_problem(t, {2, 1}, cbar));
    CHECK(cert.verdict == Verdict::Proven);
}

TEST_CASE("closed forms reject the wrong root kind") {
    const Document doc = load_document("pick_place.bt");
    const Tree fallback_root = build_tree(doc, "implicit");
    const Region cbar(fallback_root.model(), true);
    CHECK_THROWS_AS(standard_sequence_sets(fallback_root, cbar), Error);

    const Document seq_doc = load_document("delivery_sequence.bt");
    const Tree sequence_root = build_tree(seq_doc, "mission");
    const Region cbar2(sequence_root.model(), true);
    CHECK_THROWS_AS(implicit_sequence_sets(sequence_root, cbar2), Error);
}

TEST_CASE("implicit sequence on a lone never-failing leaf") {
    auto m = std::make_shared<WorldModel>();
    m->add_bool("x");
    ActionSpec go;
    go.id = "go";
    go.assigns.push_back({0, 1, -1, std::nullopt});
    go.post = Predicate::var_true(0);
    m->add_action(std::move(go));
    m->finalize();
    const Tree t = Tree::build(m, NodeSpec::leaf("go"), "lone");
    const Region cbar(*m, true);
    const ImplicitSets sets = implicit_sequence_sets(t, cbar);
    REQUIRE(sets.c_hat.size() == 1);
    CHECK(sets.c_hat[0] == cbar); // R ∪ S covers everything: only cbar constrains
}

TEST_CASE("probabilistic closed forms") {
    const ProbBounds single = probabilistic_bounds(1, 0.5);
    CHECK(single.e_bound == doctest::Approx(2.0));
    CHECK(single.gamma == doctest::Approx(0.5));

    const ProbBounds three = probabilistic_bounds(3, 0.9);
    CHECK(three.e_bound == doctest::Approx(3.0 / 0.729));
    CHECK(three.gamma == doctest::Approx(0.271));
    CHECK(three.p_k(2) == doctest::Approx(1.0 - 0.271 * 0.271 * 0.271).epsilon(1e-9));

    // the limit of P_k is 1
    CHECK(three.p_k(200) == doctest::Approx(1.0));

    CHECK_THROWS_AS(probabilistic_bounds(0, 0.5), Error);
    CHECK_THROWS_AS(probabilistic_bounds(3, 1.0), Error);
    CHECK_THROWS_AS(probabilistic_bounds(3, 0.0), Error);
}

TEST_CASE("deterministic chain: exactly N transitions") {
    ProbabilisticChain chain;
    chain.n = 4;
    chain.p = {1.0, 1.0, 1.0, 1.0};
    chain.seed = 9;
    const ChainStats stats = monte_carlo_chain(chain, 500);
    CHECK(stats.mean_transitions == doctest::Approx(4.0));
    CHECK(stats.stderr_transitions == doctest::Approx(0.0));
    CHECK(stats.p_k[0] == doctest::Approx(1.0)); // zero regressions every time
}

TEST_CASE("monte carlo respects the expectation bound in both regression modes") {
    ProbabilisticChain chain;
    chain.n = 3;
    chain.p = {0.9, 0.9, 0.9};
    chain.seed = 1234;
    for (const auto mode : {RegressMode::Uniform, RegressMode::WorstCase}) {
        const ChainStats stats = monte_carlo_chain(chain, 20000, mode);
        CHECK(stats.e_bound == doctest::Approx(3.0 / 0.729));
        CHECK(stats.e_bound_ok);
        for (std::size_t k = 1; k < stats.p_k.size(); ++k)
            CHECK(stats.p_k[k] >= stats.p_k[k - 1]); // a CDF
    }
}

TEST_CASE("worst-case regressions reproduce the closed-form arrival law") {
    const std::uint64_t trials = 20000;
    for (int n = 1; n <= 6; ++n) {
        for (const double prob : {0.5, 0.7, 0.9}) {
            ProbabilisticChain chain;
            chain.n = n;
            chain.p.assign(std::size_t(n), prob);
            chain.seed = 99 + std::uint64_t(n) * 17 + std::uint64_t(prob * 10);
            const ChainStats stats = monte_carlo_chain(chain, trials, RegressMode::WorstCase);
            const ProbBounds bounds = probabilistic_bounds(n, prob);
            CHECK(stats.e_bound_ok);
            for (int k = 0; k <= 10; ++k) {
                const double expected = bounds.p_k(k);
                const double sigma = std::sqrt(expected * (1 - expected) / double(trials));
                CHECK(std::fabs(stats.p_k[k] - expected) <= 3.5 * sigma + 1e-12);
            }
        }
    }
}
