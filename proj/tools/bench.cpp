// Serial reference vs OpenMP kernels on a synthetic model, wall-clock.
#include "btcalc/sweep.hpp"

#include <chrono>
#include <cstdio>
#include <memory>

using namespace btcalc;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    // one warmup
    fn();
    const auto start = Clock::now();
    for (int i = 0; i < reps; ++i)
        fn();
    const auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

std::shared_ptr<WorldModel> synthetic_model(int bools) {
    auto model = std::make_shared<WorldModel>();
    for (int i = 0; i < bools; ++i)
        model->add_bool("v" + std::to_string(i));
    ActionSpec flip;
    flip.id = "advance";
    for (int i = 0; i < bools; ++i) {
        Assignment a;
        a.var = i;
        a.then_value = 1;
        a.else_value = 0;
        a.condition = Predicate::negate(Predicate::var_true(i));
        flip.assigns.push_back(a);
        break; // only the first variable advances; enough for a hot loop
    }
    model->add_action(flip);
    model->finalize();
    return model;
}

Predicate deep_predicate(int bools) {
    Predicate p = Predicate::var_true(0);
    for (int i = 1; i < bools; ++i) {
        Predicate clause = i % 2 ? Predicate::var_true(i)
                                 : Predicate::negate(Predicate::var_true(i));
        p = i % 3 ? Predicate::conj(std::move(p), std::move(clause))
                  : Predicate::disj(std::move(p), std::move(clause));
    }
    return p;
}

} // namespace

int main() {
    const int bools = 20; // 2^20 states
    auto model = synthetic_model(bools);
    const Predicate pred = deep_predicate(bools);

    std::printf("openmp: %s, threads: %d, states: %llu\n", openmp_enabled() ? "on" : "off",
                sweep_thread_count(), (unsigned long long)model->state_count());

    const double serial_ms =
        time_ms([&] { region_from_predicate_serial(*model, pred); }, 5);
    const double parallel_ms =
        time_ms([&] { region_from_predicate_parallel(*model, pred); }, 5);
    std::printf("region_from_predicate  serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n",
                serial_ms, parallel_ms, serial_ms / parallel_ms);

    // A wide fallback over conditions makes tick evaluation the hot path.
    std::vector<NodeSpec> children;
    for (int i = 0; i < bools - 1; ++i)
        children.push_back(NodeSpec::condition(Predicate::var_true(i)));
    children.push_back(NodeSpec::leaf("advance"));
    const Tree tree = Tree::build(model, NodeSpec::fallback(std::move(children)), "bench");

    const double tick_serial_ms = time_ms([&] { tick_sweep_serial(tree); }, 3);
    const double tick_parallel_ms = time_ms([&] { tick_sweep_parallel(tree); }, 3);
    std::printf("tick_sweep             serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n",
                tick_serial_ms, tick_parallel_ms, tick_serial_ms / tick_parallel_ms);

    // Equality spot check while we are at it.
    const bool same = region_from_predicate_serial(*model, pred) ==
                      region_from_predicate_parallel(*model, pred);
    std::printf("serial/parallel agreement: %s\n", same ? "ok" : "MISMATCH");
    return same ? 0 : 1;
}
