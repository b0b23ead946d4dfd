#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "lcdt/rng.hpp"
#include "lcdt/schedule.hpp"

using namespace lcdt;

namespace {

PackedSequence seq_with_segments(std::initializer_list<std::uint64_t> lengths) {
    PackedSequence s;
    std::uint64_t total = 0;
    s.boundaries.push_back(0);
    for (std::uint64_t len : lengths) {
        total += len;
        s.boundaries.push_back(total);
        s.segment_domains.push_back("d");
        s.origins.push_back({"x", 0, false});
    }
    s.tokens.assign(total, 1);
    return s;
}

// Exhaustive oracle: minimum sum-of-group-maxima over every assignment of the
// minibatches into A ordered micro-steps of D each.
double brute_force_optimal(const std::vector<double>& costs, std::uint32_t devices,
                           std::uint32_t accum) {
    std::vector<std::size_t> perm(costs.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::uint32_t a = 0; a < accum; ++a) {
            double worst = 0.0;
            for (std::uint32_t d = 0; d < devices; ++d) {
                worst = std::max(worst, costs[perm[a * devices + d]]);
            }
            total += worst;
        }
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_CASE("segmented cost sums squared segment lengths") {
    CostModel model;
    CHECK(model.cost(seq_with_segments({2, 3})) == doctest::Approx(13.0));
    CHECK(model.cost(seq_with_segments({5})) == doctest::Approx(25.0));
}

TEST_CASE("64 segments of 1K cost 1/64th of full attention") {
    CostModel model;
    std::vector<std::uint64_t> segs(64, 1024);
    const double segmented = model.cost_of_segments(segs);
    const double full = model.cost_of_segments({65536});
    CHECK(segmented == doctest::Approx(64.0 * 1024.0 * 1024.0));
    CHECK(full / segmented == doctest::Approx(64.0));
}

TEST_CASE("segmented cost never exceeds full attention, equal only when single") {
    CostModel model;
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint64_t> segs;
        std::uint64_t total = 0;
        const std::size_t n = 1 + rng.next_below(10);
        for (std::size_t i = 0; i < n; ++i) {
            segs.push_back(1 + rng.next_below(1000));
            total += segs.back();
        }
        const double segmented = model.cost_of_segments(segs);
        const double full = static_cast<double>(total) * static_cast<double>(total);
        if (n == 1) {
            CHECK(segmented == doctest::Approx(full));
        } else {
            CHECK(segmented < full);
        }
    }
}

TEST_CASE("linear term adds alpha times tokens") {
    CostModel model;
    model.linear_coefficient = 2.0;
    CHECK(model.cost(seq_with_segments({2, 3})) == doctest::Approx(13.0 + 2.0 * 5.0));
}

TEST_CASE("reorder fixes the 100/1/100/1 pairing") {
    const std::vector<double> costs = {100, 1, 100, 1};
    CHECK(makespan(manifest_plan(costs, 2, 2)) == doctest::Approx(200.0));
    CHECK(makespan(reorder(costs, 2, 2)) == doctest::Approx(101.0));
    // Exhaustive check of both schedules' context: sorted matches the optimum.
    CHECK(brute_force_optimal(costs, 2, 2) == doctest::Approx(101.0));
}

TEST_CASE("equal costs leave the makespan unchanged") {
    const std::vector<double> costs(8, 3.0);
    CHECK(makespan(reorder(costs, 4, 2)) == doctest::Approx(makespan(manifest_plan(costs, 4, 2))));
}

TEST_CASE("single device makespan is order-invariant") {
    const std::vector<double> costs = {5, 1, 9, 2};
    CHECK(makespan(reorder(costs, 1, 4)) == doctest::Approx(makespan(manifest_plan(costs, 1, 4))));
    CHECK(makespan(manifest_plan(costs, 1, 4)) == doctest::Approx(17.0));
}

TEST_CASE("makespan is the max within each micro-step") {
    StepPlan plan;
    plan.device_count = 2;
    plan.accum_steps = 1;
    plan.costs = {13, 25};
    plan.grid = {{0, 1}};
    CHECK(makespan(plan) == doctest::Approx(25.0));
}

TEST_CASE("reorder rejects a length mismatch") {
    CHECK_THROWS_AS(reorder({1, 2, 3}, 2, 2), std::invalid_argument);
}

TEST_CASE("reorder preserves the multiset of minibatches per step") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint32_t devices = 1 + static_cast<std::uint32_t>(rng.next_below(8));
        const std::uint32_t accum = 1 + static_cast<std::uint32_t>(rng.next_below(4));
        std::vector<double> costs;
        for (std::uint32_t i = 0; i < devices * accum; ++i) {
            costs.push_back(static_cast<double>(rng.next_below(10000)));
        }
        StepPlan plan = reorder(costs, devices, accum);
        std::vector<std::size_t> seen;
        for (const auto& micro : plan.grid) {
            seen.insert(seen.end(), micro.begin(), micro.end());
        }
        std::sort(seen.begin(), seen.end());
        for (std::size_t i = 0; i < seen.size(); ++i) {
            CHECK(seen[i] == i);
        }
    }
}

TEST_CASE("sorted makespan dominates manifest order and matches the exhaustive optimum") {
    Rng rng(11);
    int evaluated = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::uint32_t devices[] = {2, 4, 8};
        const std::uint32_t accums[] = {1, 2, 4};
        const std::uint32_t d = devices[rng.next_below(3)];
        const std::uint32_t a = accums[rng.next_below(3)];
        std::vector<double> costs;
        for (std::uint32_t i = 0; i < d * a; ++i) {
            costs.push_back(static_cast<double>(1 + rng.next_below(1 << 20)));
        }
        const double sorted = makespan(reorder(costs, d, a));
        const double manifest = makespan(manifest_plan(costs, d, a));
        CHECK(sorted <= manifest);
        if (static_cast<std::size_t>(d) * a <= 8) {
            CHECK(sorted == doctest::Approx(brute_force_optimal(costs, d, a)));
            ++evaluated;
        }
    }
    CHECK(evaluated > 0);
}

TEST_CASE("throughput report is zero for identical sequences") {
    std::vector<double> costs(64, 42.0);
    ThroughputReport report = throughput_report(costs, 8, 4, 1024);
    CHECK(report.speedup() == doctest::Approx(0.0));
    CHECK(report.steps.size() == 2);
    CHECK(report.sequences_leftover == 0);
}

TEST_CASE("mixed workloads give a strictly positive modeled speedup") {
    CostModel model;
    // Half many-document packs, half single-document packs, interleaved so the
    // manifest order mixes them within micro-steps.
    std::vector<double> costs;
    std::vector<std::uint64_t> segmented(64, 1024);
    for (int i = 0; i < 32; ++i) {
        costs.push_back(model.cost_of_segments(segmented));
        costs.push_back(model.cost_of_segments({65536}));
    }
    ThroughputReport report = throughput_report(costs, 8, 4, 65536);
    CHECK(report.speedup() > 0.0);
    CHECK(report.total_sorted < report.total_manifest);
}

TEST_CASE("throughput report tracks budget progress and leftovers") {
    std::vector<double> costs(70, 1.0);
    ThroughputReport report = throughput_report(costs, 8, 4, 1000);
    CHECK(report.steps.size() == 2);
    CHECK(report.sequences_leftover == 6);
    CHECK(report.tokens_scheduled == 64000);
    const std::string text = report.to_text(128000);
    CHECK(text.find("50%") != std::string::npos);
    const std::string csv = report.to_csv();
    CHECK(csv.find("step,unsorted_makespan,sorted_makespan") == 0);
}
