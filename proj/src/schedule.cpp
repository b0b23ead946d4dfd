#include "lcdt/schedule.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lcdt {

double CostModel::cost_of_segments(const std::vector<std::uint64_t>& segment_lengths) const {
    double total = 0.0;
    std::uint64_t tokens = 0;
    for (std::uint64_t len : segment_lengths) {
        total += static_cast<double>(len) * static_cast<double>(len);
        tokens += len;
    }
    return total + linear_coefficient * static_cast<double>(tokens);
}

double CostModel::cost(const PackedSequence& seq) const {
    validate_packed(seq);
    double total = 0.0;
    for (std::size_t i = 1; i < seq.boundaries.size(); ++i) {
        const double len = static_cast<double>(seq.boundaries[i] - seq.boundaries[i - 1]);
        total += len * len;
    }
    return total + linear_coefficient * static_cast<double>(seq.length());
}

namespace {

StepPlan make_plan(const std::vector<double>& costs, std::uint32_t device_count,
                   std::uint32_t accum_steps, const std::vector<std::size_t>& order) {
    if (device_count == 0 || accum_steps == 0) {
        throw std::invalid_argument("device_count and accum_steps must be positive");
    }
    if (costs.size() != static_cast<std::size_t>(device_count) * accum_steps) {
        throw std::invalid_argument("expected " + std::to_string(device_count * accum_steps) +
                                    " minibatches, got " + std::to_string(costs.size()));
    }
    StepPlan plan;
    plan.device_count = device_count;
    plan.accum_steps = accum_steps;
    plan.costs = costs;
    plan.grid.resize(accum_steps);
    for (std::uint32_t a = 0; a < accum_steps; ++a) {
        plan.grid[a].assign(order.begin() + static_cast<std::ptrdiff_t>(a) * device_count,
                            order.begin() + static_cast<std::ptrdiff_t>(a + 1) * device_count);
    }
    return plan;
}

}  // namespace

StepPlan reorder(const std::vector<double>& minibatch_costs, std::uint32_t device_count,
                 std::uint32_t accum_steps) {
    std::vector<std::size_t> order(minibatch_costs.size());
    std::iota(order.begin(), order.end(), 0);
    // Ascending by cost; stable so ties keep manifest order.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return minibatch_costs[a] < minibatch_costs[b];
    });
    return make_plan(minibatch_costs, device_count, accum_steps, order);
}

StepPlan manifest_plan(const std::vector<double>& minibatch_costs, std::uint32_t device_count,
                       std::uint32_t accum_steps) {
    std::vector<std::size_t> order(minibatch_costs.size());
    std::iota(order.begin(), order.end(), 0);
    return make_plan(minibatch_costs, device_count, accum_steps, order);
}

double makespan(const StepPlan& plan) {
    if (plan.device_count == 0 || plan.accum_steps == 0 ||
        plan.grid.size() != plan.accum_steps) {
        throw std::invalid_argument("invalid step plan");
    }
    double total = 0.0;
    for (const auto& micro : plan.grid) {
        if (micro.size() != plan.device_count) {
            throw std::invalid_argument("micro-step width does not match device count");
        }
        double worst = 0.0;
        for (std::size_t idx : micro) {
            worst = std::max(worst, plan.costs.at(idx));
        }
        total += worst;
    }
    return total;
}

double ThroughputReport::speedup() const {
    if (total_sorted <= 0.0) {
        return 0.0;
    }
    return total_manifest / total_sorted - 1.0;
}

std::string ThroughputReport::to_text(std::uint64_t stage_token_budget) const {
    std::ostringstream out;
    out << "steps: " << steps.size() << "\n";
    out << "tokens scheduled: " << tokens_scheduled << "\n";
    if (sequences_leftover > 0) {
        out << "leftover minibatches (partial step, unscheduled): " << sequences_leftover << "\n";
    }
    out << "makespan manifest order: " << total_manifest << "\n";
    out << "makespan sorted:         " << total_sorted << "\n";
    out << "modeled speedup: " << speedup() * 100.0 << "%\n";
    if (stage_token_budget > 0) {
        out << "stage budget progress: "
            << 100.0 * static_cast<double>(tokens_scheduled) /
                   static_cast<double>(stage_token_budget)
            << "% of " << stage_token_budget << " tokens\n";
    }
    return out.str();
}

std::string ThroughputReport::to_csv() const {
    std::ostringstream out;
    out << "step,unsorted_makespan,sorted_makespan\n";
    for (const auto& s : steps) {
        out << s.step << "," << s.makespan_manifest << "," << s.makespan_sorted << "\n";
    }
    return out.str();
}

ThroughputReport throughput_report(const std::vector<double>& costs, std::uint32_t device_count,
                                   std::uint32_t accum_steps,
                                   std::uint64_t tokens_per_minibatch) {
    const std::size_t per_step = static_cast<std::size_t>(device_count) * accum_steps;
    if (per_step == 0) {
        throw std::invalid_argument("device_count and accum_steps must be positive");
    }
    ThroughputReport report;
    const std::size_t full_steps = costs.size() / per_step;
    report.sequences_leftover = costs.size() - full_steps * per_step;
    for (std::size_t s = 0; s < full_steps; ++s) {
        std::vector<double> step_costs(costs.begin() + static_cast<std::ptrdiff_t>(s * per_step),
                                       costs.begin() +
                                           static_cast<std::ptrdiff_t>((s + 1) * per_step));
        StepReport sr;
        sr.step = s;
        sr.makespan_manifest = makespan(manifest_plan(step_costs, device_count, accum_steps));
        sr.makespan_sorted = makespan(reorder(step_costs, device_count, accum_steps));
        report.total_manifest += sr.makespan_manifest;
        report.total_sorted += sr.makespan_sorted;
        report.steps.push_back(sr);
    }
    report.tokens_scheduled = full_steps * per_step * tokens_per_minibatch;
    return report;
}

}  // namespace lcdt
