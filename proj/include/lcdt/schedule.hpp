#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcdt/packing.hpp"

namespace lcdt {

// Modeled attention work per sequence: sum over segments of (segment length)^2
// plus an optional linear term for non-attention work. Full attention over a
// length-L sequence costs L^2, an upper bound on any segmentation of L.
struct CostModel {
    double linear_coefficient = 0.0;

    double cost(const PackedSequence& seq) const;
    double cost_of_segments(const std::vector<std::uint64_t>& segment_lengths) const;
};

// One optimizer step: device_count x accum_steps grid of minibatch indices
// into some external list, each appearing exactly once. grid[a][d] is the
// minibatch of device d at accumulation micro-step a.
struct StepPlan {
    std::uint32_t device_count = 0;
    std::uint32_t accum_steps = 0;
    std::vector<std::vector<std::size_t>> grid;
    std::vector<double> costs;  // indexed like the external minibatch list
};

/// Sorts the D*A minibatch costs ascending (ties by original position) and
/// fills micro-step k with ranks [k*D, (k+1)*D). The multiset of minibatches
/// in the step is unchanged, so gradients are unaffected.
StepPlan reorder(const std::vector<double>& minibatch_costs, std::uint32_t device_count,
                 std::uint32_t accum_steps);

/// Identity plan in the given order, for comparing against `reorder`.
StepPlan manifest_plan(const std::vector<double>& minibatch_costs, std::uint32_t device_count,
                       std::uint32_t accum_steps);

/// Sum over micro-steps of the max per-device cost: modeled wall time of one
/// optimizer step under a barrier after every accumulation micro-step.
double makespan(const StepPlan& plan);

struct StepReport {
    std::uint64_t step = 0;
    double makespan_manifest = 0.0;
    double makespan_sorted = 0.0;
};

struct ThroughputReport {
    std::vector<StepReport> steps;
    std::uint64_t tokens_scheduled = 0;
    std::uint64_t sequences_leftover = 0;  // tail that does not fill a full step
    double total_manifest = 0.0;
    double total_sorted = 0.0;

    /// makespan(manifest) / makespan(sorted) - 1, aggregated over all steps.
    double speedup() const;

    std::string to_text(std::uint64_t stage_token_budget = 0) const;
    std::string to_csv() const;
};

/// Groups `costs` (in manifest order) into steps of D*A minibatches and
/// compares sorted vs manifest-order makespans. `tokens_per_minibatch` is
/// used only for budget-progress reporting.
ThroughputReport throughput_report(const std::vector<double>& costs, std::uint32_t device_count,
                                   std::uint32_t accum_steps, std::uint64_t tokens_per_minibatch);

}  // namespace lcdt
