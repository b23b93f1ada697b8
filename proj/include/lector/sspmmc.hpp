#pragma once

#include <cstddef>
#include <vector>

namespace lector {

// Discretized (difficulty, half-life) state space. Half-life bins are
// log-spaced over [h_min, horizon); any h >= horizon is absorbing.
struct SspMmcGrid {
    double h_min = 1.0;
    double horizon = 100.0;
    int n_half_life_bins = 40;
    int n_difficulty_bins = 10;
};

// Review at recall target a succeeds w.p. a (the scheduler's own
// exp(-dt/h) at dt = -h ln a); success scales h by growth_base -
// growth_slope * d, failure by failure_factor (floored at h_min).
struct SspMmcModel {
    double growth_base = 2.2;
    double growth_slope = 0.8;
    double failure_factor = 0.5;
    std::vector<double> actions{0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
};

class SspMmcPolicy {
public:
    SspMmcPolicy(SspMmcGrid grid, SspMmcModel model);

    const SspMmcGrid& grid() const noexcept { return grid_; }
    const SspMmcModel& model() const noexcept { return model_; }

    double half_life_bin(int k) const;
    double difficulty_bin(int i) const;
    // Nearest bin in log space; -1 marks the absorbing state.
    int half_life_index(double h) const;
    int difficulty_index(double d) const;
    bool absorbing(double h) const { return half_life_index(h) < 0; }

    // Expected remaining reviews and chosen action index, per state.
    double value(int d_index, int h_index) const;
    int action(int d_index, int h_index) const;
    // Recall target for a continuous state; absorbing states get the
    // longest-interval action (the smallest target).
    double target_for(double d, double h) const;

    int sweeps() const noexcept { return sweeps_; }
    double residual() const noexcept { return residual_; }

    // Largest |V - T V| over all states for the stored value table.
    double bellman_residual() const;
    // Value of following the stored action table, solved to `tolerance`.
    std::vector<double> evaluate_policy(double tolerance = 1e-12, int max_sweeps = 1'000'000) const;
    const std::vector<double>& values() const noexcept { return values_; }

private:
    friend SspMmcPolicy solve_sspmmc_policy(const SspMmcGrid&, const SspMmcModel&, double, int);

    struct Successors {
        int success;  // -1 = absorbing
        int failure;
    };
    Successors successors(int d_index, int h_index) const;
    std::size_t flat(int d_index, int h_index) const;
    double backup(const std::vector<double>& v, int d_index, int h_index, int action) const;

    SspMmcGrid grid_;
    SspMmcModel model_;
    std::vector<double> values_;
    std::vector<int> actions_;
    int sweeps_ = 0;
    double residual_ = 0.0;
};

// Value iteration minimizing expected reviews until h reaches the horizon.
// Stops when the max value change drops below `tolerance`; throws
// ConvergenceError (carrying the residual) after `max_sweeps`.
SspMmcPolicy solve_sspmmc_policy(const SspMmcGrid& grid, const SspMmcModel& model, double tolerance = 1e-6,
                                 int max_sweeps = 10'000);

}  // namespace lector
