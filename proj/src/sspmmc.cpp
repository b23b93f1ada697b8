#include "lector/sspmmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lector/errors.hpp"

namespace lector {

SspMmcPolicy::SspMmcPolicy(SspMmcGrid grid, SspMmcModel model) : grid_(grid), model_(std::move(model)) {
    if (grid_.n_half_life_bins < 2 || grid_.n_difficulty_bins < 2) {
        throw ConfigError("SSP-MMC grid needs at least 2 half-life and 2 difficulty bins");
    }
    if (!(grid_.h_min > 0.0 && grid_.horizon > grid_.h_min)) throw ConfigError("SSP-MMC grid needs 0 < h_min < horizon");
    if (model_.actions.empty()) throw ConfigError("SSP-MMC action set is empty");
    for (double a : model_.actions) {
        if (!(a > 0.0 && a <= 1.0)) throw ConfigError("SSP-MMC recall targets must lie in (0,1]");
    }
    if (!(model_.failure_factor > 0.0 && model_.failure_factor < 1.0)) {
        throw ConfigError("SSP-MMC failure factor must lie in (0,1)");
    }
    const std::size_t n = static_cast<std::size_t>(grid_.n_half_life_bins) * grid_.n_difficulty_bins;
    values_.assign(n, 0.0);
    actions_.assign(n, 0);
}

double SspMmcPolicy::half_life_bin(int k) const {
    return grid_.h_min * std::pow(grid_.horizon / grid_.h_min, static_cast<double>(k) / grid_.n_half_life_bins);
}

double SspMmcPolicy::difficulty_bin(int i) const { return static_cast<double>(i) / (grid_.n_difficulty_bins - 1); }

int SspMmcPolicy::half_life_index(double h) const {
    if (h >= grid_.horizon * (1.0 - 1e-12)) return -1;
    if (h <= grid_.h_min) return 0;
    double pos = std::log(h / grid_.h_min) / std::log(grid_.horizon / grid_.h_min) * grid_.n_half_life_bins;
    int k = static_cast<int>(std::lround(pos));
    // Rounding up to the horizon bin means the state is effectively there.
    if (k >= grid_.n_half_life_bins) return -1;
    return std::max(0, k);
}

int SspMmcPolicy::difficulty_index(double d) const {
    d = std::min(1.0, std::max(0.0, d));
    return static_cast<int>(std::lround(d * (grid_.n_difficulty_bins - 1)));
}

std::size_t SspMmcPolicy::flat(int d_index, int h_index) const {
    return static_cast<std::size_t>(d_index) * grid_.n_half_life_bins + h_index;
}

double SspMmcPolicy::value(int d_index, int h_index) const {
    if (h_index < 0) return 0.0;
    return values_.at(flat(d_index, h_index));
}

int SspMmcPolicy::action(int d_index, int h_index) const {
    if (h_index < 0) return static_cast<int>(std::min_element(model_.actions.begin(), model_.actions.end()) - model_.actions.begin());
    return actions_.at(flat(d_index, h_index));
}

double SspMmcPolicy::target_for(double d, double h) const {
    int k = half_life_index(h);
    return model_.actions.at(action(difficulty_index(d), k));
}

SspMmcPolicy::Successors SspMmcPolicy::successors(int d_index, int h_index) const {
    const double h = half_life_bin(h_index);
    const double growth = model_.growth_base - model_.growth_slope * difficulty_bin(d_index);
    int s = half_life_index(h * growth);
    // On a coarse grid a success could round back into its own bin and never
    // reach the horizon; any growth moves at least one bin up.
    if (growth > 1.0 && s >= 0 && s <= h_index) s = h_index + 1 < grid_.n_half_life_bins ? h_index + 1 : -1;
    int f = half_life_index(std::max(grid_.h_min, h * model_.failure_factor));
    return {s, f};
}

double SspMmcPolicy::backup(const std::vector<double>& v, int d_index, int h_index, int a) const {
    const double p = model_.actions[a];
    auto [s, f] = successors(d_index, h_index);
    const double vs = s < 0 ? 0.0 : v[flat(d_index, s)];
    const double vf = f < 0 ? 0.0 : v[flat(d_index, f)];
    return 1.0 + p * vs + (1.0 - p) * vf;
}

double SspMmcPolicy::bellman_residual() const {
    double worst = 0.0;
    for (int i = 0; i < grid_.n_difficulty_bins; ++i) {
        for (int k = 0; k < grid_.n_half_life_bins; ++k) {
            double best = std::numeric_limits<double>::infinity();
            for (int a = 0; a < static_cast<int>(model_.actions.size()); ++a) best = std::min(best, backup(values_, i, k, a));
            worst = std::max(worst, std::abs(best - values_[flat(i, k)]));
        }
    }
    return worst;
}

std::vector<double> SspMmcPolicy::evaluate_policy(double tolerance, int max_sweeps) const {
    std::vector<double> v(values_.size(), 0.0);
    std::vector<double> next(v.size(), 0.0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (int i = 0; i < grid_.n_difficulty_bins; ++i) {
            for (int k = 0; k < grid_.n_half_life_bins; ++k) {
                double nv = backup(v, i, k, actions_[flat(i, k)]);
                change = std::max(change, std::abs(nv - v[flat(i, k)]));
                next[flat(i, k)] = nv;
            }
        }
        v.swap(next);
        if (change < tolerance) return v;
    }
    throw ConvergenceError("policy evaluation did not converge", tolerance);
}

SspMmcPolicy solve_sspmmc_policy(const SspMmcGrid& grid, const SspMmcModel& model, double tolerance, int max_sweeps) {
    SspMmcPolicy policy(grid, model);
    std::vector<double> v(policy.values_.size(), 0.0);
    std::vector<double> next(v.size(), 0.0);
    const int n_actions = static_cast<int>(model.actions.size());
    double change = std::numeric_limits<double>::infinity();
    int sweep = 0;
    while (sweep < max_sweeps) {
        ++sweep;
        change = 0.0;
        for (int i = 0; i < grid.n_difficulty_bins; ++i) {
            for (int k = 0; k < grid.n_half_life_bins; ++k) {
                double best = std::numeric_limits<double>::infinity();
                int best_a = 0;
                for (int a = 0; a < n_actions; ++a) {
                    double q = policy.backup(v, i, k, a);
                    if (q < best - 1e-15) {
                        best = q;
                        best_a = a;
                    }
                }
                const std::size_t idx = policy.flat(i, k);
                change = std::max(change, std::abs(best - v[idx]));
                next[idx] = best;
                policy.actions_[idx] = best_a;
            }
        }
        v.swap(next);
        if (change < tolerance) break;
    }
    policy.values_ = std::move(v);
    policy.sweeps_ = sweep;
    policy.residual_ = change;
    if (!(change < tolerance)) {
        throw ConvergenceError("SSP-MMC value iteration did not converge within " + std::to_string(max_sweeps) +
                                   " sweeps (residual " + std::to_string(change) + ")",
                               change);
    }
    // A small sweep change does not bound the distance to the fixed point when
    // contraction is slow, so finish with policy iteration from the greedy policy.
    for (int round = 0; round < 100; ++round) {
        policy.values_ = policy.evaluate_policy();
        bool stable = true;
        for (int i = 0; i < grid.n_difficulty_bins; ++i) {
            for (int k = 0; k < grid.n_half_life_bins; ++k) {
                const std::size_t idx = policy.flat(i, k);
                double best = policy.backup(policy.values_, i, k, policy.actions_[idx]);
                for (int a = 0; a < n_actions; ++a) {
                    double q = policy.backup(policy.values_, i, k, a);
                    if (q < best - 1e-12) {
                        best = q;
                        policy.actions_[idx] = a;
                        stable = false;
                    }
                }
            }
        }
        if (stable) break;
    }
    policy.residual_ = policy.bellman_residual();
    return policy;
}

}  // namespace lector
