#pragma once

// P-ID pair matching: minimize f1 + f2 over permutations, where f1 is the mean assigned
// cost and f2 the (scaled) dispersion of the assigned costs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "dia/common.hpp"
#include "dia/errors.hpp"
#include "dia/identity.hpp"

namespace dia {

using CostMatrix = Eigen::MatrixXd;
using Permutation = std::vector<std::size_t>;  // measured index -> predicted index

struct Objective {
    double f1 = 0.0;
    double f2 = 0.0;
    double total() const { return f1 + f2; }
};

struct Assignment {
    Permutation perm;
    double f1 = 0.0;
    double f2 = 0.0;
    double total() const { return f1 + f2; }
};

inline bool is_permutation_of_size(std::span<const std::size_t> perm, std::size_t k) {
    if (perm.size() != k) return false;
    std::vector<char> seen(k, 0);
    for (std::size_t j : perm) {
        if (j >= k || seen[j]) return false;
        seen[j] = 1;
    }
    return true;
}

/// f1 = (1/K) sum D(i, perm(i)); f2 = (1/K) sqrt(sum (D(i, perm(i)) - f1)^2) over the
/// assigned pairs.
inline Objective objective(std::span<const std::size_t> perm, const CostMatrix& d) {
    const auto k = static_cast<std::size_t>(d.rows());
    if (d.rows() != d.cols()) throw DimensionError("objective: cost matrix must be square");
    if (!is_permutation_of_size(perm, k)) {
        throw ConstraintError("objective: assignment is not a bijection");
    }
    if (k == 0) return {};
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += d(i, perm[i]);
    Objective o;
    o.f1 = sum / static_cast<double>(k);
    double sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double e = d(i, perm[i]) - o.f1;
        sq += e * e;
    }
    o.f2 = std::sqrt(sq) / static_cast<double>(k);
    return o;
}

inline Assignment make_assignment(Permutation perm, const CostMatrix& d) {
    const Objective o = objective(perm, d);
    return {std::move(perm), o.f1, o.f2};
}

/// D = 1 / S elementwise.
inline CostMatrix cost_from_similarity(const Eigen::MatrixXd& s) {
    if ((s.array() <= 0.0).any()) throw DomainError("cost_from_similarity: similarity must be > 0");
    return s.cwiseInverse();
}

/// Minimum-sum (f1-optimal) linear assignment, shortest augmenting path with potentials.
inline Permutation solve_linear_assignment(const CostMatrix& d) {
    if (d.rows() != d.cols()) throw DimensionError("solve_linear_assignment: square matrix required");
    const auto n = static_cast<std::size_t>(d.rows());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = d(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    Permutation perm(n);
    for (std::size_t j = 1; j <= n; ++j) perm[p[j] - 1] = j - 1;
    return perm;
}

inline constexpr std::size_t kDefaultExactLimit = 8;

/// Exhaustive search in lexicographic order; the first strict minimizer of f1 + f2 wins.
inline Assignment solve_exact(const CostMatrix& d, std::size_t k_exact = kDefaultExactLimit) {
    if (d.rows() != d.cols()) throw DimensionError("solve_exact: square matrix required");
    const auto k = static_cast<std::size_t>(d.rows());
    if (k > k_exact) throw SizeError("solve_exact: problem larger than the exhaustive limit");
    Permutation perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Permutation best = perm;
    double best_total = std::numeric_limits<double>::infinity();
    do {
        const double t = objective(perm, d).total();
        if (t < best_total) {
            best_total = t;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return make_assignment(std::move(best), d);
}

namespace detail {

// Running sums of the assigned costs so a swap is scored in O(1).
struct CostMoments {
    double sum = 0.0;
    double sum_sq = 0.0;
    double k = 1.0;

    double total() const {
        const double f1 = sum / k;
        const double var = std::max(sum_sq - k * f1 * f1, 0.0);
        return f1 + std::sqrt(var) / k;
    }
};

inline CostMoments moments(const Permutation& perm, const CostMatrix& d) {
    CostMoments m;
    m.k = static_cast<double>(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const double c = d(i, perm[i]);
        m.sum += c;
        m.sum_sq += c * c;
    }
    return m;
}

inline CostMoments swapped(const CostMoments& m, const Permutation& perm, const CostMatrix& d,
                           std::size_t a, std::size_t b) {
    const double old_a = d(a, perm[a]), old_b = d(b, perm[b]);
    const double new_a = d(a, perm[b]), new_b = d(b, perm[a]);
    CostMoments out = m;
    out.sum += new_a + new_b - old_a - old_b;
    out.sum_sq += new_a * new_a + new_b * new_b - old_a * old_a - old_b * old_b;
    return out;
}

// Best-improvement 2-swap descent. Returns the number of passes used.
inline std::size_t descend(Permutation& perm, const CostMatrix& d, std::size_t budget) {
    const std::size_t k = perm.size();
    std::size_t passes = 0;
    while (passes < budget) {
        ++passes;
        const CostMoments base = moments(perm, d);
        double best = base.total();
        const double tol = 1e-14 * std::max(1.0, std::abs(best));
        std::size_t best_a = k, best_b = k;
        for (std::size_t a = 0; a + 1 < k; ++a) {
            for (std::size_t b = a + 1; b < k; ++b) {
                const double t = swapped(base, perm, d, a, b).total();
                if (t < best - tol) {
                    best = t;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (best_a == k) break;
        std::swap(perm[best_a], perm[best_b]);
    }
    return passes;
}

}  // namespace detail

inline constexpr std::size_t kDefaultLocalIterations = 200;

/// Starts from the f1-optimal assignment, descends with 2-swaps, then spends the remaining
/// pass budget on random double-swap kicks from the incumbent (iterated local search).
/// Never returns an objective above the seed's.
inline Assignment solve_local_search(const CostMatrix& d, Rng& rng,
                                     std::size_t iters = kDefaultLocalIterations) {
    if (d.rows() != d.cols()) throw DimensionError("solve_local_search: square matrix required");
    const auto k = static_cast<std::size_t>(d.rows());
    Permutation best = solve_linear_assignment(d);
    if (iters == 0 || k < 2) return make_assignment(std::move(best), d);

    std::size_t used = detail::descend(best, d, iters);
    double best_total = objective(best, d).total();
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    while (used < iters) {
        Permutation trial = best;
        for (int kick = 0; kick < 2; ++kick) {
            const std::size_t a = pick(rng);
            std::size_t b = pick(rng);
            if (a == b) b = (b + 1) % k;
            std::swap(trial[a], trial[b]);
        }
        used += detail::descend(trial, d, iters - used);
        const double t = objective(trial, d).total();
        if (t < best_total) {
            best_total = t;
            best = std::move(trial);
        }
    }
    return make_assignment(std::move(best), d);
}

struct SolverOptions {
    std::size_t k_exact = kDefaultExactLimit;
    std::size_t local_iters = kDefaultLocalIterations;
};

/// Exact search up to k_exact targets, local search beyond.
inline Assignment solve_assignment(const CostMatrix& d, Rng& rng, const SolverOptions& opts = {}) {
    if (static_cast<std::size_t>(d.rows()) <= opts.k_exact) return solve_exact(d, opts.k_exact);
    return solve_local_search(d, rng, opts.local_iters);
}

enum class FeatureMode { location_only, velocity_only };

/// Single-feature matching with unit weight; feature 0 is location, feature 1 velocity.
inline Assignment baseline_assignment(const FeatureSet& measured, const FeatureSet& predicted,
                                      FeatureMode mode, Rng& rng, const SolverOptions& opts = {}) {
    const std::size_t m = mode == FeatureMode::location_only ? kLocationFeature : kVelocityFeature;
    if (m >= measured.features() || measured.features() != predicted.features() ||
        measured.targets() != predicted.targets()) {
        throw DimensionError("baseline_assignment: feature sets lack the requested feature");
    }
    const Eigen::MatrixXd c = cross_similarity(m, measured, predicted);
    return solve_assignment(cost_from_similarity(c), rng, opts);
}

}  // namespace dia
