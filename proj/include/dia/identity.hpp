#pragma once

// Physical-identity (P-ID) generation: cosine feature similarity, prevalence-based feature
// weights, and the weighted harmonic-mean similarity between measured and predicted P-IDs.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "dia/common.hpp"
#include "dia/errors.hpp"

namespace dia {

using Feature = Eigen::VectorXd;

// Feature slots used throughout: location first, velocity second.
inline constexpr std::size_t kLocationFeature = 0;
inline constexpr std::size_t kVelocityFeature = 1;

/// per_target[k][m] is feature m of target k.
struct FeatureSet {
    std::vector<std::vector<Feature>> per_target;

    std::size_t targets() const { return per_target.size(); }
    std::size_t features() const { return per_target.empty() ? 0 : per_target.front().size(); }

    const Feature& at(std::size_t k, std::size_t m) const { return per_target[k][m]; }

    void validate() const {
        const std::size_t mm = features();
        for (const auto& target : per_target) {
            if (target.size() != mm) throw DimensionError("FeatureSet: ragged feature lists");
            for (std::size_t m = 0; m < mm; ++m) {
                if (target[m].size() != per_target.front()[m].size()) {
                    throw DimensionError("FeatureSet: feature dimension differs across targets");
                }
            }
        }
    }
};

inline constexpr double kSimilarityFloor = 1e-9;

/// (1 + cos(a, b)) / 2 clamped to [1e-9, 1].
inline double feature_similarity(const Feature& a, const Feature& b) {
    if (a.size() != b.size()) throw DimensionError("feature_similarity: dimension mismatch");
    const double na = a.norm();
    const double nb = b.norm();
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw DegenerateFeatureError("feature_similarity: zero feature vector");
    }
    const double cosine = a.dot(b) / (na * nb);
    return std::clamp(0.5 * (1.0 + cosine), kSimilarityFloor, 1.0);
}

/// Pairwise similarities of feature m within one set.
inline Eigen::MatrixXd within_set_similarity(std::size_t m, const FeatureSet& set) {
    const std::size_t k = set.targets();
    Eigen::MatrixXd c = Eigen::MatrixXd::Ones(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            c(i, j) = c(j, i) = feature_similarity(set.at(i, m), set.at(j, m));
        }
    }
    return c;
}

namespace detail {

// P_k = sum_{j != k} C_kj prod_{q != j, q != k} (1 - C_kq), from a precomputed row of C.
inline double distinguishability_row(std::size_t k, const Eigen::MatrixXd& c) {
    const auto n = static_cast<std::size_t>(c.rows());
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == k) continue;
        double prod = 1.0;
        for (std::size_t q = 0; q < n; ++q) {
            if (q == j || q == k) continue;
            prod *= 1.0 - c(k, q);
        }
        total += c(k, j) * prod;
    }
    return total;
}

// Mean dissimilarity of target k to every other target: (1/(K-1)) sum_{j != k} (1 - C_kj).
inline double dissimilarity_row(std::size_t k, const Eigen::MatrixXd& c) {
    const auto n = static_cast<std::size_t>(c.rows());
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j != k) total += 1.0 - c(k, j);
    }
    return total / static_cast<double>(n - 1);
}

}  // namespace detail

inline double distinguishability(std::size_t k, std::size_t m, const FeatureSet& features) {
    if (features.targets() < 2) {
        throw NotApplicableError("distinguishability: needs at least two targets");
    }
    if (k >= features.targets() || m >= features.features()) {
        throw DimensionError("distinguishability: index out of range");
    }
    return detail::distinguishability_row(k, within_set_similarity(m, features));
}

/// How a target's per-feature distinguishability is scored before averaging into weights.
///   product:       the sum-of-products formula above. Its K-2 fold product makes the
///                  normalized weights close to one-hot for fleets of ten or more.
///   dissimilarity: mean pairwise dissimilarity 1 - C; same prevalence ordering, graded.
enum class WeightRule { product, dissimilarity };

/// Raw weight w(m) = mean_k P_k(m), normalized to sum to one; uniform if every raw weight
/// is zero.
inline Eigen::VectorXd feature_weights(const FeatureSet& features,
                                       WeightRule rule = WeightRule::product) {
    features.validate();
    const std::size_t k = features.targets();
    const std::size_t mm = features.features();
    if (k < 2) throw NotApplicableError("feature_weights: needs at least two targets");
    Eigen::VectorXd w(mm);
    for (std::size_t m = 0; m < mm; ++m) {
        const Eigen::MatrixXd c = within_set_similarity(m, features);
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            sum += rule == WeightRule::product ? detail::distinguishability_row(i, c)
                                               : detail::dissimilarity_row(i, c);
        }
        w(static_cast<Eigen::Index>(m)) = sum / static_cast<double>(k);
    }
    const double total = w.sum();
    if (!(total > 0.0)) return Eigen::VectorXd::Constant(mm, 1.0 / static_cast<double>(mm));
    return w / total;
}

struct SimilarityMatrix {
    Eigen::MatrixXd s;
    Eigen::VectorXd weights;
};

/// S(i,j) = [sum_m w(m) / C_m(i,j)]^-1 from precomputed per-feature cross similarities.
inline Eigen::MatrixXd harmonic_similarity(std::span<const Eigen::MatrixXd> per_feature,
                                           const Eigen::VectorXd& weights) {
    if (per_feature.empty() || static_cast<Eigen::Index>(per_feature.size()) != weights.size()) {
        throw DimensionError("harmonic_similarity: one weight per feature matrix required");
    }
    const auto rows = per_feature.front().rows();
    const auto cols = per_feature.front().cols();
    Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(rows, cols);
    for (std::size_t m = 0; m < per_feature.size(); ++m) {
        const auto& c = per_feature[m];
        if (c.rows() != rows || c.cols() != cols) {
            throw DimensionError("harmonic_similarity: feature matrices differ in shape");
        }
        inv += weights(static_cast<Eigen::Index>(m)) * c.cwiseInverse();
    }
    return inv.cwiseInverse();
}

/// Cross similarity C_m(i, j) between measured target i and predicted target j.
inline Eigen::MatrixXd cross_similarity(std::size_t m, const FeatureSet& measured,
                                        const FeatureSet& predicted) {
    const std::size_t k = measured.targets();
    Eigen::MatrixXd c(k, predicted.targets());
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < predicted.targets(); ++j) {
            c(i, j) = feature_similarity(measured.at(i, m), predicted.at(j, m));
        }
    }
    return c;
}

/// Weights come from the measured set; rows index measured targets, columns predicted ones.
inline SimilarityMatrix similarity_matrix(const FeatureSet& measured, const FeatureSet& predicted,
                                          WeightRule rule = WeightRule::product) {
    measured.validate();
    predicted.validate();
    if (measured.targets() != predicted.targets() || measured.features() != predicted.features()) {
        throw DimensionError("similarity_matrix: measured and predicted sets differ in shape");
    }
    SimilarityMatrix out;
    out.weights = measured.targets() >= 2
                      ? feature_weights(measured, rule)
                      : Eigen::VectorXd::Constant(measured.features(),
                                                  1.0 / static_cast<double>(measured.features()));
    std::vector<Eigen::MatrixXd> per_feature;
    for (std::size_t m = 0; m < measured.features(); ++m) {
        per_feature.push_back(cross_similarity(m, measured, predicted));
    }
    out.s = harmonic_similarity(per_feature, out.weights);
    return out;
}

/// Relative position with a reference range appended. Appending the vector's own norm
/// would leave the cosine blind to magnitude (the augmented vector is then a multiple of a
/// unit-direction vector); a constant keeps both direction and range in play.
inline Feature position_feature(const Vec3& relative_position, double reference_range) {
    Feature f(4);
    f << relative_position, reference_range;
    return f;
}

/// Radial speed with a reference speed appended; the cosine then orders radial speeds.
inline Feature radial_speed_feature(double radial_speed, double reference_speed) {
    Feature f(2);
    f << radial_speed, reference_speed;
    return f;
}

}  // namespace dia
