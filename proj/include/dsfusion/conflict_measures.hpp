#pragma once

#include <cmath>
#include <numbers>
#include <set>
#include <span>
#include <vector>

#include "dsfusion/errors.hpp"
#include "dsfusion/mass_function.hpp"

namespace dsfusion {

// Weighting matrix used inside the evidence distance. `jaccard` builds
// Jac(A,B) = |A∩B|/|A∪B| over the focal-set basis; `identity` reduces the
// quadratic form to plain Euclidean distance on the mass vectors.
enum class DistanceWeighting { identity, jaccard };

struct DisagreementConfig {
    // Sensitivity of the arctan squashing to the scatter difference.
    // Values reproduce the reference fusion trace with sigma = 2 applied
    // multiplicatively: 0.5 + atan(sigma * (SW - SW_without_q)) / pi.
    double sigma = 2.0;
};

namespace detail {

inline double log_in_base(double x, double base) { return std::log(x) / std::log(base); }

inline void require_valid_base(double base) {
    if (!(base > 1.0)) throw ValidationError("log base must be > 1");
}

// Union of focal sets across a list of mass functions, in canonical
// (ascending bitmask) order. All metrics align mass vectors on this basis.
inline std::vector<FocalSet> union_basis(std::span<const MassFunction> ms) {
    std::set<FocalSet> sets;
    for (const auto& m : ms)
        for (const auto& [set, mass] : m.assignments()) sets.insert(set);
    return {sets.begin(), sets.end()};
}

inline std::vector<double> mass_vector(const MassFunction& m, std::span<const FocalSet> basis) {
    std::vector<double> v(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) v[i] = m.mass(basis[i]);
    return v;
}

// sqrt(d^T W d) over an aligned difference vector.
inline double weighted_norm(std::span<const double> diff, std::span<const FocalSet> basis,
                            DistanceWeighting weighting) {
    double q = 0.0;
    if (weighting == DistanceWeighting::identity) {
        for (double d : diff) q += d * d;
    } else {
        for (std::size_t i = 0; i < diff.size(); ++i)
            for (std::size_t j = 0; j < diff.size(); ++j) {
                const double inter = basis[i].intersect(basis[j]).cardinality();
                const double uni = basis[i].unite(basis[j]).cardinality();
                q += diff[i] * (inter / uni) * diff[j];
            }
    }
    return std::sqrt(std::max(q, 0.0));
}

} // namespace detail

// Deng entropy: -sum m(A) log(m(A) / (2^|A| - 1)). Composite focal sets
// contribute more than singletons of equal mass.
inline double deng_entropy(const MassFunction& m, double log_base) {
    detail::require_valid_base(log_base);
    double e = 0.0;
    for (const auto& [set, mass] : m.assignments()) {
        if (mass <= 0.0) continue;
        const double volume = std::exp2(static_cast<double>(set.cardinality())) - 1.0;
        e -= mass * detail::log_in_base(mass / volume, log_base);
    }
    return e;
}

// Shannon entropy over the mass vector, each focal set one outcome.
inline double shannon_entropy(const MassFunction& m, double log_base) {
    detail::require_valid_base(log_base);
    double e = 0.0;
    for (const auto& [set, mass] : m.assignments())
        if (mass > 0.0) e -= mass * detail::log_in_base(mass, log_base);
    return e;
}

// Belief Jensen-Shannon divergence between two mass functions, computed
// componentwise over the union of their focal sets. Zero components
// contribute nothing (0 log 0 := 0).
inline double bjs_divergence(const MassFunction& m1, const MassFunction& m2, double log_base) {
    detail::require_same_frame(m1, m2);
    detail::require_valid_base(log_base);
    const MassFunction pair[] = {m1, m2};
    const auto basis = detail::union_basis(pair);
    double sum = 0.0;
    for (const FocalSet& set : basis) {
        const double a = m1.mass(set);
        const double b = m2.mass(set);
        const double avg = (a + b) / 2.0;
        if (a > 0.0) sum += a * detail::log_in_base(a / avg, log_base);
        if (b > 0.0) sum += b * detail::log_in_base(b / avg, log_base);
    }
    return 0.5 * sum;
}

// Evidence distance sqrt((m1-m2)^T W (m1-m2)); no 1/2 factor.
inline double evidence_distance(const MassFunction& m1, const MassFunction& m2,
                                DistanceWeighting weighting) {
    detail::require_same_frame(m1, m2);
    const MassFunction pair[] = {m1, m2};
    const auto basis = detail::union_basis(pair);
    std::vector<double> diff(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) diff[i] = m1.mass(basis[i]) - m2.mass(basis[i]);
    return detail::weighted_norm(diff, basis, weighting);
}

// Componentwise mean of a list of bodies of evidence plus the leave-one-out
// means (divided by L-1), aligned on the union focal-set basis.
struct BoeCenters {
    std::vector<FocalSet> basis;
    std::vector<double> center;
    std::vector<std::vector<double>> leave_one_out;
};

inline BoeCenters boe_centers(std::span<const MassFunction> ms) {
    const std::size_t count = ms.size();
    if (count < 2) throw ValidationError("centers need at least two bodies of evidence");
    for (std::size_t i = 1; i < count; ++i) detail::require_same_frame(ms[0], ms[i]);

    BoeCenters out;
    out.basis = detail::union_basis(ms);
    std::vector<std::vector<double>> rows;
    rows.reserve(count);
    for (const auto& m : ms) rows.push_back(detail::mass_vector(m, out.basis));

    out.center.assign(out.basis.size(), 0.0);
    for (const auto& row : rows)
        for (std::size_t j = 0; j < row.size(); ++j) out.center[j] += row[j];
    for (double& c : out.center) c /= static_cast<double>(count);

    out.leave_one_out.assign(count, std::vector<double>(out.basis.size(), 0.0));
    for (std::size_t q = 0; q < count; ++q) {
        auto& loo = out.leave_one_out[q];
        for (std::size_t i = 0; i < count; ++i) {
            if (i == q) continue;
            for (std::size_t j = 0; j < loo.size(); ++j) loo[j] += rows[i][j];
        }
        for (double& c : loo) c /= static_cast<double>(count - 1);
    }
    return out;
}

// Scatter of the evidences around their centers: SW is the mean distance to
// the global center, sw_excluding[q] the mean distance of the others to the
// center computed without q. degrees[q] squashes the difference into (0,1);
// 0.5 means removing q does not change the scatter.
struct DisagreementBreakdown {
    double sw = 0.0;
    std::vector<double> sw_excluding;
    std::vector<double> degrees;
};

inline DisagreementBreakdown disagreement_breakdown(std::span<const MassFunction> ms,
                                                    const DisagreementConfig& cfg,
                                                    DistanceWeighting weighting) {
    if (!(cfg.sigma > 0.0)) throw ValidationError("sigma must be positive");
    const auto centers = boe_centers(ms);
    const std::size_t count = ms.size();

    std::vector<std::vector<double>> rows;
    rows.reserve(count);
    for (const auto& m : ms) rows.push_back(detail::mass_vector(m, centers.basis));

    auto distance_to = [&](const std::vector<double>& row, const std::vector<double>& center) {
        std::vector<double> diff(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) diff[j] = row[j] - center[j];
        return detail::weighted_norm(diff, centers.basis, weighting);
    };

    DisagreementBreakdown out;
    for (std::size_t i = 0; i < count; ++i) out.sw += distance_to(rows[i], centers.center);
    out.sw /= static_cast<double>(count);

    out.sw_excluding.resize(count);
    out.degrees.resize(count);
    for (std::size_t q = 0; q < count; ++q) {
        double sum = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            if (i == q) continue;
            sum += distance_to(rows[i], centers.leave_one_out[q]);
        }
        out.sw_excluding[q] = sum / static_cast<double>(count - 1);
        out.degrees[q] =
            0.5 + std::atan(cfg.sigma * (out.sw - out.sw_excluding[q])) / std::numbers::pi;
    }
    return out;
}

inline double disagreement_degree(std::span<const MassFunction> ms, std::size_t q,
                                  const DisagreementConfig& cfg, DistanceWeighting weighting) {
    if (q >= ms.size()) throw ValidationError("disagreement index out of range");
    return disagreement_breakdown(ms, cfg, weighting).degrees[q];
}

} // namespace dsfusion
