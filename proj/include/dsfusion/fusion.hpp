#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dsfusion/boe.hpp"
#include "dsfusion/conflict_measures.hpp"
#include "dsfusion/errors.hpp"
#include "dsfusion/mass_function.hpp"

namespace dsfusion {

struct PipelineConfig {
    // The reference trace pins these: Deng entropy in base 10, divergence in
    // base 2, plain Euclidean distance, sigma 2.
    double deng_log_base = 10.0;
    double bjs_log_base = 2.0;
    double sigma = 2.0;
    DistanceWeighting distance_weighting = DistanceWeighting::identity;

    void validate() const {
        if (!(deng_log_base > 1.0) || !(bjs_log_base > 1.0))
            throw ValidationError("log bases must be > 1");
        if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
    }
};

// Mean divergence of each evidence to the others.
inline std::vector<double> average_bjs(std::span<const MassFunction> ms, double log_base) {
    const std::size_t count = ms.size();
    if (count < 2) throw ValidationError("average divergence needs at least two evidences");
    std::vector<double> out(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = i + 1; j < count; ++j) {
            const double d = bjs_divergence(ms[i], ms[j], log_base);
            out[i] += d;
            out[j] += d;
        }
        out[i] /= static_cast<double>(count - 1);
    }
    return out;
}

struct SupportDegrees {
    std::vector<double> raw;        // (aBJS_i * disagreement_i)^-1
    std::vector<double> normalized; // raw / sum(raw)
};

// Support of each evidence: the reciprocal of its divergence-from-the-rest
// scaled by its disagreement degree. Identical evidences would make the
// divergence zero, so it is floored at 1e-9 before inversion.
inline SupportDegrees support_degree(std::span<const MassFunction> ms,
                                     const PipelineConfig& cfg) {
    cfg.validate();
    const auto abjs = average_bjs(ms, cfg.bjs_log_base);
    const auto disagreement =
        disagreement_breakdown(ms, DisagreementConfig{cfg.sigma}, cfg.distance_weighting);

    SupportDegrees out;
    out.raw.resize(ms.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        out.raw[i] = 1.0 / (std::max(abjs[i], 1e-9) * disagreement.degrees[i]);
        sum += out.raw[i];
    }
    out.normalized.resize(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) out.normalized[i] = out.raw[i] / sum;
    return out;
}

struct CredibilityDegrees {
    std::vector<double> raw;        // exp(Deng entropy) * normalized support
    std::vector<double> normalized; // raw / sum(raw)
};

inline CredibilityDegrees credibility_degree(std::span<const MassFunction> ms,
                                             std::span<const double> support_norm,
                                             const PipelineConfig& cfg) {
    cfg.validate();
    if (support_norm.size() != ms.size())
        throw ValidationError("support vector length does not match evidence count");
    CredibilityDegrees out;
    out.raw.resize(ms.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        out.raw[i] = std::exp(deng_entropy(ms[i], cfg.deng_log_base)) * support_norm[i];
        sum += out.raw[i];
    }
    out.normalized.resize(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) out.normalized[i] = out.raw[i] / sum;
    return out;
}

// Each evidence's mass vector scaled by its normalized credibility; row i
// sums to credibility[i].
struct WeightedEvidence {
    std::vector<FocalSet> basis;
    std::vector<std::vector<double>> rows;
};

inline WeightedEvidence weight_evidences(std::span<const MassFunction> ms,
                                         std::span<const double> credibility_norm) {
    if (credibility_norm.size() != ms.size())
        throw ValidationError("credibility vector length does not match evidence count");
    WeightedEvidence out;
    out.basis = detail::union_basis(ms);
    out.rows.reserve(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) {
        auto row = detail::mass_vector(ms[i], out.basis);
        for (double& v : row) v *= credibility_norm[i];
        out.rows.push_back(std::move(row));
    }
    return out;
}

namespace detail {

// Conjunctive (Dempster) fold over scaled mass rows. Rows need not sum to 1;
// each step renormalizes by the total surviving product mass, which on unit
// inputs is exactly 1 - K. Throws when everything lands on the empty set.
inline std::map<FocalSet, double> conjunctive_fold(const WeightedEvidence& we) {
    std::map<FocalSet, double> acc;
    for (std::size_t j = 0; j < we.basis.size(); ++j)
        if (we.rows[0][j] > 0.0) acc[we.basis[j]] = we.rows[0][j];

    for (std::size_t i = 1; i < we.rows.size(); ++i) {
        std::map<FocalSet, double> next;
        double survived = 0.0;
        double total = 0.0;
        for (const auto& [a, ma] : acc) {
            for (std::size_t j = 0; j < we.basis.size(); ++j) {
                const double mb = we.rows[i][j];
                if (mb <= 0.0) continue;
                const double product = ma * mb;
                total += product;
                const FocalSet inter = a.intersect(we.basis[j]);
                if (!inter.empty()) {
                    next[inter] += product;
                    survived += product;
                }
            }
        }
        if (survived <= total * 1e-12 || survived <= 0.0)
            throw TotalConflictError(1.0, static_cast<int>(i) - 1, static_cast<int>(i));
        for (auto& [set, mass] : next) mass /= survived;
        acc = std::move(next);
    }
    return acc;
}

} // namespace detail

struct FusionDiagnostics {
    std::vector<double> avg_divergence;    // aBJS per evidence
    std::vector<double> disagreement;      // arctan-squashed scatter shift
    std::vector<double> support;           // raw support degrees
    std::vector<double> support_norm;      // normalized support degrees
    std::vector<double> deng;              // Deng entropy per evidence
    std::vector<double> credibility;       // raw credibility degrees
    std::vector<double> credibility_norm;  // normalized credibility degrees
};

struct SampleFusion {
    MassFunction fused;
    int predicted_class = 0; // argmax over singleton masses, 0-based
    FusionDiagnostics diagnostics;
};

inline int argmax_singleton(const MassFunction& m) {
    int best = 0;
    double best_mass = m.mass(FocalSet::singleton(0));
    for (std::size_t k = 1; k < m.frame()->size(); ++k) {
        const double v = m.mass(FocalSet::singleton(k));
        if (v > best_mass) {
            best_mass = v;
            best = static_cast<int>(k);
        }
    }
    return best;
}

// Full per-sample pipeline: divergence, disagreement, support, credibility,
// weighted evidences, then the Dempster fold of the weighted rows. A single
// evidence bypasses the pipeline and is returned unchanged.
inline SampleFusion fuse(std::span<const MassFunction> ms, const PipelineConfig& cfg) {
    cfg.validate();
    if (ms.empty()) throw ValidationError("fuse needs at least one evidence");
    if (ms.size() == 1) {
        SampleFusion out{ms[0], argmax_singleton(ms[0]), {}};
        out.diagnostics.avg_divergence = {0.0};
        out.diagnostics.disagreement = {0.5};
        out.diagnostics.support = {1.0};
        out.diagnostics.support_norm = {1.0};
        out.diagnostics.deng = {deng_entropy(ms[0], cfg.deng_log_base)};
        out.diagnostics.credibility = {1.0};
        out.diagnostics.credibility_norm = {1.0};
        return out;
    }
    for (std::size_t i = 1; i < ms.size(); ++i) detail::require_same_frame(ms[0], ms[i]);

    FusionDiagnostics diag;
    diag.avg_divergence = average_bjs(ms, cfg.bjs_log_base);
    diag.disagreement =
        disagreement_breakdown(ms, DisagreementConfig{cfg.sigma}, cfg.distance_weighting).degrees;
    const auto sd = support_degree(ms, cfg);
    diag.support = sd.raw;
    diag.support_norm = sd.normalized;
    diag.deng.reserve(ms.size());
    for (const auto& m : ms) diag.deng.push_back(deng_entropy(m, cfg.deng_log_base));
    const auto cd = credibility_degree(ms, sd.normalized, cfg);
    diag.credibility = cd.raw;
    diag.credibility_norm = cd.normalized;

    const auto weighted = weight_evidences(ms, cd.normalized);
    auto fused_map = detail::conjunctive_fold(weighted);

    // prune float dust like the two-operand rule does
    double kept = 0.0;
    for (auto it = fused_map.begin(); it != fused_map.end();) {
        if (it->second < 1e-12) {
            it = fused_map.erase(it);
        } else {
            kept += it->second;
            ++it;
        }
    }
    for (auto& [set, mass] : fused_map) mass /= kept;

    MassFunction fused(ms[0].frame(), std::move(fused_map));
    const int predicted = argmax_singleton(fused);
    return SampleFusion{std::move(fused), predicted, std::move(diag)};
}

struct FusionResult {
    FramePtr frame;
    std::vector<SampleFusion> samples;
};

// Per-sample fusion across aligned bodies of evidence.
inline FusionResult fuse_dataset(std::span<const BodyOfEvidence> boes,
                                 const PipelineConfig& cfg) {
    if (boes.empty()) throw ValidationError("fuse_dataset needs at least one body of evidence");
    const std::size_t n_samples = boes[0].samples();
    for (const auto& boe : boes) {
        if (!same_frame(boe.frame, boes[0].frame))
            throw FrameMismatchError("bodies of evidence live on different frames");
        if (boe.samples() != n_samples)
            throw ValidationError("bodies of evidence disagree on sample count");
    }

    FusionResult result{boes[0].frame, {}};
    result.samples.reserve(n_samples);
    std::vector<MassFunction> row;
    for (std::size_t i = 0; i < n_samples; ++i) {
        row.clear();
        row.reserve(boes.size());
        for (const auto& boe : boes) row.push_back(boe.per_sample[i]);
        result.samples.push_back(fuse(row, cfg));
    }
    return result;
}

} // namespace dsfusion
