#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dsfusion/fusion.hpp"
#include "dsfusion/mass_function.hpp"

namespace dsfusion {

// Built-in worked example: four classifiers on a two-class frame hand the
// pipeline the evidence vectors below, and every intermediate of the fusion
// has a published reference value. Running it end to end pins down the log
// bases, the distance mode, the sigma handling, and the final combination,
// so a config change that breaks any of them fails loudly here.

struct SelfTestCheck {
    std::string step;
    std::string quantity;
    double expected = 0.0;
    double actual = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct SelfTestReport {
    std::vector<SelfTestCheck> checks;
    bool passed = true;
    std::string first_failure;

    void add(const std::string& step, const std::string& quantity, double expected,
             double actual, double tolerance) {
        const bool ok = std::abs(actual - expected) <= tolerance;
        checks.push_back({step, quantity, expected, actual, tolerance, ok});
        if (!ok && passed) {
            passed = false;
            first_failure = step + ": " + quantity;
        }
    }
};

// The four reference evidence vectors over ({E1}, {E2}, {E1,E2}).
inline std::vector<MassFunction> selftest_evidences() {
    const FramePtr frame = Frame::indexed(2);
    const FocalSet e1 = FocalSet::singleton(0);
    const FocalSet e2 = FocalSet::singleton(1);
    const FocalSet both = FocalSet::full(*frame);
    const double rows[4][3] = {
        {0.5, 0.1, 0.4}, {0.3, 0.3, 0.4}, {0.5, 0.0, 0.5}, {0.4, 0.2, 0.4}};
    std::vector<MassFunction> out;
    for (const auto& row : rows) {
        std::map<FocalSet, double> m;
        if (row[0] > 0) m[e1] = row[0];
        if (row[1] > 0) m[e2] = row[1];
        if (row[2] > 0) m[both] = row[2];
        out.emplace_back(frame, std::move(m));
    }
    return out;
}

inline SelfTestReport run_selftest(const PipelineConfig& cfg = {}) {
    const double tol = 0.005;
    const double sd_tol = 0.15; // raw support magnitudes are large

    const auto evidences = selftest_evidences();
    const std::span<const MassFunction> ms(evidences);

    SelfTestReport report;
    const auto vec_checks = [&](const std::string& step, const std::string& name,
                                std::span<const double> expected,
                                std::span<const double> actual, double tolerance) {
        for (std::size_t i = 0; i < expected.size(); ++i)
            report.add(step, name + "[" + std::to_string(i + 1) + "]", expected[i], actual[i],
                       tolerance);
    };

    const auto abjs = average_bjs(ms, cfg.bjs_log_base);
    const double abjs_ref[] = {0.042, 0.080, 0.111, 0.046};
    vec_checks("step 1", "aBJS", abjs_ref, abjs, tol);

    const auto disagreement =
        disagreement_breakdown(ms, DisagreementConfig{cfg.sigma}, cfg.distance_weighting);
    report.add("step 2", "SW", 0.134, disagreement.sw, tol);
    const double degree_ref[] = {0.496, 0.522, 0.525, 0.487};
    vec_checks("step 2", "disagreement", degree_ref, disagreement.degrees, tol);

    const auto sd = support_degree(ms, cfg);
    const double sd_ref[] = {47.95, 23.87, 17.09, 45.02};
    vec_checks("step 3", "SD", sd_ref, sd.raw, sd_tol);

    const double sdn_ref[] = {0.358, 0.178, 0.128, 0.336};
    vec_checks("step 4", "SD_norm", sdn_ref, sd.normalized, tol);

    std::vector<double> deng;
    for (const auto& m : evidences) deng.push_back(deng_entropy(m, cfg.deng_log_base));
    const double deng_ref[] = {0.601, 0.664, 0.540, 0.650};
    vec_checks("step 5", "E_d", deng_ref, deng, tol);

    const auto cd = credibility_degree(ms, sd.normalized, cfg);
    const double cdn_ref[] = {0.351, 0.186, 0.118, 0.346};
    vec_checks("step 6", "CD_norm", cdn_ref, cd.normalized, tol);

    const auto weighted = weight_evidences(ms, cd.normalized);
    const double we_ref[] = {0.175, 0.035, 0.140};
    vec_checks("step 7", "WE_row1", we_ref, weighted.rows[0], tol);

    const auto fusion = fuse(ms, cfg);
    const Frame& frame = *fusion.fused.frame();
    const double fused_actual[] = {fusion.fused.mass(FocalSet::singleton(0)),
                                   fusion.fused.mass(FocalSet::singleton(1)),
                                   fusion.fused.mass(FocalSet::full(frame))};
    const double fused_ref[] = {0.818, 0.1265, 0.056};
    vec_checks("step 8", "fused", fused_ref, fused_actual, tol);
    report.add("step 8", "predicted_class", 0.0,
               static_cast<double>(fusion.predicted_class), 0.0);
    return report;
}

} // namespace dsfusion
