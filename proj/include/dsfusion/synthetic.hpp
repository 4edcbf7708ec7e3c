#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dsfusion/classifiers.hpp"
#include "dsfusion/errors.hpp"
#include "dsfusion/rng.hpp"

namespace dsfusion {

// Two Gaussian blobs, one per class, centered at -separation/2 and
// +separation/2 on every feature axis. imbalance_ratio sizes class 0
// (majority) against class 1 (minority / "defect").
struct SyntheticSpec {
    std::string name = "two-blob";
    std::size_t samples = 300;
    std::size_t features = 2;
    double separation = 2.5;
    double stddev = 1.0;
    double imbalance_ratio = 1.0;
    std::uint64_t seed = 0;
};

inline Dataset make_two_blob(const SyntheticSpec& spec) {
    if (spec.samples < 6) throw ValidationError("need at least 6 samples");
    if (!(spec.stddev > 0.0)) throw ValidationError("stddev must be positive");
    if (spec.imbalance_ratio < 1.0) throw ValidationError("imbalance ratio must be >= 1");

    const auto total = static_cast<double>(spec.samples);
    auto minority = static_cast<std::size_t>(std::llround(total / (1.0 + spec.imbalance_ratio)));
    minority = std::max<std::size_t>(minority, 3);
    const std::size_t majority = spec.samples - minority;

    std::vector<double> features;
    features.reserve(spec.samples * spec.features);
    std::vector<int> labels;
    labels.reserve(spec.samples);
    for (std::size_t i = 0; i < spec.samples; ++i) {
        const int label = i < majority ? 0 : 1;
        const double center = label == 0 ? -spec.separation / 2.0 : spec.separation / 2.0;
        rng::Stream stream(rng::derive(spec.seed, {0x5b0bULL, i}));
        for (std::size_t j = 0; j < spec.features; ++j)
            features.push_back(center + spec.stddev * stream.next_normal());
        labels.push_back(label);
    }
    return Dataset(spec.name, std::move(features), spec.features, std::move(labels),
                   {"healthy", "defect"});
}

} // namespace dsfusion
