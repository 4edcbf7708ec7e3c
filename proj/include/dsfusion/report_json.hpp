#pragma once

#include <string>

#include <json.hpp>

#include "dsfusion/harness.hpp"
#include "dsfusion/io.hpp"

namespace dsfusion::io {

// Structured twin of the CSV outputs: raw cells plus the aggregate views.
inline nlohmann::ordered_json report_json(const ExperimentReport& report) {
    nlohmann::ordered_json root;
    root["dataset"] = report.dataset;

    auto& ensembles = root["ensembles"] = nlohmann::ordered_json::array();
    for (const auto& e : report.ensembles) ensembles.push_back(e.to_string());

    auto& levels = root["noise_levels"] = nlohmann::ordered_json::array();
    for (std::size_t level_idx = 0; level_idx < report.levels.size(); ++level_idx) {
        const auto& level = report.levels[level_idx];
        nlohmann::ordered_json level_json;
        level_json["rms_fraction"] = level.rms_fraction;

        auto& reps = level_json["repetitions"] = nlohmann::ordered_json::array();
        for (const auto& rep : level.repetitions) {
            nlohmann::ordered_json rep_json;
            rep_json["repetition"] = rep.repetition;
            auto& cells = rep_json["cells"] = nlohmann::ordered_json::array();
            for (const auto& cell : rep.cells) {
                cells.push_back({{"ensemble", report.ensembles[cell.ensemble_index].to_string()},
                                 {"scheme", to_string(cell.scheme)},
                                 {"valid_acc", cell.metrics.valid_acc},
                                 {"test_acc", cell.metrics.test_acc},
                                 {"test_spc", cell.metrics.test_spc},
                                 {"status", cell.ok ? "ok" : "failed"}});
            }
            auto& summaries = rep_json["max_accuracy"] = nlohmann::ordered_json::array();
            for (WeightScheme scheme : kAllWeightSchemes) {
                const auto s = scheme_summary(rep, scheme);
                summaries.push_back({{"scheme", to_string(scheme)},
                                     {"max_test_acc", s.max_test_acc},
                                     {"occurrences", s.occurrences}});
            }
            const auto best = best_scheme_summary(rep);
            summaries.push_back({{"scheme", "best"},
                                 {"max_test_acc", best.max_test_acc},
                                 {"occurrences", best.occurrences}});
            reps.push_back(std::move(rep_json));
        }

        auto& sizes = level_json["best_by_size"] = nlohmann::ordered_json::array();
        const auto emit_sizes = [&](const std::string& name,
                                    const std::vector<MeanStd>& stats) {
            for (std::size_t size = 0; size < stats.size(); ++size) {
                if (stats[size].count == 0) continue;
                sizes.push_back({{"scheme", name},
                                 {"size", size + 1},
                                 {"mean", stats[size].mean},
                                 {"stddev", stats[size].stddev},
                                 {"repetitions", stats[size].count}});
            }
        };
        for (WeightScheme scheme : kAllWeightSchemes)
            emit_sizes(to_string(scheme), size_statistics(report, level_idx, scheme));
        emit_sizes("best", size_statistics(report, level_idx, std::nullopt));

        const auto accs = best_accuracies_per_repetition(report, level_idx);
        const auto stats = mean_std(accs);
        double lo = accs.empty() ? 0.0 : accs[0];
        double hi = lo;
        for (double a : accs) {
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        level_json["best_over_repetitions"] = {
            {"min", lo}, {"mean", stats.mean}, {"max", hi}, {"stddev", stats.stddev}};
        levels.push_back(std::move(level_json));
    }
    return root;
}

} // namespace dsfusion::io
