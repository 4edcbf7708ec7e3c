#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dsfusion/boe.hpp"
#include "dsfusion/classifiers.hpp"
#include "dsfusion/errors.hpp"
#include "dsfusion/fusion.hpp"
#include "dsfusion/harness.hpp"

namespace dsfusion::io {

// %.17g round-trips every double exactly and prints identically run to run.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& text, const std::string& file, std::size_t row,
                           std::size_t col) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ParseError(file + ": row " + std::to_string(row) + ", column " +
                         std::to_string(col) + ": cannot parse '" + text + "' as a number");
    }
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
}

// ---------------------------------------------------------------------------
// score matrices: header `sample_id,score_<class>,...`, one row per sample

struct ScoreFile {
    ScoreMatrix scores;
    std::vector<std::string> class_names;
    std::vector<std::string> sample_ids;
    std::vector<std::vector<double>> raw_rows; // pre-normalization values
};

inline ScoreFile load_score_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2) throw ParseError(path + ": need a header and at least one row");
    const auto header = split_line(lines[0]);
    if (header.size() < 3 || header[0] != "sample_id")
        throw ParseError(path + ": header must be sample_id,score_<class>,...");

    ScoreFile out;
    for (std::size_t c = 1; c < header.size(); ++c) {
        std::string name = header[c];
        if (name.rfind("score_", 0) == 0) name = name.substr(6);
        if (name.empty())
            throw ParseError(path + ": empty class name in header column " + std::to_string(c));
        out.class_names.push_back(name);
    }
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_line(lines[r]);
        if (fields.size() != header.size())
            throw ParseError(path + ": row " + std::to_string(r) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        out.sample_ids.push_back(fields[0]);
        std::vector<double> row;
        for (std::size_t c = 1; c < fields.size(); ++c)
            row.push_back(parse_double(fields[c], path, r, c));
        out.raw_rows.push_back(std::move(row));
    }
    out.scores = ScoreMatrix::from_raw(std::filesystem::path(path).stem().string(),
                                       out.raw_rows);
    return out;
}

// ---------------------------------------------------------------------------
// confusion matrices: a bare integer grid, rows = predicted, columns = true

inline ConfusionMatrix load_confusion_csv(const std::string& path) {
    const auto lines = read_lines(path);
    std::vector<std::vector<std::int64_t>> counts;
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto fields = split_line(lines[r]);
        std::vector<std::int64_t> row;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const double v = parse_double(fields[c], path, r, c);
            if (v < 0 || v != std::floor(v))
                throw ParseError(path + ": row " + std::to_string(r) + ", column " +
                                 std::to_string(c) + ": counts must be non-negative integers");
            row.push_back(static_cast<std::int64_t>(v));
        }
        counts.push_back(std::move(row));
    }
    try {
        return ConfusionMatrix(std::move(counts));
    } catch (const ValidationError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// datasets: feature columns then a final `label` column; labels map to class
// indices in first-appearance order

inline Dataset load_dataset_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2) throw ParseError(path + ": need a header and at least one row");
    const auto header = split_line(lines[0]);
    if (header.size() < 2 || header.back() != "label")
        throw ParseError(path + ": last header column must be `label`");
    const std::size_t n_features = header.size() - 1;

    std::vector<double> features;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::map<std::string, int> class_index;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_line(lines[r]);
        if (fields.size() != header.size())
            throw ParseError(path + ": row " + std::to_string(r) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        for (std::size_t c = 0; c < n_features; ++c)
            features.push_back(parse_double(fields[c], path, r, c));
        const std::string& label = fields.back();
        auto [it, inserted] =
            class_index.try_emplace(label, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(label);
        labels.push_back(it->second);
    }
    return Dataset(std::filesystem::path(path).stem().string(), std::move(features), n_features,
                   std::move(labels), std::move(class_names));
}

inline void save_dataset_csv(const Dataset& data, const std::string& path) {
    std::string out;
    for (std::size_t j = 0; j < data.features(); ++j) out += "f" + std::to_string(j) + ",";
    out += "label\n";
    for (std::size_t i = 0; i < data.samples(); ++i) {
        for (std::size_t j = 0; j < data.features(); ++j)
            out += format_double(data.feature(i, j)) + ",";
        out += data.class_names()[static_cast<std::size_t>(data.labels()[i])] + "\n";
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// fusion output

inline std::string fused_csv(const FusionResult& result) {
    const Frame& frame = *result.frame;
    std::string out = "sample_id";
    for (std::size_t k = 0; k < frame.size(); ++k) out += ",mass_" + frame.label(k);
    out += ",mass_ignorance,predicted\n";
    for (std::size_t i = 0; i < result.samples.size(); ++i) {
        const auto& sample = result.samples[i];
        out += std::to_string(i);
        for (std::size_t k = 0; k < frame.size(); ++k)
            out += "," + format_double(sample.fused.mass(FocalSet::singleton(k)));
        out += "," + format_double(sample.fused.mass(FocalSet::full(frame)));
        out += "," + frame.label(static_cast<std::size_t>(sample.predicted_class)) + "\n";
    }
    return out;
}

inline std::string diagnostics_csv(const FusionResult& result,
                                   std::span<const std::string> classifier_ids) {
    std::string out =
        "sample_id,classifier,avg_divergence,disagreement,support,support_norm,"
        "deng_entropy,credibility,credibility_norm\n";
    for (std::size_t i = 0; i < result.samples.size(); ++i) {
        const auto& d = result.samples[i].diagnostics;
        for (std::size_t c = 0; c < d.avg_divergence.size(); ++c) {
            out += std::to_string(i) + ",";
            out += (c < classifier_ids.size() ? classifier_ids[c] : std::to_string(c));
            out += "," + format_double(d.avg_divergence[c]);
            out += "," + format_double(d.disagreement[c]);
            out += "," + format_double(d.support[c]);
            out += "," + format_double(d.support_norm[c]);
            out += "," + format_double(d.deng[c]);
            out += "," + format_double(d.credibility[c]);
            out += "," + format_double(d.credibility_norm[c]) + "\n";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// experiment report: raw cells plus aggregate views

inline std::string report_cells_csv(const ExperimentReport& report) {
    std::string out = "noise,repetition,ensemble,size,scheme,valid_acc,test_acc,test_spc,status\n";
    for (const auto& level : report.levels) {
        for (const auto& rep : level.repetitions) {
            for (const auto& cell : rep.cells) {
                const EnsembleId& e = report.ensembles[cell.ensemble_index];
                out += format_double(level.rms_fraction);
                out += "," + std::to_string(rep.repetition);
                out += "," + e.to_string();
                out += "," + std::to_string(e.size());
                out += "," + to_string(cell.scheme);
                out += "," + format_double(cell.metrics.valid_acc);
                out += "," + format_double(cell.metrics.test_acc);
                out += "," + format_double(cell.metrics.test_spc);
                out += cell.ok ? ",ok" : ",failed";
                out += "\n";
            }
        }
    }
    return out;
}

// Parses what report_cells_csv emits; the round-trip is exact.
inline ExperimentReport parse_report_cells_csv(const std::string& text,
                                               const std::string& context = "report") {
    ExperimentReport report;
    std::istringstream stream(text);
    std::string line;
    if (!std::getline(stream, line) ||
        line != "noise,repetition,ensemble,size,scheme,valid_acc,test_acc,test_spc,status")
        throw ParseError(context + ": bad header");

    std::map<std::string, std::size_t> ensemble_index;
    std::size_t row = 0;
    while (std::getline(stream, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != 9)
            throw ParseError(context + ": row " + std::to_string(row) + " has " +
                             std::to_string(fields.size()) + " fields, expected 9");
        const double noise = parse_double(fields[0], context, row, 0);
        const auto rep_index =
            static_cast<std::size_t>(parse_double(fields[1], context, row, 1));

        auto [it, inserted] = ensemble_index.try_emplace(fields[2], report.ensembles.size());
        if (inserted) {
            EnsembleId e;
            std::istringstream members(fields[2]);
            std::string tok;
            while (std::getline(members, tok, '+'))
                e.members.push_back(
                    static_cast<std::size_t>(parse_double(tok, context, row, 2)));
            report.ensembles.push_back(std::move(e));
        }

        if (report.levels.empty() || report.levels.back().rms_fraction != noise)
            report.levels.push_back(NoiseLevelResult{noise, {}});
        auto& level = report.levels.back();
        if (level.repetitions.empty() || level.repetitions.back().repetition != rep_index)
            level.repetitions.push_back(RepetitionResult{rep_index, {}});

        CellResult cell;
        cell.ensemble_index = it->second;
        cell.scheme = weight_scheme_from_string(fields[4]);
        cell.metrics.valid_acc = parse_double(fields[5], context, row, 5);
        cell.metrics.test_acc = parse_double(fields[6], context, row, 6);
        cell.metrics.test_spc = parse_double(fields[7], context, row, 7);
        cell.ok = fields[8] == "ok";
        level.repetitions.back().cells.push_back(std::move(cell));
    }
    return report;
}

// Per (noise, repetition, scheme) max accuracy with its occurrence count,
// plus the validation-selected scheme as a pseudo scheme "best".
inline std::string report_summary_csv(const ExperimentReport& report) {
    std::string out = "noise,repetition,scheme,max_test_acc,occurrences\n";
    for (const auto& level : report.levels) {
        for (const auto& rep : level.repetitions) {
            for (WeightScheme scheme : kAllWeightSchemes) {
                const auto s = scheme_summary(rep, scheme);
                out += format_double(level.rms_fraction) + "," +
                       std::to_string(rep.repetition) + "," + to_string(scheme) + "," +
                       format_double(s.max_test_acc) + "," + std::to_string(s.occurrences) +
                       "\n";
            }
            const auto best = best_scheme_summary(rep);
            out += format_double(level.rms_fraction) + "," + std::to_string(rep.repetition) +
                   ",best," + format_double(best.max_test_acc) + "," +
                   std::to_string(best.occurrences) + "\n";
        }
    }
    return out;
}

// Mean/std over repetitions of the best-of-size accuracy per scheme.
inline std::string report_size_stats_csv(const ExperimentReport& report) {
    std::string out = "noise,scheme,size,mean_best_acc,std_best_acc,repetitions\n";
    for (std::size_t level = 0; level < report.levels.size(); ++level) {
        const std::string noise = format_double(report.levels[level].rms_fraction);
        const auto emit = [&](const std::string& scheme_name,
                              const std::vector<MeanStd>& stats) {
            for (std::size_t size = 0; size < stats.size(); ++size) {
                if (stats[size].count == 0) continue;
                out += noise + "," + scheme_name + "," + std::to_string(size + 1) + "," +
                       format_double(stats[size].mean) + "," +
                       format_double(stats[size].stddev) + "," +
                       std::to_string(stats[size].count) + "\n";
            }
        };
        for (WeightScheme scheme : kAllWeightSchemes)
            emit(to_string(scheme), size_statistics(report, level, scheme));
        emit("best", size_statistics(report, level, std::nullopt));
    }
    return out;
}

// Range of the per-repetition best accuracy per noise level.
inline std::string report_overall_csv(const ExperimentReport& report) {
    std::string out = "noise,min_best_acc,mean_best_acc,max_best_acc,std_best_acc\n";
    for (std::size_t level = 0; level < report.levels.size(); ++level) {
        const auto accs = best_accuracies_per_repetition(report, level);
        const auto stats = mean_std(accs);
        double lo = accs.empty() ? 0.0 : accs[0];
        double hi = lo;
        for (double a : accs) {
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        out += format_double(report.levels[level].rms_fraction) + "," + format_double(lo) +
               "," + format_double(stats.mean) + "," + format_double(hi) + "," +
               format_double(stats.stddev) + "\n";
    }
    return out;
}

} // namespace dsfusion::io
