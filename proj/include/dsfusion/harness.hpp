#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dsfusion/boe.hpp"
#include "dsfusion/classifiers.hpp"
#include "dsfusion/errors.hpp"
#include "dsfusion/fusion.hpp"
#include "dsfusion/rng.hpp"

namespace dsfusion {

// ---------------------------------------------------------------------------
// splits

struct SplitSpec {
    double train_frac = 0.50;
    double valid_frac = 0.15;
    double test_frac = 0.35;
    std::uint64_t seed = 0;

    void validate() const {
        if (train_frac < 0 || valid_frac < 0 || test_frac < 0 ||
            std::abs(train_frac + valid_frac + test_frac - 1.0) > 1e-9)
            throw ValidationError("split fractions must be non-negative and sum to 1");
    }
};

struct SplitIndices {
    std::vector<std::size_t> train, valid, test;
};

// Stratified partition: per class, indices are shuffled deterministically and
// allocated by largest remainder, so each split's class share is within one
// sample of the requested fraction.
inline SplitIndices stratified_split_indices(const Dataset& data, const SplitSpec& spec) {
    spec.validate();
    const auto counts = data.class_counts();
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] < 3)
            throw ValidationError("class " + std::to_string(k) +
                                  " has fewer than 3 samples, cannot split");

    SplitIndices out;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.samples(); ++i)
            if (static_cast<std::size_t>(data.labels()[i]) == k) members.push_back(i);
        rng::Stream stream(rng::derive(spec.seed, {0x517ULL, k}));
        rng::shuffle(members, stream);

        const double fracs[3] = {spec.train_frac, spec.valid_frac, spec.test_frac};
        std::size_t base[3];
        double remainder[3];
        std::size_t assigned = 0;
        for (int t = 0; t < 3; ++t) {
            const double quota = fracs[t] * static_cast<double>(members.size());
            base[t] = static_cast<std::size_t>(std::floor(quota));
            remainder[t] = quota - std::floor(quota);
            assigned += base[t];
        }
        std::size_t leftover = members.size() - assigned;
        std::array<int, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return remainder[a] != remainder[b] ? remainder[a] > remainder[b] : a < b;
        });
        for (std::size_t t = 0; t < leftover; ++t) ++base[order[t % 3]];

        std::size_t cursor = 0;
        for (std::size_t t = 0; t < base[0]; ++t) out.train.push_back(members[cursor++]);
        for (std::size_t t = 0; t < base[1]; ++t) out.valid.push_back(members[cursor++]);
        for (std::size_t t = 0; t < base[2]; ++t) out.test.push_back(members[cursor++]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.valid.begin(), out.valid.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline Dataset subset(const Dataset& data, std::span<const std::size_t> indices,
                      const std::string& suffix) {
    std::vector<double> features;
    features.reserve(indices.size() * data.features());
    std::vector<int> labels;
    labels.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto row = data.row(i);
        features.insert(features.end(), row.begin(), row.end());
        labels.push_back(data.labels()[i]);
    }
    return Dataset(data.name() + suffix, std::move(features), data.features(), std::move(labels),
                   data.class_names());
}

struct Splits {
    Dataset train, valid, test;
};

inline Splits stratified_split(const Dataset& data, const SplitSpec& spec) {
    const auto idx = stratified_split_indices(data, spec);
    return Splits{subset(data, idx.train, "/train"), subset(data, idx.valid, "/valid"),
                  subset(data, idx.test, "/test")};
}

// ---------------------------------------------------------------------------
// ensembles

struct EnsembleId {
    std::vector<std::size_t> members; // strictly increasing pool indices

    std::size_t size() const noexcept { return members.size(); }

    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (i) out += '+';
            out += std::to_string(members[i]);
        }
        return out;
    }

    bool operator==(const EnsembleId&) const = default;
};

// Every non-empty subset of the pool, grouped by size, lexicographic within
// each size. Sizes follow the binomial counts, 2^n - 1 in total.
inline std::vector<EnsembleId> enumerate_ensembles(std::size_t pool_size) {
    if (pool_size < 1) throw ValidationError("pool must contain at least one classifier");
    if (pool_size > 20)
        throw ValidationError("pool of " + std::to_string(pool_size) +
                              " would enumerate over a million ensembles; refusing");
    std::vector<EnsembleId> out;
    out.reserve((1ULL << pool_size) - 1);
    for (std::size_t size = 1; size <= pool_size; ++size) {
        std::vector<std::size_t> members(size);
        std::iota(members.begin(), members.end(), 0);
        while (true) {
            out.push_back(EnsembleId{members});
            // next combination
            std::size_t i = size;
            while (i > 0 && members[i - 1] == pool_size - size + i - 1) --i;
            if (i == 0) break;
            ++members[i - 1];
            for (std::size_t j = i; j < size; ++j) members[j] = members[j - 1] + 1;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// noise

struct NoiseSpec {
    double rms_fraction = 0.0;
    std::uint64_t seed = 0;
};

// Adds zero-mean Gaussian noise per feature column with standard deviation
// rms_fraction * RMS(column). Labels untouched. Each (sample, feature) cell
// draws from its own derived stream, so the result is independent of
// evaluation order.
inline Dataset add_rms_noise(const Dataset& data, const NoiseSpec& spec) {
    if (spec.rms_fraction < 0.0) throw ValidationError("rms fraction must be >= 0");
    std::vector<double> features(data.raw_features());
    if (spec.rms_fraction > 0.0) {
        const std::size_t nf = data.features();
        const std::size_t ns = data.samples();
        for (std::size_t j = 0; j < nf; ++j) {
            double mean_square = 0.0;
            for (std::size_t i = 0; i < ns; ++i) {
                const double v = data.feature(i, j);
                mean_square += v * v;
            }
            const double rms = std::sqrt(mean_square / static_cast<double>(ns));
            if (rms == 0.0) continue;
            const double sigma = spec.rms_fraction * rms;
            for (std::size_t i = 0; i < ns; ++i) {
                rng::Stream stream(rng::derive(spec.seed, {0x401eULL, i, j}));
                features[i * nf + j] += sigma * stream.next_normal();
            }
        }
    }
    return Dataset(data.name(), std::move(features), data.features(),
                   std::vector<int>(data.labels()), data.class_names());
}

// ---------------------------------------------------------------------------
// ensemble evaluation

// Everything derived once per (split, noise) pass and shared across all
// ensemble evaluations: trained classifiers, their training confusion
// matrices, the six weight vectors, and the per-scheme BOEs on validation
// and test samples.
struct PreparedPool {
    FramePtr frame;
    std::vector<std::string> classifier_ids;
    std::vector<int> valid_labels, test_labels;
    std::vector<ScoreMatrix> valid_scores, test_scores;
    // indexed [classifier][scheme]
    std::vector<std::vector<BodyOfEvidence>> valid_boes, test_boes;
    int defect_class = 1;

    std::size_t pool_size() const noexcept { return classifier_ids.size(); }
};

inline PreparedPool prepare_pool(std::span<const ClassifierSpec> specs, const Splits& splits,
                                 std::optional<int> defect_class = std::nullopt,
                                 const Dataset* score_train = nullptr,
                                 const Dataset* score_valid = nullptr,
                                 const Dataset* score_test = nullptr) {
    if (specs.empty()) throw ValidationError("classifier pool is empty");
    PreparedPool pool;
    pool.frame = std::make_shared<Frame>(splits.train.class_names());
    pool.valid_labels = score_valid ? score_valid->labels() : splits.valid.labels();
    pool.test_labels = score_test ? score_test->labels() : splits.test.labels();
    pool.defect_class = defect_class.value_or(splits.train.minority_class());

    for (const auto& spec : specs) {
        const TrainedClassifier clf = train(spec, splits.train);
        const ConfusionMatrix cm =
            confusion(clf, score_train ? *score_train : splits.train);
        pool.classifier_ids.push_back(clf.id());
        pool.valid_scores.push_back(clf.score(score_valid ? *score_valid : splits.valid));
        pool.test_scores.push_back(clf.score(score_test ? *score_test : splits.test));

        std::vector<BodyOfEvidence> vb, tb;
        for (WeightScheme scheme : kAllWeightSchemes) {
            const WeightVector w = build_weight(scheme, cm);
            vb.push_back(build_boe(pool.valid_scores.back(), w, pool.frame));
            tb.push_back(build_boe(pool.test_scores.back(), w, pool.frame));
        }
        pool.valid_boes.push_back(std::move(vb));
        pool.test_boes.push_back(std::move(tb));
    }
    return pool;
}

inline double accuracy_of(std::span<const int> predicted, std::span<const int> truth) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

// Precision of the defect class from a prediction/truth pair: the fraction
// of true defect samples that were flagged.
inline double specificity_of(std::span<const int> predicted, std::span<const int> truth,
                             int defect_class, std::size_t n_classes) {
    std::int64_t hit = 0, total = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (truth[i] != defect_class) continue;
        ++total;
        if (predicted[i] == defect_class) ++hit;
    }
    (void)n_classes;
    if (total == 0) return 0.0;
    return static_cast<double>(hit) / static_cast<double>(total);
}

struct EnsembleMetrics {
    double valid_acc = 0.0;
    double test_acc = 0.0;
    double test_spc = 0.0;
};

namespace detail {

inline std::vector<int> fused_predictions(const PreparedPool& pool, const EnsembleId& ensemble,
                                          std::size_t scheme_index, bool test_side,
                                          const PipelineConfig& cfg) {
    const auto& boe_table = test_side ? pool.test_boes : pool.valid_boes;
    const auto& score_table = test_side ? pool.test_scores : pool.valid_scores;

    if (ensemble.size() == 1) {
        // raw classifier decision, no weighting and no fusion
        const ScoreMatrix& scores = score_table[ensemble.members[0]];
        std::vector<int> predicted(scores.samples());
        for (std::size_t i = 0; i < scores.samples(); ++i) predicted[i] = scores.argmax(i);
        return predicted;
    }

    std::vector<BodyOfEvidence> members;
    members.reserve(ensemble.size());
    for (std::size_t m : ensemble.members) members.push_back(boe_table[m][scheme_index]);
    const FusionResult fused = fuse_dataset(members, cfg);
    std::vector<int> predicted(fused.samples.size());
    for (std::size_t i = 0; i < fused.samples.size(); ++i)
        predicted[i] = fused.samples[i].predicted_class;
    return predicted;
}

} // namespace detail

// Fuses the ensemble's evidence under one weighting scheme and scores it:
// accuracy on validation and test, defect-class precision on test.
inline EnsembleMetrics evaluate_ensemble(const PreparedPool& pool, const EnsembleId& ensemble,
                                         WeightScheme scheme, const PipelineConfig& cfg) {
    for (std::size_t m : ensemble.members)
        if (m >= pool.pool_size()) throw ValidationError("ensemble member outside the pool");
    const auto scheme_index = static_cast<std::size_t>(scheme);

    EnsembleMetrics out;
    const auto valid_pred = detail::fused_predictions(pool, ensemble, scheme_index, false, cfg);
    const auto test_pred = detail::fused_predictions(pool, ensemble, scheme_index, true, cfg);
    out.valid_acc = accuracy_of(valid_pred, pool.valid_labels);
    out.test_acc = accuracy_of(test_pred, pool.test_labels);
    out.test_spc = specificity_of(test_pred, pool.test_labels, pool.defect_class,
                                  pool.frame->size());
    return out;
}

// Highest validation accuracy wins; ties go to the lowest scheme index.
inline WeightScheme select_best_scheme(std::span<const double> validation_accuracies) {
    if (validation_accuracies.empty())
        throw ValidationError("no schemes to select from");
    std::size_t best = 0;
    for (std::size_t s = 1; s < validation_accuracies.size(); ++s)
        if (validation_accuracies[s] > validation_accuracies[best]) best = s;
    return static_cast<WeightScheme>(best);
}

// ---------------------------------------------------------------------------
// statistical protocol

struct StatConfig {
    std::vector<ClassifierSpec> pool;
    std::size_t repetitions = 50;
    std::size_t max_ensemble_size = 0; // 0 = no cap
    std::vector<double> noise_levels = {0.0};
    std::uint64_t root_seed = 0;
    SplitSpec split; // seed field ignored; derived per repetition
    PipelineConfig pipeline;
    std::optional<int> defect_class; // default: minority class
    bool retrain_on_noise = true;    // false = train clean, score noisy
    std::size_t threads = 1;

    void validate() const {
        if (pool.empty()) throw ValidationError("classifier pool is empty");
        if (repetitions == 0) throw ValidationError("need at least one repetition");
        if (noise_levels.empty()) throw ValidationError("need at least one noise level");
        for (double level : noise_levels)
            if (level < 0.0) throw ValidationError("noise levels must be >= 0");
        split.validate();
        pipeline.validate();
    }
};

struct CellResult {
    std::size_t ensemble_index = 0;
    WeightScheme scheme = WeightScheme::w0;
    EnsembleMetrics metrics;
    bool ok = true;
    std::string error;
};

struct RepetitionResult {
    std::size_t repetition = 0;
    std::vector<CellResult> cells; // ensemble-major, scheme-minor
};

struct NoiseLevelResult {
    double rms_fraction = 0.0;
    std::vector<RepetitionResult> repetitions;
};

struct ExperimentReport {
    std::string dataset;
    std::vector<EnsembleId> ensembles;
    std::vector<NoiseLevelResult> levels;

    static constexpr std::size_t scheme_count = 6;
};

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(threads);
    std::atomic<std::size_t> cursor{0};
    for (std::size_t t = 0; t < threads; ++t)
        workers.emplace_back([&] {
            for (std::size_t i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) fn(i);
        });
    for (auto& w : workers) w.join();
}

} // namespace detail

// One full pass of the protocol: per noise level and repetition, resample the
// splits, (re)train the pool, enumerate size-capped ensembles, and evaluate
// every weighting scheme. Failed fusions become failed cells, not aborts.
inline ExperimentReport run_statistical(const Dataset& data, const StatConfig& cfg) {
    cfg.validate();

    auto ensembles = enumerate_ensembles(cfg.pool.size());
    if (cfg.max_ensemble_size > 0) {
        std::erase_if(ensembles,
                      [&](const EnsembleId& e) { return e.size() > cfg.max_ensemble_size; });
    }

    ExperimentReport report;
    report.dataset = data.name();
    report.ensembles = ensembles;

    for (std::size_t level_idx = 0; level_idx < cfg.noise_levels.size(); ++level_idx) {
        NoiseLevelResult level;
        level.rms_fraction = cfg.noise_levels[level_idx];
        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
            SplitSpec split = cfg.split;
            split.seed = rng::derive(cfg.root_seed, {0xa11ceULL, level_idx, rep});
            const NoiseSpec noise{level.rms_fraction,
                                  rng::derive(cfg.root_seed, {0xb0bULL, level_idx, rep})};

            const auto indices = stratified_split_indices(data, split);
            const Dataset noisy = add_rms_noise(data, noise);

            PreparedPool pool;
            if (cfg.retrain_on_noise) {
                Splits splits{subset(noisy, indices.train, "/train"),
                              subset(noisy, indices.valid, "/valid"),
                              subset(noisy, indices.test, "/test")};
                pool = prepare_pool(cfg.pool, splits, cfg.defect_class);
            } else {
                // train on clean features, evaluate on polluted ones
                Splits splits{subset(data, indices.train, "/train"),
                              subset(data, indices.valid, "/valid"),
                              subset(data, indices.test, "/test")};
                const Dataset noisy_valid = subset(noisy, indices.valid, "/valid");
                const Dataset noisy_test = subset(noisy, indices.test, "/test");
                pool = prepare_pool(cfg.pool, splits, cfg.defect_class, nullptr, &noisy_valid,
                                    &noisy_test);
            }

            RepetitionResult rep_result;
            rep_result.repetition = rep;
            rep_result.cells.resize(ensembles.size() * ExperimentReport::scheme_count);
            detail::parallel_for(ensembles.size(), cfg.threads, [&](std::size_t e) {
                for (std::size_t s = 0; s < ExperimentReport::scheme_count; ++s) {
                    CellResult& cell =
                        rep_result.cells[e * ExperimentReport::scheme_count + s];
                    cell.ensemble_index = e;
                    cell.scheme = static_cast<WeightScheme>(s);
                    try {
                        cell.metrics =
                            evaluate_ensemble(pool, ensembles[e], cell.scheme, cfg.pipeline);
                    } catch (const Error& err) {
                        cell.ok = false;
                        cell.error = err.what();
                    }
                }
            });
            level.repetitions.push_back(std::move(rep_result));
        }
        report.levels.push_back(std::move(level));
    }
    return report;
}

// ---------------------------------------------------------------------------
// report aggregation

// Round-to-9-decimals equality, the comparison used for "number of
// occurrences" counting; display rounding is coarser and irrelevant here.
inline double round9(double v) { return std::round(v * 1e9) / 1e9; }

struct BestSchemeCell {
    WeightScheme scheme = WeightScheme::w0;
    EnsembleMetrics metrics;
    bool ok = false;
};

// Per ensemble, the scheme with the best validation accuracy (lowest index
// wins ties), mirroring the validation-selection rule.
inline std::vector<BestSchemeCell> best_scheme_cells(const RepetitionResult& rep) {
    const std::size_t n_schemes = ExperimentReport::scheme_count;
    std::vector<BestSchemeCell> out(rep.cells.size() / n_schemes);
    for (std::size_t e = 0; e < out.size(); ++e) {
        double best_valid = -1.0;
        for (std::size_t s = 0; s < n_schemes; ++s) {
            const CellResult& cell = rep.cells[e * n_schemes + s];
            if (!cell.ok) continue;
            if (cell.metrics.valid_acc > best_valid) {
                best_valid = cell.metrics.valid_acc;
                out[e] = BestSchemeCell{cell.scheme, cell.metrics, true};
            }
        }
    }
    return out;
}

struct MaxAccuracySummary {
    double max_test_acc = 0.0;
    std::size_t occurrences = 0; // ensembles attaining the max
};

inline MaxAccuracySummary summarize_max(std::span<const double> test_accs,
                                        std::span<const char> ok_flags) {
    MaxAccuracySummary out;
    bool any = false;
    for (std::size_t i = 0; i < test_accs.size(); ++i) {
        if (!ok_flags[i]) continue;
        const double acc = round9(test_accs[i]);
        if (!any || acc > out.max_test_acc) {
            out.max_test_acc = acc;
            out.occurrences = 1;
            any = true;
        } else if (acc == out.max_test_acc) {
            ++out.occurrences;
        }
    }
    return out;
}

// Max test accuracy and NO for one scheme within one repetition.
inline MaxAccuracySummary scheme_summary(const RepetitionResult& rep, WeightScheme scheme) {
    const std::size_t n_schemes = ExperimentReport::scheme_count;
    std::vector<double> accs;
    std::vector<char> ok;
    for (std::size_t e = 0; e < rep.cells.size() / n_schemes; ++e) {
        const CellResult& cell = rep.cells[e * n_schemes + static_cast<std::size_t>(scheme)];
        accs.push_back(cell.metrics.test_acc);
        ok.push_back(cell.ok ? 1 : 0);
    }
    return summarize_max(accs, ok);
}

inline MaxAccuracySummary best_scheme_summary(const RepetitionResult& rep) {
    const auto best = best_scheme_cells(rep);
    std::vector<double> accs;
    std::vector<char> ok;
    for (const auto& cell : best) {
        accs.push_back(cell.metrics.test_acc);
        ok.push_back(cell.ok ? 1 : 0);
    }
    return summarize_max(accs, ok);
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0; // population
    std::size_t count = 0;
};

inline MeanStd mean_std(std::span<const double> values) {
    MeanStd out;
    out.count = values.size();
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    for (double v : values) out.stddev += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(out.stddev / static_cast<double>(values.size()));
    return out;
}

// Best-model-of-each-size accuracy for one repetition: entry [k] is the max
// test accuracy over ensembles of size k+1 (NaN when none succeeded).
inline std::vector<double> best_by_size(const RepetitionResult& rep,
                                        std::span<const EnsembleId> ensembles,
                                        std::optional<WeightScheme> scheme) {
    const std::size_t n_schemes = ExperimentReport::scheme_count;
    std::size_t max_size = 0;
    for (const auto& e : ensembles) max_size = std::max(max_size, e.size());
    std::vector<double> best(max_size, std::numeric_limits<double>::quiet_NaN());

    const auto consider = [&](std::size_t e, double acc, bool ok) {
        if (!ok) return;
        double& slot = best[ensembles[e].size() - 1];
        if (std::isnan(slot) || acc > slot) slot = acc;
    };
    if (scheme) {
        for (std::size_t e = 0; e < ensembles.size(); ++e) {
            const CellResult& cell =
                rep.cells[e * n_schemes + static_cast<std::size_t>(*scheme)];
            consider(e, cell.metrics.test_acc, cell.ok);
        }
    } else {
        const auto cells = best_scheme_cells(rep);
        for (std::size_t e = 0; e < ensembles.size(); ++e)
            consider(e, cells[e].metrics.test_acc, cells[e].ok);
    }
    return best;
}

// Mean/std over repetitions of the best-model-per-size accuracy; scheme
// nullopt means the validation-selected scheme.
inline std::vector<MeanStd> size_statistics(const ExperimentReport& report,
                                            std::size_t level_index,
                                            std::optional<WeightScheme> scheme) {
    const auto& level = report.levels.at(level_index);
    std::size_t max_size = 0;
    for (const auto& e : report.ensembles) max_size = std::max(max_size, e.size());

    std::vector<std::vector<double>> samples(max_size);
    for (const auto& rep : level.repetitions) {
        const auto best = best_by_size(rep, report.ensembles, scheme);
        for (std::size_t k = 0; k < best.size(); ++k)
            if (!std::isnan(best[k])) samples[k].push_back(best[k]);
    }
    std::vector<MeanStd> out;
    out.reserve(max_size);
    for (const auto& s : samples) out.push_back(mean_std(s));
    return out;
}

// Per-repetition best accuracy over all ensembles (any size) for the
// validation-selected scheme: the range behind the noise-robustness view.
inline std::vector<double> best_accuracies_per_repetition(const ExperimentReport& report,
                                                          std::size_t level_index) {
    const auto& level = report.levels.at(level_index);
    std::vector<double> out;
    out.reserve(level.repetitions.size());
    for (const auto& rep : level.repetitions)
        out.push_back(best_scheme_summary(rep).max_test_acc);
    return out;
}

} // namespace dsfusion
