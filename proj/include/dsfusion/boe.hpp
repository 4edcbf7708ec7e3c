#pragma once

#include <cstdint>
#include <iostream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dsfusion/errors.hpp"
#include "dsfusion/mass_function.hpp"

namespace dsfusion {

// Square table of prediction counts. Rows are the predicted class, columns
// the true class; that orientation is load-bearing for the per-class
// metrics below.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::vector<std::vector<std::int64_t>> counts)
        : counts_(std::move(counts)) {
        const std::size_t n = counts_.size();
        if (n < 2) throw ValidationError("confusion matrix needs at least 2 classes");
        for (const auto& row : counts_) {
            if (row.size() != n) throw ValidationError("confusion matrix must be square");
            for (std::int64_t v : row) {
                if (v < 0) throw ValidationError("confusion matrix counts must be non-negative");
                total_ += v;
            }
        }
        if (total_ == 0) throw ValidationError("confusion matrix has no observations");
    }

    static ConfusionMatrix from_predictions(std::span<const int> predicted,
                                            std::span<const int> truth, std::size_t n_classes) {
        if (predicted.size() != truth.size())
            throw ValidationError("prediction and truth lengths differ");
        std::vector<std::vector<std::int64_t>> counts(n_classes,
                                                      std::vector<std::int64_t>(n_classes, 0));
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            const int p = predicted[i];
            const int t = truth[i];
            if (p < 0 || t < 0 || static_cast<std::size_t>(p) >= n_classes ||
                static_cast<std::size_t>(t) >= n_classes)
                throw ValidationError("class index out of range in predictions");
            ++counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(t)];
        }
        return ConfusionMatrix(std::move(counts));
    }

    std::size_t classes() const noexcept { return counts_.size(); }
    std::int64_t at(std::size_t predicted, std::size_t truth) const {
        return counts_.at(predicted).at(truth);
    }
    std::int64_t total() const noexcept { return total_; }
    const std::vector<std::vector<std::int64_t>>& counts() const noexcept { return counts_; }

private:
    std::vector<std::vector<std::int64_t>> counts_;
    std::int64_t total_ = 0;
};

// Fraction of correctly classified samples (trace over total).
inline double accuracy(const ConfusionMatrix& cm) {
    std::int64_t trace = 0;
    for (std::size_t k = 0; k < cm.classes(); ++k) trace += cm.at(k, k);
    return static_cast<double>(trace) / static_cast<double>(cm.total());
}

// Per-class N_kk over the column sum (all samples whose true class is k).
// A zero column yields 0 with a warning; the source formula leaves the
// degenerate case undefined.
inline std::vector<double> precision_per_class(const ConfusionMatrix& cm) {
    std::vector<double> out(cm.classes());
    for (std::size_t k = 0; k < cm.classes(); ++k) {
        std::int64_t column = 0;
        for (std::size_t i = 0; i < cm.classes(); ++i) column += cm.at(i, k);
        if (column == 0) {
            std::cerr << "warning: class " << k
                      << " never occurs as true label; precision set to 0\n";
            out[k] = 0.0;
        } else {
            out[k] = static_cast<double>(cm.at(k, k)) / static_cast<double>(column);
        }
    }
    return out;
}

// Per-class N_kk over the row sum (all samples predicted as k).
inline std::vector<double> recall_per_class(const ConfusionMatrix& cm) {
    std::vector<double> out(cm.classes());
    for (std::size_t k = 0; k < cm.classes(); ++k) {
        std::int64_t row = 0;
        for (std::size_t j = 0; j < cm.classes(); ++j) row += cm.at(k, j);
        if (row == 0) {
            std::cerr << "warning: class " << k << " never predicted; recall set to 0\n";
            out[k] = 0.0;
        } else {
            out[k] = static_cast<double>(cm.at(k, k)) / static_cast<double>(row);
        }
    }
    return out;
}

// Dempster's rule on the two-element frame {reliable, unreliable} with
// Bayesian inputs (a, 1-a) and (b, 1-b): ab / (ab + (1-a)(1-b)).
inline double scalar_dempster(double a, double b) {
    if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0)
        throw ValidationError("scalar_dempster arguments must be in [0,1]");
    const double agree = a * b;
    const double disagree = (1.0 - a) * (1.0 - b);
    if (agree + disagree == 0.0) throw TotalConflictError(1.0);
    return agree / (agree + disagree);
}

// Reliability weightings derived from a confusion matrix.
enum class WeightScheme { w0, w1, w2, w3, w4, w5 };

inline constexpr WeightScheme kAllWeightSchemes[] = {WeightScheme::w0, WeightScheme::w1,
                                                     WeightScheme::w2, WeightScheme::w3,
                                                     WeightScheme::w4, WeightScheme::w5};

inline std::string to_string(WeightScheme scheme) {
    return "w" + std::to_string(static_cast<int>(scheme));
}

inline WeightScheme weight_scheme_from_string(const std::string& name) {
    for (WeightScheme s : kAllWeightSchemes)
        if (to_string(s) == name) return s;
    throw ValidationError("unknown weight scheme: " + name);
}

struct WeightVector {
    WeightScheme scheme = WeightScheme::w0;
    std::vector<double> values; // one weight per class, each in [0,1]
};

// w0 = 1s, w1 = accuracy, w2 = precisions, w3 = recalls, w4 = w2 (+) w3,
// w5 = accuracy (+) precision, with (+) the per-class scalar Dempster rule.
inline WeightVector build_weight(WeightScheme scheme, const ConfusionMatrix& cm) {
    const std::size_t n = cm.classes();
    WeightVector w{scheme, std::vector<double>(n, 1.0)};
    switch (scheme) {
    case WeightScheme::w0:
        break;
    case WeightScheme::w1:
        w.values.assign(n, accuracy(cm));
        break;
    case WeightScheme::w2:
        w.values = precision_per_class(cm);
        break;
    case WeightScheme::w3:
        w.values = recall_per_class(cm);
        break;
    case WeightScheme::w4: {
        const auto pre = precision_per_class(cm);
        const auto rec = recall_per_class(cm);
        for (std::size_t k = 0; k < n; ++k) w.values[k] = scalar_dempster(pre[k], rec[k]);
        break;
    }
    case WeightScheme::w5: {
        const double acc = accuracy(cm);
        const auto pre = precision_per_class(cm);
        for (std::size_t k = 0; k < n; ++k) w.values[k] = scalar_dempster(acc, pre[k]);
        break;
    }
    }
    return w;
}

// Per-sample, per-class classifier scores. Rows are normalized to sum to 1
// at ingestion (negatives clamped to 0 first, an all-zero row becomes
// uniform), so the weighted masses plus ignorance always form a valid BBA.
class ScoreMatrix {
public:
    static ScoreMatrix from_raw(std::string classifier_id, std::vector<std::vector<double>> rows) {
        ScoreMatrix sm;
        sm.classifier_id_ = std::move(classifier_id);
        if (rows.empty()) throw ValidationError("score matrix has no rows");
        sm.n_classes_ = rows[0].size();
        if (sm.n_classes_ < 2) throw ValidationError("score matrix needs at least 2 classes");
        sm.data_.reserve(rows.size() * sm.n_classes_);
        for (auto& row : rows) {
            if (row.size() != sm.n_classes_)
                throw ValidationError("ragged score matrix row");
            double sum = 0.0;
            for (double& v : row) {
                if (v < 0.0) v = 0.0;
                sum += v;
            }
            for (double v : row)
                sm.data_.push_back(sum > 0.0 ? v / sum : 1.0 / static_cast<double>(sm.n_classes_));
        }
        sm.n_samples_ = rows.size();
        return sm;
    }

    const std::string& classifier_id() const noexcept { return classifier_id_; }
    std::size_t samples() const noexcept { return n_samples_; }
    std::size_t classes() const noexcept { return n_classes_; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * n_classes_, n_classes_};
    }

    // Class with the highest score; ties go to the lowest index.
    int argmax(std::size_t i) const {
        const auto r = row(i);
        int best = 0;
        for (std::size_t k = 1; k < r.size(); ++k)
            if (r[k] > r[best]) best = static_cast<int>(k);
        return best;
    }

private:
    std::string classifier_id_;
    std::vector<double> data_;
    std::size_t n_samples_ = 0;
    std::size_t n_classes_ = 0;
};

// One classifier's evidence: a mass function per sample over the class
// frame, with focal sets restricted to singletons plus the full frame.
struct BodyOfEvidence {
    std::string classifier_id;
    FramePtr frame;
    std::vector<MassFunction> per_sample;

    std::size_t samples() const noexcept { return per_sample.size(); }
};

namespace detail {

inline MassFunction weighted_row_to_mass(std::span<const double> row,
                                         std::span<const double> weights, const FramePtr& frame) {
    std::map<FocalSet, double> m;
    double assigned = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        const double mass = weights[k] * row[k];
        if (mass < 0.0 || mass > 1.0)
            throw ValidationError("weighted mass outside [0,1]");
        if (mass > 0.0) m[FocalSet::singleton(k)] = mass;
        assigned += mass;
    }
    double ignorance = 1.0 - assigned;
    if (ignorance < -1e-9) throw ValidationError("negative ignorance mass");
    if (ignorance > 1e-15) m[FocalSet::full(*frame)] += ignorance;
    return MassFunction(frame, std::move(m));
}

} // namespace detail

// Eq.-style BBA generation: singleton masses w_k * score_k, the remainder as
// ignorance on the full frame.
inline BodyOfEvidence build_boe(const ScoreMatrix& scores, const WeightVector& w,
                                const FramePtr& frame) {
    if (frame->size() != scores.classes())
        throw FrameMismatchError("frame size does not match score matrix classes");
    if (w.values.size() != scores.classes())
        throw ValidationError("weight vector length does not match class count");
    for (double v : w.values)
        if (v < 0.0 || v > 1.0) throw ValidationError("weights must be in [0,1]");

    BodyOfEvidence boe{scores.classifier_id(), frame, {}};
    boe.per_sample.reserve(scores.samples());
    for (std::size_t i = 0; i < scores.samples(); ++i)
        boe.per_sample.push_back(detail::weighted_row_to_mass(scores.row(i), w.values, frame));
    return boe;
}

// BBA generation from evidence rows that already carry an ignorance column:
// each row has n_c singleton masses followed by the mass on the full frame
// and must sum to 1. Weights apply to the singleton part; whatever they
// discount is absorbed into ignorance.
inline BodyOfEvidence build_boe_from_masses(const std::string& classifier_id,
                                            const std::vector<std::vector<double>>& rows,
                                            const WeightVector& w, const FramePtr& frame) {
    const std::size_t n = frame->size();
    if (w.values.size() != n) throw ValidationError("weight vector length does not match frame");
    BodyOfEvidence boe{classifier_id, frame, {}};
    boe.per_sample.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.size() != n + 1)
            throw ValidationError("mass row must have n_classes + 1 columns");
        double sum = 0.0;
        for (double v : row) {
            if (v < 0.0) throw ValidationError("negative mass in evidence row");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("evidence row must sum to 1");
        boe.per_sample.push_back(
            detail::weighted_row_to_mass({row.data(), n}, w.values, frame));
    }
    return boe;
}

} // namespace dsfusion
