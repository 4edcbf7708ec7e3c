#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dsfusion/boe.hpp"
#include "dsfusion/errors.hpp"

namespace dsfusion {

// Feature matrix with integer class labels. Features are stored row-major.
class Dataset {
public:
    Dataset(std::string name, std::vector<double> features, std::size_t n_features,
            std::vector<int> labels, std::vector<std::string> class_names = {})
        : name_(std::move(name)), features_(std::move(features)), n_features_(n_features),
          labels_(std::move(labels)), class_names_(std::move(class_names)) {
        if (n_features_ == 0) throw ValidationError("dataset needs at least one feature");
        if (labels_.empty()) throw ValidationError("dataset has no samples");
        if (features_.size() != labels_.size() * n_features_)
            throw ValidationError("feature matrix shape does not match label count");
        int max_label = 0;
        for (int l : labels_) {
            if (l < 0) throw ValidationError("negative class label");
            max_label = std::max(max_label, l);
        }
        if (class_names_.empty())
            for (int k = 0; k <= max_label; ++k) class_names_.push_back("c" + std::to_string(k));
        if (static_cast<std::size_t>(max_label) >= class_names_.size())
            throw ValidationError("label outside the named class range");
    }

    const std::string& name() const noexcept { return name_; }
    std::size_t samples() const noexcept { return labels_.size(); }
    std::size_t features() const noexcept { return n_features_; }
    std::size_t classes() const noexcept { return class_names_.size(); }
    const std::vector<int>& labels() const noexcept { return labels_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    const std::vector<double>& raw_features() const noexcept { return features_; }

    double feature(std::size_t sample, std::size_t col) const {
        return features_[sample * n_features_ + col];
    }
    std::span<const double> row(std::size_t sample) const {
        return {features_.data() + sample * n_features_, n_features_};
    }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(classes(), 0);
        for (int l : labels_) ++counts[static_cast<std::size_t>(l)];
        return counts;
    }

    // Majority count over minority count, ignoring empty classes.
    double imbalance_ratio() const {
        const auto counts = class_counts();
        std::size_t lo = 0, hi = 0;
        for (std::size_t c : counts) {
            if (c == 0) continue;
            if (lo == 0 || c < lo) lo = c;
            hi = std::max(hi, c);
        }
        return static_cast<double>(hi) / static_cast<double>(lo);
    }

    // Smallest class (lowest index on ties): the "defect" class by default.
    int minority_class() const {
        const auto counts = class_counts();
        std::size_t best = 0;
        for (std::size_t k = 1; k < counts.size(); ++k)
            if (counts[k] < counts[best]) best = k;
        return static_cast<int>(best);
    }

private:
    std::string name_;
    std::vector<double> features_;
    std::size_t n_features_;
    std::vector<int> labels_;
    std::vector<std::string> class_names_;
};

enum class ClassifierKind { knn, nearest_centroid, logistic_linear };

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::knn;
    int k = 5;          // knn only; odd and >= 1
    double ridge = 0.1; // logistic only; >= 0

    void validate() const {
        if (kind == ClassifierKind::knn && (k < 1 || k % 2 == 0))
            throw ValidationError("knn k must be odd and >= 1");
        if (kind == ClassifierKind::logistic_linear && ridge < 0.0)
            throw ValidationError("ridge strength must be >= 0");
    }

    std::string id() const {
        switch (kind) {
        case ClassifierKind::knn: return std::to_string(k) + "nn";
        case ClassifierKind::nearest_centroid: return "centroid";
        case ClassifierKind::logistic_linear: return "logistic";
        }
        return "unknown";
    }

    // "knn:5", "centroid", "logistic:0.1"
    static ClassifierSpec parse(const std::string& text);
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

struct KnnModel {
    std::vector<double> features;
    std::size_t n_features = 0;
    std::vector<int> labels;
    int k = 1;
};

struct CentroidModel {
    std::vector<std::vector<double>> centroids; // one per class
};

struct LogisticModel {
    std::vector<double> mean, stddev;           // train standardization
    std::vector<std::vector<double>> weights;   // n_classes x (n_features + 1), bias last
};

} // namespace detail

class TrainedClassifier {
public:
    using Model = std::variant<detail::KnnModel, detail::CentroidModel, detail::LogisticModel>;

    TrainedClassifier(std::string id, std::size_t n_classes, std::size_t n_features, Model model)
        : id_(std::move(id)), n_classes_(n_classes), n_features_(n_features),
          model_(std::move(model)) {}

    const std::string& id() const noexcept { return id_; }
    std::size_t classes() const noexcept { return n_classes_; }

    ScoreMatrix score(const Dataset& data) const {
        if (data.features() != n_features_)
            throw ValidationError("feature dimension does not match training data");
        std::vector<std::vector<double>> rows(data.samples());
        for (std::size_t i = 0; i < data.samples(); ++i) rows[i] = score_row(data.row(i));
        return ScoreMatrix::from_raw(id_, std::move(rows));
    }

private:
    std::vector<double> score_row(std::span<const double> x) const;

    std::string id_;
    std::size_t n_classes_;
    std::size_t n_features_;
    Model model_;
};

inline TrainedClassifier train(const ClassifierSpec& spec, const Dataset& data) {
    spec.validate();
    const auto counts = data.class_counts();
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] == 0)
            throw ValidationError("class " + std::to_string(k) + " absent from training data");

    switch (spec.kind) {
    case ClassifierKind::knn: {
        detail::KnnModel m{data.raw_features(), data.features(), data.labels(), spec.k};
        return TrainedClassifier(spec.id(), data.classes(), data.features(), std::move(m));
    }
    case ClassifierKind::nearest_centroid: {
        detail::CentroidModel m;
        m.centroids.assign(data.classes(), std::vector<double>(data.features(), 0.0));
        for (std::size_t i = 0; i < data.samples(); ++i) {
            const auto row = data.row(i);
            auto& c = m.centroids[static_cast<std::size_t>(data.labels()[i])];
            for (std::size_t j = 0; j < row.size(); ++j) c[j] += row[j];
        }
        for (std::size_t k = 0; k < data.classes(); ++k)
            for (double& v : m.centroids[k]) v /= static_cast<double>(counts[k]);
        return TrainedClassifier(spec.id(), data.classes(), data.features(), std::move(m));
    }
    case ClassifierKind::logistic_linear: {
        const std::size_t nf = data.features();
        const std::size_t nc = data.classes();
        const std::size_t ns = data.samples();
        detail::LogisticModel m;
        m.mean.assign(nf, 0.0);
        m.stddev.assign(nf, 0.0);
        for (std::size_t i = 0; i < ns; ++i)
            for (std::size_t j = 0; j < nf; ++j) m.mean[j] += data.feature(i, j);
        for (double& v : m.mean) v /= static_cast<double>(ns);
        for (std::size_t i = 0; i < ns; ++i)
            for (std::size_t j = 0; j < nf; ++j) {
                const double d = data.feature(i, j) - m.mean[j];
                m.stddev[j] += d * d;
            }
        for (double& v : m.stddev) {
            v = std::sqrt(v / static_cast<double>(ns));
            if (v == 0.0) v = 1.0;
        }

        std::vector<std::vector<double>> X(ns, std::vector<double>(nf + 1, 1.0));
        for (std::size_t i = 0; i < ns; ++i)
            for (std::size_t j = 0; j < nf; ++j)
                X[i][j] = (data.feature(i, j) - m.mean[j]) / m.stddev[j];

        // full-batch gradient descent from zero weights; deterministic
        m.weights.assign(nc, std::vector<double>(nf + 1, 0.0));
        constexpr int kIterations = 400;
        constexpr double kLearningRate = 0.5;
        std::vector<double> logits(nc), probs(nc);
        std::vector<std::vector<double>> grad(nc, std::vector<double>(nf + 1, 0.0));
        for (int iter = 0; iter < kIterations; ++iter) {
            for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);
            for (std::size_t i = 0; i < ns; ++i) {
                double max_logit = -1e300;
                for (std::size_t c = 0; c < nc; ++c) {
                    logits[c] = std::inner_product(X[i].begin(), X[i].end(),
                                                   m.weights[c].begin(), 0.0);
                    max_logit = std::max(max_logit, logits[c]);
                }
                double z = 0.0;
                for (std::size_t c = 0; c < nc; ++c) {
                    probs[c] = std::exp(logits[c] - max_logit);
                    z += probs[c];
                }
                for (std::size_t c = 0; c < nc; ++c) {
                    const double err =
                        probs[c] / z -
                        (static_cast<std::size_t>(data.labels()[i]) == c ? 1.0 : 0.0);
                    for (std::size_t j = 0; j <= nf; ++j) grad[c][j] += err * X[i][j];
                }
            }
            for (std::size_t c = 0; c < nc; ++c)
                for (std::size_t j = 0; j <= nf; ++j) {
                    double g = grad[c][j] / static_cast<double>(ns);
                    if (j < nf) g += spec.ridge * m.weights[c][j]; // no penalty on bias
                    m.weights[c][j] -= kLearningRate * g;
                }
        }
        return TrainedClassifier(spec.id(), nc, nf, std::move(m));
    }
    }
    throw ValidationError("unknown classifier kind");
}

namespace detail {

inline std::vector<double> score_knn(const KnnModel& m, std::size_t n_classes,
                                     std::span<const double> x) {
    const std::size_t n = m.labels.size();
    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<const double> row{m.features.data() + i * m.n_features, m.n_features};
        order[i] = {detail::squared_distance(x, row), i};
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.k), n);
    // ties broken by lowest sample index via the pair's second member
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
    std::vector<double> votes(n_classes, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        votes[static_cast<std::size_t>(m.labels[order[i].second])] += 1.0 / static_cast<double>(k);
    return votes;
}

} // namespace detail

inline std::vector<double> TrainedClassifier::score_row(std::span<const double> x) const {
    if (const auto* knn = std::get_if<detail::KnnModel>(&model_))
        return detail::score_knn(*knn, n_classes_, x);
    if (const auto* cm = std::get_if<detail::CentroidModel>(&model_)) {
        std::vector<double> d(n_classes_);
        double dmin = 1e300;
        for (std::size_t c = 0; c < n_classes_; ++c) {
            d[c] = detail::squared_distance(x, cm->centroids[c]);
            dmin = std::min(dmin, d[c]);
        }
        std::vector<double> s(n_classes_);
        double z = 0.0;
        for (std::size_t c = 0; c < n_classes_; ++c) {
            s[c] = std::exp(-(d[c] - dmin)); // softmin over squared distances
            z += s[c];
        }
        for (double& v : s) v /= z;
        return s;
    }
    const auto& lm = std::get<detail::LogisticModel>(model_);
    std::vector<double> z(n_classes_);
    double zmax = -1e300;
    for (std::size_t c = 0; c < n_classes_; ++c) {
        double acc = lm.weights[c].back(); // bias
        for (std::size_t j = 0; j < x.size(); ++j)
            acc += lm.weights[c][j] * (x[j] - lm.mean[j]) / lm.stddev[j];
        z[c] = acc;
        zmax = std::max(zmax, acc);
    }
    double norm = 0.0;
    std::vector<double> probs(n_classes_);
    for (std::size_t c = 0; c < n_classes_; ++c) {
        probs[c] = std::exp(z[c] - zmax);
        norm += probs[c];
    }
    for (double& v : probs) v /= norm;
    return probs;
}

// Argmax predictions of a trained classifier against the truth labels.
inline ConfusionMatrix confusion(const TrainedClassifier& clf, const Dataset& data) {
    const ScoreMatrix scores = clf.score(data);
    std::vector<int> predicted(data.samples());
    for (std::size_t i = 0; i < data.samples(); ++i) predicted[i] = scores.argmax(i);
    return ConfusionMatrix::from_predictions(predicted, data.labels(), data.classes());
}

inline ClassifierSpec ClassifierSpec::parse(const std::string& text) {
    ClassifierSpec spec;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (head == "knn") {
            spec.kind = ClassifierKind::knn;
            if (!arg.empty()) spec.k = std::stoi(arg);
        } else if (head == "centroid") {
            spec.kind = ClassifierKind::nearest_centroid;
        } else if (head == "logistic") {
            spec.kind = ClassifierKind::logistic_linear;
            if (!arg.empty()) spec.ridge = std::stod(arg);
        } else {
            throw ValidationError("unknown classifier kind: " + head);
        }
    } catch (const std::invalid_argument&) {
        throw ValidationError("bad classifier parameter in: " + text);
    }
    spec.validate();
    return spec;
}

} // namespace dsfusion
