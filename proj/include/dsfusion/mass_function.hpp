#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "dsfusion/errors.hpp"

namespace dsfusion {

// Frame of discernment: an ordered set of mutually exclusive event labels.
// The order is fixed at construction and defines the index every focal-set
// bitmask and score column refers to.
class Frame {
public:
    explicit Frame(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.empty()) throw ValidationError("frame needs at least one element");
        if (labels_.size() > 64) throw ValidationError("frame larger than 64 elements not supported");
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i].empty()) throw ValidationError("frame labels must be non-empty");
            for (std::size_t j = i + 1; j < labels_.size(); ++j)
                if (labels_[i] == labels_[j])
                    throw ValidationError("duplicate frame label: " + labels_[i]);
        }
    }

    // Convenience frame with labels "E1".."En".
    static std::shared_ptr<const Frame> indexed(std::size_t n) {
        std::vector<std::string> labels;
        labels.reserve(n);
        for (std::size_t i = 0; i < n; ++i) labels.push_back("E" + std::to_string(i + 1));
        return std::make_shared<Frame>(std::move(labels));
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    std::size_t index_of(std::string_view label) const {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == label) return i;
        throw FrameMismatchError("label not in frame: " + std::string(label));
    }

    std::uint64_t full_mask() const noexcept {
        return labels_.size() == 64 ? ~0ULL : (1ULL << labels_.size()) - 1ULL;
    }

    bool operator==(const Frame& other) const noexcept { return labels_ == other.labels_; }

private:
    std::vector<std::string> labels_;
};

using FramePtr = std::shared_ptr<const Frame>;

inline bool same_frame(const FramePtr& a, const FramePtr& b) {
    return a == b || (a && b && *a == *b);
}

// A subset of frame elements, encoded as a bitmask over the frame's order.
struct FocalSet {
    std::uint64_t bits = 0;

    static FocalSet singleton(std::size_t index) { return FocalSet{1ULL << index}; }

    static FocalSet of(std::initializer_list<std::size_t> indices) {
        FocalSet s;
        for (std::size_t i : indices) s.bits |= 1ULL << i;
        return s;
    }

    static FocalSet full(const Frame& frame) { return FocalSet{frame.full_mask()}; }

    int cardinality() const noexcept { return std::popcount(bits); }
    bool empty() const noexcept { return bits == 0; }
    bool contains(std::size_t index) const noexcept { return (bits >> index) & 1ULL; }
    bool subset_of(FocalSet other) const noexcept { return (bits & ~other.bits) == 0; }
    FocalSet intersect(FocalSet other) const noexcept { return FocalSet{bits & other.bits}; }
    FocalSet unite(FocalSet other) const noexcept { return FocalSet{bits | other.bits}; }
    FocalSet complement_in(const Frame& frame) const noexcept {
        return FocalSet{~bits & frame.full_mask()};
    }

    auto operator<=>(const FocalSet&) const = default;
};

// Elements of a focal set spelled out against its frame, for messages.
inline std::string to_string(FocalSet set, const Frame& frame) {
    std::string out = "{";
    bool first = true;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        if (!set.contains(i)) continue;
        if (!first) out += ',';
        out += frame.label(i);
        first = false;
    }
    return out + "}";
}

// Basic belief assignment: unit mass distributed over non-empty subsets of a
// frame. Immutable after construction. Zero-mass entries are dropped so map
// equality is canonical; the empty set is never a key.
class MassFunction {
public:
    MassFunction(FramePtr frame, std::map<FocalSet, double> assignments)
        : frame_(std::move(frame)) {
        if (!frame_) throw ValidationError("mass function needs a frame");
        const std::uint64_t full = frame_->full_mask();
        double sum = 0.0;
        for (const auto& [set, mass] : assignments) {
            if (set.empty())
                throw ValidationError("mass on the empty set is not allowed");
            if ((set.bits & ~full) != 0)
                throw FrameMismatchError("focal set references elements outside the frame");
            if (mass < -1e-12)
                throw ValidationError("negative mass " + std::to_string(mass));
            if (mass > 0.0) assignments_[set] = mass;
            sum += mass;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("masses sum to " + std::to_string(sum) + ", expected 1");
    }

    static MassFunction vacuous(FramePtr frame) {
        std::map<FocalSet, double> m;
        m[FocalSet{frame->full_mask()}] = 1.0;
        return MassFunction(std::move(frame), std::move(m));
    }

    // All mass on one singleton.
    static MassFunction categorical(FramePtr frame, std::size_t index) {
        std::map<FocalSet, double> m;
        m[FocalSet::singleton(index)] = 1.0;
        return MassFunction(std::move(frame), std::move(m));
    }

    const FramePtr& frame() const noexcept { return frame_; }
    const std::map<FocalSet, double>& assignments() const noexcept { return assignments_; }

    double mass(FocalSet set) const {
        auto it = assignments_.find(set);
        return it == assignments_.end() ? 0.0 : it->second;
    }

    bool operator==(const MassFunction& other) const {
        return same_frame(frame_, other.frame_) && assignments_ == other.assignments_;
    }

private:
    FramePtr frame_;
    std::map<FocalSet, double> assignments_;
};

namespace detail {

inline void require_in_frame(const MassFunction& m, FocalSet a) {
    if ((a.bits & ~m.frame()->full_mask()) != 0)
        throw FrameMismatchError("focal set references elements outside the frame");
}

inline void require_same_frame(const MassFunction& a, const MassFunction& b) {
    if (!same_frame(a.frame(), b.frame()))
        throw FrameMismatchError("mass functions live on different frames");
}

} // namespace detail

// Bel(A): total mass committed to subsets of A.
inline double belief(const MassFunction& m, FocalSet a) {
    detail::require_in_frame(m, a);
    double sum = 0.0;
    for (const auto& [set, mass] : m.assignments())
        if (set.subset_of(a)) sum += mass;
    return sum;
}

// Pl(A): total mass not contradicting A; equals 1 - Bel(complement of A).
inline double plausibility(const MassFunction& m, FocalSet a) {
    detail::require_in_frame(m, a);
    double sum = 0.0;
    for (const auto& [set, mass] : m.assignments())
        if (!set.intersect(a).empty()) sum += mass;
    return sum;
}

// Conflict coefficient K: total product mass on disjoint focal-set pairs.
inline double conflict_coefficient(const MassFunction& m1, const MassFunction& m2) {
    detail::require_same_frame(m1, m2);
    double k = 0.0;
    for (const auto& [a, ma] : m1.assignments())
        for (const auto& [b, mb] : m2.assignments())
            if (a.intersect(b).empty()) k += ma * mb;
    return k;
}

// Dempster's rule of combination. Throws TotalConflictError when K = 1
// within 1e-12. Product terms are accumulated in an argument-order-free
// sequence so combine(a, b) and combine(b, a) are bitwise identical.
inline MassFunction combine(const MassFunction& m1, const MassFunction& m2) {
    detail::require_same_frame(m1, m2);

    // (lo, hi) orders each pair canonically regardless of operand order.
    std::vector<std::tuple<std::uint64_t, std::uint64_t, FocalSet, double>> terms;
    terms.reserve(m1.assignments().size() * m2.assignments().size());
    for (const auto& [a, ma] : m1.assignments())
        for (const auto& [b, mb] : m2.assignments()) {
            const std::uint64_t lo = std::min(a.bits, b.bits);
            const std::uint64_t hi = std::max(a.bits, b.bits);
            terms.emplace_back(lo, hi, a.intersect(b), ma * mb);
        }
    std::sort(terms.begin(), terms.end(), [](const auto& x, const auto& y) {
        return std::tie(std::get<0>(x), std::get<1>(x), std::get<3>(x)) <
               std::tie(std::get<0>(y), std::get<1>(y), std::get<3>(y));
    });

    double conflict = 0.0;
    std::map<FocalSet, double> sums;
    for (const auto& [lo, hi, inter, product] : terms) {
        if (inter.empty())
            conflict += product;
        else
            sums[inter] += product;
    }
    if (conflict >= 1.0 - 1e-12) throw TotalConflictError(conflict);

    const double norm = 1.0 - conflict;
    double kept = 0.0;
    for (auto it = sums.begin(); it != sums.end();) {
        it->second /= norm;
        if (it->second < 1e-12) {
            it = sums.erase(it); // prune float dust, renormalize below
        } else {
            kept += it->second;
            ++it;
        }
    }
    for (auto& [set, mass] : sums) mass /= kept;
    return MassFunction(m1.frame(), std::move(sums));
}

// Left fold of Dempster's rule over a list of mass functions.
inline MassFunction combine_many(std::span<const MassFunction> ms) {
    if (ms.empty()) throw ValidationError("combine_many needs at least one mass function");
    MassFunction acc = ms[0];
    for (std::size_t i = 1; i < ms.size(); ++i) {
        try {
            acc = combine(acc, ms[i]);
        } catch (const TotalConflictError& e) {
            throw e.with_indices(static_cast<int>(i) - 1, static_cast<int>(i));
        }
    }
    return acc;
}

inline MassFunction combine_many(std::initializer_list<MassFunction> ms) {
    return combine_many(std::span<const MassFunction>(ms.begin(), ms.size()));
}

} // namespace dsfusion
