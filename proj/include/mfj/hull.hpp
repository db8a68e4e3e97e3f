// SPDX-License-Identifier: MIT
#pragma once

#include <limits>
#include <set>

namespace mfj::detail {

/// Upper envelope of lines y = slope * x + intercept with O(log n) insertion
/// in any order and O(log n) max queries.
class LineEnvelope {
    struct Line {
        mutable double slope;
        mutable double intercept;
        mutable double end;  // x where the next line takes over
        bool operator<(const Line& o) const { return slope < o.slope; }
        bool operator<(double x) const { return end < x; }
    };
    using Set = std::multiset<Line, std::less<>>;
    using It = Set::iterator;

    static constexpr double inf = std::numeric_limits<double>::infinity();

    bool intersect(It x, It y) {
        if (y == lines_.end()) {
            x->end = inf;
            return false;
        }
        if (x->slope == y->slope) {
            x->end = x->intercept > y->intercept ? inf : -inf;
        } else {
            x->end = (y->intercept - x->intercept) / (x->slope - y->slope);
        }
        return x->end >= y->end;
    }

public:
    void add(double slope, double intercept) {
        auto z = lines_.insert({slope, intercept, 0.0});
        auto y = z++;
        auto x = y;
        while (intersect(y, z)) z = lines_.erase(z);
        if (x != lines_.begin() && intersect(--x, y)) intersect(x, y = lines_.erase(y));
        while ((y = x) != lines_.begin() && (--x)->end >= y->end) intersect(x, lines_.erase(y));
    }

    [[nodiscard]] double max_at(double x) const {
        const auto l = *lines_.lower_bound(x);
        return l.slope * x + l.intercept;
    }

    [[nodiscard]] bool empty() const noexcept { return lines_.empty(); }

private:
    Set lines_;
};

}  // namespace mfj::detail
