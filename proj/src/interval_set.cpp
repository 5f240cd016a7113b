#include "ivkit/interval_set.hpp"

#include "ivkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ivkit {

bool Interval::contains(double v) const noexcept {
    const bool above = lower_closed ? v >= lower : v > lower;
    const bool below = upper_closed ? v <= upper : v < upper;
    return above && below;
}

IntervalSet::IntervalSet(std::vector<Interval> pieces) {
    for (auto& p : pieces) {
        if (std::isnan(p.lower) || std::isnan(p.upper)) throw ValidationError("interval endpoint is NaN");
        if (p.lower > p.upper) throw ValidationError("interval lower endpoint exceeds upper endpoint");
        if (std::isinf(p.lower)) p.lower_closed = false;
        if (std::isinf(p.upper)) p.upper_closed = false;
    }
    std::erase_if(pieces, [](const Interval& p) {
        return p.lower == p.upper && !(p.lower_closed && p.upper_closed);
    });
    std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) {
        if (a.lower != b.lower) return a.lower < b.lower;
        return a.lower_closed && !b.lower_closed;
    });
    for (const auto& p : pieces) {
        if (!pieces_.empty()) {
            auto& last = pieces_.back();
            const bool touches = p.lower < last.upper ||
                                 (p.lower == last.upper && (p.lower_closed || last.upper_closed));
            if (touches) {
                if (p.upper > last.upper) {
                    last.upper = p.upper;
                    last.upper_closed = p.upper_closed;
                } else if (p.upper == last.upper) {
                    last.upper_closed = last.upper_closed || p.upper_closed;
                }
                continue;
            }
        }
        pieces_.push_back(p);
    }
}

IntervalSet IntervalSet::closed(double lower, double upper) {
    return IntervalSet({Interval{lower, upper, true, true}});
}

IntervalSet IntervalSet::whole_line() { return IntervalSet({Interval{-kInf, kInf, false, false}}); }

bool IntervalSet::contains(double v) const noexcept {
    return std::any_of(pieces_.begin(), pieces_.end(), [v](const Interval& p) { return p.contains(v); });
}

bool IntervalSet::bounded() const noexcept {
    return std::all_of(pieces_.begin(), pieces_.end(), [](const Interval& p) { return p.bounded(); });
}

bool IntervalSet::is_whole_line() const noexcept {
    return pieces_.size() == 1 && std::isinf(pieces_[0].lower) && std::isinf(pieces_[0].upper);
}

std::string IntervalSet::to_string() const {
    if (pieces_.empty()) return "∅";
    std::ostringstream os;
    os.precision(6);
    auto endpoint = [&](double v) {
        if (v == kInf) os << "inf";
        else if (v == -kInf) os << "-inf";
        else os << v;
    };
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        if (i > 0) os << " ∪ ";
        os << (p.lower_closed ? '[' : '(');
        endpoint(p.lower);
        os << ", ";
        endpoint(p.upper);
        os << (p.upper_closed ? ']' : ')');
    }
    return os.str();
}

}  // namespace ivkit
