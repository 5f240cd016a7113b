#pragma once

#include <limits>
#include <string>
#include <vector>

namespace ivkit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    bool lower_closed = true;
    bool upper_closed = true;

    bool contains(double v) const noexcept;
    bool bounded() const noexcept { return lower > -kInf && upper < kInf; }
    double width() const noexcept { return upper - lower; }
};

/// A finite union of disjoint real intervals, kept sorted. Infinite endpoints
/// are always open.
class IntervalSet {
  public:
    IntervalSet() = default;
    explicit IntervalSet(std::vector<Interval> pieces);

    static IntervalSet closed(double lower, double upper);
    static IntervalSet whole_line();

    const std::vector<Interval>& intervals() const noexcept { return pieces_; }
    bool empty() const noexcept { return pieces_.empty(); }
    bool contains(double v) const noexcept;
    bool bounded() const noexcept;
    bool is_whole_line() const noexcept;

    /// Renders e.g. "[-0.24, 0.64]" or "(-inf, a] ∪ [b, inf)"; the empty set is "∅".
    std::string to_string() const;

  private:
    std::vector<Interval> pieces_;
};

}  // namespace ivkit
