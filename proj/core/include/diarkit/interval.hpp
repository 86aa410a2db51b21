#pragma once

#include <vector>

namespace diarkit {

/// Closed-open time interval [begin, end) in seconds. Abutting intervals
/// share a boundary without overlapping, which keeps union and measure
/// arithmetic unambiguous.
struct Interval {
  double begin = 0.0;
  double end = 0.0;

  double length() const { return end - begin; }
  bool contains(double t) const { return begin <= t && t < end; }
};

using IntervalSet = std::vector<Interval>;

/// Sort, drop empties, and coalesce overlapping or abutting intervals.
IntervalSet normalize(IntervalSet intervals);

/// Set operations. Inputs must be normalized; outputs are normalized.
IntervalSet intersect(const IntervalSet& a, const IntervalSet& b);
IntervalSet set_union(const IntervalSet& a, const IntervalSet& b);
IntervalSet subtract(const IntervalSet& a, const IntervalSet& b);

/// Total length. Input must be normalized (disjoint).
double measure(const IntervalSet& s);

/// True if t lies inside one of the (normalized) intervals.
bool covers(const IntervalSet& s, double t);

}  // namespace diarkit
