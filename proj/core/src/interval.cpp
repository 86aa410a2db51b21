#include "diarkit/interval.hpp"

#include <algorithm>

namespace diarkit {

IntervalSet normalize(IntervalSet intervals) {
  IntervalSet in;
  in.reserve(intervals.size());
  for (const auto& iv : intervals) {
    if (iv.end > iv.begin) in.push_back(iv);
  }
  std::sort(in.begin(), in.end(),
            [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
  IntervalSet out;
  for (const auto& iv : in) {
    if (!out.empty() && iv.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, iv.end);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
  IntervalSet out;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double lo = std::max(a[i].begin, b[j].begin);
    double hi = std::min(a[i].end, b[j].end);
    if (hi > lo) out.push_back({lo, hi});
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

IntervalSet set_union(const IntervalSet& a, const IntervalSet& b) {
  IntervalSet all = a;
  all.insert(all.end(), b.begin(), b.end());
  return normalize(std::move(all));
}

IntervalSet subtract(const IntervalSet& a, const IntervalSet& b) {
  IntervalSet out;
  size_t j = 0;
  for (const auto& iv : a) {
    double cursor = iv.begin;
    while (j < b.size() && b[j].end <= cursor) ++j;
    size_t k = j;
    while (k < b.size() && b[k].begin < iv.end) {
      if (b[k].begin > cursor) out.push_back({cursor, b[k].begin});
      cursor = std::max(cursor, b[k].end);
      if (cursor >= iv.end) break;
      ++k;
    }
    if (cursor < iv.end) out.push_back({cursor, iv.end});
  }
  return out;
}

double measure(const IntervalSet& s) {
  double total = 0.0;
  for (const auto& iv : s) total += iv.length();
  return total;
}

bool covers(const IntervalSet& s, double t) {
  auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const Interval& iv) {
    return v < iv.begin;
  });
  if (it == s.begin()) return false;
  --it;
  return it->contains(t);
}

}  // namespace diarkit
