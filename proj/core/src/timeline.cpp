#include "diarkit/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "diarkit/errors.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

Timeline::Timeline(std::string recording_id, std::vector<Turn> turns)
    : recording_id_(std::move(recording_id)), turns_(std::move(turns)) {
  for (const auto& t : turns_) {
    if (t.recording_id != recording_id_) {
      throw ValidationError("turn for recording '" + t.recording_id +
                            "' in timeline of '" + recording_id_ + "'");
    }
    if (!(t.duration > 0.0) || !std::isfinite(t.duration)) {
      throw ValidationError(strprintf("speaker %s at %.3f: duration must be > 0",
                                      t.speaker_id.c_str(), t.onset));
    }
    if (t.onset < 0.0 || !std::isfinite(t.onset)) {
      throw ValidationError(strprintf("speaker %s: onset %.3f must be >= 0",
                                      t.speaker_id.c_str(), t.onset));
    }
  }
  std::sort(turns_.begin(), turns_.end(), [](const Turn& a, const Turn& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    return a.speaker_id < b.speaker_id;
  });
  // Same-speaker turns must be disjoint with gaps > 0.
  std::map<std::string, double> last_offset;
  for (const auto& t : turns_) {
    auto it = last_offset.find(t.speaker_id);
    if (it != last_offset.end() && t.onset <= it->second) {
      throw ValidationError(strprintf(
          "speaker %s: turn at %.3f overlaps or abuts previous turn ending at %.3f",
          t.speaker_id.c_str(), t.onset, it->second));
    }
    double off = t.offset();
    if (it == last_offset.end()) {
      last_offset.emplace(t.speaker_id, off);
    } else if (off > it->second) {
      it->second = off;
    }
  }
}

std::vector<std::string> Timeline::speakers() const {
  std::vector<std::string> out;
  for (const auto& t : turns_) out.push_back(t.speaker_id);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

IntervalSet Timeline::speaker_intervals(const std::string& speaker_id) const {
  IntervalSet out;
  for (const auto& t : turns_) {
    if (t.speaker_id == speaker_id) out.push_back({t.onset, t.offset()});
  }
  return normalize(std::move(out));
}

IntervalSet Timeline::speech_intervals() const {
  IntervalSet out;
  for (const auto& t : turns_) out.push_back({t.onset, t.offset()});
  return normalize(std::move(out));
}

double Timeline::extent() const {
  double m = 0.0;
  for (const auto& t : turns_) m = std::max(m, t.offset());
  return m;
}

Timeline merge_to_sad(const Timeline& t) {
  std::vector<Turn> out;
  for (const auto& iv : t.speech_intervals()) {
    out.push_back({t.recording_id(), "speech", iv.begin, iv.length()});
  }
  return Timeline(t.recording_id(), std::move(out));
}

Timeline enforce_pause_split(const Timeline& t, double min_pause) {
  if (min_pause < 0.0) throw ArgumentError("min_pause must be >= 0");
  std::vector<Turn> out;
  for (const auto& speaker : t.speakers()) {
    IntervalSet merged;
    for (const auto& turn : t.turns()) {
      if (turn.speaker_id != speaker) continue;
      if (!merged.empty() && turn.onset - merged.back().end <= min_pause) {
        merged.back().end = turn.offset();
      } else {
        merged.push_back({turn.onset, turn.offset()});
      }
    }
    for (const auto& iv : merged) {
      out.push_back({t.recording_id(), speaker, iv.begin, iv.length()});
    }
  }
  return Timeline(t.recording_id(), std::move(out));
}

Timeline crop_to_intervals(const Timeline& t, const IntervalSet& regions) {
  std::vector<Turn> out;
  for (const auto& turn : t.turns()) {
    IntervalSet pieces = intersect({{turn.onset, turn.offset()}}, regions);
    for (const auto& iv : pieces) {
      out.push_back({t.recording_id(), turn.speaker_id, iv.begin, iv.length()});
    }
  }
  return Timeline(t.recording_id(), std::move(out));
}

Timeline crop_to_uem(const Timeline& t, const std::vector<UemRegion>& regions) {
  return crop_to_intervals(t, uem_intervals(regions, t.recording_id()));
}

FrameLabels discretize(const Timeline& t, double frame_step, double total_duration) {
  if (!(frame_step > 0.0)) throw ArgumentError("frame_step must be > 0");
  double total = total_duration < 0.0 ? t.extent() : total_duration;
  auto num_frames = static_cast<std::size_t>(
      std::max(0.0, std::ceil(total / frame_step - 1e-9)));
  FrameLabels out;
  out.recording_id = t.recording_id();
  out.frame_step = frame_step;
  out.labels.resize(num_frames);
  std::map<std::string, IntervalSet> per_speaker;
  for (const auto& speaker : t.speakers()) {
    per_speaker.emplace(speaker, t.speaker_intervals(speaker));
  }
  for (std::size_t i = 0; i < num_frames; ++i) {
    double mid = (static_cast<double>(i) + 0.5) * frame_step;
    for (const auto& [speaker, ivs] : per_speaker) {
      if (covers(ivs, mid)) out.labels[i].push_back(speaker);
    }
  }
  return out;
}

IntervalSet uem_intervals(const std::vector<UemRegion>& regions,
                          const std::string& recording_id) {
  IntervalSet out;
  for (const auto& r : regions) {
    if (r.recording_id == recording_id) out.push_back({r.onset, r.offset});
  }
  return normalize(std::move(out));
}

namespace {

// Duration d whose sum with onset reproduces target_offset as closely as
// rounding permits, never undershooting: abutting turns stay abutting and
// interval endpoints are preserved to within one ulp.
double exact_duration(double onset, double target_offset) {
  double d = target_offset - onset;
  for (int i = 0; i < 4 && onset + d != target_offset; ++i) {
    d = std::nextafter(d, onset + d < target_offset
                              ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity());
  }
  while (onset + d < target_offset) {
    d = std::nextafter(d, std::numeric_limits<double>::infinity());
  }
  return d;
}

}  // namespace

Timeline labels_to_timeline(const std::string& recording_id, const IntervalSet& speech,
                            const std::vector<int>& labels,
                            const std::vector<std::string>& names, double frame_step) {
  if (!(frame_step > 0.0)) throw ArgumentError("frame_step must be > 0");
  const auto t_full = static_cast<long>(labels.size());
  auto frame_range = [&](double begin, double end) {
    auto first = static_cast<long>(std::ceil(begin / frame_step - 0.5));
    auto last = static_cast<long>(std::ceil(end / frame_step - 0.5)) - 1;
    return std::pair<long, long>{std::max(first, 0L), std::min(last, t_full - 1)};
  };
  std::vector<Turn> turns;
  for (const auto& iv : speech) {
    auto [first, last] = frame_range(iv.begin, iv.end);
    if (first > last) {
      // No frame midpoint inside; use the frame nearest the interval center.
      double mid = iv.begin + (iv.end - iv.begin) / 2.0;
      auto t = static_cast<long>(
          std::clamp(mid / frame_step - 0.5, 0.0, static_cast<double>(t_full - 1)));
      int label = t_full > 0 ? labels[static_cast<std::size_t>(t)] : 0;
      if (label < 0) label = 0;
      turns.push_back({recording_id, names.at(static_cast<std::size_t>(label)), iv.begin,
                       exact_duration(iv.begin, iv.end)});
      continue;
    }
    double cursor = iv.begin;
    int open = labels[static_cast<std::size_t>(first)];
    for (long t = first + 1; t <= last; ++t) {
      int label = labels[static_cast<std::size_t>(t)];
      if (label != open) {
        double boundary = static_cast<double>(t) * frame_step;
        if (open < 0) throw ValidationError("unlabeled frame inside a speech interval");
        turns.push_back({recording_id, names.at(static_cast<std::size_t>(open)), cursor,
                         exact_duration(cursor, boundary)});
        cursor = boundary;
        open = label;
      }
    }
    if (open < 0) throw ValidationError("unlabeled frame inside a speech interval");
    turns.push_back({recording_id, names.at(static_cast<std::size_t>(open)), cursor,
                     exact_duration(cursor, iv.end)});
  }
  return Timeline(recording_id, std::move(turns));
}

}  // namespace diarkit
