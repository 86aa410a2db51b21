#pragma once

#include <string>
#include <vector>

#include "diarkit/interval.hpp"

namespace diarkit {

/// One speaker-attributed interval [onset, onset + duration).
struct Turn {
  std::string recording_id;
  std::string speaker_id;
  double onset = 0.0;     // seconds, >= 0
  double duration = 0.0;  // seconds, > 0

  double offset() const { return onset + duration; }
};

/// All turns of one recording, sorted by (onset, speaker_id).
///
/// Turns of the same speaker never overlap and are separated by gaps > 0;
/// cross-speaker overlap is allowed and expected. Immutable after
/// construction.
class Timeline {
 public:
  Timeline() = default;

  /// Sorts and validates. Throws ValidationError on mixed recording ids,
  /// non-positive durations, negative onsets, or same-speaker overlap/abutment.
  Timeline(std::string recording_id, std::vector<Turn> turns);

  const std::string& recording_id() const { return recording_id_; }
  const std::vector<Turn>& turns() const { return turns_; }
  bool empty() const { return turns_.empty(); }
  std::size_t size() const { return turns_.size(); }

  /// Distinct speaker ids, sorted.
  std::vector<std::string> speakers() const;

  /// Normalized union of one speaker's turns.
  IntervalSet speaker_intervals(const std::string& speaker_id) const;

  /// Normalized union of all turns (the speech region).
  IntervalSet speech_intervals() const;

  /// Largest offset, 0 when empty.
  double extent() const;

 private:
  std::string recording_id_;
  std::vector<Turn> turns_;
};

/// Scored-region companion of a timeline: [onset, offset) within a recording.
struct UemRegion {
  std::string recording_id;
  double onset = 0.0;
  double offset = 0.0;
};

/// Discretized view of a timeline: per-frame sets of active speaker ids.
/// Frame i covers [i*frame_step, (i+1)*frame_step); a speaker is active in
/// frame i iff the frame midpoint lies inside one of their turns.
struct FrameLabels {
  std::string recording_id;
  double frame_step = 0.0;
  std::vector<std::vector<std::string>> labels;  // sorted speaker ids per frame
};

/// Union of all turns under the single pseudo-speaker "speech".
Timeline merge_to_sad(const Timeline& t);

/// Per speaker, merge any same-speaker gap <= min_pause into one turn;
/// wider gaps remain splits. Throws ArgumentError if min_pause < 0.
Timeline enforce_pause_split(const Timeline& t, double min_pause = 0.200);

/// Intersect every turn with the union of the regions; empty pieces dropped.
Timeline crop_to_uem(const Timeline& t, const std::vector<UemRegion>& regions);

/// Same, against an arbitrary normalized interval set.
Timeline crop_to_intervals(const Timeline& t, const IntervalSet& regions);

/// Midpoint-rule discretization. total_duration < 0 means "up to extent()".
FrameLabels discretize(const Timeline& t, double frame_step, double total_duration = -1.0);

/// Normalized union of regions belonging to t's recording.
IntervalSet uem_intervals(const std::vector<UemRegion>& regions,
                          const std::string& recording_id);

/// Rebuild turns from per-frame single-label assignments (index into `names`,
/// -1 = unlabeled) inside the given speech intervals. Interval endpoints are
/// kept exactly, so the output speech region equals the union of `speech`;
/// internal boundaries land on frame edges. Intervals too short to contain a
/// frame midpoint take the label of the frame nearest their center.
Timeline labels_to_timeline(const std::string& recording_id, const IntervalSet& speech,
                            const std::vector<int>& labels,
                            const std::vector<std::string>& names, double frame_step);

}  // namespace diarkit
