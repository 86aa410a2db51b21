#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "diarkit/timeline.hpp"

namespace diarkit {

/// Parse RTTM text ("SPEAKER <rec> 1 <onset> <dur> <NA> <NA> <spk> <NA> <NA>").
/// Returns one Timeline per recording, sorted by recording id.
/// Throws ParseError (with line number) on malformed lines and
/// ValidationError on same-speaker overlap; nothing is merged silently.
std::vector<Timeline> parse_rttm(std::istream& in);
std::vector<Timeline> parse_rttm_string(const std::string& text);
std::vector<Timeline> load_rttm(const std::string& path);

/// Serialize timelines; onset/duration fixed at 3 decimals, turns sorted by
/// (recording_id, onset, speaker_id).
std::string write_rttm(const std::vector<Timeline>& timelines);
void save_rttm(const std::string& path, const std::vector<Timeline>& timelines);

/// Parse UEM text ("<rec> 1 <onset> <offset>"). Regions per recording are
/// validated disjoint (abutting allowed) and returned sorted.
std::vector<UemRegion> parse_uem(std::istream& in);
std::vector<UemRegion> parse_uem_string(const std::string& text);
std::vector<UemRegion> load_uem(const std::string& path);

std::string write_uem(const std::vector<UemRegion>& regions);
void save_uem(const std::string& path, const std::vector<UemRegion>& regions);

}  // namespace diarkit
