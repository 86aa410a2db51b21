#include "diarkit/rttm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "diarkit/errors.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

std::vector<Timeline> parse_rttm(std::istream& in) {
  std::map<std::string, std::vector<Turn>> by_recording;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_ws(line);
    if (fields.size() < 9) {
      throw ParseError(strprintf("expected >= 9 fields, got %zu", fields.size()), lineno);
    }
    if (fields[0] != "SPEAKER") {
      throw ParseError("expected record type SPEAKER, got '" + fields[0] + "'", lineno);
    }
    double onset = 0.0, duration = 0.0;
    if (!parse_double(fields[3], &onset)) {
      throw ParseError("non-numeric onset '" + fields[3] + "'", lineno);
    }
    if (!parse_double(fields[4], &duration)) {
      throw ParseError("non-numeric duration '" + fields[4] + "'", lineno);
    }
    if (!(duration > 0.0)) {
      throw ParseError(strprintf("duration %.3f must be > 0", duration), lineno);
    }
    if (onset < 0.0) {
      throw ParseError(strprintf("onset %.3f must be >= 0", onset), lineno);
    }
    by_recording[fields[1]].push_back({fields[1], fields[7], onset, duration});
  }
  std::vector<Timeline> out;
  out.reserve(by_recording.size());
  for (auto& [rec, turns] : by_recording) {
    out.emplace_back(rec, std::move(turns));  // validates same-speaker overlap
  }
  return out;
}

std::vector<Timeline> parse_rttm_string(const std::string& text) {
  std::istringstream ss(text);
  return parse_rttm(ss);
}

std::vector<Timeline> load_rttm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open RTTM file: " + path);
  return parse_rttm(in);
}

std::string write_rttm(const std::vector<Timeline>& timelines) {
  std::vector<const Timeline*> sorted;
  for (const auto& t : timelines) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(), [](const Timeline* a, const Timeline* b) {
    return a->recording_id() < b->recording_id();
  });
  std::string out;
  for (const Timeline* t : sorted) {
    for (const auto& turn : t->turns()) {
      out += strprintf("SPEAKER %s 1 %.3f %.3f <NA> <NA> %s <NA> <NA>\n",
                       turn.recording_id.c_str(), turn.onset, turn.duration,
                       turn.speaker_id.c_str());
    }
  }
  return out;
}

void save_rttm(const std::string& path, const std::vector<Timeline>& timelines) {
  write_file(path, write_rttm(timelines));
}

std::vector<UemRegion> parse_uem(std::istream& in) {
  std::vector<UemRegion> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_ws(line);
    if (fields.size() != 4) {
      throw ParseError(strprintf("expected 4 fields, got %zu", fields.size()), lineno);
    }
    double onset = 0.0, offset = 0.0;
    if (!parse_double(fields[2], &onset) || !parse_double(fields[3], &offset)) {
      throw ParseError("non-numeric onset/offset", lineno);
    }
    if (onset < 0.0) throw ParseError(strprintf("onset %.3f must be >= 0", onset), lineno);
    if (!(offset > onset)) {
      throw ParseError(strprintf("offset %.3f must exceed onset %.3f", offset, onset), lineno);
    }
    out.push_back({fields[0], onset, offset});
  }
  std::sort(out.begin(), out.end(), [](const UemRegion& a, const UemRegion& b) {
    if (a.recording_id != b.recording_id) return a.recording_id < b.recording_id;
    return a.onset < b.onset;
  });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].recording_id == out[i - 1].recording_id &&
        out[i].onset < out[i - 1].offset) {
      throw ValidationError(strprintf("%s: regions [%.3f, %.3f) and [%.3f, %.3f) overlap",
                                      out[i].recording_id.c_str(), out[i - 1].onset,
                                      out[i - 1].offset, out[i].onset, out[i].offset));
    }
  }
  return out;
}

std::vector<UemRegion> parse_uem_string(const std::string& text) {
  std::istringstream ss(text);
  return parse_uem(ss);
}

std::vector<UemRegion> load_uem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open UEM file: " + path);
  return parse_uem(in);
}

std::string write_uem(const std::vector<UemRegion>& regions) {
  auto sorted = regions;
  std::sort(sorted.begin(), sorted.end(), [](const UemRegion& a, const UemRegion& b) {
    if (a.recording_id != b.recording_id) return a.recording_id < b.recording_id;
    return a.onset < b.onset;
  });
  std::string out;
  for (const auto& r : sorted) {
    out += strprintf("%s 1 %.3f %.3f\n", r.recording_id.c_str(), r.onset, r.offset);
  }
  return out;
}

void save_uem(const std::string& path, const std::vector<UemRegion>& regions) {
  write_file(path, write_uem(regions));
}

}  // namespace diarkit
