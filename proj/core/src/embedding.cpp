#include "diarkit/embedding.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "diarkit/errors.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

Eigen::MatrixXd EmbeddingSequence::matrix() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(segments.size()), dim);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = segments[i].vector.transpose();
  }
  return out;
}

std::vector<EmbeddingSequence> parse_embeddings_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  long dim = -1;
  std::map<std::string, EmbeddingSequence> by_recording;
  while (std::getline(in, line)) {
    ++lineno;
    auto trimmed = trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.rfind("#dim=", 0) == 0) {
      if (!parse_long(trimmed.substr(5), &dim) || dim < 1) {
        throw ParseError("bad #dim header", lineno);
      }
      continue;
    }
    if (dim < 1) throw ParseError("missing #dim=D header before data", lineno);
    auto fields = split_char(line, '\t');
    if (static_cast<long>(fields.size()) != 3 + dim) {
      throw ParseError(strprintf("expected %ld fields, got %zu", 3 + dim, fields.size()),
                       lineno);
    }
    EmbeddingSegment seg;
    if (!parse_double(fields[1], &seg.onset) || !parse_double(fields[2], &seg.duration)) {
      throw ParseError("non-numeric onset/duration", lineno);
    }
    if (!(seg.duration > 0.0)) throw ParseError("duration must be > 0", lineno);
    seg.vector.resize(dim);
    for (long d = 0; d < dim; ++d) {
      if (!parse_double(fields[static_cast<std::size_t>(3 + d)], &seg.vector(d))) {
        throw ParseError(strprintf("non-numeric vector component %ld", d + 1), lineno);
      }
    }
    auto& seq = by_recording[fields[0]];
    seq.recording_id = fields[0];
    seq.dim = static_cast<int>(dim);
    seq.segments.push_back(std::move(seg));
  }
  std::vector<EmbeddingSequence> out;
  out.reserve(by_recording.size());
  for (auto& [rec, seq] : by_recording) {
    std::stable_sort(seq.segments.begin(), seq.segments.end(),
                     [](const EmbeddingSegment& a, const EmbeddingSegment& b) {
                       return a.onset < b.onset;
                     });
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<EmbeddingSequence> load_embeddings(const std::string& path) {
  return parse_embeddings_string(read_file(path));
}

std::string write_embeddings(const std::vector<EmbeddingSequence>& sequences) {
  std::string out;
  if (!sequences.empty()) out += strprintf("#dim=%d\n", sequences.front().dim);
  std::vector<const EmbeddingSequence*> sorted;
  for (const auto& s : sequences) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const EmbeddingSequence* a, const EmbeddingSequence* b) {
              return a->recording_id < b->recording_id;
            });
  for (const EmbeddingSequence* seq : sorted) {
    for (const auto& seg : seq->segments) {
      out += seq->recording_id;
      out += strprintf("\t%.17g\t%.17g", seg.onset, seg.duration);
      for (Eigen::Index d = 0; d < seg.vector.size(); ++d) {
        out += strprintf("\t%.17g", seg.vector(d));
      }
      out += '\n';
    }
  }
  return out;
}

void save_embeddings(const std::string& path,
                     const std::vector<EmbeddingSequence>& sequences) {
  write_file(path, write_embeddings(sequences));
}

}  // namespace diarkit
