#include "diarkit/features.hpp"

#include <cstring>
#include <map>
#include <sstream>

#include "diarkit/errors.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

namespace {

constexpr char kMagic[8] = {'D', 'K', 'F', 'E', 'A', 'T', '0', '1'};

template <typename T>
void append_raw(std::string& buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <typename T>
T read_raw(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw IoError("feature file truncated");
  T value;
  std::memcpy(&value, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

void save_features_binary(const std::string& path, const FrameFeatures& features) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  append_raw<std::uint32_t>(buf, 1u);
  append_raw<std::uint32_t>(buf, static_cast<std::uint32_t>(features.recording_id.size()));
  buf += features.recording_id;
  append_raw<double>(buf, features.frame_step);
  append_raw<std::uint64_t>(buf, static_cast<std::uint64_t>(features.frames.rows()));
  append_raw<std::uint64_t>(buf, static_cast<std::uint64_t>(features.frames.cols()));
  for (Eigen::Index t = 0; t < features.frames.rows(); ++t) {
    for (Eigen::Index d = 0; d < features.frames.cols(); ++d) {
      append_raw<float>(buf, static_cast<float>(features.frames(t, d)));
    }
  }
  write_file(path, buf);
}

FrameFeatures load_features_binary(const std::string& path) {
  std::string buf = read_file(path);
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a diarkit feature file: " + path);
  }
  std::size_t pos = sizeof(kMagic);
  auto version = read_raw<std::uint32_t>(buf, pos);
  if (version != 1u) throw IoError(strprintf("unsupported feature file version %u", version));
  auto name_len = read_raw<std::uint32_t>(buf, pos);
  if (pos + name_len > buf.size()) throw IoError("feature file truncated");
  FrameFeatures out;
  out.recording_id = buf.substr(pos, name_len);
  pos += name_len;
  out.frame_step = read_raw<double>(buf, pos);
  auto rows = read_raw<std::uint64_t>(buf, pos);
  auto cols = read_raw<std::uint64_t>(buf, pos);
  out.frames.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t t = 0; t < rows; ++t) {
    for (std::uint64_t d = 0; d < cols; ++d) {
      out.frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d)) =
          read_raw<float>(buf, pos);
    }
  }
  return out;
}

std::string write_features_text(const std::vector<FrameFeatures>& features) {
  std::string out;
  if (!features.empty()) {
    out += strprintf("#frame_step=%.17g\n", features.front().frame_step);
    out += strprintf("#dim=%ld\n", static_cast<long>(features.front().frames.cols()));
  }
  for (const auto& f : features) {
    for (Eigen::Index t = 0; t < f.frames.rows(); ++t) {
      out += f.recording_id + strprintf("\t%ld", static_cast<long>(t));
      for (Eigen::Index d = 0; d < f.frames.cols(); ++d) {
        out += strprintf("\t%.17g", f.frames(t, d));
      }
      out += '\n';
    }
  }
  return out;
}

std::vector<FrameFeatures> parse_features_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  double frame_step = -1.0;
  long dim = -1;
  std::map<std::string, std::vector<Eigen::VectorXd>> rows;
  std::vector<std::string> order;
  while (std::getline(in, line)) {
    ++lineno;
    auto trimmed = trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.rfind("#frame_step=", 0) == 0) {
      if (!parse_double(trimmed.substr(12), &frame_step) || !(frame_step > 0.0)) {
        throw ParseError("bad #frame_step header", lineno);
      }
      continue;
    }
    if (trimmed.rfind("#dim=", 0) == 0) {
      if (!parse_long(trimmed.substr(5), &dim) || dim < 1) {
        throw ParseError("bad #dim header", lineno);
      }
      continue;
    }
    if (frame_step <= 0.0 || dim < 1) {
      throw ParseError("missing #frame_step/#dim headers before data", lineno);
    }
    auto fields = split_char(line, '\t');
    if (static_cast<long>(fields.size()) != 2 + dim) {
      throw ParseError(strprintf("expected %ld fields, got %zu", 2 + dim, fields.size()),
                       lineno);
    }
    long index = 0;
    if (!parse_long(fields[1], &index) || index < 0) {
      throw ParseError("bad frame index", lineno);
    }
    Eigen::VectorXd v(dim);
    for (long d = 0; d < dim; ++d) {
      if (!parse_double(fields[static_cast<std::size_t>(2 + d)], &v(d))) {
        throw ParseError("non-numeric feature value", lineno);
      }
    }
    auto& rec_rows = rows[fields[0]];
    if (static_cast<long>(rec_rows.size()) != index) {
      throw ParseError(strprintf("frame index %ld out of order (expected %zu)", index,
                                 rec_rows.size()),
                       lineno);
    }
    if (rec_rows.empty()) order.push_back(fields[0]);
    rec_rows.push_back(std::move(v));
  }
  std::vector<FrameFeatures> out;
  for (const auto& rec : order) {
    FrameFeatures f;
    f.recording_id = rec;
    f.frame_step = frame_step;
    const auto& rec_rows = rows[rec];
    f.frames.resize(static_cast<Eigen::Index>(rec_rows.size()), dim);
    for (std::size_t t = 0; t < rec_rows.size(); ++t) {
      f.frames.row(static_cast<Eigen::Index>(t)) = rec_rows[t].transpose();
    }
    out.push_back(std::move(f));
  }
  return out;
}

void save_features_text(const std::string& path, const std::vector<FrameFeatures>& features) {
  write_file(path, write_features_text(features));
}

std::vector<FrameFeatures> load_features(const std::string& path) {
  std::string head = read_file(path);
  if (head.size() >= sizeof(kMagic) && std::memcmp(head.data(), kMagic, sizeof(kMagic)) == 0) {
    return {load_features_binary(path)};
  }
  return parse_features_text(head);
}

}  // namespace diarkit
