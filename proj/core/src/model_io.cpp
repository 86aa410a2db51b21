#include "diarkit/model_io.hpp"

#include "diarkit/errors.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

namespace {
constexpr const char* kMagic = "#diarkit-model";
constexpr const char* kVersion = "v1";
}  // namespace

void ModelWriter::scalar(const std::string& name, long value) {
  payload_ += name + strprintf(" %ld\n", value);
}

void ModelWriter::scalar(const std::string& name, double value) {
  payload_ += name + strprintf(" %.17g\n", value);
}

void ModelWriter::vector(const std::string& name, const Eigen::VectorXd& v) {
  payload_ += name;
  for (Eigen::Index i = 0; i < v.size(); ++i) payload_ += strprintf(" %.17g", v(i));
  payload_ += '\n';
}

void ModelWriter::matrix(const std::string& name, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    payload_ += name + strprintf(".%ld", static_cast<long>(r));
    for (Eigen::Index c = 0; c < m.cols(); ++c) payload_ += strprintf(" %.17g", m(r, c));
    payload_ += '\n';
  }
}

std::string ModelWriter::finish(const std::string& kind) const {
  std::string out = std::string(kMagic) + " " + kind + " " + kVersion + "\n";
  out += payload_;
  out += strprintf("#checksum %016llx\n",
                   static_cast<unsigned long long>(fnv1a64(payload_)));
  return out;
}

ModelReader::ModelReader(const std::string& content, const std::string& expected_kind) {
  auto raw = split_char(content, '\n');
  if (raw.empty()) throw IoError("empty model file");
  auto header = split_ws(raw[0]);
  if (header.size() != 3 || header[0] != kMagic) {
    throw IoError("not a diarkit model file");
  }
  if (header[1] != expected_kind) {
    throw IoError("model kind mismatch: expected '" + expected_kind + "', file holds '" +
                  header[1] + "'");
  }
  if (header[2] != kVersion) {
    throw IoError("unsupported model version '" + header[2] + "'");
  }
  std::string payload;
  std::string checksum_line;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (raw[i].rfind("#checksum", 0) == 0) {
      checksum_line = raw[i];
      break;
    }
    if (trim(raw[i]).empty()) continue;
    payload += raw[i];
    payload += '\n';
    lines_.push_back(raw[i]);
  }
  if (checksum_line.empty()) throw IoError("model file missing checksum line");
  auto fields = split_ws(checksum_line);
  std::string expected = strprintf("%016llx", static_cast<unsigned long long>(fnv1a64(payload)));
  if (fields.size() != 2 || fields[1] != expected) {
    throw IoError("model file checksum mismatch (file corrupted or edited)");
  }
}

std::vector<std::string> ModelReader::take(const std::string& name) {
  if (next_ >= lines_.size()) {
    throw IoError("model file truncated: expected field '" + name + "'");
  }
  auto fields = split_ws(lines_[next_]);
  if (fields.empty() || fields[0] != name) {
    throw IoError("model file field mismatch: expected '" + name + "', found '" +
                  (fields.empty() ? std::string() : fields[0]) + "'");
  }
  ++next_;
  return fields;
}

long ModelReader::scalar_long(const std::string& name) {
  auto fields = take(name);
  long v = 0;
  if (fields.size() != 2 || !parse_long(fields[1], &v)) {
    throw IoError("bad integer field '" + name + "'");
  }
  return v;
}

double ModelReader::scalar_double(const std::string& name) {
  auto fields = take(name);
  double v = 0.0;
  if (fields.size() != 2 || !parse_double(fields[1], &v)) {
    throw IoError("bad scalar field '" + name + "'");
  }
  return v;
}

Eigen::VectorXd ModelReader::vector(const std::string& name, Eigen::Index size) {
  auto fields = take(name);
  if (static_cast<Eigen::Index>(fields.size()) != size + 1) {
    throw IoError(strprintf("field '%s': expected %ld values, found %zu", name.c_str(),
                            static_cast<long>(size), fields.size() - 1));
  }
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    if (!parse_double(fields[static_cast<std::size_t>(i + 1)], &v(i))) {
      throw IoError("bad number in field '" + name + "'");
    }
  }
  return v;
}

Eigen::MatrixXd ModelReader::matrix(const std::string& name, Eigen::Index rows,
                                    Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    m.row(r) = vector(name + strprintf(".%ld", static_cast<long>(r)), cols).transpose();
  }
  return m;
}

}  // namespace diarkit
