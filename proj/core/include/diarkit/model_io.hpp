#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace diarkit {

/// Text model-file framing shared by every trained model:
///
///   #diarkit-model <kind> v1
///   <named scalars / vectors / matrix rows, %.17g, lossless>
///   #checksum <fnv1a64 of the payload, hex>
///
/// Readers verify the kind tag, version, and checksum before any field is
/// consumed, and every field read is checked by name, so dimension mismatches
/// are reported with both sides named.
class ModelWriter {
 public:
  void scalar(const std::string& name, long value);
  void scalar(const std::string& name, double value);
  void vector(const std::string& name, const Eigen::VectorXd& v);
  void matrix(const std::string& name, const Eigen::MatrixXd& m);

  /// Full file contents including header and checksum line.
  std::string finish(const std::string& kind) const;

 private:
  std::string payload_;
};

class ModelReader {
 public:
  /// Parses and verifies framing; throws IoError on tag/version/checksum
  /// mismatch.
  ModelReader(const std::string& content, const std::string& expected_kind);

  long scalar_long(const std::string& name);
  double scalar_double(const std::string& name);
  Eigen::VectorXd vector(const std::string& name, Eigen::Index size);
  Eigen::MatrixXd matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols);

 private:
  std::vector<std::string> lines_;
  std::size_t next_ = 0;

  std::vector<std::string> take(const std::string& name);
};

}  // namespace diarkit
