#pragma once

#include <Eigen/Dense>
#include <vector>

namespace diarkit {

struct AssignmentResult {
  std::vector<int> row_to_col;  // -1 = unassigned
  double total = 0.0;           // sum of assigned benefits
};

/// One-to-one assignment maximizing total benefit on a non-negative,
/// possibly rectangular matrix (shortest-augmenting-path solver on the
/// padded square). Pairings with zero benefit are left unassigned.
AssignmentResult max_assignment(const Eigen::MatrixXd& benefit);

}  // namespace diarkit
