#include "diarkit/assignment.hpp"

#include <limits>

#include "diarkit/errors.hpp"

namespace diarkit {

namespace {

// Jonker-Volgenant style shortest augmenting path on a square cost matrix.
// Returns row -> col assignment minimizing total cost.
std::vector<int> solve_square_min(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

AssignmentResult max_assignment(const Eigen::MatrixXd& benefit) {
  const int rows = static_cast<int>(benefit.rows());
  const int cols = static_cast<int>(benefit.cols());
  AssignmentResult result;
  result.row_to_col.assign(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) return result;
  if ((benefit.array() < 0.0).any()) {
    throw ArgumentError("assignment benefits must be non-negative");
  }

  // Pad to square with zero benefit, convert to a minimization problem.
  const int n = std::max(rows, cols);
  const double top = benefit.maxCoeff();
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, n, top);
  cost.topLeftCorner(rows, cols) = (top - benefit.array()).matrix();

  auto assignment = solve_square_min(cost);
  for (int i = 0; i < rows; ++i) {
    int j = assignment[i];
    if (j >= 0 && j < cols && benefit(i, j) > 0.0) {
      result.row_to_col[i] = j;
      result.total += benefit(i, j);
    }
  }
  return result;
}

}  // namespace diarkit
