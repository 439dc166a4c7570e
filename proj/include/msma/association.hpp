#pragma once

#include "msma/geometry.hpp"
#include "msma/sensing.hpp"
#include "msma/tracking.hpp"

#include <vector>

namespace msma {

// ============================================================
// Gated optimal assignment
// ============================================================

// Cost matrix of squared Mahalanobis distances; +infinity marks gated-out
// pairs. Finite entries never exceed the gate.
struct AssignmentProblem {
    Eigen::MatrixXd cost;  // rows x cols, entries >= 0 or +inf
    double gate = 9.21;    // chi-square gate applied when building the matrix
};

struct AssignmentResult {
    std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
    std::vector<int> unassigned_rows;
    std::vector<int> unassigned_cols;
};

// Squared Mahalanobis distance over the position block:
// (pa - pb)^T (Pa + Pb)^-1 (pa - pb). Throws SingularCovariance.
double mahalanobis_cost(const Vec3& mean_a, const Mat3& cov_a, const Vec3& mean_b,
                        const Mat3& cov_b);
double mahalanobis_cost(const GaussianEstimate& a, const GaussianEstimate& b);
double mahalanobis_cost(const GaussianEstimate& a, const Detection& b);

// Builds a gated problem from a raw cost matrix (entries above the gate
// become +inf).
AssignmentProblem make_gated_problem(Eigen::MatrixXd cost, double gate);

// Minimum-cost matching over finite-cost pairs with maximum cardinality as
// the primary objective (an empty matching is never preferred just because
// finite costs are positive). Among optimal solutions the lexicographically
// smallest pair list is returned. Solved by successive shortest augmenting
// paths with potentials, then a greedy optimal-completion pass for the
// tie-break.
AssignmentResult solve_assignment(const AssignmentProblem& problem);

}  // namespace msma
