#include "msma/association.hpp"

#include "msma/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace msma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mahalanobis_impl(const Vec3& da, const Mat3& s) {
    Eigen::SelfAdjointEigenSolver<Mat3> eig(s);
    if (eig.eigenvalues().minCoeff() < 1e-12) {
        throw SingularCovariance("combined innovation covariance is singular");
    }
    return da.dot(s.llt().solve(da));
}

// Jonker-Volgenant shortest augmenting paths over a complete square matrix.
// Every row is matched; the caller guarantees feasibility.
std::vector<int> jv_complete(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    std::vector<int> col4row(n, -1), row4col(n, -1);
    std::vector<double> u(n, 0.0), v(n, 0.0);
    std::vector<double> dist(n);
    std::vector<int> pred(n);
    std::vector<char> done(n);

    for (int r0 = 0; r0 < n; ++r0) {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(pred.begin(), pred.end(), r0);
        std::fill(done.begin(), done.end(), 0);
        for (int c = 0; c < n; ++c) {
            const double rc = cost(r0, c);
            if (std::isfinite(rc)) dist[c] = rc - u[r0] - v[c];
        }

        int sink = -1;
        double d_star = kInf;
        while (true) {
            int c_min = -1;
            double lowest = kInf;
            for (int c = 0; c < n; ++c) {
                if (done[c]) continue;
                if (dist[c] < lowest) {
                    lowest = dist[c];
                    c_min = c;
                }
            }
            if (c_min == -1 || !std::isfinite(lowest)) break;
            done[c_min] = 1;
            if (row4col[c_min] == -1) {
                sink = c_min;
                d_star = lowest;
                break;
            }
            const int r = row4col[c_min];
            for (int c = 0; c < n; ++c) {
                if (done[c]) continue;
                const double rc = cost(r, c);
                if (!std::isfinite(rc)) continue;
                const double nd = lowest + rc - u[r] - v[c];
                if (nd < dist[c]) {
                    dist[c] = nd;
                    pred[c] = r;
                }
            }
        }
        if (sink == -1) return {};  // infeasible; cannot happen with the padding

        u[r0] += d_star;
        for (int c = 0; c < n; ++c) {
            if (!done[c] || c == sink) continue;
            u[row4col[c]] += d_star - dist[c];
            v[c] -= d_star - dist[c];
        }
        int c = sink;
        while (true) {
            const int r = pred[c];
            row4col[c] = r;
            std::swap(col4row[r], c);
            if (r == r0) break;
        }
    }
    return col4row;
}

struct SspState {
    std::vector<int> col4row;  // per real row: matched real col or -1
    double total_cost = 0.0;
    int cardinality = 0;
};

// Max-cardinality min-cost partial matching via the padded square reduction:
// real pairs are rewarded by -BIG (BIG exceeds the sum of all finite costs),
// dedicated dummy columns/rows absorb unmatched rows/cols at cost 0, so the
// complete square optimum maximizes matched pairs first, then total cost.
SspState ssp_solve(const Eigen::MatrixXd& cost) {
    const int nr = static_cast<int>(cost.rows());
    const int nc = static_cast<int>(cost.cols());
    SspState st;
    st.col4row.assign(nr, -1);
    if (nr == 0 || nc == 0) return st;

    double finite_sum = 1.0;
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nc; ++j)
            if (std::isfinite(cost(i, j))) finite_sum += cost(i, j);
    const double big = finite_sum;

    const int s = nr + nc;
    Eigen::MatrixXd padded = Eigen::MatrixXd::Constant(s, s, kInf);
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nc; ++j) {
            if (std::isfinite(cost(i, j))) padded(i, j) = cost(i, j) - big;
        }
        padded(i, nc + i) = 0.0;  // row i's dummy column
    }
    for (int j = 0; j < nc; ++j) padded(nr + j, j) = 0.0;  // col j's dummy row
    padded.block(nr, nc, nc, nr).setZero();

    const std::vector<int> col4row = jv_complete(padded);
    for (int i = 0; i < nr; ++i) {
        const int j = col4row[i];
        if (j < nc) {
            st.col4row[i] = j;
            ++st.cardinality;
            st.total_cost += cost(i, j);
        }
    }
    return st;
}

// (cardinality, optimal cost) of a sub-problem restricted to the given rows
// and columns.
std::pair<int, double> ssp_value(const Eigen::MatrixXd& cost, const std::vector<int>& rows,
                                 const std::vector<int>& cols) {
    Eigen::MatrixXd sub(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) sub(i, j) = cost(rows[i], cols[j]);
    const SspState st = ssp_solve(sub);
    return {st.cardinality, st.total_cost};
}

}  // namespace

double mahalanobis_cost(const Vec3& mean_a, const Mat3& cov_a, const Vec3& mean_b,
                        const Mat3& cov_b) {
    return mahalanobis_impl(mean_a - mean_b, cov_a + cov_b);
}

double mahalanobis_cost(const GaussianEstimate& a, const GaussianEstimate& b) {
    return mahalanobis_cost(a.position(), a.position_cov(), b.position(), b.position_cov());
}

double mahalanobis_cost(const GaussianEstimate& a, const Detection& b) {
    return mahalanobis_cost(a.position(), a.position_cov(), b.position, b.covariance);
}

AssignmentProblem make_gated_problem(Eigen::MatrixXd cost, double gate) {
    for (Eigen::Index i = 0; i < cost.rows(); ++i) {
        for (Eigen::Index j = 0; j < cost.cols(); ++j) {
            if (!(cost(i, j) <= gate)) cost(i, j) = kInf;
        }
    }
    return AssignmentProblem{std::move(cost), gate};
}

namespace {

// Alternative optima require two pair sets with equal sums; with floating
// point costs that effectively needs repeated finite entries, so refinement
// can be skipped when all finite costs are distinct (always refining tiny
// problems keeps the documented semantics exact where enumeration can check
// them).
bool needs_lexicographic_refinement(const Eigen::MatrixXd& cost) {
    if (cost.size() <= 64) return true;
    std::vector<double> finite;
    finite.reserve(static_cast<std::size_t>(cost.size()));
    for (Eigen::Index i = 0; i < cost.rows(); ++i) {
        for (Eigen::Index j = 0; j < cost.cols(); ++j) {
            if (std::isfinite(cost(i, j))) finite.push_back(cost(i, j));
        }
    }
    std::sort(finite.begin(), finite.end());
    return std::adjacent_find(finite.begin(), finite.end()) != finite.end();
}

AssignmentResult result_from_state(const Eigen::MatrixXd& cost, const SspState& st) {
    AssignmentResult result;
    std::vector<char> col_used(cost.cols(), 0);
    for (int r = 0; r < static_cast<int>(cost.rows()); ++r) {
        if (st.col4row[r] >= 0) {
            result.pairs.emplace_back(r, st.col4row[r]);
            col_used[st.col4row[r]] = 1;
        } else {
            result.unassigned_rows.push_back(r);
        }
    }
    for (int c = 0; c < static_cast<int>(cost.cols()); ++c) {
        if (!col_used[c]) result.unassigned_cols.push_back(c);
    }
    return result;
}

}  // namespace

AssignmentResult solve_assignment(const AssignmentProblem& problem) {
    const Eigen::MatrixXd& cost = problem.cost;
    const int nr = static_cast<int>(cost.rows());
    const int nc = static_cast<int>(cost.cols());

    const SspState base = ssp_solve(cost);
    if (!needs_lexicographic_refinement(cost)) {
        return result_from_state(cost, base);
    }
    int target_card = base.cardinality;
    double target_cost = base.total_cost;

    // Greedy optimal-completion pass: commit, row by row, the smallest column
    // (or no column) that still admits an optimal completion. This pins the
    // lexicographically smallest pair list among (max cardinality, min cost)
    // optima; ties only arise from duplicated costs, so the tolerance is
    // a pure float-summation guard.
    std::vector<int> rows_left(nr), cols_left;
    for (int r = 0; r < nr; ++r) rows_left[r] = r;
    cols_left.resize(nc);
    for (int c = 0; c < nc; ++c) cols_left[c] = c;

    AssignmentResult result;
    for (int r = 0; r < nr; ++r) {
        std::vector<int> rows_rest;
        for (int rr : rows_left)
            if (rr != r) rows_rest.push_back(rr);

        bool committed = false;
        if (target_card > 0) {
            for (std::size_t jc = 0; jc < cols_left.size(); ++jc) {
                const int c = cols_left[jc];
                const double edge = cost(r, c);
                if (!std::isfinite(edge)) continue;
                std::vector<int> cols_rest;
                for (int cc : cols_left)
                    if (cc != c) cols_rest.push_back(cc);
                const auto [k_sub, c_sub] = ssp_value(cost, rows_rest, cols_rest);
                const double tol = 1e-9 * std::max(1.0, std::abs(target_cost));
                if (k_sub + 1 == target_card && c_sub + edge <= target_cost + tol) {
                    result.pairs.emplace_back(r, c);
                    target_card = k_sub;
                    target_cost = c_sub;
                    cols_left.erase(cols_left.begin() + jc);
                    committed = true;
                    break;
                }
            }
        }
        rows_left = std::move(rows_rest);
        if (!committed) result.unassigned_rows.push_back(r);
    }
    for (int c : cols_left) result.unassigned_cols.push_back(c);
    return result;
}

}  // namespace msma
