#include "rsgda/reconstruct.hpp"

#include "rsgda/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace rsgda {

void HomophilicSolveConfig::validate() const {
    if (l < 1) throw DataError("homophilic solve: l must be >= 1");
    if (outer_iters < 0) throw DataError("homophilic solve: outer_iters must be >= 0");
    if (bisection_tol <= 0.0) throw DataError("homophilic solve: bisection_tol must be > 0");
    if (bisection_max_steps < 1) throw DataError("homophilic solve: bisection_max_steps must be >= 1");
}

DenseMat feature_distance_matrix(const DenseMat& X) {
    if (!X.allFinite()) throw DataError("feature_distance_matrix: non-finite features");
    Eigen::VectorXd sq = X.rowwise().squaredNorm();
    DenseMat F = sq.replicate(1, X.rows()) + sq.transpose().replicate(X.rows(), 1) -
                 2.0 * (X * X.transpose());
    F = F.cwiseMax(0.0); // clip the tiny negatives from cancellation
    F.diagonal().setZero();
    return F;
}

DenseMat cosine_similarity_matrix(const DenseMat& X) {
    if (!X.allFinite()) throw DataError("cosine_similarity_matrix: non-finite features");
    const Eigen::Index n = X.rows();
    Eigen::VectorXd norms = X.rowwise().norm();
    DenseMat S = X * X.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double d = norms[i] * norms[j];
            S(i, j) = d > 0.0 ? std::clamp(S(i, j) / d, -1.0, 1.0)
                              : 0.0; // zero-norm rows are neutral
        }
    }
    return S;
}

DenseMat standardize_features(const DenseMat& X) {
    const Eigen::Index n = X.rows();
    if (n == 0) return X;
    DenseMat Z = X;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        double mean = X.col(c).mean();
        double sd = std::sqrt((X.col(c).array() - mean).square().mean());
        if (sd < 1e-12) {
            Z.col(c).setZero();
        } else {
            Z.col(c) = (X.col(c).array() - mean) / sd;
        }
    }
    return Z;
}

DenseMat row_normalized_initialization(const AdjMatrix& adjacency) {
    const Eigen::Index n = adjacency.rows();
    DenseMat a = adjacency.to_dense();
    a.diagonal().setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = a.row(i).sum();
        if (s > 0.0) {
            a.row(i) /= s;
        } else if (n > 1) {
            // isolated node: uniform weight over the other nodes
            a.row(i).setConstant(1.0 / static_cast<double>(n - 1));
            a(i, i) = 0.0;
        }
    }
    return a;
}

namespace {

// Clamped affine row as a function of the multiplier:
//   a_j(lambda) = max(0, (alpha_j + lambda) / den_j),  a_i = 0.
// The row sum is monotone nondecreasing in lambda, so a bracketed
// bisection pins the multiplier that puts the row on the simplex.
Eigen::VectorXd solve_row_from_terms(Eigen::Index i, const Eigen::VectorXd& alpha,
                                     const Eigen::VectorXd& den,
                                     const HomophilicSolveConfig& cfg) {
    const Eigen::Index n = alpha.size();
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);

    auto row_sum = [&](double lambda) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            double v = (alpha[j] + lambda) / den[j];
            if (v > 0.0) s += v;
        }
        return s;
    };

    double max_alpha = std::numeric_limits<double>::lowest();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) max_alpha = std::max(max_alpha, alpha[j]);
    }
    double lo = -max_alpha; // every entry clamps to zero, so the sum is 0 < 1

    double hi = lo + 1.0;
    int steps = 0;
    while (row_sum(hi) < 1.0) {
        hi = lo + 2.0 * (hi - lo);
        if (++steps > cfg.bisection_max_steps) {
            throw NumericalError("solve_row: bisection bracket failure, residual " +
                                 std::to_string(row_sum(hi) - 1.0) +
                                 " (consider standardizing features)");
        }
    }

    double mid = hi;
    double residual = row_sum(hi) - 1.0;
    for (int it = 0; it < cfg.bisection_max_steps; ++it) {
        mid = 0.5 * (lo + hi);
        residual = row_sum(mid) - 1.0;
        if (std::abs(residual) <= cfg.bisection_tol) break;
        if (residual > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if (std::abs(residual) > cfg.bisection_tol) {
        throw NumericalError("solve_row: bisection did not reach tolerance, residual " +
                             std::to_string(residual));
    }

    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        row[j] = std::max(0.0, (alpha[j] + mid) / den[j]);
    }
    return row;
}

// alpha_j = 2 P_ij - F_ij - 2 sum_{f != j} A_jf C_f with the coupling
// C_f = P_if - A_ij A_jf - A_if frozen at the previous iterate.
void row_terms(Eigen::Index i, const DenseMat& F, const DenseMat& a_hat, const DenseMat& a_hat_l,
               Eigen::VectorXd& alpha, Eigen::VectorXd& den) {
    Eigen::VectorXd q = a_hat.rowwise().squaredNorm();
    Eigen::VectorXd ca = a_hat * a_hat_l.row(i).transpose(); // ca_j = sum_f A_jf P_if
    Eigen::VectorXd cb = a_hat * a_hat.row(i).transpose();   // cb_j = sum_f A_jf A_if
    Eigen::VectorXd coupling =
        ca - a_hat.row(i).transpose().cwiseProduct(q) - cb;
    alpha = 2.0 * a_hat_l.row(i).transpose() - F.row(i).transpose() - 2.0 * coupling;
    den = 2.0 * (2.0 + q.array());
}

DenseMat matrix_power(const DenseMat& a, int l) {
    DenseMat p = a;
    for (int i = 1; i < l; ++i) p = p * a;
    return p;
}

} // namespace

Eigen::VectorXd solve_row(Eigen::Index i, const DenseMat& F, const DenseMat& a_hat,
                          const DenseMat& a_hat_l, const HomophilicSolveConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = F.rows();
    if (n < 2) throw DataError("solve_row: need at least two nodes");
    if (i < 0 || i >= n) throw DataError("solve_row: row index out of range");
    if (!F.allFinite()) throw DataError("solve_row: non-finite distance matrix");

    Eigen::VectorXd alpha, den;
    row_terms(i, F, a_hat, a_hat_l, alpha, den);
    return solve_row_from_terms(i, alpha, den, cfg);
}

AdjMatrix reconstruct_homophilic(const Graph& g, const HomophilicSolveConfig& cfg) {
    cfg.validate();
    g.validate();
    if (g.n < 2) throw DataError("reconstruct_homophilic: need at least two nodes");

    DenseMat F = feature_distance_matrix(standardize_features(g.features));
    DenseMat a_hat = row_normalized_initialization(g.adjacency);

    const Eigen::Index n = g.n;
    for (int iter = 0; iter < cfg.outer_iters; ++iter) {
        DenseMat p = matrix_power(a_hat, cfg.l);
        Eigen::VectorXd q = a_hat.rowwise().squaredNorm();
        DenseMat ca = p * a_hat.transpose();     // ca(i,j) = sum_f P_if A_jf
        DenseMat cb = a_hat * a_hat.transpose(); // cb(i,j) = sum_f A_if A_jf
        // alpha(i,j) = 2 P_ij - F_ij - 2 (ca - A_ij q_j - cb)
        DenseMat alpha = 2.0 * p - F - 2.0 * ca + 2.0 * cb;
        alpha += 2.0 * (a_hat.array().rowwise() * q.transpose().array()).matrix();
        Eigen::VectorXd den = 2.0 * (2.0 + q.array());

        DenseMat next(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            try {
                next.row(i) =
                    solve_row_from_terms(i, alpha.row(i).transpose(), den, cfg).transpose();
            } catch (const NumericalError& e) {
                throw NumericalError("reconstruct_homophilic: row " + std::to_string(i) + ": " +
                                     e.what());
            }
        }
        a_hat = std::move(next);
    }
    return AdjMatrix(std::move(a_hat));
}

AdjMatrix reconstruct_heterophilic(const Graph& g, int topk) {
    g.validate();
    if (topk < 1) throw DataError("reconstruct_heterophilic: topk must be >= 1");
    const Eigen::Index n = g.n;
    const int k = static_cast<int>(std::min<Eigen::Index>(topk, n - 1));

    AdjMatrix a_tilde = normalize_adjacency(g).a_tilde;
    Eigen::VectorXd norms = g.features.rowwise().norm();

    std::vector<Eigen::Triplet<double>> edges;
    edges.reserve(static_cast<size_t>(n) * k * 2);
    std::vector<Eigen::Index> order(n);

    for (Eigen::Index i = 0; i < n; ++i) {
        // score_j = (1 - S_ij) * (1 - A~_ij), streamed one row at a time
        Eigen::VectorXd sim = g.features * g.features.row(i).transpose();
        for (Eigen::Index j = 0; j < n; ++j) {
            double d = norms[i] * norms[j];
            sim[j] = d > 0.0 ? std::clamp(sim[j] / d, -1.0, 1.0) : 0.0;
        }
        Eigen::VectorXd topo = Eigen::VectorXd::Ones(n);
        if (a_tilde.is_dense()) {
            topo -= a_tilde.dense().row(i).transpose();
        } else {
            // symmetric, so column i doubles as row i
            for (SparseMat::InnerIterator it(a_tilde.sparse(), i); it; ++it)
                topo[it.row()] -= it.value();
        }
        Eigen::VectorXd score = (1.0 - sim.array()) * topo.array();

        std::iota(order.begin(), order.end(), Eigen::Index(0));
        std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (score[a] != score[b]) return score[a] > score[b];
            return a < b; // ties break toward the lower node index
        });
        int taken = 0;
        for (Eigen::Index j : order) {
            if (j == i) continue;
            edges.emplace_back(i, j, 1.0);
            edges.emplace_back(j, i, 1.0);
            if (++taken == k) break;
        }
    }

    SparseMat a_e(n, n);
    a_e.setFromTriplets(edges.begin(), edges.end(),
                        [](double, double) { return 1.0; }); // union keeps binary weights
    return AdjMatrix(a_e);
}

ReconstructedStructures reconstruct_structures(const Graph& g, const HomophilicSolveConfig& cfg,
                                               int topk) {
    return {reconstruct_homophilic(g, cfg), reconstruct_heterophilic(g, topk)};
}

AdjMatrix topk_union_binarize(const DenseMat& scores, int topk) {
    if (scores.rows() != scores.cols()) throw DataError("topk_union_binarize: square input required");
    if (topk < 1) throw DataError("topk_union_binarize: topk must be >= 1");
    const Eigen::Index n = scores.rows();
    const int k = static_cast<int>(std::min<Eigen::Index>(topk, n - 1));
    std::vector<Eigen::Triplet<double>> edges;
    edges.reserve(static_cast<size_t>(n) * k * 2);
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), Eigen::Index(0));
        std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (scores(i, a) != scores(i, b)) return scores(i, a) > scores(i, b);
            return a < b;
        });
        int taken = 0;
        for (Eigen::Index j : order) {
            if (j == i) continue;
            edges.emplace_back(i, j, 1.0);
            edges.emplace_back(j, i, 1.0);
            if (++taken == k) break;
        }
    }
    SparseMat out(n, n);
    out.setFromTriplets(edges.begin(), edges.end(), [](double, double) { return 1.0; });
    return AdjMatrix(out);
}

} // namespace rsgda
