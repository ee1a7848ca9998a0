#pragma once

#include "rsgda/graph.hpp"

namespace rsgda {

struct HomophilicSolveConfig {
    int l = 2;                    // hop coupling order
    int outer_iters = 10;         // alternations between A_hat and its l-hop power
    double bisection_tol = 1e-8;  // simplex residual tolerance
    int bisection_max_steps = 100;

    void validate() const;
};

/// Row-stochastic homophilic adjacency A_O and binary heterophilic
/// adjacency A_E, both with zero diagonal. A_E is the union
/// symmetrization of per-row top-k selections.
struct ReconstructedStructures {
    AdjMatrix a_o;
    AdjMatrix a_e;
};

/// F_ij = ||x_i - x_j||^2.
DenseMat feature_distance_matrix(const DenseMat& X);

/// S_ij = <x_i, x_j> / (||x_i|| ||x_j||); zero-norm rows map to 0.
DenseMat cosine_similarity_matrix(const DenseMat& X);

/// Per-dimension z-score; constant dimensions collapse to zero.
DenseMat standardize_features(const DenseMat& X);

/// Row normalization of the raw adjacency used to initialize the solve.
/// Zero rows fall back to uniform off-diagonal weight.
DenseMat row_normalized_initialization(const AdjMatrix& adjacency);

/// One simplex-constrained row update. Entries take the clamped affine
/// form in the multiplier, with coupling terms frozen at the previous
/// iterate; the multiplier is found by monotone bisection on the row sum.
Eigen::VectorXd solve_row(Eigen::Index i, const DenseMat& F, const DenseMat& a_hat,
                          const DenseMat& a_hat_l, const HomophilicSolveConfig& cfg);

/// Alternating reconstruction of the homophilic variant: recompute the
/// l-hop power, then refresh every row from the frozen iterate.
AdjMatrix reconstruct_homophilic(const Graph& g, const HomophilicSolveConfig& cfg);

/// Heterophilic variant from the complementary similarity and topology
/// graphs: per-row top-k of (1-S) .* (1-A_tilde), union-symmetrized,
/// binary, zero diagonal. Ties break toward the lower node index.
AdjMatrix reconstruct_heterophilic(const Graph& g, int topk = 5);

ReconstructedStructures reconstruct_structures(const Graph& g, const HomophilicSolveConfig& cfg,
                                               int topk = 5);

/// Binary support of the k largest off-diagonal scores per row,
/// union-symmetrized; ties break toward the lower index. Used to read
/// homophily off weighted structures.
AdjMatrix topk_union_binarize(const DenseMat& scores, int topk);

} // namespace rsgda
