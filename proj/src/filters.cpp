#include "rsgda/filters.hpp"

#include "rsgda/common.hpp"

namespace rsgda {

double FilterConfig::gamma() const { return sigmoid(gamma_logit); }

void FilterConfig::validate() const {
    if (k < 0) throw DataError("filter order k must be >= 0");
}

AdjMatrix filter_laplacian(const AdjMatrix& structure) {
    const Eigen::Index n = structure.rows();
    Graph shell;
    shell.n = n;
    if (structure.is_dense()) {
        DenseMat sym = 0.5 * (structure.dense() + structure.dense().transpose());
        sym.diagonal().setZero();
        shell.adjacency = AdjMatrix(std::move(sym));
    } else {
        SparseMat sym = 0.5 * (structure.sparse() + SparseMat(structure.sparse().transpose()));
        for (Eigen::Index i = 0; i < n; ++i) sym.coeffRef(i, i) = 0.0;
        sym.prune(0.0);
        shell.adjacency = AdjMatrix(sym);
    }
    shell.features = DenseMat::Zero(n, 0);
    return normalize_adjacency(shell).l_tilde;
}

namespace {

// Y <- (I - L/2)^k X or (L/2)^k X without materializing the power.
DenseMat polynomial_apply(const AdjMatrix& laplacian, const DenseMat& X, int k, bool low_pass) {
    DenseMat y = X;
    for (int step = 0; step < k; ++step) {
        DenseMat ly = laplacian.multiply(y);
        if (low_pass) {
            y = y - 0.5 * ly;
        } else {
            y = 0.5 * ly;
        }
    }
    return y;
}

} // namespace

DenseMat low_pass(const AdjMatrix& a_o, const DenseMat& X, const FilterConfig& cfg) {
    cfg.validate();
    return (1.0 - cfg.gamma()) * polynomial_apply(filter_laplacian(a_o), X, cfg.k, true);
}

DenseMat high_pass(const AdjMatrix& a_e, const DenseMat& X, const FilterConfig& cfg) {
    cfg.validate();
    return cfg.gamma() * polynomial_apply(filter_laplacian(a_e), X, cfg.k, false);
}

std::pair<DenseMat, DenseMat> filter_pair(const ReconstructedStructures& structures,
                                          const DenseMat& X, const FilterConfig& cfg) {
    cfg.validate();
    FilterBasis basis(structures, X, cfg.k);
    double g = cfg.gamma();
    return {basis.z_e(g), basis.z_o(g)};
}

FilterBasis::FilterBasis(const ReconstructedStructures& structures, const DenseMat& X, int k) {
    if (k < 0) throw DataError("filter order k must be >= 0");
    low_ = polynomial_apply(filter_laplacian(structures.a_o), X, k, true);
    high_ = polynomial_apply(filter_laplacian(structures.a_e), X, k, false);
}

} // namespace rsgda
