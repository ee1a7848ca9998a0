#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rsgda {

using DenseMat = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double>;

/// Adjacency-shaped matrix stored dense for small graphs and as compressed
/// sorted sparse above the node limit. Reconstruction outputs follow the
/// same rule.
class AdjMatrix {
public:
    static constexpr Eigen::Index kDenseNodeLimit = 4096;

    AdjMatrix() = default;
    explicit AdjMatrix(DenseMat m);
    explicit AdjMatrix(const SparseMat& m);

    Eigen::Index rows() const;
    bool is_dense() const { return std::holds_alternative<DenseMat>(m_); }

    const DenseMat& dense() const;   // only valid when is_dense()
    const SparseMat& sparse() const; // only valid when !is_dense()
    DenseMat to_dense() const;
    SparseMat to_sparse() const;

    double coeff(Eigen::Index i, Eigen::Index j) const;
    Eigen::Index nonzeros() const;
    Eigen::VectorXd row_sums() const;
    DenseMat multiply(const DenseMat& rhs) const; // this * rhs

    /// l-fold matrix power, same storage rule as the base matrix.
    AdjMatrix hop_power(int l) const;

    bool is_symmetric(double tol) const;
    double max_abs_diagonal() const;
    double min_coeff() const;

    /// Visits every stored nonzero as f(i, j, value).
    template <typename F>
    void for_each_nonzero(F&& f) const {
        if (is_dense()) {
            const DenseMat& m = dense();
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j)
                    if (m(i, j) != 0.0) f(i, j, m(i, j));
        } else {
            const SparseMat& m = sparse();
            for (int k = 0; k < m.outerSize(); ++k)
                for (SparseMat::InnerIterator it(m, k); it; ++it)
                    f(it.row(), it.col(), it.value());
        }
    }

private:
    std::variant<DenseMat, SparseMat> m_ = DenseMat();
};

/// A graph as consumed by every stage: nonnegative symmetric adjacency with
/// zero diagonal, node features, optional class labels.
struct Graph {
    Eigen::Index n = 0;
    AdjMatrix adjacency;
    DenseMat features;                     // n x d
    std::optional<Eigen::VectorXi> labels; // values in [0, num_classes)
    int num_classes = 0;
    std::vector<std::string> names;        // optional node identifiers

    Eigen::Index feature_dim() const { return features.cols(); }
    bool has_labels() const { return labels.has_value(); }

    /// Throws DataError when any type invariant is violated.
    void validate() const;
};

struct NormalizedGraph {
    AdjMatrix a_tilde; // (D+I)^{-1/2} (A+I) (D+I)^{-1/2}
    AdjMatrix l_tilde; // I - a_tilde
};

/// Symmetric normalization with self-loops. Rejects negative entries.
NormalizedGraph normalize_adjacency(const Graph& g);

/// Fraction of v's neighbors sharing v's label. Errors on isolated nodes.
double local_node_homophily(const Graph& g, Eigen::Index v);

/// local_node_homophily averaged over all non-isolated nodes.
double mean_node_homophily(const Graph& g);

/// Label-agreement fraction over off-diagonal positive entries of A^l.
double hop_homophily(const Graph& g, int l);
double hop_homophily(const AdjMatrix& adjacency, const Eigen::VectorXi& labels, int l);

} // namespace rsgda
