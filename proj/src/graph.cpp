#include "rsgda/graph.hpp"

#include "rsgda/common.hpp"

#include <cmath>
#include <limits>

namespace rsgda {

AdjMatrix::AdjMatrix(DenseMat m) {
    if (m.rows() != m.cols()) throw DataError("adjacency matrix must be square");
    if (m.rows() <= kDenseNodeLimit) {
        m_ = std::move(m);
    } else {
        m_ = SparseMat(m.sparseView());
        std::get<SparseMat>(m_).makeCompressed();
    }
}

AdjMatrix::AdjMatrix(const SparseMat& m) {
    if (m.rows() != m.cols()) throw DataError("adjacency matrix must be square");
    if (m.rows() <= kDenseNodeLimit) {
        m_ = DenseMat(m);
    } else {
        SparseMat c = m;
        c.makeCompressed();
        m_ = std::move(c);
    }
}

Eigen::Index AdjMatrix::rows() const {
    return is_dense() ? dense().rows() : sparse().rows();
}

const DenseMat& AdjMatrix::dense() const { return std::get<DenseMat>(m_); }
const SparseMat& AdjMatrix::sparse() const { return std::get<SparseMat>(m_); }

DenseMat AdjMatrix::to_dense() const {
    return is_dense() ? dense() : DenseMat(sparse());
}

SparseMat AdjMatrix::to_sparse() const {
    if (!is_dense()) return sparse();
    SparseMat s = dense().sparseView();
    s.makeCompressed();
    return s;
}

double AdjMatrix::coeff(Eigen::Index i, Eigen::Index j) const {
    return is_dense() ? dense()(i, j) : sparse().coeff(i, j);
}

Eigen::Index AdjMatrix::nonzeros() const {
    if (is_dense()) return (dense().array() != 0.0).count();
    return sparse().nonZeros();
}

Eigen::VectorXd AdjMatrix::row_sums() const {
    if (is_dense()) return dense().rowwise().sum();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(rows());
    for_each_nonzero([&](Eigen::Index i, Eigen::Index, double v) { s[i] += v; });
    return s;
}

DenseMat AdjMatrix::multiply(const DenseMat& rhs) const {
    return is_dense() ? DenseMat(dense() * rhs) : DenseMat(sparse() * rhs);
}

AdjMatrix AdjMatrix::hop_power(int l) const {
    if (l < 1) throw DataError("hop power requires l >= 1");
    if (is_dense()) {
        DenseMat p = dense();
        for (int i = 1; i < l; ++i) p = p * dense();
        return AdjMatrix(std::move(p));
    }
    SparseMat p = sparse();
    for (int i = 1; i < l; ++i) p = (p * sparse()).pruned();
    return AdjMatrix(p);
}

bool AdjMatrix::is_symmetric(double tol) const {
    if (is_dense()) return (dense() - dense().transpose()).cwiseAbs().maxCoeff() <= tol;
    SparseMat d = sparse() - SparseMat(sparse().transpose());
    double worst = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (SparseMat::InnerIterator it(d, k); it; ++it)
            worst = std::max(worst, std::abs(it.value()));
    return worst <= tol;
}

double AdjMatrix::max_abs_diagonal() const {
    double worst = 0.0;
    if (is_dense()) {
        worst = dense().diagonal().cwiseAbs().maxCoeff();
    } else {
        for (Eigen::Index i = 0; i < rows(); ++i)
            worst = std::max(worst, std::abs(sparse().coeff(i, i)));
    }
    return worst;
}

double AdjMatrix::min_coeff() const {
    if (is_dense()) return dense().minCoeff();
    double lo = 0.0; // implicit zeros count
    for_each_nonzero([&](Eigen::Index, Eigen::Index, double v) { lo = std::min(lo, v); });
    return lo;
}

void Graph::validate() const {
    if (n != adjacency.rows())
        throw DataError("graph node count disagrees with adjacency size");
    if (features.rows() != n)
        throw DataError("feature matrix row count disagrees with node count");
    if (!adjacency.is_symmetric(1e-9))
        throw DataError("adjacency is not symmetric within 1e-9");
    if (adjacency.max_abs_diagonal() != 0.0)
        throw DataError("adjacency has nonzero diagonal");
    if (adjacency.min_coeff() < 0.0)
        throw DataError("adjacency has negative entries");
    if (!features.allFinite())
        throw DataError("features contain NaN or Inf");
    if (labels) {
        if (labels->size() != n)
            throw DataError("label vector length disagrees with node count");
        for (Eigen::Index i = 0; i < n; ++i) {
            if ((*labels)[i] < 0 || (*labels)[i] >= num_classes)
                throw DataError("label out of range at node " + std::to_string(i));
        }
    }
}

NormalizedGraph normalize_adjacency(const Graph& g) {
    if (g.adjacency.min_coeff() < 0.0)
        throw DataError("normalize_adjacency: negative adjacency entries");
    const Eigen::Index n = g.n;
    Eigen::VectorXd inv_sqrt = (g.adjacency.row_sums().array() + 1.0).rsqrt();

    if (g.adjacency.is_dense()) {
        DenseMat a_hat = g.adjacency.dense();
        a_hat.diagonal().array() += 1.0;
        DenseMat a_tilde = inv_sqrt.asDiagonal() * a_hat * inv_sqrt.asDiagonal();
        DenseMat l_tilde = DenseMat::Identity(n, n) - a_tilde;
        return {AdjMatrix(std::move(a_tilde)), AdjMatrix(std::move(l_tilde))};
    }

    std::vector<Eigen::Triplet<double>> at;
    std::vector<Eigen::Triplet<double>> lt;
    at.reserve(static_cast<size_t>(g.adjacency.nonzeros()) + n);
    lt.reserve(static_cast<size_t>(g.adjacency.nonzeros()) + n);
    g.adjacency.for_each_nonzero([&](Eigen::Index i, Eigen::Index j, double v) {
        double w = inv_sqrt[i] * v * inv_sqrt[j];
        at.emplace_back(i, j, w);
        lt.emplace_back(i, j, -w);
    });
    for (Eigen::Index i = 0; i < n; ++i) {
        double self = inv_sqrt[i] * inv_sqrt[i];
        at.emplace_back(i, i, self);
        lt.emplace_back(i, i, 1.0 - self);
    }
    SparseMat a_tilde(n, n), l_tilde(n, n);
    a_tilde.setFromTriplets(at.begin(), at.end());
    l_tilde.setFromTriplets(lt.begin(), lt.end());
    return {AdjMatrix(a_tilde), AdjMatrix(l_tilde)};
}

double local_node_homophily(const Graph& g, Eigen::Index v) {
    if (!g.has_labels()) throw DataError("local_node_homophily requires labels");
    if (v < 0 || v >= g.n) throw DataError("node id out of range");
    const Eigen::VectorXi& y = *g.labels;
    long deg = 0, same = 0;
    if (g.adjacency.is_dense()) {
        const DenseMat& a = g.adjacency.dense();
        for (Eigen::Index j = 0; j < g.n; ++j) {
            if (j == v || a(v, j) <= 0.0) continue;
            ++deg;
            if (y[j] == y[v]) ++same;
        }
    } else {
        const SparseMat& a = g.adjacency.sparse();
        for (SparseMat::InnerIterator it(a, v); it; ++it) {
            if (it.row() == v || it.value() <= 0.0) continue;
            ++deg;
            if (y[it.row()] == y[v]) ++same;
        }
    }
    if (deg == 0)
        throw DataError("local node homophily undefined for isolated node " + std::to_string(v));
    return static_cast<double>(same) / static_cast<double>(deg);
}

double mean_node_homophily(const Graph& g) {
    if (!g.has_labels()) throw DataError("mean_node_homophily requires labels");
    Eigen::VectorXd deg = g.adjacency.row_sums();
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index v = 0; v < g.n; ++v) {
        if (deg[v] <= 0.0) continue;
        sum += local_node_homophily(g, v);
        ++count;
    }
    if (count == 0) throw DataError("mean_node_homophily: all nodes isolated");
    return sum / static_cast<double>(count);
}

double hop_homophily(const AdjMatrix& adjacency, const Eigen::VectorXi& labels, int l) {
    if (l < 1) throw DataError("hop_homophily requires l >= 1");
    if (adjacency.rows() != labels.size())
        throw DataError("hop_homophily: label length disagrees with adjacency");
    AdjMatrix power = adjacency.hop_power(l);
    long total = 0, same = 0;
    // Self-pairs (closed walks on the diagonal) are excluded.
    power.for_each_nonzero([&](Eigen::Index i, Eigen::Index j, double v) {
        if (i == j || v <= 0.0) return;
        ++total;
        if (labels[i] == labels[j]) ++same;
    });
    if (total == 0)
        throw DataError("hop_homophily: no off-diagonal positive entries in A^l");
    return static_cast<double>(same) / static_cast<double>(total);
}

double hop_homophily(const Graph& g, int l) {
    if (!g.has_labels()) throw DataError("hop_homophily requires labels");
    return hop_homophily(g.adjacency, *g.labels, l);
}

} // namespace rsgda
