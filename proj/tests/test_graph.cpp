#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rsgda/common.hpp"
#include "rsgda/graph.hpp"

#include <Eigen/Eigenvalues>

#include <random>

using namespace rsgda;

namespace {

Graph make_graph(const DenseMat& adjacency, const DenseMat& features,
                 const std::vector<int>& labels = {}) {
    Graph g;
    g.n = adjacency.rows();
    g.adjacency = AdjMatrix(adjacency);
    g.features = features;
    if (!labels.empty()) {
        Eigen::VectorXi y(labels.size());
        for (size_t i = 0; i < labels.size(); ++i) y[i] = labels[i];
        g.labels = y;
        g.num_classes = y.maxCoeff() + 1;
    }
    g.validate();
    return g;
}

DenseMat path3() {
    DenseMat a = DenseMat::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1.0;
    a(1, 2) = a(2, 1) = 1.0;
    return a;
}

// entrywise evaluation of the normalization formula, independent of the
// library's vectorized path
DenseMat normalize_oracle(const DenseMat& a) {
    const Eigen::Index n = a.rows();
    DenseMat out(n, n);
    Eigen::VectorXd deg = a.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            double self = i == j ? 1.0 : 0.0;
            out(i, j) = (a(i, j) + self) / std::sqrt((deg[i] + 1.0) * (deg[j] + 1.0));
        }
    return out;
}

} // namespace

TEST_CASE("graph invariants are enforced") {
    DenseMat bad = DenseMat::Zero(2, 2);
    bad(0, 1) = 1.0; // asymmetric
    Graph g;
    g.n = 2;
    g.adjacency = AdjMatrix(bad);
    g.features = DenseMat::Zero(2, 1);
    CHECK_THROWS_AS(g.validate(), DataError);

    DenseMat diag = DenseMat::Zero(2, 2);
    diag(0, 0) = 1.0;
    g.adjacency = AdjMatrix(diag);
    CHECK_THROWS_AS(g.validate(), DataError);
}

TEST_CASE("normalize_adjacency: single isolated node") {
    Graph g = make_graph(DenseMat::Zero(1, 1), DenseMat::Zero(1, 1));
    NormalizedGraph ng = normalize_adjacency(g);
    CHECK(ng.a_tilde.coeff(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ng.l_tilde.coeff(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("normalize_adjacency: two nodes, one edge") {
    DenseMat a = DenseMat::Zero(2, 2);
    a(0, 1) = a(1, 0) = 1.0;
    Graph g = make_graph(a, DenseMat::Zero(2, 1));
    NormalizedGraph ng = normalize_adjacency(g);
    DenseMat t = ng.a_tilde.to_dense();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(t(i, j) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("normalize_adjacency: 3-node path matches the entrywise oracle") {
    Graph g = make_graph(path3(), DenseMat::Zero(3, 1));
    DenseMat got = normalize_adjacency(g).a_tilde.to_dense();
    DenseMat want = normalize_oracle(path3());
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("normalize_adjacency: rejects negative entries") {
    DenseMat a = DenseMat::Zero(2, 2);
    a(0, 1) = a(1, 0) = -1.0;
    Graph g;
    g.n = 2;
    g.adjacency = AdjMatrix(a);
    g.features = DenseMat::Zero(2, 1);
    CHECK_THROWS_AS(normalize_adjacency(g), DataError);
}

TEST_CASE("normalized pair satisfies a_tilde + l_tilde = I and spectral bounds") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 6;
        DenseMat a = DenseMat::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (u(rng) < 0.4) a(i, j) = a(j, i) = 1.0;
        Graph g = make_graph(a, DenseMat::Zero(n, 1));
        NormalizedGraph ng = normalize_adjacency(g);
        DenseMat sum = ng.a_tilde.to_dense() + ng.l_tilde.to_dense();
        CHECK((sum - DenseMat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(ng.a_tilde.is_symmetric(1e-12));
        Eigen::SelfAdjointEigenSolver<DenseMat> es(ng.l_tilde.to_dense());
        CHECK(es.eigenvalues().minCoeff() > -1e-9);
        CHECK(es.eigenvalues().maxCoeff() < 2.0 + 1e-9);
    }
}

TEST_CASE("local_node_homophily: triangle, star, mixed neighborhood") {
    DenseMat tri = DenseMat::Zero(3, 3);
    tri(0, 1) = tri(1, 0) = tri(1, 2) = tri(2, 1) = tri(0, 2) = tri(2, 0) = 1.0;
    Graph g1 = make_graph(tri, DenseMat::Zero(3, 1), {1, 1, 1});
    for (int v = 0; v < 3; ++v) CHECK(local_node_homophily(g1, v) == doctest::Approx(1.0));

    DenseMat star = DenseMat::Zero(4, 4);
    for (int leaf = 1; leaf < 4; ++leaf) star(0, leaf) = star(leaf, 0) = 1.0;
    Graph g2 = make_graph(star, DenseMat::Zero(4, 1), {0, 1, 1, 1});
    CHECK(local_node_homophily(g2, 0) == doctest::Approx(0.0));

    // neighbors labeled a, a, b around an a-labeled center
    Graph g3 = make_graph(star, DenseMat::Zero(4, 1), {0, 0, 0, 1});
    CHECK(local_node_homophily(g3, 0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("local_node_homophily: isolated node errors") {
    DenseMat a = DenseMat::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1.0;
    Graph g = make_graph(a, DenseMat::Zero(3, 1), {0, 0, 1});
    CHECK_THROWS_AS(local_node_homophily(g, 2), DataError);
}

TEST_CASE("hop_homophily: single edge and alternating 4-cycle") {
    DenseMat pair = DenseMat::Zero(2, 2);
    pair(0, 1) = pair(1, 0) = 1.0;
    Graph g1 = make_graph(pair, DenseMat::Zero(2, 1), {2, 2});
    CHECK(hop_homophily(g1, 1) == doctest::Approx(1.0));

    DenseMat cyc = DenseMat::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
        int j = (i + 1) % 4;
        cyc(i, j) = cyc(j, i) = 1.0;
    }
    Graph g2 = make_graph(cyc, DenseMat::Zero(4, 1), {0, 1, 0, 1});
    CHECK(hop_homophily(g2, 1) == doctest::Approx(0.0));
    CHECK(hop_homophily(g2, 2) == doctest::Approx(1.0)); // A^2 connects same parity
}

TEST_CASE("hop_homophily: errors when nothing qualifies") {
    Graph g = make_graph(DenseMat::Zero(2, 2), DenseMat::Zero(2, 1), {0, 1});
    CHECK_THROWS_AS(hop_homophily(g, 1), DataError);
}

TEST_CASE("hop_homophily is invariant under node relabeling") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> lab(0, 2);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 8;
        DenseMat a = DenseMat::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (u(rng) < 0.35) a(i, j) = a(j, i) = 1.0;
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) labels[i] = lab(rng);
        if (a.sum() == 0.0) continue;
        Graph g = make_graph(a, DenseMat::Zero(n, 1), labels);

        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        DenseMat ap = DenseMat::Zero(n, n);
        std::vector<int> lp(n);
        for (int i = 0; i < n; ++i) {
            lp[perm[i]] = labels[i];
            for (int j = 0; j < n; ++j) ap(perm[i], perm[j]) = a(i, j);
        }
        Graph gp = make_graph(ap, DenseMat::Zero(n, 1), lp);
        for (int l = 1; l <= 3; ++l)
            CHECK(hop_homophily(g, l) == doctest::Approx(hop_homophily(gp, l)).epsilon(1e-12));
    }
}

TEST_CASE("mean_node_homophily equals the average of local ratios") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> lab(0, 1);
    const int n = 10;
    DenseMat a = DenseMat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (u(rng) < 0.4) a(i, j) = a(j, i) = 1.0;
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = lab(rng);
    Graph g = make_graph(a, DenseMat::Zero(n, 1), labels);

    double sum = 0.0;
    int count = 0;
    for (int v = 0; v < n; ++v) {
        if (g.adjacency.row_sums()[v] <= 0.0) continue;
        sum += local_node_homophily(g, v);
        ++count;
    }
    CHECK(mean_node_homophily(g) == doctest::Approx(sum / count).epsilon(1e-12));
}

TEST_CASE("sparse storage kicks in above the node limit") {
    SparseMat big(AdjMatrix::kDenseNodeLimit + 1, AdjMatrix::kDenseNodeLimit + 1);
    big.insert(0, 1) = 1.0;
    big.insert(1, 0) = 1.0;
    AdjMatrix m(big);
    CHECK_FALSE(m.is_dense());
    CHECK(m.nonzeros() == 2);

    AdjMatrix small(DenseMat::Zero(4, 4));
    CHECK(small.is_dense());
}
