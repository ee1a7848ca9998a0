#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rsgda/common.hpp"
#include "rsgda/filters.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <random>

using namespace rsgda;

namespace {

DenseMat random_graph(int n, double p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DenseMat a = DenseMat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (u(rng) < p) a(i, j) = a(j, i) = 1.0;
    return a;
}

DenseMat random_features(int n, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMat x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = gauss(rng);
    return x;
}

// oracle: materialize the dense polynomial before touching X
DenseMat dense_power_oracle(const DenseMat& laplacian, const DenseMat& x, int k, bool low) {
    const Eigen::Index n = laplacian.rows();
    DenseMat base = low ? DenseMat(DenseMat::Identity(n, n) - 0.5 * laplacian)
                        : DenseMat(0.5 * laplacian);
    DenseMat power = DenseMat::Identity(n, n);
    for (int i = 0; i < k; ++i) power = power * base;
    return power * x;
}

double spectral_norm(const DenseMat& m) {
    return Eigen::JacobiSVD<DenseMat>(m).singularValues()(0);
}

} // namespace

TEST_CASE("filter_laplacian keeps the spectrum inside [0, 2]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        AdjMatrix a(random_graph(7, 0.4, rng));
        DenseMat l = filter_laplacian(a).to_dense();
        CHECK((l - l.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<DenseMat> es(l);
        CHECK(es.eigenvalues().minCoeff() > -1e-9);
        CHECK(es.eigenvalues().maxCoeff() < 2.0 + 1e-9);
    }
}

TEST_CASE("k = 0 reduces both filters to plain gamma scaling") {
    std::mt19937_64 rng(5);
    DenseMat a = random_graph(6, 0.4, rng);
    DenseMat x = random_features(6, 4, rng);
    FilterConfig cfg;
    cfg.k = 0;
    cfg.gamma_logit = 0.7;
    double g = cfg.gamma();
    CHECK((low_pass(AdjMatrix(a), x, cfg) - (1.0 - g) * x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((high_pass(AdjMatrix(a), x, cfg) - g * x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("extreme gamma suppresses the opposite channel") {
    std::mt19937_64 rng(7);
    DenseMat a = random_graph(6, 0.5, rng);
    DenseMat x = random_features(6, 3, rng);
    FilterConfig cfg;
    cfg.k = 2;
    cfg.gamma_logit = 20.0; // gamma -> 1
    CHECK(low_pass(AdjMatrix(a), x, cfg).norm() <= 1e-6 * x.norm());
    cfg.gamma_logit = -20.0; // gamma -> 0
    CHECK(high_pass(AdjMatrix(a), x, cfg).norm() <= 1e-6 * x.norm());
}

TEST_CASE("repeated products match the dense-power oracle") {
    // 3-node path, low-pass, k = 2
    DenseMat path = DenseMat::Zero(3, 3);
    path(0, 1) = path(1, 0) = path(1, 2) = path(2, 1) = 1.0;
    std::mt19937_64 rng(11);
    DenseMat x3 = random_features(3, 2, rng);
    FilterConfig cfg;
    cfg.k = 2;
    cfg.gamma_logit = 0.0;
    DenseMat l3 = filter_laplacian(AdjMatrix(path)).to_dense();
    DenseMat want = (1.0 - cfg.gamma()) * dense_power_oracle(l3, x3, 2, true);
    CHECK((low_pass(AdjMatrix(path), x3, cfg) - want).cwiseAbs().maxCoeff() < 1e-9);

    // random 4-node instance, high-pass, k = 3
    DenseMat a4 = random_graph(4, 0.6, rng);
    DenseMat x4 = random_features(4, 3, rng);
    cfg.k = 3;
    cfg.gamma_logit = 0.4;
    DenseMat l4 = filter_laplacian(AdjMatrix(a4)).to_dense();
    DenseMat want4 = cfg.gamma() * dense_power_oracle(l4, x4, 3, false);
    CHECK((high_pass(AdjMatrix(a4), x4, cfg) - want4).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("high-pass of a constant signal vanishes on regular structures") {
    const int n = 8;
    DenseMat cycle = DenseMat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        cycle(i, j) = cycle(j, i) = 1.0;
    }
    DenseMat ones = DenseMat::Ones(n, 1);
    FilterConfig cfg;
    cfg.k = 3;
    cfg.gamma_logit = 0.0;
    CHECK(high_pass(AdjMatrix(cycle), ones, cfg).norm() < 1e-12);

    // irregular structures only contract it
    std::mt19937_64 rng(13);
    DenseMat a = random_graph(n, 0.35, rng);
    DenseMat l = filter_laplacian(AdjMatrix(a)).to_dense();
    double first = (0.5 * l * ones).norm();
    cfg.gamma_logit = 20.0; // gamma ~ 1 to read the raw product
    CHECK(high_pass(AdjMatrix(a), ones, cfg).norm() <= first + 1e-9);
}

TEST_CASE("filter_pair identities at k = 0") {
    std::mt19937_64 rng(17);
    DenseMat a_o = random_graph(6, 0.4, rng);
    DenseMat a_e = random_graph(6, 0.3, rng);
    DenseMat x = random_features(6, 5, rng);
    ReconstructedStructures s{AdjMatrix(a_o), AdjMatrix(a_e)};

    FilterConfig cfg;
    cfg.k = 0;
    cfg.gamma_logit = 0.0; // gamma = 0.5
    auto [z_e, z_o] = filter_pair(s, x, cfg);
    CHECK((z_e - 0.5 * x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((z_o - 0.5 * x).cwiseAbs().maxCoeff() == 0.0);

    cfg.gamma_logit = 1.3; // any gamma reconstructs X at k = 0
    auto [z_e2, z_o2] = filter_pair(s, x, cfg);
    CHECK((z_e2 + z_o2 - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("output derivative w.r.t. gamma_logit matches finite differences") {
    std::mt19937_64 rng(19);
    DenseMat a_o = random_graph(5, 0.5, rng);
    DenseMat a_e = random_graph(5, 0.4, rng);
    DenseMat x = random_features(5, 3, rng);
    ReconstructedStructures s{AdjMatrix(a_o), AdjMatrix(a_e)};
    FilterConfig cfg;
    cfg.k = 2;
    cfg.gamma_logit = 0.3;

    FilterBasis basis(s, x, cfg.k);
    double g = cfg.gamma();
    double sg = g * (1.0 - g);
    DenseMat d_ze = sg * basis.high(); // dZ_E / dlogit
    DenseMat d_zo = -sg * basis.low(); // dZ_O / dlogit

    const double h = 1e-6;
    FilterConfig up = cfg, down = cfg;
    up.gamma_logit += h;
    down.gamma_logit -= h;
    auto [ze_up, zo_up] = filter_pair(s, x, up);
    auto [ze_dn, zo_dn] = filter_pair(s, x, down);
    DenseMat fd_ze = (ze_up - ze_dn) / (2.0 * h);
    DenseMat fd_zo = (zo_up - zo_dn) / (2.0 * h);
    CHECK(((fd_ze - d_ze).cwiseAbs().maxCoeff() / fd_ze.cwiseAbs().maxCoeff()) < 1e-4);
    CHECK(((fd_zo - d_zo).cwiseAbs().maxCoeff() / fd_zo.cwiseAbs().maxCoeff()) < 1e-4);
}

TEST_CASE("polynomial filters obey the derivative-based Lipschitz bound") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        DenseMat a = random_graph(5, 0.5, rng);
        DenseMat b = a;
        // toggle one random edge
        std::uniform_int_distribution<int> pick(0, 4);
        int i = pick(rng), j = pick(rng);
        while (i == j) j = pick(rng);
        b(i, j) = b(j, i) = 1.0 - b(i, j);
        DenseMat l1 = filter_laplacian(AdjMatrix(a)).to_dense();
        DenseMat l2 = filter_laplacian(AdjMatrix(b)).to_dense();
        DenseMat x = random_features(5, 3, rng);
        double xnorm = spectral_norm(x);
        double gap = spectral_norm(l1 - l2);
        for (int k = 1; k <= 3; ++k) {
            DenseMat f1 = dense_power_oracle(l1, x, k, true);
            DenseMat f2 = dense_power_oracle(l2, x, k, true);
            CHECK((f1 - f2).norm() <= 0.5 * k * xnorm * gap + 1e-9);
        }
    }
}

TEST_CASE("spectral containment bounds the filtered norms") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        DenseMat a_o = random_graph(6, 0.5, rng);
        DenseMat a_e = random_graph(6, 0.4, rng);
        DenseMat x = random_features(6, 4, rng);
        ReconstructedStructures s{AdjMatrix(a_o), AdjMatrix(a_e)};
        FilterConfig cfg;
        cfg.k = 1 + trial % 3;
        cfg.gamma_logit = -0.5 + 0.2 * trial;
        auto [z_e, z_o] = filter_pair(s, x, cfg);
        CHECK(z_o.norm() <= (1.0 - cfg.gamma()) * x.norm() + 1e-9);
        CHECK(z_e.norm() <= cfg.gamma() * x.norm() + 1e-9);
    }
}

TEST_CASE("filters are linear in the features") {
    std::mt19937_64 rng(31);
    DenseMat a = random_graph(6, 0.5, rng);
    DenseMat x1 = random_features(6, 3, rng);
    DenseMat x2 = random_features(6, 3, rng);
    FilterConfig cfg;
    cfg.k = 2;
    cfg.gamma_logit = 0.2;
    const double alpha = 1.7;
    DenseMat combined = low_pass(AdjMatrix(a), alpha * x1 + x2, cfg);
    DenseMat separate = alpha * low_pass(AdjMatrix(a), x1, cfg) + low_pass(AdjMatrix(a), x2, cfg);
    CHECK((combined - separate).cwiseAbs().maxCoeff() < 1e-9);
}
