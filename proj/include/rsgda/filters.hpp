#pragma once

#include "rsgda/graph.hpp"
#include "rsgda/reconstruct.hpp"

#include <utility>

namespace rsgda {

struct FilterConfig {
    int k = 2;                 // polynomial order
    double gamma_logit = 0.0;  // sigmoid(0) = 0.5

    double gamma() const;
    void validate() const;
};

/// Symmetrizes a structure (0.5 (M + M^T)), then applies the self-loop
/// degree normalization, then returns L = I - normalized(M). Keeps the
/// filter spectra inside [0, 2].
AdjMatrix filter_laplacian(const AdjMatrix& structure);

/// Z_O = (1 - gamma) (I - L_O/2)^k X, by k repeated products.
DenseMat low_pass(const AdjMatrix& a_o, const DenseMat& X, const FilterConfig& cfg);

/// Z_E = gamma (L_E/2)^k X.
DenseMat high_pass(const AdjMatrix& a_e, const DenseMat& X, const FilterConfig& cfg);

/// Both filters with the shared gamma; returns {Z_E, Z_O}.
std::pair<DenseMat, DenseMat> filter_pair(const ReconstructedStructures& structures,
                                          const DenseMat& X, const FilterConfig& cfg);

/// Caches the unscaled k-power products once; gamma only rescales them.
/// Immutable after construction, safe for concurrent reads.
class FilterBasis {
public:
    FilterBasis(const ReconstructedStructures& structures, const DenseMat& X, int k);

    const DenseMat& low() const { return low_; }   // (I - L_O/2)^k X
    const DenseMat& high() const { return high_; } // (L_E/2)^k X

    DenseMat z_o(double gamma) const { return (1.0 - gamma) * low_; }
    DenseMat z_e(double gamma) const { return gamma * high_; }

private:
    DenseMat low_;
    DenseMat high_;
};

} // namespace rsgda
