#pragma once

#include "rsgda/filters.hpp"
#include "rsgda/graph.hpp"
#include "rsgda/model.hpp"
#include "rsgda/reconstruct.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rsgda {

enum class Ablation { full, no_cr, no_re, random_split };

Ablation parse_ablation(const std::string& tag);
std::string ablation_name(Ablation a);

struct RunConfig {
    int l = 2;   // hop coupling order for reconstruction
    int k = 2;   // filter order
    double mu1 = 0.1;
    double mu2 = 0.1;
    double beta = 2.0;
    double mu_ce = 1.0;
    double lr = 5e-4;           // in [1e-4, 5e-4]
    double weight_decay = 5e-4; // 0 (off) or in [1e-4, 5e-3]
    double dropout = 0.5;
    int epochs = 300;
    uint64_t seed = 1;
    Ablation ablation = Ablation::full;
    int topk = 5;
    int outer_iters = 10;

    void validate() const;
    HomophilicSolveConfig solve_config() const;
    LossWeights loss_weights() const; // ablation-adjusted
};

/// H^(1) of the original graph and of both reconstructed variants
/// (homophilic read off the top-k support). Only filled when the domain
/// carries labels.
struct StructureHomophily {
    bool available = false;
    double original = 0.0;
    double homophilic = 0.0;
    double heterophilic = 0.0;
};

struct RunMetrics {
    std::vector<double> loss_cr, loss_re, loss_a, loss_ce, loss_total;
    std::vector<double> gamma_trajectory;
    std::optional<double> final_accuracy;
    double structural_difference = 0.0;
    StructureHomophily source_homophily, target_homophily;
    double wall_clock_seconds = 0.0;
    std::vector<int> target_predictions;
};

/// Fraction of correct predictions. Errors on empty input.
double evaluate_accuracy(const Eigen::VectorXi& predictions, const Eigen::VectorXi& labels);

/// Definition-style diagnostic: spectral-norm gaps between corresponding
/// filter Laplacians when node counts match, padded sorted-spectrum
/// distance otherwise.
double structural_difference(const ReconstructedStructures& structs_s,
                             const ReconstructedStructures& structs_t);

/// Seeded random bipartition of the edge set into two row-normalized
/// structures (the random_split ablation).
ReconstructedStructures random_split_structures(const Graph& g, std::mt19937_64& rng);

struct HomophilyRow {
    std::string structure; // original | homophilic | heterophilic
    int hop = 1;
    double ratio = 0.0;
};

/// H^(l) table for l in 1..max_hop over the original graph and both
/// reconstructed variants. Hops with no qualifying pairs yield NaN.
std::vector<HomophilyRow> homophily_report(const Graph& g, const ReconstructedStructures& structs,
                                           int max_hop, int topk = 5);

/// End-to-end source -> target run: reconstruct, filter, train, classify.
RunMetrics run_rsgda(const Graph& source, const Graph& target, const RunConfig& cfg);

/// Same-capacity encoder + classifier trained on raw source features only;
/// returns target accuracy. The comparison point for transfer experiments.
double run_source_only_baseline(const Graph& source, const Graph& target, const RunConfig& cfg);

} // namespace rsgda
