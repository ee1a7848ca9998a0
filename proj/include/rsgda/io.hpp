#pragma once

#include "rsgda/graph.hpp"
#include "rsgda/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>

namespace rsgda {

struct DeclaredStats {
    Eigen::Index nodes = 0;
    long edges = 0; // undirected edge count after cleaning
    double homophily = 0.0;
    int classes = 0;
};

struct DatasetBundle {
    Graph graph;
    std::string name;
    std::optional<DeclaredStats> declared_stats;
};

/// Edge list: whitespace-separated 0-based pair per line, symmetrized on
/// load, duplicates and self-loops dropped. Features: comma-separated
/// decimal text, or raw little-endian float32 prefixed by two uint64
/// (rows, cols). Labels: one integer per line. Declared stats validate
/// counts exactly and homophily within +-0.05.
DatasetBundle load_dataset(const std::string& edges_path, const std::string& features_path,
                           const std::string& labels_path,
                           std::optional<DeclaredStats> declared = std::nullopt,
                           std::string name = "dataset");

/// Directory layout: edges.txt, features.csv or features.bin,
/// labels.txt (optional), stats.txt (optional "n edges homophily classes").
DatasetBundle load_dataset_dir(const std::string& dir, std::string name = "");

struct SyntheticSpec {
    Eigen::Index n = 500;
    int classes = 4;
    int feature_dim = 16;
    double homophily = 0.5; // probability an edge draw stays in-class
    int mean_degree = 10;
    double separation = 1.0;
    double noise = 1.0;
    uint64_t seed = 1;

    void validate() const;
};

/// Labeled random graph whose measured H^(1) tracks the requested
/// homophily; class centers depend only on (classes, feature_dim,
/// separation) so paired domains share feature geometry.
Graph generate_synthetic(const SyntheticSpec& spec);

/// "n=500,c=4,d=16,h=0.4,deg=10,sep=3.0,noise=1.0,seed=7"
SyntheticSpec parse_synthetic_spec(const std::string& text);

struct TaskConfig {
    double mu1 = 0.1;
    double mu2 = 0.1;
    int l = 4;
};

/// Per-task tuned settings for the twenty benchmark transfers.
const std::map<std::string, TaskConfig>& shipped_configs();
/// Unknown tasks fall back to mu1 = mu2 = 0.1, l = 4.
TaskConfig shipped_config_for(const std::string& task);

nlohmann::json metrics_to_json(const RunMetrics& m);
void write_metrics_text(const RunMetrics& m, const std::string& path);
void write_metrics_json(const RunMetrics& m, const std::string& path);
/// Writes <path> as a flat text record and <path>.json as the full document.
void write_run_outputs(const RunMetrics& m, const std::string& path);

/// Dumps every stored nonzero as "i j w" (weighted) or "i j" (binary).
void write_edge_list(const AdjMatrix& m, const std::string& path, bool weighted);
/// Reads exactly what was written; missing weights default to 1.
AdjMatrix read_weighted_edge_list(const std::string& path, Eigen::Index n);

DenseMat read_features_auto(const std::string& path);
void write_features_csv(const DenseMat& x, const std::string& path);
void write_features_binary(const DenseMat& x, const std::string& path);

/// Zero-pads the narrower feature matrix so both graphs agree (warns).
void align_feature_dims(Graph& a, Graph& b);

} // namespace rsgda
