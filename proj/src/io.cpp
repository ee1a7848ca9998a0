#include "rsgda/io.hpp"

#include "rsgda/common.hpp"
#include "rsgda/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

namespace fs = std::filesystem;

namespace rsgda {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

DenseMat read_features_csv(const std::string& path) {
    std::vector<std::vector<double>> rows;
    size_t lineno = 0;
    for (const std::string& line : read_lines(path)) {
        ++lineno;
        if (blank(line)) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(lineno) + ": bad feature value '" +
                                cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError(path + ":" + std::to_string(lineno) + ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path + ": empty feature file");
    DenseMat x(rows.size(), rows.front().size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j) x(i, j) = rows[i][j];
    return x;
}

DenseMat read_features_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (!in) throw DataError(path + ": truncated binary feature header");
    std::vector<float> buf(rows * cols);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (!in) throw DataError(path + ": truncated binary feature payload");
    DenseMat x(rows, cols);
    for (uint64_t i = 0; i < rows; ++i)
        for (uint64_t j = 0; j < cols; ++j) x(i, j) = static_cast<double>(buf[i * cols + j]);
    return x;
}

bool looks_binary(const std::string& path) {
    std::error_code ec;
    auto size = fs::file_size(path, ec);
    if (ec || size < 16) return false;
    std::ifstream in(path, std::ios::binary);
    uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (!in || rows == 0 || cols == 0) return false;
    if (rows > (1ULL << 32) || cols > (1ULL << 32)) return false;
    return size == 16 + rows * cols * 4;
}

} // namespace

DenseMat read_features_auto(const std::string& path) {
    return looks_binary(path) ? read_features_binary(path) : read_features_csv(path);
}

void write_features_csv(const DenseMat& x, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out.precision(10);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (j) out << ',';
            out << x(i, j);
        }
        out << '\n';
    }
}

void write_features_binary(const DenseMat& x, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    uint64_t rows = static_cast<uint64_t>(x.rows());
    uint64_t cols = static_cast<uint64_t>(x.cols());
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            float v = static_cast<float>(x(i, j));
            out.write(reinterpret_cast<const char*>(&v), 4);
        }
}

DatasetBundle load_dataset(const std::string& edges_path, const std::string& features_path,
                           const std::string& labels_path, std::optional<DeclaredStats> declared,
                           std::string name) {
    DenseMat features = read_features_auto(features_path);
    const Eigen::Index n = features.rows();

    std::set<std::pair<Eigen::Index, Eigen::Index>> edge_set;
    size_t lineno = 0;
    for (const std::string& line : read_lines(edges_path)) {
        ++lineno;
        if (blank(line)) continue;
        std::stringstream ss(line);
        long long u = -1, v = -1;
        if (!(ss >> u >> v))
            throw DataError(edges_path + ":" + std::to_string(lineno) + ": expected 'u v'");
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw DataError(edges_path + ":" + std::to_string(lineno) + ": node id out of range");
        if (u == v) {
            std::cerr << "[rsgda] warning: dropping self-loop '" << u << " " << v << "' at "
                      << edges_path << ":" << lineno << "\n";
            continue;
        }
        edge_set.emplace(std::min<Eigen::Index>(u, v), std::max<Eigen::Index>(u, v));
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(edge_set.size() * 2);
    for (auto [u, v] : edge_set) {
        trip.emplace_back(u, v, 1.0);
        trip.emplace_back(v, u, 1.0);
    }
    SparseMat adj(n, n);
    adj.setFromTriplets(trip.begin(), trip.end());

    DatasetBundle bundle;
    bundle.name = std::move(name);
    bundle.declared_stats = declared;
    bundle.graph.n = n;
    bundle.graph.adjacency = AdjMatrix(adj);
    bundle.graph.features = std::move(features);

    if (!labels_path.empty()) {
        Eigen::VectorXi labels(n);
        Eigen::Index idx = 0;
        lineno = 0;
        for (const std::string& line : read_lines(labels_path)) {
            ++lineno;
            if (blank(line)) continue;
            if (idx >= n)
                throw DataError(labels_path + ":" + std::to_string(lineno) + ": too many labels");
            try {
                labels[idx++] = std::stoi(line);
            } catch (const std::exception&) {
                throw DataError(labels_path + ":" + std::to_string(lineno) + ": bad label '" +
                                line + "'");
            }
        }
        if (idx != n)
            throw DataError(labels_path + ": expected " + std::to_string(n) + " labels, got " +
                            std::to_string(idx));
        bundle.graph.labels = labels;
        bundle.graph.num_classes = labels.maxCoeff() + 1;
    }
    bundle.graph.validate();

    if (declared) {
        const DeclaredStats& s = *declared;
        if (n != s.nodes)
            throw DataError(bundle.name + ": declared " + std::to_string(s.nodes) +
                            " nodes, loaded " + std::to_string(n));
        long loaded_edges = static_cast<long>(edge_set.size());
        if (loaded_edges != s.edges)
            throw DataError(bundle.name + ": declared " + std::to_string(s.edges) +
                            " edges, loaded " + std::to_string(loaded_edges));
        if (bundle.graph.has_labels() && bundle.graph.num_classes != s.classes)
            throw DataError(bundle.name + ": declared " + std::to_string(s.classes) +
                            " classes, loaded " + std::to_string(bundle.graph.num_classes));
        if (bundle.graph.has_labels()) {
            // the table's homophily variant is unspecified, so any of the
            // candidate metrics may match within the tolerance
            double h1 = hop_homophily(bundle.graph, 1);
            double hnode = mean_node_homophily(bundle.graph);
            double best = std::min(std::abs(h1 - s.homophily), std::abs(hnode - s.homophily));
            if (best > 0.05)
                throw DataError(bundle.name + ": declared homophily " +
                                std::to_string(s.homophily) + ", measured H1 " +
                                std::to_string(h1) + " / node-mean " + std::to_string(hnode));
        }
    }
    return bundle;
}

DatasetBundle load_dataset_dir(const std::string& dir, std::string name) {
    fs::path base(dir);
    if (!fs::is_directory(base)) throw DataError("not a dataset directory: " + dir);
    if (name.empty()) name = base.filename().string();

    std::string features;
    if (fs::exists(base / "features.bin")) {
        features = (base / "features.bin").string();
    } else if (fs::exists(base / "features.csv")) {
        features = (base / "features.csv").string();
    } else {
        throw DataError(dir + ": missing features.bin or features.csv");
    }
    std::string labels = fs::exists(base / "labels.txt") ? (base / "labels.txt").string() : "";

    std::optional<DeclaredStats> declared;
    if (fs::exists(base / "stats.txt")) {
        std::ifstream in(base / "stats.txt");
        DeclaredStats s;
        if (!(in >> s.nodes >> s.edges >> s.homophily >> s.classes))
            throw DataError(dir + "/stats.txt: expected 'n edges homophily classes'");
        declared = s;
    }
    return load_dataset((base / "edges.txt").string(), features, labels, declared,
                        std::move(name));
}

void SyntheticSpec::validate() const {
    if (n < 2) throw DataError("synthetic spec: n must be >= 2");
    if (classes < 1) throw DataError("synthetic spec: classes must be >= 1");
    if (feature_dim < 1) throw DataError("synthetic spec: feature_dim must be >= 1");
    if (homophily < 0.0 || homophily > 1.0)
        throw DataError("synthetic spec: homophily must lie in [0, 1]");
    if (mean_degree < 1 || mean_degree >= n)
        throw DataError("synthetic spec: mean_degree must lie in [1, n)");
    if (separation < 0.0 || noise < 0.0)
        throw DataError("synthetic spec: separation and noise must be >= 0");
}

Graph generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    auto rng = substream(spec.seed, "synthetic");

    Eigen::VectorXi labels(spec.n);
    std::uniform_int_distribution<int> pick_class(0, spec.classes - 1);
    for (Eigen::Index v = 0; v < spec.n; ++v) labels[v] = pick_class(rng);

    std::vector<std::vector<Eigen::Index>> members(spec.classes);
    for (Eigen::Index v = 0; v < spec.n; ++v) members[labels[v]].push_back(v);

    std::set<std::pair<Eigen::Index, Eigen::Index>> edges;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<Eigen::Index> pick_node(0, spec.n - 1);
    for (Eigen::Index v = 0; v < spec.n; ++v) {
        for (int t = 0; t < spec.mean_degree; ++t) {
            bool same = unit(rng) < spec.homophily;
            Eigen::Index partner = -1;
            for (int attempt = 0; attempt < 50; ++attempt) {
                Eigen::Index u;
                if (same) {
                    const auto& pool = members[labels[v]];
                    if (pool.size() < 2) break;
                    std::uniform_int_distribution<size_t> pi(0, pool.size() - 1);
                    u = pool[pi(rng)];
                } else {
                    u = pick_node(rng);
                    if (labels[u] == labels[v]) continue;
                }
                if (u == v) continue;
                auto key = std::make_pair(std::min(u, v), std::max(u, v));
                if (edges.count(key)) continue;
                partner = u;
                edges.insert(key);
                break;
            }
            (void)partner;
        }
    }

    // class centers depend only on (classes, feature_dim, separation)
    auto center_rng = substream(fnv1a64("synthetic-centers"), "centers");
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMat centers(spec.classes, spec.feature_dim);
    for (int c = 0; c < spec.classes; ++c)
        for (int j = 0; j < spec.feature_dim; ++j)
            centers(c, j) = spec.separation * gauss(center_rng);

    DenseMat features(spec.n, spec.feature_dim);
    for (Eigen::Index v = 0; v < spec.n; ++v)
        for (int j = 0; j < spec.feature_dim; ++j)
            features(v, j) = centers(labels[v], j) + spec.noise * gauss(rng);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(edges.size() * 2);
    for (auto [u, v] : edges) {
        trip.emplace_back(u, v, 1.0);
        trip.emplace_back(v, u, 1.0);
    }
    SparseMat adj(spec.n, spec.n);
    adj.setFromTriplets(trip.begin(), trip.end());

    Graph g;
    g.n = spec.n;
    g.adjacency = AdjMatrix(adj);
    g.features = std::move(features);
    g.labels = labels;
    g.num_classes = spec.classes;
    g.validate();
    return g;
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
    SyntheticSpec spec;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (blank(item)) continue;
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw DataError("synthetic spec: expected key=value, got '" + item + "'");
        std::string key = item.substr(0, eq);
        std::string value = item.substr(eq + 1);
        try {
            if (key == "n") spec.n = std::stoll(value);
            else if (key == "c") spec.classes = std::stoi(value);
            else if (key == "d") spec.feature_dim = std::stoi(value);
            else if (key == "h") spec.homophily = std::stod(value);
            else if (key == "deg") spec.mean_degree = std::stoi(value);
            else if (key == "sep") spec.separation = std::stod(value);
            else if (key == "noise") spec.noise = std::stod(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else throw DataError("synthetic spec: unknown key '" + key + "'");
        } catch (const DataError&) {
            throw;
        } catch (const std::exception&) {
            throw DataError("synthetic spec: bad value for '" + key + "': " + value);
        }
    }
    spec.validate();
    return spec;
}

const std::map<std::string, TaskConfig>& shipped_configs() {
    static const std::map<std::string, TaskConfig> configs = {
        {"U->B", {0.5, 0.5, 4}},   {"U->E", {0.1, 0.1, 2}},   {"B->U", {0.1, 0.1, 4}},
        {"B->E", {0.5, 0.1, 3}},   {"E->U", {0.5, 0.5, 4}},   {"E->B", {0.5, 0.5, 4}},
        {"A3->A4", {0.1, 0.1, 5}}, {"A4->A3", {0.1, 0.1, 4}}, {"B1->B2", {0.1, 0.1, 2}},
        {"B2->B1", {0.1, 0.1, 3}}, {"A->D", {0.1, 0.1, 3}},   {"D->A", {0.1, 0.1, 4}},
        {"A->C", {0.5, 0.5, 4}},   {"C->A", {0.1, 0.1, 3}},   {"C->D", {0.1, 0.1, 4}},
        {"D->C", {0.1, 0.1, 4}},   {"CO->WI", {0.1, 0.1, 7}}, {"TX->CO", {0.1, 0.1, 4}},
        {"TX->WI", {0.1, 0.1, 6}}, {"WI->TX", {0.1, 0.1, 8}},
    };
    return configs;
}

TaskConfig shipped_config_for(const std::string& task) {
    auto it = shipped_configs().find(task);
    if (it != shipped_configs().end()) return it->second;
    return TaskConfig{0.1, 0.1, 4};
}

nlohmann::json metrics_to_json(const RunMetrics& m) {
    nlohmann::json j;
    j["loss_cr"] = m.loss_cr;
    j["loss_re"] = m.loss_re;
    j["loss_a"] = m.loss_a;
    j["loss_ce"] = m.loss_ce;
    j["loss_total"] = m.loss_total;
    j["gamma_trajectory"] = m.gamma_trajectory;
    if (m.final_accuracy) {
        j["final_accuracy"] = *m.final_accuracy;
    } else {
        j["final_accuracy"] = nullptr;
    }
    j["structural_difference"] = m.structural_difference;
    auto hom = [](const StructureHomophily& h) {
        nlohmann::json out;
        out["available"] = h.available;
        if (h.available) {
            out["original"] = h.original;
            out["homophilic"] = h.homophilic;
            out["heterophilic"] = h.heterophilic;
        }
        return out;
    };
    j["source_homophily"] = hom(m.source_homophily);
    j["target_homophily"] = hom(m.target_homophily);
    j["wall_clock_seconds"] = m.wall_clock_seconds;
    j["target_predictions"] = m.target_predictions;
    return j;
}

namespace {

template <typename T>
void write_series(std::ofstream& out, const std::string& key, const std::vector<T>& xs) {
    out << key << ' ';
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out << ',';
        out << xs[i];
    }
    out << '\n';
}

} // namespace

void write_metrics_text(const RunMetrics& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out.precision(12);
    if (m.final_accuracy) out << "final_accuracy " << *m.final_accuracy << '\n';
    out << "epochs " << m.loss_total.size() << '\n';
    out << "structural_difference " << m.structural_difference << '\n';
    out << "wall_clock_seconds " << m.wall_clock_seconds << '\n';
    if (!m.gamma_trajectory.empty()) out << "gamma_final " << m.gamma_trajectory.back() << '\n';
    auto hom = [&](const char* prefix, const StructureHomophily& h) {
        if (!h.available) return;
        out << prefix << "_original " << h.original << '\n';
        out << prefix << "_homophilic " << h.homophilic << '\n';
        out << prefix << "_heterophilic " << h.heterophilic << '\n';
    };
    hom("source_homophily", m.source_homophily);
    hom("target_homophily", m.target_homophily);
    write_series(out, "loss_cr", m.loss_cr);
    write_series(out, "loss_re", m.loss_re);
    write_series(out, "loss_a", m.loss_a);
    write_series(out, "loss_ce", m.loss_ce);
    write_series(out, "loss_total", m.loss_total);
    write_series(out, "gamma", m.gamma_trajectory);
    write_series(out, "target_predictions", m.target_predictions);
}

void write_metrics_json(const RunMetrics& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << metrics_to_json(m).dump(2) << '\n';
}

void write_run_outputs(const RunMetrics& m, const std::string& path) {
    write_metrics_text(m, path);
    write_metrics_json(m, path + ".json");
}

void write_edge_list(const AdjMatrix& m, const std::string& path, bool weighted) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out.precision(17);
    m.for_each_nonzero([&](Eigen::Index i, Eigen::Index j, double v) {
        if (v == 0.0) return;
        out << i << ' ' << j;
        if (weighted) out << ' ' << v;
        out << '\n';
    });
}

AdjMatrix read_weighted_edge_list(const std::string& path, Eigen::Index n) {
    std::vector<Eigen::Triplet<double>> trip;
    size_t lineno = 0;
    for (const std::string& line : read_lines(path)) {
        ++lineno;
        if (blank(line)) continue;
        std::stringstream ss(line);
        long long u = -1, v = -1;
        double w = 1.0;
        if (!(ss >> u >> v)) throw DataError(path + ":" + std::to_string(lineno) + ": bad line");
        ss >> w;
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw DataError(path + ":" + std::to_string(lineno) + ": node id out of range");
        trip.emplace_back(u, v, w);
    }
    SparseMat m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    return AdjMatrix(m);
}

void align_feature_dims(Graph& a, Graph& b) {
    if (a.feature_dim() == b.feature_dim()) return;
    Graph& narrow = a.feature_dim() < b.feature_dim() ? a : b;
    Eigen::Index wide = std::max(a.feature_dim(), b.feature_dim());
    std::cerr << "[rsgda] warning: zero-padding features from " << narrow.feature_dim() << " to "
              << wide << " columns\n";
    DenseMat padded = DenseMat::Zero(narrow.n, wide);
    padded.leftCols(narrow.feature_dim()) = narrow.features;
    narrow.features = std::move(padded);
}

} // namespace rsgda
