// Command-line front end: run, reconstruct, homophily, sweep.

#include "rsgda/common.hpp"
#include "rsgda/io.hpp"
#include "rsgda/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace {

using namespace rsgda;

struct GraphArgs {
    std::string dir;
    std::string synthetic;
};

Graph load_graph_arg(const GraphArgs& args, const char* role) {
    if (!args.dir.empty()) return load_dataset_dir(args.dir).graph;
    if (!args.synthetic.empty()) return generate_synthetic(parse_synthetic_spec(args.synthetic));
    throw DataError(std::string(role) + ": provide either a dataset directory or a synthetic spec");
}

void add_graph_options(CLI::App* cmd, GraphArgs& src, GraphArgs& tgt) {
    cmd->add_option("--source-dir", src.dir, "source dataset directory");
    cmd->add_option("--target-dir", tgt.dir, "target dataset directory");
    cmd->add_option("--synthetic-src", src.synthetic, "source synthetic spec (n=,c=,d=,h=,...)");
    cmd->add_option("--synthetic-tgt", tgt.synthetic, "target synthetic spec");
}

struct RunArgs {
    GraphArgs src, tgt;
    RunConfig cfg;
    std::string task;
    std::string ablation = "full";
    std::string out = "run_metrics.txt";
    bool print_config = false;
    bool user_mu1 = false, user_mu2 = false, user_l = false, user_k = false;
};

void resolve_task_defaults(RunArgs& a) {
    if (a.task.empty()) return;
    TaskConfig tc = shipped_config_for(a.task);
    if (!a.user_mu1) a.cfg.mu1 = tc.mu1;
    if (!a.user_mu2) a.cfg.mu2 = tc.mu2;
    if (!a.user_l) a.cfg.l = tc.l;
    if (!a.user_k) a.cfg.k = tc.l;
}

void print_homophily_table(const std::vector<HomophilyRow>& table) {
    std::printf("%-14s %4s %10s\n", "structure", "hop", "ratio");
    for (const auto& row : table)
        std::printf("%-14s %4d %10.4f\n", row.structure.c_str(), row.hop, row.ratio);
}

int cmd_run(RunArgs& a) {
    resolve_task_defaults(a);
    a.cfg.ablation = parse_ablation(a.ablation);
    if (a.print_config) {
        std::printf("mu1 %g\nmu2 %g\nl %d\nk %d\nbeta %g\nmu_ce %g\nlr %g\nweight_decay %g\n"
                    "epochs %d\nseed %llu\nablation %s\ntopk %d\n",
                    a.cfg.mu1, a.cfg.mu2, a.cfg.l, a.cfg.k, a.cfg.beta, a.cfg.mu_ce, a.cfg.lr,
                    a.cfg.weight_decay, a.cfg.epochs,
                    static_cast<unsigned long long>(a.cfg.seed), ablation_name(a.cfg.ablation).c_str(),
                    a.cfg.topk);
        return 0;
    }
    Graph source = load_graph_arg(a.src, "source");
    Graph target = load_graph_arg(a.tgt, "target");
    align_feature_dims(source, target);
    RunMetrics metrics = run_rsgda(source, target, a.cfg);
    write_run_outputs(metrics, a.out);
    if (metrics.final_accuracy)
        std::printf("final_accuracy %.4f\n", *metrics.final_accuracy);
    std::printf("metrics written to %s and %s.json\n", a.out.c_str(), a.out.c_str());
    return 0;
}

int cmd_reconstruct(const GraphArgs& src, const HomophilicSolveConfig& solve, int topk,
                    const std::string& out_prefix, int max_hop) {
    Graph g = load_graph_arg(src, "input");
    ReconstructedStructures structs = reconstruct_structures(g, solve, topk);
    write_edge_list(structs.a_o, out_prefix + "_a_o.txt", true);
    write_edge_list(structs.a_e, out_prefix + "_a_e.txt", false);
    std::printf("wrote %s_a_o.txt and %s_a_e.txt\n", out_prefix.c_str(), out_prefix.c_str());
    if (g.has_labels()) print_homophily_table(homophily_report(g, structs, max_hop, topk));
    return 0;
}

int cmd_homophily(const GraphArgs& src, int max_hop) {
    Graph g = load_graph_arg(src, "input");
    if (!g.has_labels()) throw DataError("homophily: graph has no labels");
    std::printf("%4s %10s\n", "hop", "ratio");
    for (int l = 1; l <= max_hop; ++l) {
        try {
            std::printf("%4d %10.4f\n", l, hop_homophily(g, l));
        } catch (const DataError&) {
            std::printf("%4d %10s\n", l, "n/a");
        }
    }
    return 0;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) values.push_back(std::stod(item));
    }
    if (values.empty()) throw DataError("empty grid: " + text);
    return values;
}

int cmd_sweep(RunArgs& a, const std::string& mu1_grid, const std::string& mu2_grid,
              const std::string& l_grid, const std::string& out_dir) {
    a.cfg.ablation = parse_ablation(a.ablation);
    Graph source = load_graph_arg(a.src, "source");
    Graph target = load_graph_arg(a.tgt, "target");
    align_feature_dims(source, target);
    std::filesystem::create_directories(out_dir);

    std::printf("%8s %8s %4s %10s\n", "mu1", "mu2", "l", "accuracy");
    for (double mu1 : parse_grid(mu1_grid)) {
        for (double mu2 : parse_grid(mu2_grid)) {
            for (double lv : parse_grid(l_grid)) {
                RunConfig cfg = a.cfg;
                cfg.mu1 = mu1;
                cfg.mu2 = mu2;
                cfg.l = static_cast<int>(lv);
                cfg.k = static_cast<int>(lv);
                RunMetrics metrics = run_rsgda(source, target, cfg);
                std::ostringstream name;
                name << out_dir << "/sweep_mu1_" << mu1 << "_mu2_" << mu2 << "_l_" << cfg.l
                     << ".txt";
                write_run_outputs(metrics, name.str());
                double acc = metrics.final_accuracy.value_or(
                    std::numeric_limits<double>::quiet_NaN());
                std::printf("%8g %8g %4d %10.4f\n", mu1, mu2, cfg.l, acc);
            }
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"homophily-agnostic graph domain adaptation"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "train a source->target transfer and write metrics");
    add_graph_options(run, run_args.src, run_args.tgt);
    run->add_option("--task", run_args.task, "named transfer task for tuned defaults (e.g. CO->WI)");
    run->add_option("--l", run_args.cfg.l)->check(CLI::PositiveNumber)->each([&](const std::string&) {
        run_args.user_l = true;
    });
    run->add_option("--k", run_args.cfg.k)->each([&](const std::string&) { run_args.user_k = true; });
    run->add_option("--mu1", run_args.cfg.mu1)->each([&](const std::string&) {
        run_args.user_mu1 = true;
    });
    run->add_option("--mu2", run_args.cfg.mu2)->each([&](const std::string&) {
        run_args.user_mu2 = true;
    });
    run->add_option("--beta", run_args.cfg.beta);
    run->add_option("--mu-ce", run_args.cfg.mu_ce);
    run->add_option("--lr", run_args.cfg.lr);
    run->add_option("--weight-decay", run_args.cfg.weight_decay);
    run->add_option("--epochs", run_args.cfg.epochs);
    run->add_option("--seed", run_args.cfg.seed);
    run->add_option("--ablation", run_args.ablation, "full | no_cr | no_re | random_split");
    run->add_option("--topk", run_args.cfg.topk);
    run->add_option("--outer-iters", run_args.cfg.outer_iters);
    run->add_option("--out", run_args.out, "metrics output path");
    run->add_flag("--print-config", run_args.print_config, "print the resolved config and exit");

    GraphArgs rec_src;
    HomophilicSolveConfig rec_solve;
    int rec_topk = 5, rec_hops = 3;
    std::string rec_prefix = "reconstructed";
    CLI::App* rec = app.add_subcommand("reconstruct", "emit reconstructed structures as edge lists");
    rec->add_option("--source-dir", rec_src.dir, "dataset directory");
    rec->add_option("--synthetic", rec_src.synthetic, "synthetic spec");
    rec->add_option("--l", rec_solve.l);
    rec->add_option("--outer-iters", rec_solve.outer_iters);
    rec->add_option("--topk", rec_topk);
    rec->add_option("--max-hop", rec_hops);
    rec->add_option("--out-prefix", rec_prefix);

    GraphArgs hom_src;
    int hom_hops = 3;
    CLI::App* hom = app.add_subcommand("homophily", "print the hop-homophily table of a graph");
    hom->add_option("--source-dir", hom_src.dir, "dataset directory");
    hom->add_option("--synthetic", hom_src.synthetic, "synthetic spec");
    hom->add_option("--max-hop", hom_hops);

    RunArgs sweep_args;
    std::string mu1_grid = "0.1,0.5", mu2_grid = "0.1,0.5", l_grid = "2,4";
    std::string sweep_out = "sweep_out";
    CLI::App* sweep = app.add_subcommand("sweep", "grid over mu1, mu2 and l");
    add_graph_options(sweep, sweep_args.src, sweep_args.tgt);
    sweep->add_option("--mu1-grid", mu1_grid);
    sweep->add_option("--mu2-grid", mu2_grid);
    sweep->add_option("--l-grid", l_grid);
    sweep->add_option("--epochs", sweep_args.cfg.epochs);
    sweep->add_option("--seed", sweep_args.cfg.seed);
    sweep->add_option("--lr", sweep_args.cfg.lr);
    sweep->add_option("--weight-decay", sweep_args.cfg.weight_decay);
    sweep->add_option("--topk", sweep_args.cfg.topk);
    sweep->add_option("--outer-iters", sweep_args.cfg.outer_iters);
    sweep->add_option("--out-dir", sweep_out);

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(run_args);
        if (rec->parsed()) return cmd_reconstruct(rec_src, rec_solve, rec_topk, rec_prefix, rec_hops);
        if (hom->parsed()) return cmd_homophily(hom_src, hom_hops);
        if (sweep->parsed()) return cmd_sweep(sweep_args, mu1_grid, mu2_grid, l_grid, sweep_out);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage errors map to exit 1
    } catch (const rsgda::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const rsgda::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
