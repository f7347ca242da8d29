#include <scatter/scatter.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"graph active-learning toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, dataset_dir, raw_dir, norm_name = "symmetric";
  std::vector<double> r_values, p_values;
  std::vector<std::uint64_t> seeds;
  int k = 2;
  scatter::SimConfig sim;
  scatter::SynthConfig synth;

  CLI::App* run = app.add_subcommand("run", "budget sweep over samplers and seeds");
  run->add_option("--config", config_path, "experiment config JSON")->required();
  run->add_option("--out", out_path, "results CSV path")->required();

  CLI::App* ablate_r = app.add_subcommand("ablate-redundancy", "sweep sampling redundancy r");
  ablate_r->add_option("--config", config_path, "experiment config JSON")->required();
  ablate_r->add_option("--r-values", r_values, "redundancy values")
      ->required()
      ->delimiter(',');
  ablate_r->add_option("--out", out_path, "results CSV path")->required();

  CLI::App* ablate_t = app.add_subcommand("ablate-target", "sweep clustering coordinates");
  ablate_t->add_option("--config", config_path, "experiment config JSON")->required();
  ablate_t->add_option("--out", out_path, "results CSV path")->required();

  CLI::App* simulate = app.add_subcommand("simulate", "two-cluster GP simulation sweep");
  simulate->add_option("--p-inter", p_values, "inter-cluster edge probabilities")
      ->required()
      ->delimiter(',');
  simulate->add_option("--seeds", seeds, "seeds")->required()->delimiter(',');
  simulate->add_option("--out", out_path, "results CSV path")->required();
  simulate->add_option("--theta", sim.gp_theta, "GP length-scale");
  simulate->add_option("--rounds", sim.rounds, "uncertainty sampling rounds");
  simulate->add_option("--labels-per-round", sim.labels_per_round, "labels per round");
  simulate->add_option("--candidate-pool", sim.candidate_pool, "diverse candidate pool size");
  simulate->add_option("--nodes-per-cluster", sim.nodes_per_cluster, "nodes per cluster");

  CLI::App* convert = app.add_subcommand("convert", "convert a raw export to the canonical layout");
  convert->add_option("raw-dir", raw_dir, "directory with edges.tsv, features.csv|bin, labels.txt, splits.json, meta.json")
      ->required();
  convert->add_option("out-dir", dataset_dir, "output dataset directory")->required();

  CLI::App* propagate = app.add_subcommand("propagate", "write k-step propagated features");
  propagate->add_option("--dataset", dataset_dir, "dataset directory")->required();
  propagate->add_option("--k", k, "propagation steps")->required();
  propagate->add_option("--out", out_path, "output file (.csv for text, else binary)")->required();
  propagate->add_option("--norm", norm_name, "symmetric | row_stochastic");

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate the synthetic citation-style dataset");
  synth_cmd->add_option("--out", dataset_dir, "output dataset directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--nodes", synth.num_nodes, "node count");
  synth_cmd->add_option("--classes", synth.num_classes, "class count");
  synth_cmd->add_option("--name", synth.name, "dataset name");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const scatter::ExperimentConfig cfg = scatter::load_experiment_config(config_path);
      scatter::run_benchmark(cfg, out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (*ablate_r) {
      const scatter::ExperimentConfig cfg = scatter::load_experiment_config(config_path);
      scatter::run_ablation_redundancy(scatter::load_dataset(cfg.dataset), cfg, r_values,
                                       out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (*ablate_t) {
      const scatter::ExperimentConfig cfg = scatter::load_experiment_config(config_path);
      scatter::run_ablation_clustering_target(scatter::load_dataset(cfg.dataset), cfg, out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (*simulate) {
      scatter::run_simulation_sweep(sim, p_values, seeds, out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (*convert) {
      const scatter::DatasetBundle b = scatter::convert_dataset(raw_dir, dataset_dir);
      std::cout << "converted " << b.name << ": " << b.graph.num_nodes << " nodes, "
                << b.graph.num_undirected_edges() << " edges, " << b.num_classes
                << " classes, checksum " << scatter::to_hex(b.checksum) << "\n";
    } else if (*propagate) {
      const scatter::DatasetBundle b = scatter::load_dataset(dataset_dir);
      const scatter::Matrix x_k = scatter::propagate_features(
          b.graph, b.features, k, scatter::parse_normalization(norm_name));
      const std::filesystem::path out_file = out_path;
      if (out_file.extension() == ".csv") {
        auto os = scatter::detail::open_output(out_file);
        scatter::write_features_csv(os, x_k);
      } else {
        auto os = scatter::detail::open_output(out_file, true);
        scatter::write_features_gfea(os, x_k);
      }
      std::cout << "wrote " << out_path << "\n";
    } else if (*synth_cmd) {
      const scatter::DatasetBundle b = scatter::generate_synthetic_dataset(synth);
      scatter::save_dataset(b, dataset_dir);
      std::cout << "wrote " << b.name << " to " << dataset_dir << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
