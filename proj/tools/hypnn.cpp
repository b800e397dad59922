#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "hyp/errors.hpp"
#include "hyp/generators.hpp"
#include "hyp/grad_cases.hpp"
#include "hyp/harness.hpp"
#include "hyp/hyperbolicity.hpp"
#include "hyp/treedepth.hpp"

using namespace hyp;

namespace {

struct GenTree {
  std::size_t max_depth = 16;
  std::size_t branching = 2;
  std::size_t dim = 50;
  double sigma0 = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

struct GenGraph {
  std::string kind;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  graphs::GeneratorParams params;
  std::string out;
};

struct Delta {
  std::string edges;
  std::string mode = "pruned";
  bool per_component = false;
  bool json = false;
};

struct Train {
  std::string data;
  std::string model;
  std::string head;
  std::size_t dim = 16;
  std::optional<double> lr, weight_decay, dropout;
  double curvature = 1.0;
  std::uint64_t seed = 0;
  std::size_t patience = 10;
  std::size_t epochs = 500;
  std::string aggregation = "paper";
  std::string metrics_out;
};

struct GradCheck {
  std::string layer;
  double tol = 1e-4;
  std::size_t instances = 20;
  std::uint64_t seed = 1;
};

int gen_tree(const GenTree& a) {
  const auto ds = treedepth::make(
      {.max_d = a.max_depth, .b = a.branching, .dim = a.dim, .sigma0 = a.sigma0, .seed = a.seed});
  treedepth::save_bundle(ds, a.out);
  std::cout << "wrote " << a.out << ": " << ds.num_nodes() << " nodes, " << ds.graph.num_edges() << " edges, "
            << ds.num_classes() << " classes, train " << ds.nodes_in(treedepth::Split::Train).size() << ", val "
            << ds.nodes_in(treedepth::Split::Val).size() << ", test " << ds.nodes_in(treedepth::Split::Test).size()
            << '\n';
  return 0;
}

int gen_graph(const GenGraph& a) {
  const auto g = graphs::generate(graphs::parse_graph_kind(a.kind), a.n, a.params, a.seed);
  graphs::write_edge_list_file(a.out, g);
  std::cout << "wrote " << a.out << ": " << g.num_nodes() << " nodes, " << g.num_edges() << " edges\n";
  return 0;
}

int delta(const Delta& a) {
  const auto g = graphs::read_edge_list_file(a.edges);
  const auto rep = a.mode == "exact" ? graphs::hyperbolicity_exact(g) : graphs::hyperbolicity_pruned(g);
  const bool connected = rep.component_delta.size() == 1;
  if (a.json) {
    nlohmann::ordered_json j = {{"edges", a.edges},
                                {"mode", a.mode},
                                {"num_nodes", g.num_nodes()},
                                {"num_edges", g.num_edges()},
                                {"num_components", rep.component_delta.size()},
                                {"delta", connected ? nlohmann::json(rep.delta()) : nlohmann::json(nullptr)},
                                {"largest_component_size", rep.largest_component_size()},
                                {"largest_component_delta", rep.largest_component_delta()},
                                {"weighted_delta", rep.weighted_delta}};
    if (a.per_component) {
      auto comps = nlohmann::json::array();
      for (std::size_t i = 0; i < rep.component_delta.size(); ++i)
        comps.push_back({{"size", rep.component_size[i]}, {"delta", rep.component_delta[i]}});
      j["components"] = comps;
    }
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  if (connected)
    std::cout << "delta=" << rep.delta() << '\n';
  else
    std::cout << "components=" << rep.component_delta.size() << " largest_size=" << rep.largest_component_size()
              << " largest_delta=" << rep.largest_component_delta() << " weighted_delta=" << rep.weighted_delta
              << '\n';
  if (a.per_component)
    for (std::size_t i = 0; i < rep.component_delta.size(); ++i)
      std::cout << "component " << i << " size=" << rep.component_size[i] << " delta=" << rep.component_delta[i]
                << '\n';
  return 0;
}

int train(const Train& a) {
  const auto ds = treedepth::load_bundle(a.data);
  const auto task = harness::graph_task(ds);
  const auto kind = harness::parse_model_kind(a.model);
  auto spec = harness::default_spec(kind, task.feature_dim, a.dim, task.num_classes);
  if (!a.head.empty()) spec.head = harness::parse_head(a.head);
  spec.curvature = a.curvature;
  spec.aggregation = nn::parse_aggregation(a.aggregation);
  // Tuned TreeDepth defaults per model.
  const bool gcn = kind == harness::ModelKind::GCN;
  spec.dropout = a.dropout.value_or(0.0);
  harness::TrainConfig cfg;
  cfg.lr = a.lr.value_or(gcn ? 0.1 : 0.01);
  cfg.weight_decay = a.weight_decay.value_or(gcn ? 0.0 : 1e-4);
  cfg.patience = a.patience;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;

  auto model = harness::build_graph_model(spec, a.seed);
  const auto m = harness::train(*model, task, cfg);
  if (!a.metrics_out.empty()) {
    std::ofstream out(a.metrics_out);
    if (!out) throw UsageError("cannot write " + a.metrics_out);
    m.write_jsonl(out);
  }
  std::printf("model=%s head=%s dim=%zu epochs=%zu best_epoch=%zu best_val_loss=%.6f test_acc=%.4f seconds=%.1f\n",
              a.model.c_str(), harness::to_string(spec.head).c_str(), a.dim, m.epochs.size(), m.best_epoch,
              m.best_val_loss, m.test_acc, m.seconds);
  return 0;
}

int gradcheck(const GradCheck& a) {
  const auto results = ad::run_grad_cases(a.instances, a.seed, a.tol, a.layer);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-6s %-8s %-28s worst=%.3e over %zu\n", r.passed ? "PASS" : "FAIL", r.group.c_str(), r.name.c_str(),
                r.worst, r.instances);
    ok = ok && r.passed;
  }
  std::printf("%zu checks, %s\n", results.size(), ok ? "all passed" : "FAILURES");
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poincare-ball layers, graph hyperbolicity and the TreeDepth benchmark"};
  app.require_subcommand(1);

  GenTree gt;
  auto* c_tree = app.add_subcommand("gen-tree", "Generate, split and save a TreeDepth bundle");
  c_tree->add_option("--max-depth", gt.max_depth, "Deepest level")->capture_default_str();
  c_tree->add_option("--branching", gt.branching, "Children per node")->capture_default_str();
  c_tree->add_option("--dim", gt.dim, "Feature dimension")->capture_default_str();
  c_tree->add_option("--sigma0", gt.sigma0, "Step standard deviation")->capture_default_str();
  c_tree->add_option("--seed", gt.seed)->capture_default_str();
  c_tree->add_option("--out", gt.out, "Bundle directory")->required();

  GenGraph gg;
  auto* c_graph = app.add_subcommand("gen-graph", "Generate a random graph as an edge list");
  c_graph->add_option("--kind", gg.kind)->required()->check(CLI::IsMember({"ba", "nws", "sbm", "tree"}));
  c_graph->add_option("--n", gg.n, "Node count")->required();
  c_graph->add_option("--seed", gg.seed)->capture_default_str();
  c_graph->add_option("--m", gg.params.m, "ba: edges per new node")->capture_default_str();
  c_graph->add_option("--k", gg.params.k, "nws: ring neighbors")->capture_default_str();
  c_graph->add_option("--p", gg.params.p, "nws: shortcut probability")->capture_default_str();
  c_graph->add_option("--p-in", gg.params.p_in, "sbm: within-block probability")->capture_default_str();
  c_graph->add_option("--p-out", gg.params.p_out, "sbm: across-block probability (default 2/n)");
  c_graph->add_option("--out", gg.out, "Edge-list file")->required();

  Delta dl;
  auto* c_delta = app.add_subcommand("delta", "Gromov delta-hyperbolicity of an edge list");
  c_delta->add_option("--edges", dl.edges)->required()->check(CLI::ExistingFile);
  c_delta->add_option("--mode", dl.mode)->check(CLI::IsMember({"exact", "pruned"}))->capture_default_str();
  c_delta->add_flag("--per-component", dl.per_component);
  c_delta->add_flag("--json", dl.json);

  Train tr;
  auto* c_train = app.add_subcommand("train", "Train a node classifier on a TreeDepth bundle");
  c_train->add_option("--data", tr.data, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  c_train->add_option("--model", tr.model)->required()->check(CLI::IsMember({"gcn", "hypgcn"}));
  c_train->add_option("--head", tr.head, "none, euclid_mlr or hyp_mlr (default per model)")
      ->check(CLI::IsMember({"none", "euclid_mlr", "hyp_mlr"}));
  c_train->add_option("--dim", tr.dim)->capture_default_str();
  c_train->add_option("--lr", tr.lr, "Default 0.1 (gcn) or 0.01 (hypgcn)");
  c_train->add_option("--weight-decay", tr.weight_decay, "Default 0 (gcn) or 1e-4 (hypgcn)");
  c_train->add_option("--dropout", tr.dropout, "Default 0");
  c_train->add_option("--curvature", tr.curvature)->capture_default_str();
  c_train->add_option("--seed", tr.seed)->capture_default_str();
  c_train->add_option("--patience", tr.patience)->capture_default_str();
  c_train->add_option("--epochs", tr.epochs, "Epoch cap")->capture_default_str();
  c_train->add_option("--aggregation", tr.aggregation)
      ->check(CLI::IsMember({"paper", "normalized"}))
      ->capture_default_str();
  c_train->add_option("--metrics-out", tr.metrics_out, "JSON-lines metrics file");

  GradCheck gc;
  auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference check of primitives, ball ops and layers");
  c_grad->add_option("--layer", gc.layer, "Case or group name (primitive, ball, layer)");
  c_grad->add_option("--tol", gc.tol)->capture_default_str();
  c_grad->add_option("--instances", gc.instances)->capture_default_str();
  c_grad->add_option("--seed", gc.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (*c_tree) return gen_tree(gt);
    if (*c_graph) return gen_graph(gg);
    if (*c_delta) return delta(dl);
    if (*c_train) return train(tr);
    if (*c_grad) return gradcheck(gc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
