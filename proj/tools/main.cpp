#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blockmix/cavi.hpp"
#include "blockmix/errors.hpp"
#include "blockmix/io.hpp"
#include "blockmix/metrics.hpp"
#include "blockmix/pipeline.hpp"
#include "blockmix/selection.hpp"
#include "blockmix/simulate.hpp"
#include "blockmix/summary.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    try {
      out.push_back(std::stoi(token));
    } catch (const std::exception&) {
      throw blockmix::ValidationError(std::string(what) + ": bad integer \"" + token + "\"");
    }
  }
  if (out.empty()) throw blockmix::ValidationError(std::string(what) + ": empty list");
  return out;
}

// "2:4" -> {2,3,4}; "2,3,4" stays a list.
std::vector<int> parse_grid(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return parse_int_list(text, "--blocks-grid");
  const int lo = std::stoi(text.substr(0, colon));
  const int hi = std::stoi(text.substr(colon + 1));
  if (hi < lo) throw blockmix::ValidationError("--blocks-grid: empty range");
  std::vector<int> out;
  for (int v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

std::string data_file(const std::string& path) {
  if (fs::is_directory(path)) return (fs::path(path) / "data.msfc").string();
  return path;
}

void echo_config(const char* label, const std::string& text) {
  std::cout << label << ":\n" << text << "\n";
}

json confusion_json(const blockmix::EdgeConfusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

json metrics_json(const blockmix::MetricsReport& m) {
  return {{"subtyping_ari", m.subtyping_ari},
          {"modular_ari", m.modular_ari},
          {"sensitivity", m.sensitivity},
          {"specificity", m.specificity},
          {"youden", m.youden},
          {"edge_confusion", confusion_json(m.edge_confusion)},
          {"runtime_seconds", m.runtime_seconds}};
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian nonparametric subtyping of multi-state connectivity data"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads for restarts");

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic tensor + ground truth");
  std::string sim_config_path, sim_out;
  std::uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  sim_cmd->add_option("--config", sim_config_path, "SimConfig JSON file");
  sim_cmd->add_option("--out", sim_out, "output directory")->required();
  sim_cmd->add_option("--seed", sim_seed)->each([&](const std::string&) { sim_seed_set = true; });

  // ---- fit ----
  auto* fit_cmd = app.add_subcommand("fit", "fit the model to an MSFC tensor");
  std::string fit_data, fit_out = "fit.json", blocks_text = "3,3";
  blockmix::ModelConfig mc;
  double alpha_fixed = -1.0;
  fit_cmd->add_option("--data", fit_data, "MSFC file or directory holding data.msfc")->required();
  fit_cmd->add_option("--blocks", blocks_text, "per-state block counts, e.g. 3,3");
  fit_cmd->add_option("--truncation", mc.truncation);
  fit_cmd->add_option("--restarts", mc.n_restarts);
  fit_cmd->add_option("--max-iter", mc.max_iter);
  fit_cmd->add_option("--tol", mc.tol);
  fit_cmd->add_option("--seed", mc.seed);
  fit_cmd->add_option("--gamma-prior-prob", mc.gamma_prior_prob);
  fit_cmd->add_option("--noise-mean", mc.noise_mean);
  fit_cmd->add_option("--noise-var", mc.noise_var, "noise variance; <= 0 = data-adaptive");
  fit_cmd->add_option("--noise-prob", mc.noise_prob);
  fit_cmd->add_option("--alpha-fixed", alpha_fixed, "fix the DP concentration (default: learned)");
  fit_cmd->add_option("--out", fit_out);

  // ---- select ----
  auto* sel_cmd = app.add_subcommand("select", "choose per-state block counts by VBIC");
  std::string sel_data, sel_grid = "2:4", sel_out = "report.json";
  blockmix::ModelConfig sel_mc;
  int sel_budget = 64;
  sel_cmd->add_option("--data", sel_data)->required();
  sel_cmd->add_option("--blocks-grid", sel_grid, "range lo:hi or list, applied per state");
  sel_cmd->add_option("--truncation", sel_mc.truncation);
  sel_cmd->add_option("--restarts", sel_mc.n_restarts);
  sel_cmd->add_option("--max-iter", sel_mc.max_iter);
  sel_cmd->add_option("--tol", sel_mc.tol);
  sel_cmd->add_option("--seed", sel_mc.seed);
  sel_cmd->add_option("--gamma-prior-prob", sel_mc.gamma_prior_prob);
  sel_cmd->add_option("--noise-var", sel_mc.noise_var);
  sel_cmd->add_option("--budget", sel_budget, "max factorial fits before coordinate-wise");
  sel_cmd->add_option("--out", sel_out);

  // ---- evaluate ----
  auto* eval_cmd = app.add_subcommand("evaluate", "score a fit against ground truth");
  std::string eval_fit, eval_truth, eval_out = "metrics.json";
  eval_cmd->add_option("--fit", eval_fit)->required();
  eval_cmd->add_option("--truth", eval_truth)->required();
  eval_cmd->add_option("--out", eval_out);

  // ---- summarize ----
  auto* sum_cmd = app.add_subcommand("summarize", "print hard summaries of a fit");
  std::string sum_fit;
  sum_cmd->add_option("--fit", sum_fit)->required();

  // ---- replicate-sim ----
  auto* rep_cmd = app.add_subcommand("replicate-sim", "simulation study: mean (sd) metric table");
  std::string rep_setting, rep_out = "table.json";
  int rep_n = 10;
  std::uint64_t rep_seed = 0;
  rep_cmd->add_option("--setting", rep_setting, "v{60,200,500}-{high,low}")->required();
  rep_cmd->add_option("--replicates", rep_n);
  rep_cmd->add_option("--seed", rep_seed);
  rep_cmd->add_option("--out", rep_out);

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(sim_cmd)) {
    blockmix::SimConfig sim;
    if (!sim_config_path.empty()) sim = blockmix::sim_config_from_json_file(sim_config_path);
    if (sim_seed_set) sim.seed = sim_seed;
    echo_config("resolved sim config", blockmix::sim_config_json(sim));
    auto [tensor, truth] = blockmix::generate(sim);
    fs::create_directories(sim_out);
    blockmix::write_msfc(tensor, (fs::path(sim_out) / "data.msfc").string());
    blockmix::save_truth(truth, sim, (fs::path(sim_out) / "truth.json").string());
    std::cout << "wrote " << (fs::path(sim_out) / "data.msfc").string() << " and truth.json\n";
    return 0;
  }

  if (app.got_subcommand(fit_cmd)) {
    const blockmix::ConnectivityTensor tensor = blockmix::read_msfc(data_file(fit_data));
    mc.n_states = tensor.n_states();
    mc.blocks_per_state = parse_int_list(blocks_text, "--blocks");
    mc.family = tensor.family();
    mc.threads = threads;
    if (alpha_fixed > 0) {
      mc.alpha_mode = blockmix::AlphaMode::fixed;
      mc.alpha_fixed = alpha_fixed;
    }
    if (static_cast<int>(mc.blocks_per_state.size()) != mc.n_states) {
      throw blockmix::ValidationError("--blocks length must match the data's state count");
    }
    const blockmix::ModelConfig resolved = blockmix::resolve_noise_var(mc, tensor);
    echo_config("resolved model config", blockmix::model_config_json(resolved));
    auto [state, diag] = blockmix::fit(tensor, resolved);
    blockmix::save_fit({resolved, std::move(state), diag}, fit_out);
    std::cout << "converged=" << (diag.converged ? "yes" : "no") << " iters=" << diag.n_iter
              << " elbo=" << diag.final_elbo << " wrote " << fit_out << "\n";
    return 0;
  }

  if (app.got_subcommand(sel_cmd)) {
    const blockmix::ConnectivityTensor tensor = blockmix::read_msfc(data_file(sel_data));
    sel_mc.n_states = tensor.n_states();
    sel_mc.family = tensor.family();
    sel_mc.threads = threads;
    sel_mc.blocks_per_state.assign(tensor.n_states(), 3);
    const std::vector<int> values = parse_grid(sel_grid);
    const std::vector<std::vector<int>> grid(tensor.n_states(), values);
    echo_config("resolved model config", blockmix::model_config_json(sel_mc));
    const blockmix::SelectionReport report =
        blockmix::select(tensor, sel_mc, grid, sel_budget);
    json cands = json::array();
    for (const auto& c : report.candidates) {
      cands.push_back({{"blocks", c.blocks},
                       {"vbic", c.vbic},
                       {"final_elbo", c.final_elbo},
                       {"converged", c.diagnostics.converged},
                       {"n_iter", c.diagnostics.n_iter},
                       {"failed", c.failed},
                       {"error", c.error}});
    }
    const json doc{{"chosen", report.chosen},
                   {"coordinate_wise", report.coordinate_wise},
                   {"candidates", cands}};
    blockmix::atomic_write(sel_out, doc.dump(2) + "\n");
    std::cout << "chosen blocks:";
    for (int s : report.chosen) std::cout << " " << s;
    std::cout << "; wrote " << sel_out << "\n";
    return 0;
  }

  if (app.got_subcommand(eval_cmd)) {
    const blockmix::FitResult fit_doc = blockmix::load_fit(eval_fit);
    const blockmix::GroundTruth truth = blockmix::load_truth(eval_truth);
    const blockmix::FitSummary summary = blockmix::summarize(fit_doc.state, fit_doc.config);
    const blockmix::MetricsReport metrics =
        blockmix::evaluate(summary, truth, fit_doc.diagnostics.wall_time);
    blockmix::atomic_write(eval_out, metrics_json(metrics).dump(2) + "\n");
    std::cout << "subtyping ARI " << metrics.subtyping_ari << "; wrote " << eval_out << "\n";
    return 0;
  }

  if (app.got_subcommand(sum_cmd)) {
    const blockmix::FitResult fit_doc = blockmix::load_fit(sum_fit);
    const blockmix::FitSummary s = blockmix::summarize(fit_doc.state, fit_doc.config);
    std::printf("clusters (occupied %d of %d)\n", s.occupied_clusters,
                fit_doc.config.truncation);
    std::printf("  %-8s %s\n", "cluster", "size");
    for (int label : s.occupied) {
      int size = 0;
      for (int c : s.cluster_of) size += (c == label);
      std::printf("  %-8d %d\n", label, size);
    }
    for (std::size_t m = 0; m < s.block_of.size(); ++m) {
      const int S = fit_doc.config.blocks_per_state[m];
      std::printf("state %zu blocks\n  %-8s %s\n", m, "block", "size");
      for (int b = 1; b <= S; ++b) {
        int size = 0;
        for (int x : s.block_of[m]) size += (x == b);
        std::printf("  %-8d %d\n", b, size);
      }
      std::printf("state %zu selected pairs:", m);
      bool any = false;
      for (int a = 1, p = 0; a <= S; ++a) {
        for (int b = a; b <= S; ++b, ++p) {
          if (s.selected[m][p]) {
            std::printf(" (%d,%d)", a, b);
            any = true;
          }
        }
      }
      std::printf("%s\n", any ? "" : " none");
    }
    std::printf("subtype profiles (posterior mean per block pair)\n");
    for (std::size_t m = 0; m < s.block_of.size(); ++m) {
      const int S = fit_doc.config.blocks_per_state[m];
      std::printf("  state %zu\n  %-8s", m, "cluster");
      for (int a = 1; a <= S; ++a) {
        for (int b = a; b <= S; ++b) std::printf(" %8s", ("(" + std::to_string(a) + "," + std::to_string(b) + ")").c_str());
      }
      std::printf("\n");
      for (std::size_t c = 0; c < s.profile.size(); ++c) {
        std::printf("  %-8d", s.occupied[c]);
        for (int p = 0; p < s.profile[c][m].size(); ++p) {
          std::printf(" %8.3f", s.profile[c][m](p));
        }
        std::printf("\n");
      }
    }
    return 0;
  }

  if (app.got_subcommand(rep_cmd)) {
    const blockmix::ReplicateTable table =
        blockmix::run_replicates(rep_setting, rep_n, rep_seed);
    blockmix::atomic_write(rep_out, blockmix::replicate_table_json(table));
    std::printf("%s: ARI %.2f (%.2f), spe %.2f (%.2f); wrote %s\n", rep_setting.c_str(),
                table.ari.mean, table.ari.sd, table.specificity.mean, table.specificity.sd,
                rep_out.c_str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const blockmix::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const blockmix::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
