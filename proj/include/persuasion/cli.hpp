#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "persuasion/errors.hpp"
#include "persuasion/eval.hpp"
#include "persuasion/experiment.hpp"
#include "persuasion/instances.hpp"
#include "persuasion/io.hpp"
#include "persuasion/solver.hpp"

namespace persuasion::cli {

// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kIo = 3;
inline constexpr int kComputation = 4;

// "a:step:b" (inclusive) or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw CLI::ValidationError("--grid", "'" + s + "' is not a number");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw CLI::ValidationError("--grid", "range must look like start:step:stop");
    const double a = number(parts[0]), step = number(parts[1]), b = number(parts[2]);
    if (!(step > 0.0) || b < a) throw CLI::ValidationError("--grid", "range needs step > 0 and stop >= start");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) out.push_back(a + static_cast<double>(i) * step);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
  }
  if (out.empty()) throw CLI::ValidationError("--grid", "grid is empty");
  return out;
}

inline std::size_t default_threads() {
  if (const char* env = std::getenv("PERSUASION_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

inline Json eval_to_json(const EvalResult& r) {
  Json j;
  j["method"] = r.method;
  j["principal_payoff"] = r.principal;
  j["agent_payoff"] = r.agent;
  if (r.mc) {
    j["samples"] = r.mc->samples;
    j["horizon"] = r.mc->horizon;
    j["principal_sd"] = r.mc->principal_sd;
    j["agent_sd"] = r.mc->agent_sd;
    j["principal_se"] = r.mc->principal_se();
    j["agent_se"] = r.mc->agent_se();
  }
  return j;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Persuasion MDP solver: generate instances, compute signaling strategies, "
               "evaluate them and run experiment sweeps."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "persuasion 1.0");

  Tolerances tol;
  auto add_tolerances = [&](CLI::App* cmd) {
    cmd->add_option("--tol-ic", tol.ic, "IC slack")->capture_default_str();
    cmd->add_option("--tol-tie", tol.tie, "advised-action tie slack")->capture_default_str();
    cmd->add_option("--tol-vi", tol.value_iteration, "value-iteration accuracy")->capture_default_str();
    cmd->add_option("--tol-recovery", tol.recovery_mismatch, "LP recovery check")->capture_default_str();
    cmd->add_option("--tol-corollary", tol.corollary, "threat verification check")->capture_default_str();
  };

  // generate
  auto* gen = app.add_subcommand("generate", "write a generated instance");
  gen->require_subcommand(1);
  RandomSpec rs;
  std::string output = "instance.json";
  auto* gr = gen->add_subcommand("random", "uniformly random instance");
  gr->add_option("--states", rs.states)->capture_default_str()->check(CLI::PositiveNumber);
  gr->add_option("--actions", rs.actions)->capture_default_str()->check(CLI::PositiveNumber);
  gr->add_option("--thetas", rs.thetas)->capture_default_str()->check(CLI::PositiveNumber);
  gr->add_option("--terminals", rs.terminals, "n*")->capture_default_str();
  gr->add_option("--beta", rs.beta)->capture_default_str()->check(CLI::Range(-1.0, 1.0));
  gr->add_option("--gamma", rs.gamma)->capture_default_str();
  gr->add_option("--gamma-tilde", rs.gamma_tilde)->capture_default_str();
  gr->add_option("--seed", rs.seed)->capture_default_str();
  gr->add_option("-o,--output", output)->capture_default_str();

  RoadNavSpec ns;
  auto* grn = gen->add_subcommand("roadnav", "road-navigation DAG instance");
  grn->add_option("--nodes", ns.nodes)->capture_default_str();
  grn->add_option("--edges", ns.edges)->capture_default_str();
  grn->add_option("--thetas", ns.thetas)->capture_default_str()->check(CLI::PositiveNumber);
  grn->add_option("--beta", ns.beta)->capture_default_str()->check(CLI::Range(-1.0, 1.0));
  grn->add_option("--gamma", ns.gamma)->capture_default_str();
  grn->add_option("--gamma-tilde", ns.gamma_tilde)->capture_default_str();
  grn->add_flag("--uniform-congestion", ns.uniform_congestion, "same congestion ranking on every road");
  grn->add_option("--seed", ns.seed)->capture_default_str();
  grn->add_option("-o,--output", output)->capture_default_str();

  std::string graph_path, mapping_path;
  double gadget_gamma = 0.8, gadget_gamma_tilde = 0.4;
  auto* gi = gen->add_subcommand("indset", "independent-set gadget for an edge-list graph");
  gi->add_option("--graph", graph_path, "edge-list file: \"n m\" then m lines \"u v\"")->required();
  gi->add_option("--gamma-tilde", gadget_gamma_tilde)->capture_default_str();
  gi->add_option("--gamma", gadget_gamma)->capture_default_str();
  gi->add_option("-o,--output", output)->capture_default_str();
  gi->add_option("--mapping", mapping_path, "vertex -> state mapping (default: <output>.mapping.json)");

  // solve
  std::string instance_path, method = "myop", report_path;
  auto* solve = app.add_subcommand("solve", "compute a strategy and print the principal payoff");
  solve->add_option("instance", instance_path, "instance JSON")->required();
  solve->add_option("-m,--method", method)
      ->capture_default_str()
      ->check(CLI::IsMember({"myop", "am", "threat", "nosig-myop", "nosig-fs", "full-control"}));
  solve->add_option("-o,--output", report_path, "write the JSON report here");
  add_tolerances(solve);

  // evaluate
  std::string eval_method = "optsig-myop";
  std::size_t samples = 0, horizon = 0;
  std::uint64_t eval_seed = 0;
  auto* evaluate = app.add_subcommand("evaluate", "exact (and optionally Monte Carlo) payoffs of a method");
  evaluate->add_option("instance", instance_path, "instance JSON")->required();
  evaluate->add_option("-m,--method", eval_method)->capture_default_str()->check(CLI::IsMember(method_tags()));
  evaluate->add_option("--rollouts", samples, "Monte Carlo samples (0: exact only)")->capture_default_str();
  evaluate->add_option("--horizon", horizon, "rollout horizon (0: automatic)")->capture_default_str();
  evaluate->add_option("--seed", eval_seed)->capture_default_str();
  evaluate->add_option("-o,--output", report_path, "write the JSON result here");
  add_tolerances(evaluate);

  // experiment
  SweepConfig sc;
  std::string family = "random", grid = "-1:0.25:1", dat_path = "experiment.dat";
  sc.threads = default_threads();
  auto* exp = app.add_subcommand("experiment", "parameter sweep written as a .dat table");
  exp->add_option("--family", family)->capture_default_str()->check(CLI::IsMember({"random", "roadnav"}));
  exp->add_option("--param", sc.parameter, "swept parameter")->capture_default_str();
  exp->add_option("--grid", grid, "start:step:stop or a comma list")->capture_default_str();
  exp->add_option("--instances", sc.instances_per_point, "instances per grid point")->capture_default_str();
  exp->add_option("--seed", sc.base_seed)->capture_default_str();
  exp->add_option("--threads", sc.threads, "worker threads (env PERSUASION_THREADS)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  exp->add_option("--states", sc.random.states)->capture_default_str();
  exp->add_option("--actions", sc.random.actions)->capture_default_str();
  exp->add_option("--terminals", sc.random.terminals)->capture_default_str();
  exp->add_option("--thetas", sc.random.thetas, "|Theta| (random family)")->capture_default_str();
  exp->add_option("--road-thetas", sc.roadnav.thetas, "|Theta| (roadnav family)")->capture_default_str();
  exp->add_option("--nodes", sc.roadnav.nodes)->capture_default_str();
  exp->add_option("--edges", sc.roadnav.edges)->capture_default_str();
  exp->add_flag("--uniform-congestion", sc.roadnav.uniform_congestion);
  double fixed_beta = NAN, fixed_gamma = NAN, fixed_gamma_tilde = NAN;
  exp->add_option("--beta", fixed_beta, "fixed beta when not swept");
  exp->add_option("--gamma", fixed_gamma, "fixed gamma when not swept");
  exp->add_option("--gamma-tilde", fixed_gamma_tilde, "fixed gamma~ when not swept");
  exp->add_option("-o,--output", dat_path)->capture_default_str();
  add_tolerances(exp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gr->parsed()) {
      save_instance(gen_random(rs), output);
      out << "wrote " << output << ": |S|=" << rs.states << " |A|=" << rs.actions
          << " |Theta|=" << rs.thetas << " seed=" << rs.seed << "\n";
    } else if (grn->parsed()) {
      const auto mdp = gen_roadnav(ns);
      std::size_t edges = 0;
      for (StateIndex s = 0; s < mdp.num_states(); ++s) edges += mdp.available(s).size();
      save_instance(mdp, output);
      out << "wrote " << output << ": |S|=" << mdp.num_states() << " |A|=" << mdp.num_actions()
          << " |Theta|=" << mdp.num_thetas() << " edges=" << edges << " seed=" << ns.seed << "\n";
    } else if (gi->parsed()) {
      const auto graph = parse_graph(read_file(graph_path));
      const auto g = gen_indset_gadget(graph, gadget_gamma_tilde, gadget_gamma);
      if (mapping_path.empty()) {
        std::filesystem::path p(output);
        mapping_path = (p.parent_path() / (p.stem().string() + ".mapping.json")).string();
      }
      Json mapping;
      mapping["terminal"] = g.map.terminal();
      mapping["vertices"] = detail::nested(graph.vertices, [&](std::size_t v) {
        Json e;
        e["vertex"] = v;
        e["s"] = g.map.entry(v);
        e["s_prime"] = g.map.choice(v);
        e["s_double_prime"] = g.map.exit(v);
        return e;
      });
      save_instance(g.mdp, output);
      write_file(mapping_path, mapping.dump(1) + "\n");
      out << "wrote " << output << " and " << mapping_path << ": |S|=" << g.mdp.num_states()
          << " |A|=" << g.mdp.num_actions() << " |Theta|=2 vertices=" << graph.vertices << "\n";
    } else if (solve->parsed()) {
      const auto mdp = load_instance(instance_path, tol);
      SolveReport rep;
      if (method == "myop") rep = opt_sig_myop(mdp, tol);
      else if (method == "am") rep = opt_sig_am(mdp, tol);
      else if (method == "threat") rep = threat_strategy(mdp, tol);
      else if (method == "nosig-myop") rep = nosig(mdp, AgentType::Myopic, tol);
      else if (method == "nosig-fs") rep = nosig(mdp, AgentType::FarSighted, tol);
      else rep = full_control(mdp, tol);
      if (!report_path.empty()) write_file(report_path, report_to_json(rep).dump(1) + "\n");
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f\n", rep.principal);
      out << buf;
    } else if (evaluate->parsed()) {
      const auto mdp = load_instance(instance_path, tol);
      Json result;
      const auto exact = evaluate_method(mdp, eval_method, tol);
      result["exact"] = eval_to_json(exact);
      char buf[160];
      std::snprintf(buf, sizeof buf, "exact principal %.6f agent %.6f\n", exact.principal, exact.agent);
      out << buf;
      if (samples > 0) {
        // Re-solve to obtain the strategy and response to simulate.
        Strategy strategy = uninformative(mdp);
        AgentPolicy policy;
        if (eval_method == "nosig-myop" || eval_method == "nosig-fs") {
          policy = nosig(mdp, eval_method == "nosig-myop" ? AgentType::Myopic : AgentType::FarSighted, tol).response;
        } else if (eval_method == "optsig-myop") {
          const auto rep = opt_sig_myop(mdp, tol);
          strategy = std::get<ActionAdvice>(rep.strategy);
          policy = myopic_response(mdp, std::get<ActionAdvice>(rep.strategy), tol);
        } else if (eval_method == "optsig-am") {
          const auto rep = opt_sig_am(mdp, tol);
          strategy = std::get<ActionAdvice>(rep.strategy);
          policy = myopic_response(mdp, std::get<ActionAdvice>(rep.strategy), am_rewards(mdp, tol), tol);
        } else if (eval_method == "threat") {
          const auto rep = threat_strategy(mdp, tol);
          strategy = std::get<ThreatStrategy>(rep.strategy);
          policy = rep.response;
        } else {
          const auto rep = full_control(mdp, tol);
          strategy = dictation_advice(mdp, rep.diagnostics.dictation, tol);
          policy = detail::obedient_policy(mdp);
        }
        const std::size_t h = horizon ? horizon : default_horizon(mdp);
        const auto mc = rollout(mdp, strategy, policy, h, samples, eval_seed, eval_method);
        result["rollout"] = eval_to_json(mc);
        std::snprintf(buf, sizeof buf,
                      "rollout principal %.6f (se %.6f) agent %.6f (se %.6f) samples %zu horizon %zu\n",
                      mc.principal, mc.mc->principal_se(), mc.agent, mc.mc->agent_se(), mc.mc->samples,
                      mc.mc->horizon);
        out << buf;
      }
      if (!report_path.empty()) write_file(report_path, result.dump(1) + "\n");
    } else if (exp->parsed()) {
      sc.family = family == "random" ? Family::Random : Family::RoadNav;
      try {
        sc.grid = parse_grid(grid);
      } catch (const CLI::ValidationError& e) {
        err << e.what() << "\n";
        return kUsage;
      }
      if (!std::isnan(fixed_beta)) sc.random.beta = sc.roadnav.beta = fixed_beta;
      if (!std::isnan(fixed_gamma)) sc.random.gamma = sc.roadnav.gamma = fixed_gamma;
      if (!std::isnan(fixed_gamma_tilde)) sc.random.gamma_tilde = sc.roadnav.gamma_tilde = fixed_gamma_tilde;
      const auto rows = sweep(sc, tol);
      write_file(dat_path, format_dat(rows));
      std::size_t flagged = 0;
      for (const auto& r : rows) flagged += r.degenerate;
      out << "wrote " << dat_path << ": " << rows.size() << " rows";
      if (flagged) out << ", " << flagged << " degenerate instances excluded";
      out << "\n";
    }
  } catch (const IoError& e) {
    err << "error [" << e.kind() << "]: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    err << "error [" << e.kind() << "]: " << e.what() << "\n";
    return kIo;
  } catch (const InvariantViolation& e) {
    err << "error [" << e.kind() << "]: " << e.what() << "\n";
    return kIo;
  } catch (const InvalidSpec& e) {
    err << "error [" << e.kind() << "]: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error [" << e.kind() << "]: " << e.what() << "\n";
    return kComputation;
  } catch (const std::exception& e) {
    err << "error [InternalError]: " << e.what() << "\n";
    return kComputation;
  }
  return kOk;
}

}  // namespace persuasion::cli
