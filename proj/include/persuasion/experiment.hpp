#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "persuasion/errors.hpp"
#include "persuasion/eval.hpp"
#include "persuasion/instances.hpp"
#include "persuasion/solver.hpp"

namespace persuasion {

inline const std::vector<std::string>& method_tags() {
  static const std::vector<std::string> tags{"nosig-myop", "nosig-fs",  "optsig-myop",
                                             "optsig-am",  "threat",    "full-control"};
  return tags;
}

// Solves with the named method and re-evaluates the resulting strategy
// exactly against the matching agent response.
inline EvalResult evaluate_method(const PersuasionMDP& mdp, const std::string& tag,
                                  const Tolerances& tol = kDefaultTolerances) {
  if (tag == "nosig-myop" || tag == "nosig-fs") {
    const auto rep = nosig(mdp, tag == "nosig-myop" ? AgentType::Myopic : AgentType::FarSighted, tol);
    return exact_eval(mdp, uninformative(mdp), rep.response, tag);
  }
  if (tag == "optsig-myop") {
    const auto rep = opt_sig_myop(mdp, tol);
    const auto& advice = std::get<ActionAdvice>(rep.strategy);
    return exact_eval(mdp, advice, myopic_response(mdp, advice, tol), tag);
  }
  if (tag == "optsig-am") {
    const auto rep = opt_sig_am(mdp, tol);
    const auto& advice = std::get<ActionAdvice>(rep.strategy);
    return exact_eval(mdp, advice, myopic_response(mdp, advice, am_rewards(mdp, tol), tol), tag);
  }
  if (tag == "threat") {
    const auto rep = threat_strategy(mdp, tol);
    if (!rep.diagnostics.obedient)
      throw CorollaryViolation("far-sighted best response deviates from the threat advice");
    return exact_eval(mdp, std::get<ThreatStrategy>(rep.strategy), rep.response, tag);
  }
  if (tag == "full-control") {
    const auto rep = full_control(mdp, tol);
    return exact_eval(mdp, dictation_advice(mdp, rep.diagnostics.dictation, tol), detail::obedient_policy(mdp),
                      tag);
  }
  throw InvalidSpec("unknown method tag '" + tag + "'");
}

enum class Family { Random, RoadNav };

struct SweepConfig {
  Family family = Family::Random;
  std::string parameter = "beta";
  std::vector<double> grid;
  RandomSpec random;
  RoadNavSpec roadnav;
  std::size_t instances_per_point = 20;
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;
};

// Columns: noSigMyop, noSigFS, optSigMyop, optSigAM.
inline constexpr std::size_t kSweepColumns = 4;

struct SweepRow {
  double x = 0.0;
  std::array<double, kSweepColumns> mean{};
  std::array<double, kSweepColumns> sd{};
  std::size_t instances = 0;   // instances entering the averages
  std::size_t degenerate = 0;  // instances whose ratio is undefined
};

struct InstanceRatios {
  std::array<double, kSweepColumns> ratio{};
  std::array<double, kSweepColumns + 1> payoff{};  // four methods then FullControl
  bool degenerate = false;
};

inline const std::vector<std::string>& sweepable(Family family) {
  static const std::vector<std::string> random{"beta",      "states", "actions",    "thetas",
                                               "terminals", "gamma",  "gamma-tilde"};
  static const std::vector<std::string> roadnav{"beta", "nodes", "edges", "thetas", "gamma", "gamma-tilde"};
  return family == Family::Random ? random : roadnav;
}

inline std::uint64_t sweep_seed(std::uint64_t base, std::size_t point, std::size_t instance) {
  return base + static_cast<std::uint64_t>(point) * 1000000ULL + instance;
}

inline PersuasionMDP sweep_instance(const SweepConfig& cfg, double x, std::uint64_t seed) {
  const auto& p = cfg.parameter;
  auto count = [&](double v) {
    if (!(v >= 0.0) || v != std::floor(v)) throw InvalidSpec(p + " must be a nonnegative integer");
    return static_cast<std::size_t>(v);
  };
  if (cfg.family == Family::Random) {
    RandomSpec s = cfg.random;
    s.seed = seed;
    if (p == "beta") s.beta = x;
    else if (p == "states") s.states = count(x);
    else if (p == "actions") s.actions = count(x);
    else if (p == "thetas") s.thetas = count(x);
    else if (p == "terminals") s.terminals = count(x);
    else if (p == "gamma") s.gamma = x;
    else if (p == "gamma-tilde") s.gamma_tilde = x;
    else throw InvalidSpec("random family cannot sweep '" + p + "'");
    return gen_random(s);
  }
  RoadNavSpec s = cfg.roadnav;
  s.seed = seed;
  if (p == "beta") s.beta = x;
  else if (p == "nodes") s.nodes = count(x);
  else if (p == "edges") s.edges = count(x);
  else if (p == "thetas") s.thetas = count(x);
  else if (p == "gamma") s.gamma = x;
  else if (p == "gamma-tilde") s.gamma_tilde = x;
  else throw InvalidSpec("roadnav family cannot sweep '" + p + "'");
  return gen_roadnav(s);
}

// Payoffs of the four methods relative to FullControl: method / FC for
// rewards, FC / method for costs (both payoffs negative). Anything else is
// flagged degenerate.
inline InstanceRatios instance_ratios(const PersuasionMDP& mdp, Family family,
                                      const Tolerances& tol = kDefaultTolerances) {
  InstanceRatios out;
  const double fc = full_control(mdp, tol).principal;
  out.payoff[0] = nosig(mdp, AgentType::Myopic, tol).principal;
  out.payoff[1] = nosig(mdp, AgentType::FarSighted, tol).principal;
  out.payoff[2] = opt_sig_myop(mdp, tol).principal;
  out.payoff[3] = threat_strategy(mdp, tol).principal;
  out.payoff[4] = fc;
  for (std::size_t c = 0; c < kSweepColumns; ++c) {
    const double m = out.payoff[c];
    if (family == Family::Random) {
      if (fc == 0.0) out.degenerate = true;
      else out.ratio[c] = m / fc;
    } else {
      if (!(fc < 0.0 && m < 0.0)) out.degenerate = true;
      else out.ratio[c] = fc / m;
    }
  }
  return out;
}

// Runs every (grid point, instance) pair, in parallel when threads > 1.
// Results are assembled by index, so output does not depend on threads.
inline std::vector<SweepRow> sweep(const SweepConfig& cfg, const Tolerances& tol = kDefaultTolerances) {
  if (cfg.grid.empty()) throw InvalidSpec("sweep grid is empty");
  if (cfg.instances_per_point < 2) throw InvalidSpec("a sweep needs at least 2 instances per point");
  const auto& names = sweepable(cfg.family);
  if (std::find(names.begin(), names.end(), cfg.parameter) == names.end())
    throw InvalidSpec("cannot sweep '" + cfg.parameter + "' for this family");
  const std::size_t per = cfg.instances_per_point;
  const std::size_t total = cfg.grid.size() * per;
  std::vector<InstanceRatios> results(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= total) return;
      const std::size_t point = k / per, inst = k % per;
      try {
        const auto mdp = sweep_instance(cfg, cfg.grid[point], sweep_seed(cfg.base_seed, point, inst));
        results[k] = instance_ratios(mdp, cfg.family, tol);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, total);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t k = 0; k < total; ++k) {
    if (!errors[k]) continue;
    const std::size_t point = k / per, inst = k % per;
    char x[32];
    std::snprintf(x, sizeof x, "%.6g", cfg.grid[point]);
    const std::string where = "sweep point " + std::to_string(point) + " (" + cfg.parameter + "=" + x +
                              "), instance " + std::to_string(inst);
    try {
      std::rethrow_exception(errors[k]);
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error("InternalError", where + ": " + e.what());
    }
  }

  std::vector<SweepRow> rows;
  for (std::size_t point = 0; point < cfg.grid.size(); ++point) {
    SweepRow row;
    row.x = cfg.grid[point];
    for (std::size_t c = 0; c < kSweepColumns; ++c) {
      std::vector<double> vals;
      for (std::size_t inst = 0; inst < per; ++inst) {
        const auto& r = results[point * per + inst];
        if (!r.degenerate) vals.push_back(r.ratio[c]);
      }
      const double n = static_cast<double>(vals.size());
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean = vals.empty() ? std::nan("") : mean / n;
      double ss = 0.0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      row.mean[c] = mean;
      row.sd[c] = vals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      row.instances = vals.size();
    }
    for (std::size_t inst = 0; inst < per; ++inst)
      if (results[point * per + inst].degenerate) ++row.degenerate;
    rows.push_back(row);
  }
  return rows;
}

inline const char* dat_header() {
  return "x\tnoSigMyop\tnoSigFS\toptSigMyop\toptSigAM\tStdDev_noSigMyop\tStdDev_noSigFS\t"
         "StdDev_optSigMyop\tStdDev_optSigAM";
}

inline std::string format_dat(const std::vector<SweepRow>& rows) {
  std::string out = dat_header();
  out += '\n';
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g", r.x);
    out += buf;
    for (double v : r.mean) {
      std::snprintf(buf, sizeof buf, "\t%.6g", v);
      out += buf;
    }
    for (double v : r.sd) {
      std::snprintf(buf, sizeof buf, "\t%.6g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace persuasion
