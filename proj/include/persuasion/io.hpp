#pragma once

#include <cctype>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "persuasion/errors.hpp"
#include "persuasion/model.hpp"
#include "persuasion/solver.hpp"

namespace persuasion {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Finds the line on which the value addressed by a JSON pointer starts.
// Returns 0 if the pointer does not resolve. Assumes syntactically valid text.
class PointerLocator {
 public:
  PointerLocator(std::string_view text, std::string_view pointer) : text_(text) {
    std::size_t i = 0;
    while (i < pointer.size()) {
      if (pointer[i] == '/') ++i;
      const auto next = pointer.find('/', i);
      target_.emplace_back(pointer.substr(i, next == std::string_view::npos ? std::string_view::npos : next - i));
      if (next == std::string_view::npos) break;
      i = next;
    }
  }

  std::size_t find() {
    skip_ws();
    value(0);
    return found_;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void value(std::size_t depth) {
    skip_ws();
    if (found_ == 0 && depth == target_.size() && matching_) {
      found_ = line_column(text_, pos_).first;
    }
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      const bool was = matching_;
      for (;;) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '}') {
          ++pos_;
          break;
        }
        const std::string key = string();
        skip_ws();
        ++pos_;  // ':'
        matching_ = was && depth < target_.size() && target_[depth] == key;
        value(depth + 1);
        matching_ = was;
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
        else if (pos_ < text_.size()) {
          ++pos_;
          break;
        } else {
          break;
        }
      }
    } else if (c == '[') {
      ++pos_;
      const bool was = matching_;
      std::size_t index = 0;
      for (;;) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ']') {
          ++pos_;
          break;
        }
        matching_ = was && depth < target_.size() && target_[depth] == std::to_string(index);
        value(depth + 1);
        matching_ = was;
        ++index;
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
        else if (pos_ < text_.size()) {
          ++pos_;
          break;
        } else {
          break;
        }
      }
    } else if (c == '"') {
      string();
    } else {
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
             text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '}')
        ++pos_;
    }
  }

  std::string string() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      if (pos_ < text_.size()) out += text_[pos_++];
    }
    ++pos_;
    return out;
  }

  std::string_view text_;
  std::vector<std::string> target_;
  std::size_t pos_ = 0;
  std::size_t found_ = 0;
  bool matching_ = true;
};

inline std::string anchored(std::string_view text, const std::string& pointer, const std::string& what) {
  const std::size_t line = PointerLocator(text, pointer).find();
  std::string out = line ? "line " + std::to_string(line) + ": " : std::string();
  out += what;
  if (!pointer.empty()) out += " (at " + pointer + ")";
  return out;
}

class Reader {
 public:
  Reader(const Json& root, std::string_view text) : root_(root), text_(text) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& what) const {
    throw InvariantViolation(anchored(text_, pointer, what), pointer);
  }

  const Json& at(const Json& node, const std::string& key, const std::string& pointer) const {
    if (!node.is_object() || !node.contains(key)) fail(pointer, "missing field '" + key + "'");
    return node.at(key);
  }

  const Json& array(const Json& node, const std::string& pointer, std::size_t size) const {
    if (!node.is_array()) fail(pointer, "expected an array");
    if (size != kAnySize && node.size() != size)
      fail(pointer, "expected " + std::to_string(size) + " entries, found " + std::to_string(node.size()));
    return node;
  }

  double number(const Json& node, const std::string& pointer) const {
    if (!node.is_number()) fail(pointer, "expected a number");
    return node.get<double>();
  }

  std::string text(const Json& node, const std::string& pointer) const {
    if (!node.is_string()) fail(pointer, "expected a string");
    return node.get<std::string>();
  }

  std::vector<std::string> names(const std::string& key) const {
    const auto& arr = array(at(root_, key, ""), "/" + key, kAnySize);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
      out.push_back(text(arr[i], "/" + key + "/" + std::to_string(i)));
    return out;
  }

  std::vector<double> vector(const Json& node, const std::string& pointer, std::size_t size) const {
    const auto& arr = array(node, pointer, size);
    std::vector<double> out;
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(number(arr[i], pointer + "/" + std::to_string(i)));
    return out;
  }

  Array2 matrix(const std::string& key, std::size_t d0, std::size_t d1) const {
    const std::string p = "/" + key;
    const auto& arr = array(at(root_, key, ""), p, d0);
    Array2 out(d0, d1);
    for (std::size_t i = 0; i < d0; ++i) {
      const auto row = vector(arr[i], p + "/" + std::to_string(i), d1);
      for (std::size_t j = 0; j < d1; ++j) out(i, j) = row[j];
    }
    return out;
  }

  Array3 cube(const std::string& key, std::size_t d0, std::size_t d1, std::size_t d2) const {
    const std::string p = "/" + key;
    const auto& arr = array(at(root_, key, ""), p, d0);
    Array3 out(d0, d1, d2);
    for (std::size_t i = 0; i < d0; ++i) {
      const std::string pi = p + "/" + std::to_string(i);
      const auto& mid = array(arr[i], pi, d1);
      for (std::size_t j = 0; j < d1; ++j) {
        const auto row = vector(mid[j], pi + "/" + std::to_string(j), d2);
        for (std::size_t k = 0; k < d2; ++k) out(i, j, k) = row[k];
      }
    }
    return out;
  }

  const Json& root() const { return root_; }

  static constexpr std::size_t kAnySize = static_cast<std::size_t>(-1);

 private:
  const Json& root_;
  std::string_view text_;
};

template <typename F>
Json nested(std::size_t n, F&& f) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < n; ++i) arr.push_back(f(i));
  return arr;
}

inline Json to_json(const Array2& a) {
  return nested(a.rows(), [&](std::size_t i) { return nested(a.cols(), [&](std::size_t j) { return Json(a(i, j)); }); });
}

inline Json to_json(const Array3& a) {
  return nested(a.dim0(), [&](std::size_t i) {
    return nested(a.dim1(), [&](std::size_t j) {
      return nested(a.dim2(), [&](std::size_t k) { return Json(a(i, j, k)); });
    });
  });
}

}  // namespace detail

// Parses an instance document. Syntax errors raise ParseError with the
// 1-based line and column; structural and semantic problems raise
// InvariantViolation whose message starts with the offending line.
inline PersuasionMDP parse_instance(const std::string& text, const Tolerances& tol = kDefaultTolerances) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what(),
                     line, col);
  }
  detail::Reader rd(root, text);
  if (!root.is_object()) rd.fail("", "instance must be a JSON object");

  MdpData d;
  const auto& states = rd.array(rd.at(root, "states", ""), "/states", detail::Reader::kAnySize);
  for (std::size_t s = 0; s < states.size(); ++s) {
    const std::string p = "/states/" + std::to_string(s);
    d.state_names.push_back(rd.text(rd.at(states[s], "name", p), p + "/name"));
    const auto& term = rd.at(states[s], "terminal", p);
    if (!term.is_boolean()) rd.fail(p + "/terminal", "expected true or false");
    d.terminal.push_back(term.get<bool>());
  }
  d.action_names = rd.names("actions");
  d.theta_names = rd.names("thetas");
  const std::size_t S = d.state_names.size(), A = d.action_names.size(), T = d.theta_names.size();

  const auto& avail = rd.array(rd.at(root, "available_actions", ""), "/available_actions", S);
  for (std::size_t s = 0; s < S; ++s) {
    const std::string p = "/available_actions/" + std::to_string(s);
    const auto& row = rd.array(avail[s], p, detail::Reader::kAnySize);
    std::vector<ActionIndex> acts;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string pi = p + "/" + std::to_string(i);
      if (!row[i].is_number_unsigned()) rd.fail(pi, "expected an action index");
      const auto a = row[i].get<std::size_t>();
      if (a >= A) rd.fail(pi, "action index " + std::to_string(a) + " out of range");
      acts.push_back(a);
    }
    d.available.push_back(std::move(acts));
  }
  d.transition = rd.cube("transition", S, A, S);
  d.prior = rd.matrix("prior", S, T);
  d.principal_reward = rd.cube("principal_reward", S, T, A);
  d.agent_reward = rd.cube("agent_reward", S, T, A);
  d.gamma = rd.number(rd.at(root, "gamma", ""), "/gamma");
  d.gamma_tilde = rd.number(rd.at(root, "gamma_tilde", ""), "/gamma_tilde");
  d.init_dist = rd.vector(rd.at(root, "init_dist", ""), "/init_dist", S);

  try {
    return PersuasionMDP(std::move(d), tol);
  } catch (const InvariantViolation& e) {
    throw InvariantViolation(detail::anchored(text, e.path(), e.what()), e.path());
  }
}

inline Json instance_to_json(const PersuasionMDP& mdp) {
  const auto& d = mdp.data();
  Json j;
  j["states"] = detail::nested(mdp.num_states(), [&](std::size_t s) {
    Json st;
    st["name"] = d.state_names[s];
    st["terminal"] = static_cast<bool>(d.terminal[s]);
    return st;
  });
  j["actions"] = d.action_names;
  j["thetas"] = d.theta_names;
  j["available_actions"] = d.available;
  j["transition"] = detail::to_json(d.transition);
  j["prior"] = detail::to_json(d.prior);
  j["principal_reward"] = detail::to_json(d.principal_reward);
  j["agent_reward"] = detail::to_json(d.agent_reward);
  j["gamma"] = d.gamma;
  j["gamma_tilde"] = d.gamma_tilde;
  j["init_dist"] = d.init_dist;
  return j;
}

inline std::string serialize_instance(const PersuasionMDP& mdp) {
  return instance_to_json(mdp).dump(1) + "\n";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline PersuasionMDP load_instance(const std::string& path, const Tolerances& tol = kDefaultTolerances) {
  return parse_instance(read_file(path), tol);
}

inline void save_instance(const PersuasionMDP& mdp, const std::string& path) {
  write_file(path, serialize_instance(mdp));
}

inline Json report_to_json(const SolveReport& rep) {
  Json j;
  j["method"] = rep.method;
  j["principal_payoff"] = rep.principal;
  j["agent_payoff"] = rep.agent;
  Json st;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ActionAdvice>) {
          st["kind"] = "action_advice";
          st["pi"] = detail::to_json(s.table());
        } else if constexpr (std::is_same_v<T, ThreatStrategy>) {
          st["kind"] = "threat";
          st["pi"] = detail::to_json(s.base.table());
        } else {
          st["kind"] = "none";
        }
      },
      rep.strategy);
  j["strategy"] = st;
  const auto& d = rep.diagnostics;
  Json diag;
  if (!d.lp_status.empty()) {
    diag["lp_status"] = d.lp_status;
    diag["lp_iterations"] = d.lp_iterations;
    diag["lp_rows"] = d.lp_rows;
    diag["lp_variables"] = d.lp_variables;
    diag["lp_objective"] = d.lp_objective;
    diag["bellman_gap"] = d.bellman_gap;
    diag["ic_violation"] = d.ic_violation;
  }
  if (d.vi_iterations) diag["vi_iterations"] = d.vi_iterations;
  if (rep.method == "threat") diag["obedient"] = d.obedient;
  diag["verified_payoff"] = d.verified_payoff;
  if (!d.dictation.empty()) {
    diag["dictation"] = detail::nested(d.dictation.size(), [&](std::size_t s) {
      return detail::nested(d.dictation[s].size(), [&](std::size_t t) {
        const ActionIndex a = d.dictation[s][t];
        return a == kNoAction ? Json(nullptr) : Json(a);
      });
    });
  }
  diag["wall_seconds"] = d.wall_seconds;
  j["diagnostics"] = diag;
  if (rep.dual) j["value_function"] = rep.dual->V;
  return j;
}

}  // namespace persuasion
