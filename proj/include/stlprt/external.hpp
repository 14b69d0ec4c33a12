#pragma once

// Runs a MILP through an external solver process.
//
// The command is invoked as `<command> <model.lp> <solution.sol>`; it must
// write either a HiGHS raw solution file or a CBC solution file. The returned
// assignment is checked against the original model before it is accepted.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "stlprt/error.hpp"
#include "stlprt/lp_format.hpp"
#include "stlprt/milp_model.hpp"

namespace stlprt {

namespace detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<long> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 100; ++attempt) {
      path_ = base / ("stlprt-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
      if (std::filesystem::create_directory(path_)) return;
    }
    throw SolverError("could not create a scratch directory under " + base.string());
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace detail

inline SolveOutcome solve_external(const MilpModel& model, const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::ScratchDir dir;
  const auto lp = dir.path() / "model.lp";
  const auto sol = dir.path() / "model.sol";
  {
    std::ofstream out(lp);
    write_lp(out, model);
    if (!out) throw SolverError("could not write " + lp.string());
  }
  const std::string cmd = command + " " + detail::shell_quote(lp.string()) + " " + detail::shell_quote(sol.string()) +
                          " > " + detail::shell_quote((dir.path() / "solver.log").string()) + " 2>&1";
  const int raw = std::system(cmd.c_str());
  const int code = raw == -1 ? -1 : WIFEXITED(raw) ? WEXITSTATUS(raw) : 128 + WTERMSIG(raw);
  if (code == 127) throw SolverError("external solver not found: " + command);
  if (code != 0) {
    std::ifstream log(dir.path() / "solver.log");
    std::stringstream ss;
    ss << log.rdbuf();
    throw SolverError("external solver exited with status " + std::to_string(code) + ": " + ss.str());
  }
  std::ifstream in(sol);
  if (!in) throw SolverError("external solver wrote no solution file");
  std::stringstream text;
  text << in.rdbuf();
  const ExternalSolution ext = read_solution(text.str());

  SolveOutcome out;
  out.status = ext.status;
  out.message = "external: " + command;
  if (ext.status == SolveStatus::optimal || ext.status == SolveStatus::iteration_limit) {
    out.values.assign(static_cast<std::size_t>(model.num_variables()), 0.0);
    for (int j = 0; j < model.num_variables(); ++j) {
      const auto& v = model.var(j);
      auto it = ext.values.find(v.name);
      if (it == ext.values.end()) {
        if (!ext.sparse) throw ParseError("solution is missing variable " + v.name, 0, 0);
        continue;
      }
      out.values[static_cast<std::size_t>(j)] = v.is_integer() ? std::round(it->second) : it->second;
    }
    const auto bad = model.violations(out.values, 1e-6);
    if (!bad.empty()) throw SolverError("external solution violates the model: " + bad.front());
    out.objective = model.evaluate_objective(out.values);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace stlprt
