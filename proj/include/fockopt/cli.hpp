// Copyright 2026 The fockopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end.
//
// Subcommands: run, multistart, baseline, verify, decompose, analytic-bell.
// Exit codes: 0 completed, 1 runtime or verification failure, 2 usage or
// configuration error.

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fockopt/circuits.hpp"
#include "fockopt/config.hpp"
#include "fockopt/feasibility.hpp"
#include "fockopt/matrix_io.hpp"
#include "fockopt/solver.hpp"
#include "json.hpp"

namespace fockopt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kRunsCsvHeader = "run_id,seed,status,R,P,iterations,wall_ms";
inline constexpr const char* kBaselineCsvHeader = "run_id,seed,F,P,iterations,converged";

/// One row of the multistart CSV.
struct RunRow {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::string status;
  double residual = 0.0;
  double probability = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
};

inline RunRow to_row(const RunResult& r, int run_id) {
  return {run_id, r.seed, to_string(r.status), r.residual, r.probability, r.iterations, r.wall_ms};
}

inline std::string format_ms(double ms) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << ms;
  return os.str();
}

inline void write_runs_csv(std::ostream& os, const std::vector<RunRow>& rows) {
  os << kRunsCsvHeader << '\n';
  for (const auto& r : rows)
    os << r.run_id << ',' << r.seed << ',' << r.status << ',' << format_double(r.residual) << ','
       << format_double(r.probability) << ',' << r.iterations << ',' << format_ms(r.wall_ms) << '\n';
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T csv_number(const std::string& text, int line, const char* column) {
  std::istringstream is(text);
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof())
    throw std::runtime_error("line " + std::to_string(line) + ": column " + column + " is not numeric: '" + text + "'");
  return v;
}

}  // namespace detail

inline std::vector<RunRow> read_runs_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRunsCsvHeader) throw std::runtime_error("missing or wrong CSV header");
  std::vector<RunRow> rows;
  int n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 7) throw std::runtime_error("line " + std::to_string(n) + ": expected 7 columns");
    RunRow r;
    r.run_id = detail::csv_number<int>(f[0], n, "run_id");
    r.seed = detail::csv_number<std::uint64_t>(f[1], n, "seed");
    r.status = f[2];
    if (r.status != "feasible-optimum" && r.status != "infeasible-stationary" && r.status != "iteration-limit" &&
        r.status != "line-search-failure")
      throw std::runtime_error("line " + std::to_string(n) + ": unknown status '" + r.status + "'");
    r.residual = detail::csv_number<double>(f[3], n, "R");
    r.probability = detail::csv_number<double>(f[4], n, "P");
    r.iterations = detail::csv_number<int>(f[5], n, "iterations");
    r.wall_ms = detail::csv_number<double>(f[6], n, "wall_ms");
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json summary_json(const MultistartSummary& s, std::uint64_t seed) {
  nlohmann::json j;
  j["runs"] = s.runs.size();
  j["seed"] = seed;
  j["feasible"] = s.feasible;
  j["status_counts"] = s.status_counts;
  j["cluster_resolution"] = 1e-4;
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : s.clusters)
    clusters.push_back({{"probability", c.probability}, {"min", c.min}, {"max", c.max}, {"count", c.count}});
  j["clusters"] = clusters;
  return j;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

inline std::string amplitude_table(const HeraldReport& r) {
  std::ostringstream os;
  os << "heralded_state amplitude probability\n";
  for (const auto& [k, a] : r.amplitudes)
    os << to_string(k) << ' ' << format_double(a.real()) << ',' << format_double(a.imag()) << ' '
       << format_double(std::norm(a)) << '\n';
  return os.str();
}

struct CliState {
  std::string config_path;
  std::string matrix_path;
  std::string out;
  std::string summary;
  std::uint64_t seed = 0;
  int runs = 0;
  int workers = 0;
  double p = 0.0;
};

inline int cmd_run(const CliState& st, bool seed_given, std::ostream& out) {
  const ProblemConfig pc = load_config(st.config_path);
  for (const auto& w : pc.warnings) out << "warning: " << w << '\n';
  const HeraldingProblem prob = pc.problem();
  SolverConfig cfg = pc.solver();
  if (seed_given) cfg.seed = st.seed;
  cfg.record_history = false;
  const RunResult r = optimize(prob, cfg);
  const FidelityDiagnostic fd = fidelity_diagnostic(r.u, prob);
  out << "status: " << to_string(r.status) << '\n'
      << "seed: " << r.seed << '\n'
      << "R: " << format_double(r.residual) << '\n'
      << "P: " << format_double(r.probability) << '\n'
      << "F: " << format_double(fd.fidelity) << '\n'
      << "N_DoF: " << r.tangent_dof << '\n'
      << "tangent_norm: " << format_double(r.tangent_norm) << '\n'
      << "iterations: " << r.iterations << '\n';
  const std::filesystem::path dir = st.out.empty() ? std::filesystem::path(".") : std::filesystem::path(st.out);
  write_file(dir / "U.txt", matrix_to_string(r.u));
  out << "wrote " << (dir / "U.txt").string() << '\n';
  if (r.s) {
    write_file(dir / "S.txt", matrix_to_string(r.s->matrix()));
    out << "wrote " << (dir / "S.txt").string() << '\n';
  } else if (!r.extraction_error.empty()) {
    out << "no S: " << r.extraction_error << '\n';
  }
  return kExitOk;
}

inline int cmd_multistart(const CliState& st, bool seed_given, bool runs_given, bool workers_given, std::ostream& out,
                          std::ostream& err) {
  const ProblemConfig pc = load_config(st.config_path);
  for (const auto& w : pc.warnings) err << "warning: " << w << '\n';
  const HeraldingProblem prob = pc.problem();
  SolverConfig cfg = pc.solver();
  if (seed_given) cfg.seed = st.seed;
  cfg.record_history = false;
  const int runs = runs_given ? st.runs : pc.runs.value_or(1);
  if (runs < 1) throw ConfigError(st.config_path, 0, "runs", "must be at least 1");
  const int workers = resolve_workers(workers_given ? st.workers : pc.workers.value_or(0));

  int done = 0;
  const MultistartSummary s = multistart(prob, cfg, runs, workers, [&](const RunResult& r, int i) {
    ++done;
    err << '[' << done << '/' << runs << "] run " << i << ' ' << to_string(r.status) << " P=" << format_double(r.probability)
        << " R=" << format_double(r.residual) << " (" << format_ms(r.wall_ms) << " ms)\n";
  });

  std::vector<RunRow> rows;
  for (std::size_t i = 0; i < s.runs.size(); ++i) rows.push_back(to_row(s.runs[i], static_cast<int>(i)));
  std::ostringstream csv;
  write_runs_csv(csv, rows);
  const std::string summary = summary_json(s, cfg.seed).dump(2) + "\n";
  if (st.out.empty()) {
    out << csv.str();
  } else {
    write_file(st.out, csv.str());
    std::filesystem::path json_path = st.summary;
    if (json_path.empty()) json_path = std::filesystem::path(st.out).replace_extension(".json");
    write_file(json_path, summary);
    out << "wrote " << st.out << " and " << json_path.string() << '\n';
  }
  out << "feasible " << s.feasible << '/' << runs << '\n';
  for (const auto& c : s.clusters)
    out << "cluster P=" << format_double(c.probability) << " count=" << c.count << '\n';
  return kExitOk;
}

inline int cmd_baseline(const CliState& st, bool seed_given, bool runs_given, std::ostream& out) {
  const ProblemConfig pc = load_config(st.config_path);
  for (const auto& w : pc.warnings) out << "warning: " << w << '\n';
  if (!(st.p >= 1.0)) throw ConfigError("--p", 0, "", "exponent must be at least 1");
  const HeraldingProblem prob = pc.problem();
  BaselineConfig cfg = pc.baseline();
  cfg.p = st.p;
  if (seed_given) cfg.seed = st.seed;
  const int runs = runs_given ? st.runs : pc.runs.value_or(1);
  std::ostringstream csv;
  csv << kBaselineCsvHeader << '\n';
  for (int i = 0; i < runs; ++i) {
    BaselineConfig local = cfg;
    local.seed = run_seed(cfg.seed, i);
    const BaselineResult r = baseline_pfp(prob, local);
    csv << i << ',' << local.seed << ',' << format_double(r.fidelity) << ',' << format_double(r.probability) << ','
        << r.iterations << ',' << (r.converged ? 1 : 0) << '\n';
  }
  if (st.out.empty()) {
    out << csv.str();
  } else {
    write_file(st.out, csv.str());
    out << "wrote " << st.out << '\n';
  }
  return kExitOk;
}

inline CMatrix load_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return read_matrix(in);
  } catch (const MatrixFormatError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline int cmd_verify(const CliState& st, std::ostream& out, std::ostream& err) {
  const ProblemConfig pc = load_config(st.config_path);
  const HeraldingProblem prob = pc.problem();
  const CMatrix m = load_matrix_file(st.matrix_path);
  if (m.rows() != m.cols() || m.rows() != prob.modes()) {
    err << "error: " << st.matrix_path << " is " << m.rows() << "x" << m.cols() << ", expected " << prob.modes() << "x"
        << prob.modes() << '\n';
    return kExitFailure;
  }
  const double defect = unitarity_defect(m);
  out << "unitarity_defect: " << format_double(defect) << '\n';
  if (!(defect <= 1e-10)) {
    err << "error: matrix is not unitary (defect " << format_double(defect) << ")\n";
    return kExitFailure;
  }
  const ScatteringMatrix s(m, 1e-10);
  const HeraldReport r = verify_heralded_state(s, prob);
  const GammaBasis gb(prob.space());
  const double residual = optical_residual(lift_unitary(s, prob.space()).matrix, gb).residual;
  out << "F: " << format_double(r.fidelity) << '\n'
      << "P: " << format_double(r.probability) << '\n'
      << "R: " << format_double(residual) << '\n'
      << "max_multiple_occupation: " << format_double(r.max_multiple_occupation) << '\n'
      << amplitude_table(r);
  return kExitOk;
}

inline int cmd_decompose(const CliState& st, std::ostream& out, std::ostream& err) {
  const CMatrix m = load_matrix_file(st.matrix_path);
  const double defect = m.rows() == m.cols() ? unitarity_defect(m) : std::numeric_limits<double>::infinity();
  if (!(defect <= 1e-10)) {
    err << "error: matrix is not unitary (defect " << format_double(defect) << ")\n";
    return kExitFailure;
  }
  const MeshDecomposition d = clements_decompose(ScatteringMatrix(m, 1e-10));
  out << d.to_text();
  out << "splitters: " << d.splitter_count() << '\n'
      << "recomposition_error: " << format_double(max_abs(d.compose() - m)) << '\n';
  return kExitOk;
}

inline int cmd_analytic_bell(const CliState& st, std::ostream& out) {
  const double x = optimal_x();
  const Rational third = success_curve_exact(1, 3);
  std::ostringstream summary;
  summary << std::fixed << std::setprecision(8);
  summary << "x* = " << x << '\n'
          << "P(x*) = " << success_curve(x) << '\n'
          << "P(1/3) = " << third.num << '/' << third.den << " = " << success_curve(1.0 / 3.0) << '\n';
  out << summary.str();
  std::ostringstream table;
  table << "x,P\n";
  constexpr int kPoints = 200;
  for (int i = 1; i <= kPoints; ++i) {
    const double xi = static_cast<double>(i) / (kPoints + 1);
    table << format_double(xi) << ',' << format_double(success_curve(xi)) << '\n';
  }
  if (st.out.empty()) {
    out << table.str();
  } else {
    write_file(st.out, table.str());
    out << "wrote " << st.out << '\n';
  }
  return kExitOk;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Designs linear-optical heralding circuits by constrained optimization in Fock space."};
  app.require_subcommand(1);
  detail::CliState st;

  auto* run = app.add_subcommand("run", "Run one optimization and write U.txt and S.txt");
  run->add_option("config", st.config_path, "Problem config")->required();
  auto* run_seed_opt = run->add_option("--seed", st.seed, "Random seed");
  run->add_option("--out", st.out, "Output directory");

  auto* ms = app.add_subcommand("multistart", "Run many seeded optimizations");
  ms->add_option("config", st.config_path, "Problem config")->required();
  auto* ms_runs = ms->add_option("--runs", st.runs, "Number of runs")->check(CLI::Range(1, std::numeric_limits<int>::max()));
  auto* ms_workers = ms->add_option("--workers", st.workers, "Worker threads (0 = all cores)")->check(CLI::Range(0, std::numeric_limits<int>::max()));
  auto* ms_seed = ms->add_option("--seed", st.seed, "Base seed");
  ms->add_option("--out", st.out, "CSV output path (stdout when omitted)");
  ms->add_option("--summary", st.summary, "Summary JSON path (defaults to the CSV path with .json)");

  auto* bl = app.add_subcommand("baseline", "Maximize P F^p over the scattering matrix");
  bl->add_option("config", st.config_path, "Problem config")->required();
  bl->add_option("--p", st.p, "Fidelity exponent")->required();
  auto* bl_runs = bl->add_option("--runs", st.runs, "Number of runs")->check(CLI::Range(1, std::numeric_limits<int>::max()));
  auto* bl_seed = bl->add_option("--seed", st.seed, "Base seed");
  bl->add_option("--out", st.out, "CSV output path (stdout when omitted)");

  auto* vf = app.add_subcommand("verify", "Report the heralded state of a scattering matrix");
  vf->add_option("matrix", st.matrix_path, "Scattering matrix file")->required();
  vf->add_option("config", st.config_path, "Problem config")->required();

  auto* dc = app.add_subcommand("decompose", "Decompose a scattering matrix into a rectangular mesh");
  dc->add_option("matrix", st.matrix_path, "Scattering matrix file")->required();

  auto* ab = app.add_subcommand("analytic-bell", "Analytic optimum of the 6-mode Bell-pair circuit family");
  ab->add_option("--out", st.out, "CSV path for the (x, P) table (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  for (auto* sub : {run, ms, bl, vf, dc, ab}) {
    if (!sub->parsed()) continue;
    try {
      if (sub == run) return detail::cmd_run(st, run_seed_opt->count() > 0, out);
      if (sub == ms)
        return detail::cmd_multistart(st, ms_seed->count() > 0, ms_runs->count() > 0, ms_workers->count() > 0, out, err);
      if (sub == bl) return detail::cmd_baseline(st, bl_seed->count() > 0, bl_runs->count() > 0, out);
      if (sub == vf) return detail::cmd_verify(st, out, err);
      if (sub == dc) return detail::cmd_decompose(st, out, err);
      return detail::cmd_analytic_bell(st, out);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitFailure;
    }
  }
  return kExitUsage;
}

}  // namespace fockopt
