// Command line front end: validate instance files, print tile partitions, run
// single solves, and run Monte-Carlo parameter sweeps. All inputs are strict
// JSON; see README.md for the schemas. Exit codes: 0 success, 1 domain failure
// (invalid instance or non-optimal solve), 2 bad input or usage.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tilecast/baselines.hpp"
#include "tilecast/config.hpp"
#include "tilecast/experiments.hpp"
#include "tilecast/partition.hpp"
#include "tilecast/planner.hpp"

namespace {

using json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tilecast::ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tilecast::ConfigError("cannot write " + path);
  out << text;
}

json tiles_json(const std::vector<tilecast::TileIndex>& tiles) {
  json out = json::array();
  for (const auto& t : tiles) out.push_back({t.row, t.col});
  return out;
}

json allocation_json(const tilecast::Allocation& a) {
  json out = json::array();
  for (size_t p = 0; p < a.pairs.size(); ++p) {
    out.push_back({{"subset", a.pairs[p].subset.ids},
                   {"level", a.pairs[p].level},
                   {"time_s", a.time[p]},
                   {"energy_j", a.energy[p]}});
  }
  return out;
}

json report_json(const tilecast::SolverReport& r) {
  json out = {{"status", tilecast::to_string(r.status)},
              {"max_primal_violation", r.max_primal_violation},
              {"kkt_residual", r.kkt_residual},
              {"newton_steps", r.newton_steps}};
  if (!r.detail.empty()) out["detail"] = r.detail;
  return out;
}

json selection_json(const tilecast::SelectionY& sel) {
  json out = json::array();
  for (size_t r = 0; r < sel.rows.size(); ++r) {
    out.push_back({{"subset", sel.rows[r].subset.ids},
                   {"user", sel.rows[r].user},
                   {"level", sel.selected_level(static_cast<int>(r))}});
  }
  return out;
}

int run_validate(const std::string& in_path) {
  const tilecast::Instance inst = tilecast::load_instance(read_file(in_path));
  const tilecast::ValidationReport rep = tilecast::validate_instance(inst);
  if (rep.ok()) {
    std::cout << "ok\n";
    return 0;
  }
  std::cout << rep.to_string();
  return 1;
}

int run_partition(const std::string& in_path, const std::string& out_path) {
  const tilecast::DemandFile df = tilecast::load_demands(read_file(in_path));
  const tilecast::Partition part = tilecast::compute_partition(df.demands);
  json groups = json::array();
  for (const auto& g : part.groups)
    groups.push_back({{"subset", g.subset.ids}, {"tiles", tiles_json(g.tiles)}});
  write_output(out_path, json{{"groups", groups}}.dump(2) + "\n");
  return 0;
}

int run_solve(const std::string& in_path, const std::string& mode,
              const std::string& options_path, const std::string& out_path) {
  const tilecast::Instance inst = tilecast::load_instance(read_file(in_path));
  const tilecast::ValidationReport rep = tilecast::validate_instance(inst);
  if (!rep.ok()) {
    std::cerr << rep.to_string();
    return 1;
  }
  tilecast::RunOptions opts;
  if (!options_path.empty()) opts = tilecast::load_run_options(read_file(options_path));

  json out;
  tilecast::SolveStatus status;
  if (mode == "no_transcode" || mode == "unicast") {
    const tilecast::NoTranscodeSolution sol =
        mode == "no_transcode" ? tilecast::solve_no_transcode(inst, opts.solver)
                               : tilecast::solve_baseline_unicast(inst, opts.solver);
    status = sol.report.status;
    out = {{"mode", mode},
           {"objective_j", sol.objective},
           {"report", report_json(sol.report)},
           {"allocation", allocation_json(sol.allocation)}};
  } else {
    const tilecast::TranscodeSolution sol =
        mode == "transcode"
            ? tilecast::solve_transcode_dc(inst, opts.dc)
            : tilecast::solve_baseline_max_quality(inst, opts.dc.solver);
    status = sol.report.status;
    out = {{"mode", mode},
           {"objective_j", sol.objective},
           {"transmission_j", sol.transmission_energy},
           {"transcode_j", sol.transcode_energy},
           {"report", report_json(sol.report)},
           {"selection", selection_json(sol.selection)},
           {"allocation", allocation_json(sol.allocation)}};
    if (mode == "transcode") out["chosen_restart"] = sol.chosen_restart;
  }
  write_output(out_path, out.dump(2) + "\n");
  return status == tilecast::SolveStatus::optimal ? 0 : 1;
}

int run_sweep_cmd(const std::string& in_path, const std::string& out_path) {
  const tilecast::SweepSpec spec = tilecast::load_sweep(read_file(in_path));
  const tilecast::SweepResult result = tilecast::run_sweep(spec);
  write_output(out_path, tilecast::to_csv(result));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-optimal multicast planning for multi-quality tiled 360 video"};
  app.require_subcommand(1);

  std::string in_path;
  std::string out_path;
  std::string options_path;
  std::string mode = "transcode";

  auto* validate = app.add_subcommand("validate", "Check an instance file, print a report");
  validate->add_option("file", in_path, "instance JSON")->required();

  auto* partition = app.add_subcommand("partition", "Group demanded tiles by exact owner set");
  partition->add_option("file", in_path, "instance or video+demands JSON")->required();
  partition->add_option("-o,--output", out_path, "write JSON here instead of stdout");

  auto* solve = app.add_subcommand("solve", "Plan one instance");
  solve->add_option("file", in_path, "instance JSON")->required();
  solve->add_option("-m,--mode", mode, "planning scheme (default transcode)")
      ->check(CLI::IsMember({"no_transcode", "transcode", "unicast", "max_quality"}));
  solve->add_option("--options", options_path, "solver/dc options JSON");
  solve->add_option("-o,--output", out_path, "write JSON here instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo parameter sweep, CSV output");
  sweep->add_option("file", in_path, "sweep spec JSON")->required();
  sweep->add_option("-o,--output", out_path, "write CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return run_validate(in_path);
    if (*partition) return run_partition(in_path, out_path);
    if (*solve) return run_solve(in_path, mode, options_path, out_path);
    if (*sweep) return run_sweep_cmd(in_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
