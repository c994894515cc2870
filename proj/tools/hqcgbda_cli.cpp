// Command-line front end: instance generation, solving, QUBO snapshots,
// trace export and a stand-alone sampler backend.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hqcgbda/hqcgbda.hpp"

namespace {

using namespace hqcgbda;

constexpr int kExitUsage = 64;
constexpr int kExitError = 1;

int exit_code(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return 0;
    case RunStatus::MaxIters: return 2;
    case RunStatus::MasterInfeasible: return 3;
  }
  return kExitError;
}

struct SolveOptions {
  std::string instance;
  std::string mode = "gbda";
  double epsilon = 1e-4;
  std::uint64_t seed = 0;
  std::string sampler = "exhaustive";
  std::string sampler_cmd;
  std::string master = "exhaustive";
  std::string initial = "all_off";
  int max_iters = 200;
  int num_reads = 0;
  int sweeps = 0;
  int restarts = 10;
  std::string report;
  std::string trace;
  std::string messages;
  bool wall_clock = false;
};

RunConfig make_config(const SolveOptions& o) {
  RunConfig cfg;
  cfg.mode = parse_mode(o.mode);
  cfg.epsilon = o.epsilon;
  cfg.max_iters = o.max_iters;
  cfg.num_reads = o.num_reads;
  cfg.initial_seed = o.seed;
  cfg.sampler.seed = o.seed;
  cfg.sampler.sweeps = o.sweeps;
  cfg.sampler.restarts = o.restarts;
  cfg.local.seed = o.seed;
  cfg.sampler_kind = o.sampler == "sa" ? SamplerKind::Annealing : SamplerKind::Exhaustive;
  if (!o.sampler_cmd.empty()) cfg.backend = std::make_shared<ProcessSampler>(o.sampler_cmd);
  cfg.master_strategy = o.master == "local" ? MasterStrategy::LocalSearch : MasterStrategy::Exhaustive;
  if (o.initial == "all_on") cfg.initial = InitialPolicy::AllOn;
  else if (o.initial == "random") cfg.initial = InitialPolicy::Random;
  else cfg.initial = InitialPolicy::AllOff;
  return cfg;
}

int cmd_solve(const SolveOptions& o) {
  const auto inst = read_instance(o.instance);
  const auto cfg = make_config(o);
  std::ofstream messages;
  if (!o.messages.empty()) {
    messages.open(o.messages, std::ios::binary);
    if (!messages) throw Error(ErrorCode::IoError, "cannot write " + o.messages);
  }
  Observer obs;
  if (messages.is_open()) obs.on_message = [&](const Message& m) { messages << to_line(m) << '\n'; };
  const auto rep = run(inst, cfg, obs);
  if (!o.trace.empty()) export_trace(rep, o.trace, o.wall_clock);
  if (!o.report.empty()) write_text(o.report, report_to_json(rep).dump(2) + "\n");
  std::printf("status=%s cost=%s iterations=%d ub=%s lb=%s\n", to_string(rep.status).c_str(),
              format_real(rep.cost).c_str(), rep.iterations(), format_real(rep.ub).c_str(),
              format_real(rep.lb).c_str());
  return exit_code(rep.status);
}

int cmd_gen(const std::string& spec_arg, const std::string& out, std::optional<std::uint64_t> seed,
            std::optional<int> infeasible_at) {
  nlohmann::json j;
  try {
    if (!spec_arg.empty() && spec_arg.front() == '{') {
      j = nlohmann::json::parse(spec_arg);
    } else if (!spec_arg.empty()) {
      j = nlohmann::json::parse(read_text(spec_arg));
    } else {
      j = nlohmann::json::object();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  if (seed) j["seed"] = *seed;
  if (infeasible_at) j["infeasible_at"] = *infeasible_at;
  const auto inst = gen_instance(spec_from_json(j));
  if (out.empty() || out == "-") std::cout << instance_to_string(inst);
  else write_instance(inst, out);
  return 0;
}

int cmd_qubo_dump(const SolveOptions& o, int snapshot, const std::string& out) {
  const auto inst = read_instance(o.instance);
  auto cfg = make_config(o);
  cfg.mode = Mode::Hqc;
  std::optional<std::string> dump;
  Observer obs;
  obs.on_qubo = [&](int iter, const QuboProblem& q) {
    if (iter == snapshot) dump = dump_qubo(q);
  };
  run(inst, cfg, obs);
  if (!dump) {
    std::fprintf(stderr, "no QUBO was built at iteration %d\n", snapshot);
    return kExitError;
  }
  if (out.empty() || out == "-") std::cout << *dump;
  else write_text(out, *dump);
  return 0;
}

int cmd_trace(const std::string& in, const std::string& out, bool wall_clock) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  const auto csv = trace_csv(report_from_json(j), wall_clock);
  if (out.empty() || out == "-") std::cout << csv;
  else write_text(out, csv);
  return 0;
}

int cmd_sample(const std::string& in, const std::string& sampler, const SamplerParams& params) {
  auto [q, req] = parse_request(read_text(in));
  SampleSet set;
  if (sampler == "sa") {
    AnnealingSampler sa(params);
    set = sa.sample(q, req);
  } else {
    ExhaustiveSampler ex;
    set = ex.sample(q, req);
  }
  std::cout << format_response(set);
  return 0;
}

void add_solve_options(CLI::App* cmd, SolveOptions& o, bool full) {
  cmd->add_option("--instance", o.instance, "Instance JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--epsilon", o.epsilon, "Convergence gap in dollars")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Seed for samplers and random starts");
  cmd->add_option("--sampler", o.sampler, "QUBO sampler")->check(CLI::IsMember({"sa", "exhaustive"}));
  cmd->add_option("--sampler-cmd", o.sampler_cmd, "External sampler command (request path appended)");
  cmd->add_option("--initial", o.initial, "Initial schedule")->check(CLI::IsMember({"all_off", "all_on", "random"}));
  cmd->add_option("--max-iters", o.max_iters, "Iteration budget")->check(CLI::PositiveNumber);
  cmd->add_option("--num-reads", o.num_reads, "Sampler reads per master solve (0: automatic)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--sweeps", o.sweeps, "Annealing sweeps (0: 100 per bit)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--restarts", o.restarts, "Annealing restarts")->check(CLI::PositiveNumber);
  if (!full) return;
  cmd->add_option("--mode", o.mode, "Algorithm")->check(CLI::IsMember({"gbda", "mc_gbda", "hqc_gbda"}));
  cmd->add_option("--master", o.master, "Classical master")->check(CLI::IsMember({"exhaustive", "local"}));
  cmd->add_option("--report", o.report, "Write the report JSON here");
  cmd->add_option("--trace", o.trace, "Write the trace CSV here");
  cmd->add_option("--messages", o.messages, "Write the message log here");
  cmd->add_flag("--wall-clock", o.wall_clock, "Record measured times in the trace");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unit commitment over networked microgrids by generalized Benders decomposition"};
  app.require_subcommand(1);

  SolveOptions solve_opts;
  auto* solve = app.add_subcommand("solve", "Solve an instance");
  add_solve_options(solve, solve_opts, true);

  std::string gen_spec, gen_out;
  std::optional<std::uint64_t> gen_seed;
  std::optional<int> gen_infeasible;
  auto* gen = app.add_subcommand("gen", "Generate a random instance");
  gen->add_option("--spec", gen_spec, "Generator spec: JSON file or inline JSON object");
  gen->add_option("--out", gen_out, "Output instance file ('-' for stdout)");
  gen->add_option("--seed", gen_seed, "Override the spec seed");
  gen->add_option("--infeasible-at", gen_infeasible, "Force a capacity shortfall at this period");

  SolveOptions dump_opts;
  int snapshot = 1;
  std::string dump_out;
  auto* dump = app.add_subcommand("qubo-dump", "Dump the QUBO master built at one iteration");
  add_solve_options(dump, dump_opts, false);
  dump->add_option("--iter-snapshot", snapshot, "Iteration to capture")->check(CLI::PositiveNumber);
  dump->add_option("--out", dump_out, "Output file ('-' for stdout)");

  std::string trace_in, trace_out;
  bool trace_wall = false;
  auto* trace = app.add_subcommand("trace", "Convert a report JSON into the trace CSV");
  trace->add_option("--in", trace_in, "Report JSON")->required()->check(CLI::ExistingFile);
  trace->add_option("--out", trace_out, "Output CSV ('-' for stdout)");
  trace->add_flag("--wall-clock", trace_wall, "Keep measured times");

  std::string sample_in, sample_kind = "exhaustive";
  SamplerParams sample_params;
  auto* sample = app.add_subcommand("sample", "Answer a sampler request file");
  sample->add_option("request", sample_in, "Request file")->required()->check(CLI::ExistingFile);
  sample->add_option("--sampler", sample_kind, "Sampler")->check(CLI::IsMember({"sa", "exhaustive"}));
  sample->add_option("--seed", sample_params.seed, "Annealing seed");
  sample->add_option("--sweeps", sample_params.sweeps, "Annealing sweeps (0: 100 per bit)");
  sample->add_option("--restarts", sample_params.restarts, "Annealing restarts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(solve_opts);
    if (*gen) return cmd_gen(gen_spec, gen_out, gen_seed, gen_infeasible);
    if (*dump) return cmd_qubo_dump(dump_opts, snapshot, dump_out);
    if (*trace) return cmd_trace(trace_in, trace_out, trace_wall);
    if (*sample) return cmd_sample(sample_in, sample_kind, sample_params);
  } catch (const hqcgbda::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(hqcgbda::to_string(e.code())).c_str(), e.what());
    return e.code() == hqcgbda::ErrorCode::InvalidParameter || e.code() == hqcgbda::ErrorCode::InvalidSpec
               ? kExitUsage
               : kExitError;
  }
  return kExitUsage;
}
