#include "commopt/instances/generators.hpp"
#include "commopt/instances/io.hpp"
#include "commopt/registry.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace commopt;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kParse = 3, kGuard = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

// RFC 4180 field: quoted only when it holds a comma, quote or line break.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + csv_field(fields[i]);
  return out + "\r\n";
}

std::string transcript_csv(const Transcript& t) {
  std::string out = csv_row({"index", "from", "to", "kind", "bits"});
  const auto& ms = t.messages();
  for (std::size_t i = 0; i < ms.size(); ++i)
    out += csv_row({std::to_string(i), ms[i].from.str(), ms[i].to.str(), ms[i].kind, std::to_string(ms[i].bits())});
  return out;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("COMMOPT_SEED");
  if (!env || !*env) return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("COMMOPT_SEED is not an unsigned integer: ") + env);
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct RunFlags {
  std::string protocol, mode = "coordinator", lp_solver = "clarkson";
  RunOptions opts;
  std::uint64_t noise_seed = 0;
  bool has_noise_seed = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--mode", f.mode, "coordinator or blackboard")->check(CLI::IsMember({"coordinator", "blackboard"}));
  cmd->add_option("--eps", f.opts.eps, "approximation parameter");
  cmd->add_option("--seed", f.opts.seed, "protocol seed (default $COMMOPT_SEED or 0)");
  cmd->add_option("--C", f.opts.C, "sample-size constant");
  cmd->add_option("--K", f.opts.K, "linear-system K multiplier");
  cmd->add_option("--R", f.opts.R, "round/iteration cap multiplier");
  cmd->add_option("--p", f.opts.p, "norm for lp-embed");
  cmd->add_option("--sigma", f.opts.sigma, "perturbation width for lp-smoothed");
  cmd->add_option("--t", f.opts.t, "noise truncation for lp-smoothed (0 = automatic)");
  cmd->add_option("--noise-seed", f.noise_seed, "noise seed for lp-smoothed (default: --seed)");
  cmd->add_option("--lp-solver", f.lp_solver, "LP solver behind linf")->check(CLI::IsMember({"clarkson", "seidel", "gather"}));
  cmd->add_flag("!--no-objective-charge", f.opts.charge_objective, "do not charge handing c to the servers");
}

RunOptions finish_flags(RunFlags& f, CLI::App* cmd) {
  RunOptions o = f.opts;
  o.mode = parse_mode(f.mode);
  o.lp_solver = f.lp_solver;
  if (cmd->count("--noise-seed")) o.noise_seed = f.noise_seed;
  if (!(o.eps > 0.0 && o.eps < 1.0)) throw UsageError("--eps must lie in (0, 1)");
  return o;
}

std::string format_vector(const ProtocolOutcome& out) {
  std::string s = "[";
  if (out.x_exact) {
    for (std::size_t i = 0; i < out.x_exact->size(); ++i) s += (i ? ", " : "") + to_string((*out.x_exact)[i]);
  } else {
    for (std::size_t i = 0; i < out.x.size(); ++i) s += (i ? ", " : "") + fmt(out.x[i]);
  }
  return s + "]";
}

int cmd_gen(const instances::GenSpec& spec, const std::string& policy, const std::string& path) {
  instances::GenSpec g = spec;
  g.policy = instances::parse_policy(policy);
  Instance inst;
  try {
    inst = instances::gen_random(g);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::string text = instances::serialize(inst);
  write_text(path, text);
  if (!path.empty() && path != "-")
    std::cout << "wrote " << path << " (n=" << inst.n << ", d=" << inst.d << ", s=" << inst.s << ")\n"
              << "hash " << instances::hash_hex(instances::content_hash(text)) << "\n";
  return kOk;
}

int cmd_run(const RunOptions& o, const std::string& protocol, const std::string& input, bool csv,
            const std::string& transcript_path, const std::string& out_path) {
  if (!find_protocol(protocol)) throw UsageError("unknown protocol: " + protocol);
  const Instance inst = instances::read_file(input);
  const auto t0 = std::chrono::steady_clock::now();
  const ProtocolOutcome out = run_protocol(protocol, inst, o);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool squared = protocol.rfind("l2-", 0) == 0;

  std::string text;
  if (csv) {
    text = csv_row({"protocol", "mode", "seed", "status", "objective", "objective_exact", "total_bits", "rounds", "x"});
    text += csv_row({protocol, to_string(o.mode), std::to_string(o.seed), to_string(out.status), fmt(out.objective),
                     out.objective_exact ? to_string(*out.objective_exact) : "", std::to_string(out.transcript.total_bits()),
                     std::to_string(out.transcript.rounds()), format_vector(out)});
  } else {
    std::ostringstream s;
    s << "protocol: " << protocol << "\n"
      << "mode: " << to_string(o.mode) << "\n"
      << "status: " << to_string(out.status) << "\n";
    if (out.has_solution()) s << "x: " << format_vector(out) << "\n";
    s << "objective: " << fmt(out.objective) << "\n";
    if (out.objective_exact) s << (squared ? "objective_squared: " : "objective_exact: ") << to_string(*out.objective_exact) << "\n";
    for (const auto& [k, v] : out.stats) s << "stat." << k << ": " << fmt(v) << "\n";
    s << "total_bits: " << out.transcript.total_bits() << "\n"
      << "rounds: " << out.transcript.rounds() << "\n";
    text = s.str();
  }
  write_text(out_path, text);
  if (!transcript_path.empty()) write_text(transcript_path, transcript_csv(out.transcript));
  // Timing goes to stderr so stdout is a pure function of (instance, flags).
  std::cerr << "wall_seconds: " << fmt(wall) << "\n";
  return kOk;
}

struct Sweep {
  std::string var;
  std::size_t lo = 0, hi = 0, step = 1;
};

Sweep parse_sweep(const std::string& s) {
  Sweep w;
  const auto eq = s.find('='), dots = s.find("..");
  if (eq == std::string::npos || dots == std::string::npos || dots < eq) throw UsageError("--sweep expects VAR=LO..HI[:STEP]");
  w.var = s.substr(0, eq);
  if (w.var != "s" && w.var != "d" && w.var != "L" && w.var != "n") throw UsageError("--sweep variable must be s, d, L or n");
  try {
    w.lo = std::stoul(s.substr(eq + 1, dots - eq - 1));
    const auto colon = s.find(':', dots);
    w.hi = std::stoul(s.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2));
    if (colon != std::string::npos) w.step = std::stoul(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--sweep expects VAR=LO..HI[:STEP]");
  }
  if (w.step == 0 || w.lo > w.hi) throw UsageError("--sweep range is empty");
  return w;
}

// One row per (sweep point, seed, protocol), in that order.
int cmd_bench(RunOptions o, const std::vector<std::string>& protocols, const std::string& sweep_text, std::size_t seeds,
              instances::GenSpec spec, const std::string& policy, const std::string& input, const std::string& out_path) {
  for (const auto& p : protocols)
    if (!find_protocol(p)) throw UsageError("unknown protocol: " + p);
  const Sweep sw = parse_sweep(sweep_text);
  spec.policy = instances::parse_policy(policy);
  std::optional<Instance> body;
  if (!input.empty()) {
    if (sw.var != "s") throw UsageError("a fixed --input instance can only be swept over s");
    body = instances::read_file(input);
  }
  const std::uint64_t base = o.seed;
  std::string text = csv_row({"protocol", sw.var, "seed", "total_bits", "rounds", "status", "correct"});
  for (std::size_t v = sw.lo; v <= sw.hi; v += sw.step) {
    for (std::size_t k = 0; k < seeds; ++k) {
      const std::uint64_t seed = base + k;
      Instance inst;
      if (body) {
        inst = *body;
        inst.s = v;
        RngStream rng(seed);
        inst.partition = instances::make_partition(inst.n, v, spec.policy, rng);
      } else {
        instances::GenSpec g = spec;
        if (sw.var == "s") g.s = v;
        if (sw.var == "d") g.d = v;
        if (sw.var == "L") g.L = v;
        if (sw.var == "n") g.n = v;
        g.seed = seed;
        try {
          inst = instances::gen_random(g);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      }
      for (const auto& p : protocols) {
        RunOptions ro = o;
        ro.seed = seed;
        const auto out = run_protocol(p, inst, ro);
        const auto ok = oracle_check(p, inst, out, ro);
        text += csv_row({p, std::to_string(v), std::to_string(seed), std::to_string(out.transcript.total_bits()),
                         std::to_string(out.transcript.rounds()), to_string(out.status),
                         ok ? (*ok ? "true" : "false") : "NA"});
      }
    }
  }
  write_text(out_path, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"commopt: distributed optimization protocols with exact bit accounting"};
  app.require_subcommand(1);

  instances::GenSpec spec;
  std::string policy = "round-robin", out_path, input, transcript_path, sweep = "s=2..8";
  std::size_t seeds = 3;
  bool csv = false;
  RunFlags rf;
  std::vector<std::string> protocols;

  auto* gen = app.add_subcommand("gen", "generate a random instance");
  gen->add_option("--kind", spec.kind, "linsys-feasible, linsys-infeasible, regression or lp-bounded")
      ->check(CLI::IsMember({"linsys-feasible", "linsys-infeasible", "regression", "lp-bounded"}));
  for (auto* c : {gen}) {
    c->add_option("--n", spec.n);
    c->add_option("--d", spec.d);
    c->add_option("--L", spec.L);
    c->add_option("--s", spec.s);
    c->add_option("--seed", spec.seed, "generator seed (default $COMMOPT_SEED or 0)");
    c->add_option("--policy", policy, "round-robin, random or one-heavy");
    c->add_option("-o,--output", out_path, "instance path (default stdout)");
  }

  auto* run = app.add_subcommand("run", "run one protocol on an instance file");
  run->add_option("--protocol", rf.protocol)->required();
  run->add_option("--input", input)->required();
  add_run_flags(run, rf);
  run->add_flag("--csv", csv, "print the result as one CSV record");
  run->add_option("--transcript", transcript_path, "write the per-message transcript CSV here");
  run->add_option("-o,--output", out_path, "result path (default stdout)");

  auto* bench = app.add_subcommand("bench", "sweep s, d, L or n and report bits and oracle agreement as CSV");
  bench->add_option("--protocols", protocols, "comma-separated protocol names")->delimiter(',')->required();
  bench->add_option("--sweep", sweep, "VAR=LO..HI[:STEP] with VAR in s, d, L, n");
  bench->add_option("--seeds", seeds, "seeds per sweep point, counted up from --seed");
  bench->add_option("--kind", spec.kind)->check(CLI::IsMember({"linsys-feasible", "linsys-infeasible", "regression", "lp-bounded"}));
  bench->add_option("--n", spec.n);
  bench->add_option("--d", spec.d);
  bench->add_option("--L", spec.L);
  bench->add_option("--s", spec.s);
  bench->add_option("--policy", policy);
  bench->add_option("--input", input, "fixed instance body, re-partitioned for every s");
  add_run_flags(bench, rf);
  bench->add_flag("--csv", csv, "accepted for symmetry; bench output is always CSV");
  bench->add_option("-o,--output", out_path, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      if (!gen->count("--seed")) spec.seed = default_seed();
      return cmd_gen(spec, policy, out_path);
    }
    if (!(*run ? run : bench)->count("--seed")) rf.opts.seed = default_seed();
    if (*run) return cmd_run(finish_flags(rf, run), rf.protocol, input, csv, transcript_path, out_path);
    return cmd_bench(finish_flags(rf, bench), protocols, sweep, seeds, spec, policy, input, out_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const instances::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const GuardError& e) {
    std::cerr << "guard: " << e.what() << "\n";
    return kGuard;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
