#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "heig/matgen.hpp"
#include "heig/metrics.hpp"
#include "heig/mmio.hpp"
#include "heig/serialization.hpp"
#include "heig/solver.hpp"
#include "json.hpp"

using json = nlohmann::json;
using namespace heig;

namespace {

int log_level() {
  const char* env = std::getenv("HEIG_LOG");
  if (!env) return 1;
  const std::string v(env);
  if (v == "quiet" || v == "0") return 0;
  if (v == "debug" || v == "2") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[heig] " << msg << "\n";
}

struct CommonOpts {
  double epsilon = 1e-10;
  double delta = 0.4;
  Index n_stop = 0;
  Index leaf_size = 0;
  Index oversampling = 10;
  std::uint64_t seed = 20240801;
  bool no_certify = false;

  SolverConfig solver_config() const {
    SolverConfig cfg;
    cfg.truncation.epsilon = epsilon;
    cfg.delta = delta;
    cfg.n_stop = n_stop;
    cfg.leaf_size = leaf_size;
    cfg.oversampling = oversampling;
    cfg.seed = seed;
    cfg.certify = !no_certify;
    return cfg;
  }

  json to_json() const {
    return {{"epsilon", epsilon},         {"delta", delta},
            {"n_stop", n_stop},           {"leaf_size", leaf_size},
            {"oversampling", oversampling}, {"seed", seed},
            {"certify", !no_certify}};
  }
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--epsilon", o.epsilon, "truncation tolerance");
  cmd->add_option("--delta", o.delta, "column selection threshold");
  cmd->add_option("--n-stop", o.n_stop, "recursion cutoff (0 = auto)");
  cmd->add_option("--leaf-size", o.leaf_size, "HODLR leaf size (0 = auto)");
  cmd->add_option("--oversampling", o.oversampling, "range-completion oversampling");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_flag("--no-certify", o.no_certify, "skip per-node conditioning measurements");
}

json diagnostics_json(const NodeDiagnostics& d, bool with_trace) {
  json j{{"path", d.path},
         {"n", d.n},
         {"shift", d.shift},
         {"nu", d.nu},
         {"selected_lo", d.selected_lo},
         {"selected_hi", d.selected_hi},
         {"sign_iterations", d.sign_iterations},
         {"projector_rank", d.projector_rank},
         {"eps_h_lo", d.eps_h_lo},
         {"eps_h_hi", d.eps_h_hi},
         {"kappa_lo", d.kappa_lo},
         {"kappa_hi", d.kappa_hi},
         {"coupling", d.coupling},
         {"seconds", d.seconds}};
  if (with_trace) {
    json trace = json::array();
    for (const auto& t : d.sign_trace)
      trace.push_back({{"k", t.k},
                       {"l", t.l},
                       {"a", t.a},
                       {"b", t.b},
                       {"c", t.c},
                       {"max_off_rank", t.max_off_rank}});
    j["sign_trace"] = trace;
  }
  return j;
}

// ---------------------------------------------------------------- generate

struct GenerateOpts {
  Index n = 1024;
  Index bandwidth = 1;
  double gap = 1e-2;
  Index n_stop = 0;
  std::uint64_t seed = 20240801;
  std::string kind = "gap-spectrum";
  std::string out;
};

int run_generate(const GenerateOpts& o) {
  if (o.out.empty()) throw IoError("generate: --out is required");
  Vector spectrum;
  BandedMatrix m;
  Rng rng(o.seed);
  if (o.kind == "gap-spectrum") {
    GapSpectrumSpec spec;
    spec.n = o.n;
    spec.gap = o.gap;
    spec.n_stop =
        o.n_stop > 0 ? o.n_stop : SolverConfig::default_n_stop(o.bandwidth);
    spectrum = gap_spectrum(spec, rng);
    m = banded_from_spectrum(spectrum, o.bandwidth, rng);
  } else {
    m = named_matrix(named_matrix_kind(o.kind), o.n);
    spectrum = o.kind == "toeplitz121" ? toeplitz121_eigenvalues(o.n)
                                       : clement_eigenvalues(o.n);
  }
  write_matrix_market(o.out, m);

  json sidecar{{"command", "generate"},
               {"kind", o.kind},
               {"n", o.n},
               {"bandwidth", m.bandwidth()},
               {"gap", o.gap},
               {"n_stop", o.n_stop},
               {"seed", o.seed},
               {"matrix_file", o.out},
               {"matrix_hash", file_content_hash(o.out)},
               {"spectrum", std::vector<double>(spectrum.data(),
                                                spectrum.data() + spectrum.size())}};
  std::ofstream js(o.out + ".json");
  if (!js) throw IoError("cannot write sidecar: " + o.out + ".json");
  js << sidecar.dump(2) << "\n";
  log_info("wrote " + o.out + " (n=" + std::to_string(o.n) + ", b=" +
           std::to_string(m.bandwidth()) + ")");
  return 0;
}

// ------------------------------------------------------------------- solve

struct SolveOpts {
  std::string in;
  std::string out;
  CommonOpts common;
};

int run_solve(const SolveOpts& o) {
  if (o.in.empty() || o.out.empty())
    throw IoError("solve: --in and --out are required");
  SolverConfig cfg = o.common.solver_config();

  const auto t0 = std::chrono::steady_clock::now();
  SpectralDecomposition sd;
  Index n = 0, bandwidth = 0;
  std::string breakdown;
  int status = 0;
  try {
    if (o.in.size() > 6 && o.in.substr(o.in.size() - 6) == ".hodlr") {
      HodlrMatrix h = load_hodlr(o.in);
      n = h.rows();
      sd = solve(h, cfg);
    } else {
      BandedMatrix m = read_matrix_market(o.in);
      if (m.asymmetry() > 8e-16 * std::max(1.0, m.max_abs()))
        throw StructuralError("solve: input matrix is not symmetric");
      n = m.size();
      bandwidth = m.bandwidth();
      sd = solve(m, cfg);
    }
  } catch (const GapTooSmall& e) {
    breakdown = e.what();
    status = 2;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  json summary{{"command", "solve"},
               {"input", o.in},
               {"input_hash", file_content_hash(o.in)},
               {"n", n},
               {"bandwidth", bandwidth},
               {"config", o.common.to_json()},
               {"seconds", seconds},
               {"status", status == 0 ? "ok" : "gap-too-small"}};

  if (status == 0) {
    write_f64_array(o.out + ".eigs.f64", sd.eigenvalues);
    std::ofstream qb(o.out + ".q.bin", std::ios::binary);
    if (!qb) throw IoError("cannot write " + o.out + ".q.bin");
    write_factored_q(qb, sd.q);
    qb.close();
    summary["eigenvalues_file"] = o.out + ".eigs.f64";
    summary["eigenvalues_hash"] = file_content_hash(o.out + ".eigs.f64");
    summary["q_file"] = o.out + ".q.bin";
    summary["q_memory_units"] = memory_units(sd.q);
  } else {
    summary["error"] = breakdown;
    std::cerr << "[heig] numerical breakdown: " << breakdown << "\n";
  }

  std::ofstream dj(o.out + ".diag.jsonl");
  if (!dj) throw IoError("cannot write " + o.out + ".diag.jsonl");
  const bool with_trace = log_level() >= 2;
  for (const auto& d : sd.diagnostics) {
    dj << diagnostics_json(d, with_trace).dump() << "\n";
    if (log_level() >= 2)
      std::cerr << "[heig] node " << d.path << " n=" << d.n << " nu=" << d.nu
                << " |C|=" << d.selected_lo << "+" << d.selected_hi
                << " iters=" << d.sign_iterations << "\n";
  }
  std::ofstream js(o.out + ".json");
  if (!js) throw IoError("cannot write " + o.out + ".json");
  js << summary.dump(2) << "\n";
  log_info("solve " + std::string(status == 0 ? "finished" : "aborted") +
           " in " + std::to_string(seconds) + " s");
  return status;
}

// ------------------------------------------------------------------ verify

struct VerifyOpts {
  std::string matrix;
  std::string decomposition;  // prefix used by solve --out
  std::string out;
  std::string format = "json";
  Index dense_cap = 4096;
};

int run_verify(const VerifyOpts& o) {
  if (o.matrix.empty() || o.decomposition.empty() || o.out.empty())
    throw IoError("verify: --matrix, --decomposition and --out are required");
  BandedMatrix m = read_matrix_market(o.matrix);

  SpectralDecomposition sd;
  sd.eigenvalues = read_f64_array(o.decomposition + ".eigs.f64");
  {
    std::ifstream qb(o.decomposition + ".q.bin", std::ios::binary);
    if (!qb) throw IoError("cannot read " + o.decomposition + ".q.bin");
    sd.q = read_factored_q(qb);
  }
  if (sd.eigenvalues.size() != m.size() || sd.q.size() != m.size())
    throw IoError("verify: decomposition size does not match the matrix");

  DenseEig reference;
  const bool use_reference = m.size() <= o.dense_cap;
  if (use_reference) reference = dense_eig(m.to_dense());
  ErrorReport rep =
      error_metrics(sd, m, use_reference ? &reference : nullptr);

  json j{{"command", "verify"},
         {"matrix", o.matrix},
         {"matrix_hash", file_content_hash(o.matrix)},
         {"n", m.size()},
         {"e_lambda", rep.e_lambda},
         {"e_res", rep.e_res},
         {"e_orth", rep.e_orth},
         {"e_q", rep.e_q},
         {"has_reference", rep.has_reference},
         {"sampled", rep.sampled},
         {"samples", rep.samples}};
  std::ofstream os(o.out);
  if (!os) throw IoError("cannot write " + o.out);
  if (o.format == "csv") {
    os << "n,e_lambda,e_res,e_orth,e_q,has_reference,sampled,samples\n";
    os << m.size() << "," << rep.e_lambda << "," << rep.e_res << ","
       << rep.e_orth << "," << rep.e_q << "," << rep.has_reference << ","
       << rep.sampled << "," << rep.samples << "\n";
  } else {
    os << j.dump(2) << "\n";
  }
  log_info("verify: e_lambda=" + std::to_string(rep.e_lambda) +
           " e_res=" + std::to_string(rep.e_res));
  return 0;
}

// ------------------------------------------------------------------- sweep

struct SweepOpts {
  std::string type;  // delta | gap | n
  Index n = 1024;
  Index bandwidth = 1;
  double gap = 1e-2;
  std::vector<double> deltas{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> gaps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  std::vector<Index> ns{1024, 2048, 4096};
  Index gen_n_stop = 0;
  std::string out;
  std::string format = "csv";
  Index dense_cap = 4096;
  CommonOpts common;
};

struct SweepRow {
  double param = 0.0;
  Index n = 0;
  Index bandwidth = 0;
  double gap = 0.0;
  double delta = 0.0;
  std::string status = "ok";
  std::string error;
  double sel_percent = 0.0;
  double kappa_max = 0.0;
  ErrorReport metrics;
  double seconds = 0.0;
  Index q_memory = 0;
};

SweepRow sweep_point(const SweepOpts& o, double param) {
  SweepRow row;
  row.param = param;
  row.n = o.type == "n" ? static_cast<Index>(param) : o.n;
  row.bandwidth = o.bandwidth;
  row.gap = o.type == "gap" ? param : o.gap;
  row.delta = o.common.delta;
  SolverConfig cfg = o.common.solver_config();
  if (o.type == "delta") cfg.delta = row.delta = param;

  try {
    Rng rng(o.common.seed);
    GapSpectrumSpec spec;
    spec.n = row.n;
    spec.gap = row.gap;
    spec.n_stop = o.gen_n_stop > 0
                      ? o.gen_n_stop
                      : cfg.with_defaults(o.bandwidth).n_stop;
    Vector spectrum = gap_spectrum(spec, rng);
    BandedMatrix m = banded_from_spectrum(spectrum, o.bandwidth, rng);
    // pin every divide to the designed gap, as in the reference experiments
    cfg.known_spectrum = std::make_shared<Vector>(spectrum);

    const auto t0 = std::chrono::steady_clock::now();
    SpectralDecomposition sd = solve(m, cfg);
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    row.q_memory = memory_units(sd.q);

    double sel_sum = 0.0;
    for (const auto& d : sd.diagnostics) {
      sel_sum += 100.0 * static_cast<double>(d.selected_lo + d.selected_hi) /
                 static_cast<double>(d.n);
      row.kappa_max =
          std::max({row.kappa_max, d.kappa_lo, d.kappa_hi});
    }
    if (!sd.diagnostics.empty())
      sel_sum /= static_cast<double>(sd.diagnostics.size());
    row.sel_percent = sel_sum;

    DenseEig reference;
    const bool use_reference = row.n <= o.dense_cap;
    if (use_reference) reference = dense_eig(m.to_dense());
    row.metrics = error_metrics(sd, m, use_reference ? &reference : nullptr);
  } catch (const GapTooSmall& e) {
    row.status = "gap-too-small";
    row.error = e.what();
  } catch (const Error& e) {
    row.status = "error";
    row.error = e.what();
  }
  return row;
}

int run_sweep(const SweepOpts& o) {
  if (o.out.empty()) throw IoError("sweep: --out is required");
  std::vector<double> grid;
  if (o.type == "delta") {
    grid = o.deltas;
  } else if (o.type == "gap") {
    grid = o.gaps;
  } else if (o.type == "n") {
    for (Index n : o.ns) grid.push_back(static_cast<double>(n));
  } else {
    throw StructuralError("sweep: --type must be delta, gap or n");
  }

  std::vector<SweepRow> rows;
  for (double param : grid) {
    log_info("sweep point " + std::to_string(param));
    rows.push_back(sweep_point(o, param));
  }

  std::ofstream os(o.out);
  if (!os) throw IoError("cannot write " + o.out);
  if (o.format == "csv") {
    os << "param,n,bandwidth,gap,delta,status,sel_percent,kappa_max,"
          "e_lambda,e_res,e_orth,e_q,has_reference,seconds,q_memory_units,"
          "error\n";
    for (const auto& r : rows) {
      char buf[512];
      std::snprintf(buf, sizeof(buf),
                    "%.17g,%lld,%lld,%.17g,%.17g,%s,%.6f,%.6g,%.6g,%.6g,%.6g,"
                    "%.6g,%d,%.6f,%lld,%s\n",
                    r.param, static_cast<long long>(r.n),
                    static_cast<long long>(r.bandwidth), r.gap, r.delta,
                    r.status.c_str(), r.sel_percent, r.kappa_max,
                    r.metrics.e_lambda, r.metrics.e_res, r.metrics.e_orth,
                    r.metrics.e_q, r.metrics.has_reference ? 1 : 0, r.seconds,
                    static_cast<long long>(r.q_memory), r.error.c_str());
      os << buf;
    }
  } else {
    for (const auto& r : rows) {
      json j{{"param", r.param},
             {"n", r.n},
             {"bandwidth", r.bandwidth},
             {"gap", r.gap},
             {"delta", r.delta},
             {"status", r.status},
             {"sel_percent", r.sel_percent},
             {"kappa_max", r.kappa_max},
             {"e_lambda", r.metrics.e_lambda},
             {"e_res", r.metrics.e_res},
             {"e_orth", r.metrics.e_orth},
             {"e_q", r.metrics.e_q},
             {"has_reference", r.metrics.has_reference},
             {"seconds", r.seconds},
             {"q_memory_units", r.q_memory},
             {"seed", o.common.seed},
             {"error", r.error}};
      os << j.dump() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical spectral divide-and-conquer eigensolver"};
  app.require_subcommand(1);

  GenerateOpts gen;
  CLI::App* cgen = app.add_subcommand("generate", "generate a banded test matrix");
  cgen->add_option("--n", gen.n, "matrix size")->required();
  cgen->add_option("--bandwidth", gen.bandwidth, "half bandwidth");
  cgen->add_option("--gap", gen.gap, "relative spectral gap");
  cgen->add_option("--n-stop", gen.n_stop, "interval recursion floor (0 = auto)");
  cgen->add_option("--seed", gen.seed, "RNG seed");
  cgen->add_option("--kind", gen.kind,
                   "gap-spectrum | toeplitz121 | clement");
  cgen->add_option("--out", gen.out, "output Matrix Market path")->required();

  SolveOpts sol;
  CLI::App* csol = app.add_subcommand("solve", "compute a spectral decomposition");
  csol->add_option("--in", sol.in, "input matrix (.mtx or .hodlr)")->required();
  csol->add_option("--out", sol.out, "output prefix")->required();
  add_common(csol, sol.common);

  VerifyOpts ver;
  CLI::App* cver = app.add_subcommand("verify", "error metrics for a decomposition");
  cver->add_option("--matrix", ver.matrix, "original matrix (.mtx)")->required();
  cver->add_option("--decomposition", ver.decomposition, "solve output prefix")
      ->required();
  cver->add_option("--out", ver.out, "report path")->required();
  cver->add_option("--format", ver.format, "json | csv");
  cver->add_option("--dense-cap", ver.dense_cap, "largest n for dense reference");

  SweepOpts sw;
  CLI::App* csw = app.add_subcommand("sweep", "parameter sweeps emitting plot data");
  csw->add_option("--type", sw.type, "delta | gap | n")->required();
  csw->add_option("--n", sw.n, "matrix size");
  csw->add_option("--bandwidth", sw.bandwidth, "half bandwidth");
  csw->add_option("--gap", sw.gap, "relative spectral gap");
  csw->add_option("--deltas", sw.deltas, "delta grid")->delimiter(',');
  csw->add_option("--gaps", sw.gaps, "gap grid")->delimiter(',');
  csw->add_option("--ns", sw.ns, "size grid")->delimiter(',');
  csw->add_option("--gen-n-stop", sw.gen_n_stop,
                  "interval recursion floor for generation (0 = auto)");
  csw->add_option("--out", sw.out, "output table path")->required();
  csw->add_option("--format", sw.format, "csv | jsonl");
  csw->add_option("--dense-cap", sw.dense_cap, "largest n for dense reference");
  add_common(csw, sw.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  try {
    if (*cgen) return run_generate(gen);
    if (*csol) return run_solve(sol);
    if (*cver) return run_verify(ver);
    if (*csw) return run_sweep(sw);
  } catch (const GapTooSmall& e) {
    std::cerr << "[heig] numerical breakdown: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "[heig] i/o error: " << e.what() << "\n";
    return 3;
  } catch (const StructuralError& e) {
    std::cerr << "[heig] invalid configuration: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "[heig] error: " << e.what() << "\n";
    return 1;
  }
  return 4;
}
