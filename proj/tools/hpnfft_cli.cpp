// hpnfft: precision / perf / madelung sweeps, one-shot transforms, points
// file generation, and the worker process used by --transport tcp.
//
// Exit codes: 0 success, 2 usage error, 3 numerical or resource error,
// 4 communication error.

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hpnfft/hpnfft.hpp"

extern char** environ;

namespace {

using namespace hpnfft;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitComm = 4;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Common {
  std::string dims = "16,16,16";
  double sigma = 2.0;
  std::string m = "8";
  std::string window = "kaiser_bessel";
  std::string workers = "1";
  std::string transport = "inproc";
  std::string listen = "127.0.0.1:0";
  std::string connect;
  std::uint64_t seed = 1;
  std::string out;
  int timeout_ms = 30000;
  bool force = false;
  bool no_spawn = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--dims", c.dims, "Bandwidths N_t, comma separated")->capture_default_str();
  cmd->add_option("--sigma", c.sigma, "Oversampling factor")->capture_default_str();
  cmd->add_option("--m", c.m, "Window cut-off, or a range LO:HI")->capture_default_str();
  cmd->add_option("--window", c.window, "gaussian, b_spline, sinc_power, kaiser_bessel (lists or 'all' in sweeps)")
      ->capture_default_str();
  cmd->add_option("--workers", c.workers, "Worker count (a list for perf)")->capture_default_str();
  cmd->add_option("--transport", c.transport, "inproc or tcp")->capture_default_str();
  cmd->add_option("--listen", c.listen, "HOST:PORT rank 0 listens on with --transport tcp")->capture_default_str();
  cmd->add_option("--connect", c.connect, "HOST:PORT of rank 0 (worker)");
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--out", c.out, "Output path (CSV); stdout when omitted");
  cmd->add_option("--timeout", c.timeout_ms, "Milliseconds to wait while a TCP group forms")->capture_default_str();
  cmd->add_flag("--force", c.force, "Skip cost and memory guards");
}

std::vector<int> dims_of(const Common& c) {
  auto d = parse_int_list(c.dims);
  for (int n : d) {
    if (n < 2 || n % 2 != 0) throw UsageError("--dims entries must be even and >= 2");
  }
  return d;
}

int single_int(const std::string& text, const char* flag, int min) {
  const auto v = parse_int_list(text);
  if (v.size() != 1 || v[0] < min) throw UsageError(std::string(flag) + " must be one integer >= " + std::to_string(min));
  return v[0];
}

Endpoint endpoint_of(const std::string& text) {
  try {
    return parse_endpoint(text);
  } catch (const std::exception& e) {
    throw UsageError("bad endpoint '" + text + "': " + e.what());
  }
}

WindowKind single_window(const std::string& text) {
  const auto k = parse_window_kind(text);
  if (!k) throw UsageError("unknown window '" + text + "'");
  return *k;
}

void emit(const SweepReport& report, const std::string& out) {
  if (out.empty()) {
    std::cout << report.csv();
  } else {
    report.write(out);
  }
}

// ---------------------------------------------------------------------------
// Multi-process groups: rank 0 is this process, ranks 1..P-1 are children
// running `worker`.

class ProcessGroup {
 public:
  ProcessGroup(const Common& c, int ranks) : timeout_ms_(c.timeout_ms) {
    if (c.transport != "tcp") throw UsageError("process groups need --transport tcp");
    const auto at = endpoint_of(c.listen);
    std::uint16_t port = 0;
    auto listener = TcpTransport::bind_listener(at, 64, &port);
    if (!c.no_spawn) {
      const std::string connect = (at.host == "0.0.0.0" ? std::string("127.0.0.1") : at.host) + ":" + std::to_string(port);
      for (int r = 1; r < ranks; ++r) spawn_worker(connect, r);
    } else {
      std::fprintf(stderr, "waiting for %d workers on %s:%u\n", ranks - 1, at.host.c_str(), unsigned(port));
    }
    try {
      transport_ = std::make_unique<TcpTransport>(TcpTransport::host(std::move(listener), ranks, c.timeout_ms));
    } catch (...) {
      kill_children();
      throw;
    }
    topology_ = std::make_unique<Topology>(*transport_);
  }

  ProcessGroup(const ProcessGroup&) = delete;
  ProcessGroup& operator=(const ProcessGroup&) = delete;

  ~ProcessGroup() {
    if (!finished_) kill_children();
  }

  Topology& topology() { return *topology_; }

  /// Releases the workers and waits for them; a failed worker is a
  /// communication error.
  void finish() {
    shutdown_workers(*topology_);
    finished_ = true;
    int failed = 0;
    for (pid_t pid : children_) {
      int status = 0;
      ::waitpid(pid, &status, 0);
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) ++failed;
    }
    if (failed != 0) throw CommunicationError(-1, std::to_string(failed) + " worker process(es) failed");
  }

 private:
  void kill_children() {
    for (pid_t pid : children_) ::kill(pid, SIGTERM);
    for (pid_t pid : children_) ::waitpid(pid, nullptr, 0);
    children_.clear();
  }

  void spawn_worker(const std::string& connect, int rank) {
    std::vector<std::string> args = {"hpnfft", "worker", "--connect", connect, "--rank", std::to_string(rank),
                                     "--timeout", std::to_string(timeout_ms_)};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    pid_t pid = 0;
    if (::posix_spawn(&pid, "/proc/self/exe", nullptr, nullptr, argv.data(), environ) != 0) {
      throw CommunicationError(rank, "cannot spawn worker process");
    }
    children_.push_back(pid);
  }

  int timeout_ms_;
  std::vector<pid_t> children_;
  std::unique_ptr<TcpTransport> transport_;
  std::unique_ptr<Topology> topology_;
  bool finished_ = false;
};

// ---------------------------------------------------------------------------

int run_precision(const Common& c, std::size_t points) {
  PrecisionOptions opt;
  opt.dims = dims_of(c);
  opt.points = points;
  opt.sigma = c.sigma;
  opt.m_values = parse_int_range(c.m);
  opt.windows = parse_window_list(c.window);
  opt.seed = c.seed;
  opt.workers = single_int(c.workers, "--workers", 1);
  opt.force = c.force;
  emit(cmd_precision(opt), c.out);
  return 0;
}

int run_perf(const Common& c, const std::string& sides, int repetitions) {
  PerfOptions opt;
  opt.sides = parse_int_list(sides);
  opt.workers = parse_int_list(c.workers);
  opt.repetitions = repetitions;
  opt.dims = dims_of(c);
  opt.window = single_window(c.window);
  opt.sigma = c.sigma;
  opt.m = single_int(c.m, "--m", 1);
  opt.seed = c.seed;
  opt.force = c.force;
  emit(cmd_perf(opt), c.out);
  return 0;
}

int run_madelung(const Common& c, int cells, const std::string& alphas, const std::string& mode,
                 const std::string& crystal) {
  MadelungOptions opt;
  opt.cells = cells;
  opt.alphas = parse_real_range(alphas);
  if (mode == "nfft") {
    opt.mode = SumMode::nfft;
  } else if (mode == "direct") {
    opt.mode = SumMode::direct;
  } else {
    throw UsageError("--mode must be nfft or direct");
  }
  opt.crystal = parse_crystal(crystal);
  opt.enuf.window = single_window(c.window);
  opt.enuf.sigma = c.sigma;
  opt.enuf.m = single_int(c.m, "--m", 1);
  const int workers = single_int(c.workers, "--workers", 1);
  if (c.transport == "tcp") {
    ProcessGroup group(c, workers);
    opt.enuf.topology = &group.topology();
    const auto report = cmd_madelung(opt);
    group.finish();
    emit(report, c.out);
    return 0;
  }
  opt.enuf.workers = workers;
  emit(cmd_madelung(opt), c.out);
  return 0;
}

int run_transform(const Common& c, const std::string& in, const std::string& direction, const std::string& coeffs_path) {
  const auto file = read_points(in);
  const auto dims = dims_of(c);
  if (dims.size() != file.points.dim()) throw UsageError("--dims does not match the points file dimension");
  const auto index_set = make_index_set(dims);
  const auto cfg = make_nfft_config(index_set, single_window(c.window), c.sigma, single_int(c.m, "--m", 1));
  const int ranks = single_int(c.workers, "--workers", 1);

  if (direction == "forward") {
    CoefficientArray result(index_set);
    if (c.transport == "tcp") {
      ProcessGroup group(c, ranks);
      result = hp_forward(file.points, file.values, cfg, group.topology());
      group.finish();
    } else {
      result = run_in_process(ranks, [&](Topology& topo) {
        return topo.is_root() ? hp_forward(file.points, file.values, cfg, topo)
                              : hp_forward(PointSet(file.points.dim()), SampleValues{}, cfg, topo);
      })[0];
    }
    emit(coefficient_report(result), c.out);
    return 0;
  }
  if (direction == "adjoint") {
    if (coeffs_path.empty()) throw UsageError("adjoint needs --coeffs");
    const auto coeffs = read_coefficient_csv(coeffs_path, index_set);
    SampleValues result;
    if (c.transport == "tcp") {
      ProcessGroup group(c, ranks);
      result = hp_adjoint(coeffs, file.points, cfg, group.topology());
      group.finish();
    } else {
      result = run_in_process(ranks, [&](Topology& topo) {
        return hp_adjoint(coeffs, topo.is_root() ? file.points : PointSet(file.points.dim()), cfg, topo);
      })[0];
    }
    emit(sample_report(result), c.out);
    return 0;
  }
  throw UsageError("--direction must be forward or adjoint");
}

int run_gen_points(const Common& c, std::size_t points, int dim, const std::string& crystal, int cells) {
  if (c.out.empty()) throw UsageError("gen-points needs --out");
  if (!crystal.empty()) {
    const auto sys = build_crystal(parse_crystal(crystal), cells);
    const auto [p, v] = crystal_samples(sys);
    write_points(c.out, p, v);
    return 0;
  }
  if (dim < 1) throw UsageError("--dim must be positive");
  SampleGenerator gen(c.seed);
  const auto p = gen.points(static_cast<std::size_t>(dim), points);
  write_points(c.out, p, gen.values(points));
  return 0;
}

int run_worker(const Common& c, int rank, int threads) {
  if (c.connect.empty()) throw UsageError("worker needs --connect HOST:PORT");
  auto transport = TcpTransport::join(endpoint_of(c.connect), rank, c.timeout_ms);
  Topology topo(transport);
  serve_worker(topo, threads);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel nonequispaced FFT: accuracy, scaling and Ewald/Madelung sweeps"};
  app.require_subcommand(1);

  Common c;
  std::size_t points = 4096;
  std::string sides = "58";
  int repetitions = 5;
  int cells = 4;
  std::string alphas = "1.2:1.8:0.1";
  std::string mode = "nfft";
  std::string crystal = "fluorite";
  std::string in;
  std::string direction = "forward";
  std::string coeffs;
  int rank = 0;
  int threads = 1;
  int dim = 3;
  std::string gen_crystal;

  auto* precision = app.add_subcommand("precision", "Error of NFFT and adjoint against direct sums per (window, m)");
  Common pc;
  pc.m = "1:15";
  pc.window = "all";
  add_common(precision, pc);
  precision->add_option("--points", points, "Number of random points M")->capture_default_str();

  auto* perf = app.add_subcommand("perf", "Wall time and speedup of hp_forward per (points, workers)");
  Common fc;
  fc.dims = "32,32,32";
  fc.m = "4";
  fc.workers = "1,2,4";
  add_common(perf, fc);
  perf->add_option("--sides", sides, "Points per axis, comma separated (M = side^d)")->capture_default_str();
  perf->add_option("--repetitions", repetitions, "Timed repetitions per cell")->capture_default_str();

  auto* madelung = app.add_subcommand("madelung", "Ewald energies and Madelung constant per alpha");
  Common mc;
  add_common(madelung, mc);
  madelung->add_option("--cells", cells, "Unit cells per box edge")->capture_default_str();
  madelung->add_option("--alpha", alphas, "Alpha list or range LO:HI:STEP")->capture_default_str();
  madelung->add_option("--mode", mode, "nfft or direct")->capture_default_str();
  madelung->add_option("--crystal", crystal, "fluorite or rock_salt")->capture_default_str();
  madelung->add_flag("--no-spawn", mc.no_spawn, "With tcp, wait for externally started workers");

  auto* transform = app.add_subcommand("transform", "One-shot forward or adjoint transform of a points file");
  Common tc;
  add_common(transform, tc);
  transform->add_option("--in", in, "Points file (NDPT)")->required();
  transform->add_option("--direction", direction, "forward or adjoint")->capture_default_str();
  transform->add_option("--coeffs", coeffs, "Coefficient CSV for the adjoint");
  transform->add_flag("--no-spawn", tc.no_spawn, "With tcp, wait for externally started workers");

  auto* gen = app.add_subcommand("gen-points", "Write a random or crystal points file");
  Common gc;
  add_common(gen, gc);
  gen->add_option("--points", points, "Number of random points")->capture_default_str();
  gen->add_option("--dim", dim, "Dimension of random points")->capture_default_str();
  gen->add_option("--crystal", gen_crystal, "fluorite or rock_salt instead of random points");
  gen->add_option("--cells", cells, "Unit cells per box edge for --crystal")->capture_default_str();

  auto* worker = app.add_subcommand("worker", "Serve collectives for a rank 0 reached over TCP");
  Common wc;
  add_common(worker, wc);
  worker->add_option("--rank", rank, "This process's rank (>= 1)")->required();
  worker->add_option("--threads", threads, "Threads per transform")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    for (const Common* cc : {&pc, &fc, &mc, &tc, &gc, &wc}) {
      if (cc->transport != "inproc" && cc->transport != "tcp") throw UsageError("--transport must be inproc or tcp");
    }
    if (*precision) return run_precision(pc, points);
    if (*perf) return run_perf(fc, sides, repetitions);
    if (*madelung) return run_madelung(mc, cells, alphas, mode, crystal);
    if (*transform) return run_transform(tc, in, direction, coeffs);
    if (*gen) return run_gen_points(gc, points, dim, gen_crystal, cells);
    if (*worker) return run_worker(wc, rank, threads);
  } catch (const CommunicationError& e) {
    std::fprintf(stderr, "hpnfft: communication error: %s\n", e.what());
    return kExitComm;
  } catch (const ProtocolError& e) {
    std::fprintf(stderr, "hpnfft: protocol error: %s\n", e.what());
    return kExitComm;
  } catch (const InvalidParameter& e) {
    std::fprintf(stderr, "hpnfft: %s\n", e.what());
    return kExitUsage;
  } catch (const InvalidBandwidth& e) {
    std::fprintf(stderr, "hpnfft: %s\n", e.what());
    return kExitUsage;
  } catch (const InvalidTopology& e) {
    std::fprintf(stderr, "hpnfft: %s\n", e.what());
    return kExitUsage;
  } catch (const InvalidSize& e) {
    std::fprintf(stderr, "hpnfft: %s\n", e.what());
    return kExitUsage;
  } catch (const hpnfft::Error& e) {
    std::fprintf(stderr, "hpnfft: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "hpnfft: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hpnfft: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitUsage;
}
