// jacfast: build, apply and benchmark fast Jacobi polynomial transforms.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "jacfast/binary_io.hpp"
#include "jacfast/error.hpp"
#include "jacfast/reference.hpp"
#include "jacfast/tensor_transform.hpp"
#include "jacfast/transform1d.hpp"

namespace {

using namespace jacfast;
using Clock = std::chrono::steady_clock;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

// rows checked against direct summation when the dense oracle is too big
constexpr std::size_t kOracleRows = 256;
constexpr std::int64_t kDenseOracleMax = 4096;

struct Global {
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

std::uint64_t resolve_seed(const Global& g) {
  if (g.seed) return *g.seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << s << "\n";
  return s;
}

LowRankMethod parse_method(const std::string& m) {
  if (m == "rs") return LowRankMethod::rs;
  if (m == "cheb") return LowRankMethod::cheb;
  throw DomainError("unknown method '" + m + "' (expected rs or cheb)");
}

TransformMode parse_mode(const std::string& m) {
  if (m == "uniform") return TransformMode::uniform;
  if (m == "nonuniform") return TransformMode::nonuniform;
  throw DomainError("unknown mode '" + m + "' (expected uniform or nonuniform)");
}

io::VectorFormat pick_format(const std::string& flag, const std::string& path) {
  if (flag == "raw") return io::VectorFormat::raw;
  if (flag == "csv") return io::VectorFormat::csv;
  if (flag.empty()) return io::format_from_path(path);
  throw DomainError("unknown format '" + flag + "' (expected raw or csv)");
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::ranges::sort(v);
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<double> random_vector(std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(len);
  for (auto& x : v) x = nd(rng);
  return v;
}

void check_sizes(std::int64_t n, int dim) {
  if (n < 1) throw DomainError("--n must be positive");
  if (dim < 1 || dim > 3) throw DomainError("--dim must be 1, 2 or 3");
}

// Relative l2 error of a forward result against direct evaluation; returns
// the error and the oracle name.
std::pair<double, std::string> oracle_error(const TensorPlan& plan, std::span<const double> alpha,
                                            std::span<const double> fast, std::uint64_t seed) {
  const TransformPlan& ax = plan.axis(0);
  if (plan.n() <= kDenseOracleMax) {
    const Eigen::MatrixXd m = reference::transform_matrix(ax.params(), ax.points(), ax.weights());
    const auto ref = reference::apply_along_axes(m, plan.dims(), alpha);
    return {reference::relative_l2(fast, ref), plan.dims() == 1 ? "dense" : "kronecker"};
  }
  if (plan.dims() != 1) throw DomainError("tensor oracle limited to n <= 4096");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(plan.n()) - 1);
  std::vector<std::size_t> rows(kOracleRows);
  for (auto& r : rows) r = pick(rng);
  const auto ref = reference::forward_rows(ax.params(), ax.points(), ax.weights(), alpha, rows);
  std::vector<double> got(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) got[i] = fast[rows[i]];
  return {reference::relative_l2(got, ref), "sampled-rows"};
}

std::vector<double> forward_any(const TensorPlan& plan, std::span<const double> x) {
  return plan.dims() == 1 ? forward_1d(plan.axis(0), x) : forward_nd(plan, x);
}

std::vector<double> inverse_any(const TensorPlan& plan, std::span<const double> x) {
  return plan.dims() == 1 ? inverse_1d(plan.axis(0), x) : inverse_nd(plan, x);
}

// ---- plan

struct PlanArgs {
  double a = 0, b = 0;
  std::int64_t n = 0;
  int dim = 1;
  std::string mode = "uniform", method = "rs", points, out, format;
  double eps = 1e-8;
};

int cmd_plan(const PlanArgs& x, const Global& g) {
  const JacobiParams p(x.a, x.b);
  check_sizes(x.mode == "uniform" ? x.n : 1, x.dim);
  if (!(x.eps > 0.0 && x.eps < 1.0)) throw DomainError("--eps must lie in (0,1)");
  PlanOptions opt;
  opt.mode = parse_mode(x.mode);
  opt.method = parse_method(x.method);
  opt.eps = x.eps;
  opt.seed = resolve_seed(g);
  const auto t0 = Clock::now();
  std::optional<TensorPlan> plan;
  if (opt.mode == TransformMode::uniform) {
    plan = build_tensor_plan(p, x.n, x.dim, opt);
  } else {
    if (x.points.empty()) throw DomainError("nonuniform plans need --points");
    const auto pts = io::read_vector(x.points, pick_format(x.format, x.points));
    if (pts.empty()) throw DomainError("empty points file " + x.points);
    if (x.n != 0 && x.n != static_cast<std::int64_t>(pts.size()))
      throw DomainError("--n does not match the number of points");
    plan = build_tensor_plan(p, std::vector<std::vector<double>>(static_cast<std::size_t>(x.dim), pts), opt);
  }
  const double fac = seconds_since(t0);
  save_tensor_plan(*plan, x.out);
  std::cout << "a=" << x.a << " b=" << x.b << " n=" << plan->n() << " dim=" << plan->dims()
            << " mode=" << to_string(plan->mode()) << " method=" << to_string(plan->axis(0).method())
            << " rank=" << plan->axis(0).rank() << " seed=" << opt.seed << " fac_s=" << fac << " -> " << x.out
            << "\n";
  return 0;
}

// ---- apply

struct ApplyArgs {
  std::string plan, input, output, format;
  bool inverse = false, roundtrip = false;
};

int cmd_apply(const ApplyArgs& x) {
  const TensorPlan plan = load_tensor_plan(x.plan);
  const auto fmt_in = pick_format(x.format, x.input);
  const auto fmt_out = pick_format(x.format, x.output);
  std::vector<double> in;
  if (plan.dims() == 1) {
    in = io::read_vector(x.input, fmt_in);
  } else {
    io::TensorData t = io::read_tensor(x.input, fmt_in);
    if (!t.values.empty() && (t.dims != plan.dims() || t.n != plan.n())) {
      std::ostringstream os;
      os << "input tensor is " << t.dims << "-D with n=" << t.n << ", plan expects " << plan.dims()
         << "-D with n=" << plan.n();
      throw ShapeError(os.str());
    }
    in = std::move(t.values);
  }
  if (in.empty()) throw DomainError("empty input file " + x.input);
  if (in.size() != plan.size()) {
    std::ostringstream os;
    os << "input has " << in.size() << " values, plan expects " << plan.size();
    throw ShapeError(os.str());
  }
  if (x.inverse && plan.mode() != TransformMode::uniform)
    throw DomainError("inverse transform needs a uniform plan");
  const auto out = x.inverse ? inverse_any(plan, in) : forward_any(plan, in);
  if (plan.dims() == 1) {
    io::write_vector(x.output, out, fmt_out);
  } else {
    io::write_tensor(x.output, io::TensorData{plan.dims(), plan.n(), out}, fmt_out);
  }
  if (x.roundtrip) {
    if (plan.mode() != TransformMode::uniform) throw DomainError("--roundtrip needs a uniform plan");
    const auto back = x.inverse ? forward_any(plan, out) : inverse_any(plan, out);
    std::cout << "roundtrip_relerr=" << reference::relative_l2(back, in) << "\n";
  }
  return 0;
}

// ---- bench

struct BenchArgs {
  double a = 0, b = 0;
  std::int64_t nmin = 64, nmax = 1024;
  int dim = 1, repeats = 10;
  std::string method = "both", out, plot;
  double eps = 1e-8;
};

int cmd_bench(const BenchArgs& x, const Global& g) {
  const JacobiParams p(x.a, x.b);
  check_sizes(x.nmin, x.dim);
  if (x.nmax < x.nmin) throw DomainError("--nmax must be >= --nmin");
  if (x.repeats < 1) throw DomainError("--repeats must be >= 1");
  std::vector<LowRankMethod> methods;
  if (x.method == "both") {
    methods = {LowRankMethod::rs, LowRankMethod::cheb};
  } else {
    methods = {parse_method(x.method)};
  }
  const std::uint64_t seed = resolve_seed(g);

  std::ofstream file;
  if (!x.out.empty()) {
    file.open(x.out, std::ios::trunc);
    if (!file) throw IoError("cannot write " + x.out);
  }
  std::ostream& os = x.out.empty() ? std::cout : file;
  std::ofstream plot;
  if (!x.plot.empty()) {
    plot.open(x.plot, std::ios::trunc);
    if (!plot) throw IoError("cannot write " + x.plot);
    plot << "# n method fac_s app_s rank relerr\n";
  }
  os << "a,b,n,dim,method,fac_s,app_s,rank,relerr,seed\n";
  os.precision(6);
  for (std::int64_t n = x.nmin; n <= x.nmax; n *= 2) {
    for (auto m : methods) {
      PlanOptions opt;
      opt.method = m;
      opt.eps = x.eps;
      opt.seed = seed;
      std::vector<double> fac, app;
      std::optional<TensorPlan> plan;
      for (int r = 0; r < x.repeats; ++r) {
        const auto t0 = Clock::now();
        plan = build_tensor_plan(p, n, x.dim, opt);
        fac.push_back(seconds_since(t0));
      }
      const auto alpha = random_vector(plan->size(), seed + static_cast<std::uint64_t>(n));
      std::vector<double> out;
      for (int r = 0; r < x.repeats; ++r) {
        const auto t0 = Clock::now();
        out = forward_any(*plan, alpha);
        app.push_back(seconds_since(t0));
      }
      const auto [err, oracle] = oracle_error(*plan, alpha, out, seed);
      std::cerr << "n=" << n << " " << to_string(m) << ": oracle " << oracle << "\n";
      os << x.a << ',' << x.b << ',' << n << ',' << x.dim << ',' << to_string(m) << ',' << median(fac) << ','
         << median(app) << ',' << plan->axis(0).rank() << ',' << err << ',' << seed << '\n';
      if (plot.is_open())
        plot << n << ' ' << to_string(m) << ' ' << median(fac) << ' ' << median(app) << ' '
             << plan->axis(0).rank() << ' ' << err << '\n';
    }
  }
  return 0;
}

// ---- stability

struct StabilityArgs {
  double a = 0, b = 0;
  std::vector<int> dims{1};
  std::vector<std::int64_t> sizes{1024};
  std::string method = "rs";
  double eps = 1e-8;
};

int cmd_stability(const StabilityArgs& x, const Global& g) {
  const JacobiParams p(x.a, x.b);
  const std::uint64_t seed = resolve_seed(g);
  std::cout << "a,b,dim,n,rank,stability,seed\n";
  for (int d : x.dims) {
    for (auto n : x.sizes) {
      check_sizes(n, d);
      PlanOptions opt;
      opt.method = parse_method(x.method);
      opt.eps = x.eps;
      opt.seed = seed;
      const TensorPlan plan = build_tensor_plan(p, n, d, opt);
      const auto v = random_vector(plan.size(), seed + static_cast<std::uint64_t>(n * 4 + d));
      const auto back = inverse_any(plan, forward_any(plan, v));
      std::cout << x.a << ',' << x.b << ',' << d << ',' << n << ',' << plan.axis(0).rank() << ','
                << reference::relative_l2(back, v) << ',' << seed << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast Jacobi polynomial transforms"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "random seed (drawn and printed when omitted)");
  app.add_option("--threads", g.threads, "OpenMP threads")->check(CLI::PositiveNumber);

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "build a transform plan file");
  plan->add_option("--a", pa.a, "Jacobi parameter a in (-1,1)")->required();
  plan->add_option("--b", pa.b, "Jacobi parameter b in (-1,1)")->required();
  plan->add_option("--n", pa.n, "points per dimension");
  plan->add_option("--dim", pa.dim, "1, 2 or 3");
  plan->add_option("--mode", pa.mode, "uniform | nonuniform");
  plan->add_option("--points", pa.points, "nonuniform points in (0,pi), raw f64 or CSV");
  plan->add_option("--format", pa.format, "raw | csv for --points (default: by extension)");
  plan->add_option("--method", pa.method, "rs | cheb");
  plan->add_option("--eps", pa.eps, "target accuracy of the low-rank factors");
  plan->add_option("--out", pa.out, "output plan file")->required();

  ApplyArgs aa;
  auto* apply = app.add_subcommand("apply", "apply a plan to a vector or tensor file");
  apply->add_option("--plan", aa.plan)->required();
  apply->add_option("--input", aa.input)->required();
  apply->add_option("--output", aa.output)->required();
  apply->add_option("--format", aa.format, "raw | csv (default: by extension)");
  apply->add_flag("--inverse", aa.inverse, "inverse transform (uniform plans)");
  apply->add_flag("--roundtrip", aa.roundtrip, "also report the round-trip relative error");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "time factorization and application, CSV report");
  bench->add_option("--a", ba.a)->required();
  bench->add_option("--b", ba.b)->required();
  bench->add_option("--nmin", ba.nmin, "smallest n (doubled up to --nmax)");
  bench->add_option("--nmax", ba.nmax);
  bench->add_option("--dim", ba.dim);
  bench->add_option("--method", ba.method, "rs | cheb | both");
  bench->add_option("--repeats", ba.repeats, "timing repeats (medians reported)");
  bench->add_option("--eps", ba.eps);
  bench->add_option("--out", ba.out, "CSV file (default stdout)");
  bench->add_option("--plot", ba.plot, "gnuplot data file");

  StabilityArgs sa;
  auto* stab = app.add_subcommand("stability", "round-trip error |inv(fwd(v)) - v| / |v|");
  stab->add_option("--a", sa.a)->required();
  stab->add_option("--b", sa.b)->required();
  stab->add_option("--dims", sa.dims, "dimensions, e.g. 1,2,3")->delimiter(',');
  stab->add_option("--sizes", sa.sizes, "n values, e.g. 256,512")->delimiter(',');
  stab->add_option("--method", sa.method, "rs | cheb");
  stab->add_option("--eps", sa.eps);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    omp_set_num_threads(g.threads);
    if (plan->parsed()) return cmd_plan(pa, g);
    if (apply->parsed()) return cmd_apply(aa);
    if (bench->parsed()) return cmd_bench(ba, g);
    if (stab->parsed()) return cmd_stability(sa, g);
  } catch (const DomainError& e) {  // shape errors included
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
