#include "jacfast/tensor_transform.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "jacfast/error.hpp"

namespace jacfast {

TensorPlan::TensorPlan(std::vector<std::shared_ptr<const TransformPlan>> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 3) throw DomainError("tensor plans support 1 to 3 axes");
  for (const auto& a : axes_)
    if (!a) throw DomainError("tensor plan: null axis plan");
  const auto& f = *axes_.front();
  for (const auto& a : axes_) {
    if (a->n() != f.n()) throw ShapeError("tensor plan: every axis needs the same n");
    if (a->mode() != f.mode()) throw DomainError("tensor plan: mixed uniform/nonuniform axes");
    if (a->params().a != f.params().a || a->params().b != f.params().b)
      throw DomainError("tensor plan: every axis needs the same (a, b)");
  }
}

std::size_t TensorPlan::size() const {
  std::size_t s = 1;
  for (int i = 0; i < dims(); ++i) s *= static_cast<std::size_t>(n());
  return s;
}

TensorPlan build_tensor_plan(const JacobiParams& p, std::int64_t n, int dims, const PlanOptions& opt) {
  if (dims < 1 || dims > 3) throw DomainError("dims must be 1, 2 or 3");
  auto one = std::make_shared<const TransformPlan>(build_plan_1d(p, n, opt));
  return TensorPlan(std::vector<std::shared_ptr<const TransformPlan>>(static_cast<std::size_t>(dims), one));
}

TensorPlan build_tensor_plan(const JacobiParams& p, const std::vector<std::vector<double>>& points,
                             const PlanOptions& opt) {
  std::vector<std::shared_ptr<const TransformPlan>> axes;
  for (const auto& pts : points) {
    if (pts.size() != points.front().size()) throw ShapeError("tensor plan: unequal point counts per axis");
    axes.push_back(std::make_shared<const TransformPlan>(build_plan_1d(p, pts, opt)));
  }
  return TensorPlan(std::move(axes));
}

namespace {

std::vector<int> axis_order(const TensorPlan& plan, std::span<const int> order) {
  std::vector<int> o(order.begin(), order.end());
  if (o.empty()) {
    o.resize(static_cast<std::size_t>(plan.dims()));
    std::iota(o.begin(), o.end(), 0);
  }
  std::vector<int> sorted = o;
  std::ranges::sort(sorted);
  for (int i = 0; i < plan.dims(); ++i)
    if (sorted.size() != static_cast<std::size_t>(plan.dims()) || sorted[i] != i)
      throw DomainError("axis order must be a permutation of the tensor axes");
  return o;
}

template <class Apply>
std::vector<double> sweep(const TensorPlan& plan, std::span<const double> in, std::span<const int> order,
                          Apply apply) {
  if (in.size() != plan.size()) throw ShapeError("tensor length does not match the plan");
  const auto o = axis_order(plan, order);
  const auto n = static_cast<std::size_t>(plan.n());
  const std::size_t total = plan.size(), lines = total / n;
  std::vector<double> cur(in.begin(), in.end()), next(total);
  for (int ax : o) {
    // stride of axis `ax` in row-major layout
    std::size_t stride = 1;
    for (int k = ax + 1; k < plan.dims(); ++k) stride *= n;
    const TransformPlan& ap = plan.axis(ax);
#pragma omp parallel
    {
      std::vector<double> line(n), res(n);
#pragma omp for schedule(static)
      for (std::size_t l = 0; l < lines; ++l) {
        // line l: split into the index above the axis and the one below it
        const std::size_t hi = l / stride, lo = l % stride;
        const std::size_t base = hi * stride * n + lo;
        for (std::size_t i = 0; i < n; ++i) line[i] = cur[base + i * stride];
        apply(ap, line, res);
        for (std::size_t i = 0; i < n; ++i) next[base + i * stride] = res[i];
      }
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace

std::vector<double> forward_nd(const TensorPlan& plan, std::span<const double> alpha, std::span<const int> order) {
  return sweep(plan, alpha, order, [](const TransformPlan& p, std::span<const double> x, std::span<double> y) {
    apply_forward(p, x, y, false);
  });
}

std::vector<double> inverse_nd(const TensorPlan& plan, std::span<const double> g, std::span<const int> order) {
  if (plan.mode() != TransformMode::uniform) throw DomainError("inverse transform needs a uniform plan");
  return sweep(plan, g, order, [](const TransformPlan& p, std::span<const double> x, std::span<double> y) {
    apply_inverse(p, x, y, false);
  });
}

void save_tensor_plan(const TensorPlan& plan, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  bool shared = true;
  for (int i = 1; i < plan.dims(); ++i) shared = shared && &plan.axis(i) == &plan.axis(0);
  const auto dims = static_cast<std::uint32_t>(plan.dims());
  detail::write_plan_header(f, dims, shared ? 1 : dims);
  for (int i = 0; i < (shared ? 1 : plan.dims()); ++i) detail::write_plan_body(plan.axis(i), f);
  f.flush();
  if (!f) throw IoError("write failed: " + path);
}

TensorPlan load_tensor_plan(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  const auto [dims, bodies] = detail::read_plan_header(f);
  std::vector<std::shared_ptr<const TransformPlan>> axes;
  for (std::uint32_t i = 0; i < bodies; ++i)
    axes.push_back(std::make_shared<const TransformPlan>(detail::read_plan_body(f)));
  while (axes.size() < dims) axes.push_back(axes.front());
  return TensorPlan(std::move(axes));
}

}  // namespace jacfast
