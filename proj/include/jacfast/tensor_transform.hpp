#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "jacfast/transform1d.hpp"

namespace jacfast {

// d-dimensional tensors (d = 1..3) of n^d values, row-major: the last axis
// varies fastest, entry (i0, i1, i2) at i0 n^2 + i1 n + i2.
class TensorPlan {
 public:
  // One plan per axis; all must share (a, b), n and mode.
  explicit TensorPlan(std::vector<std::shared_ptr<const TransformPlan>> axes);

  int dims() const { return static_cast<int>(axes_.size()); }
  std::int64_t n() const { return axes_.front()->n(); }
  std::size_t size() const;
  TransformMode mode() const { return axes_.front()->mode(); }
  const TransformPlan& axis(int i) const { return *axes_.at(static_cast<std::size_t>(i)); }

 private:
  std::vector<std::shared_ptr<const TransformPlan>> axes_;
};

// Uniform tensor plan: the 1D plan is built once and reused on every axis.
TensorPlan build_tensor_plan(const JacobiParams& p, std::int64_t n, int dims, const PlanOptions& opt);
// Nonuniform tensor grid, one point set per axis (equal lengths).
TensorPlan build_tensor_plan(const JacobiParams& p, const std::vector<std::vector<double>>& points,
                             const PlanOptions& opt);

// Axis-by-axis application. `order` lists the axes in application order
// (default 0, 1, ...); any permutation gives the same result up to rounding.
std::vector<double> forward_nd(const TensorPlan& plan, std::span<const double> alpha,
                               std::span<const int> order = {});
// Uniform plans only.
std::vector<double> inverse_nd(const TensorPlan& plan, std::span<const double> g, std::span<const int> order = {});

// JTPL file with dims > 1: one body for uniform plans (shared by all axes),
// one per axis otherwise. 1D plan files load as single-axis tensor plans.
void save_tensor_plan(const TensorPlan& plan, const std::string& path);
TensorPlan load_tensor_plan(const std::string& path);

}  // namespace jacfast
