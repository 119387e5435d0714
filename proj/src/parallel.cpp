#include "socialarm/parallel.hpp"

#include <exception>
#include <mutex>

#include <omp.h>

namespace socialarm {

namespace serial {

std::vector<Transform> forward_kinematics_batch(const RobotModel& model, std::span<const JointPose> poses) {
  std::vector<Transform> out(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) out[i] = forward_kinematics(model, poses[i]);
  return out;
}

std::vector<RunResult> run_batch(std::span<const Scenario> scenarios) {
  std::vector<RunResult> out;
  out.reserve(scenarios.size());
  for (const auto& s : scenarios) out.push_back(run(s));
  return out;
}

std::vector<RunMetrics> run_batch(std::span<const Scenario> scenarios, const BatchVisitor& visit) {
  std::vector<RunMetrics> out;
  out.reserve(scenarios.size());
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    out.push_back(run(scenarios[i], [&](const TraceRecord& r) {
      if (visit) visit(i, r);
    }));
  }
  return out;
}

}  // namespace serial

namespace parallel {

namespace {

/// Keeps the first exception thrown inside a parallel region.
class FirstError {
 public:
  void capture() {
    std::lock_guard lock(mu_);
    if (!error_) error_ = std::current_exception();
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
};

}  // namespace

int max_threads() { return omp_get_max_threads(); }

std::vector<Transform> forward_kinematics_batch(const RobotModel& model, std::span<const JointPose> poses) {
  std::vector<Transform> out(poses.size());
  const auto n = static_cast<std::ptrdiff_t>(poses.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = forward_kinematics(model, poses[i]);
  return out;
}

std::vector<RunResult> run_batch(std::span<const Scenario> scenarios) {
  std::vector<RunResult> out(scenarios.size());
  FirstError error;
  const auto n = static_cast<std::ptrdiff_t>(scenarios.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = run(scenarios[i]);
    } catch (...) {
      error.capture();
    }
  }
  error.rethrow();
  return out;
}

std::vector<RunMetrics> run_batch(std::span<const Scenario> scenarios, const BatchVisitor& visit) {
  std::vector<RunMetrics> out(scenarios.size());
  FirstError error;
  const auto n = static_cast<std::ptrdiff_t>(scenarios.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto index = static_cast<std::size_t>(i);
      out[i] = run(scenarios[i], [&](const TraceRecord& r) {
        if (visit) visit(index, r);
      });
    } catch (...) {
      error.capture();
    }
  }
  error.rethrow();
  return out;
}

}  // namespace parallel

}  // namespace socialarm
