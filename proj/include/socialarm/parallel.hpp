#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "socialarm/harness.hpp"
#include "socialarm/robot_model.hpp"

namespace socialarm {

/// Called once per record of run `index`. Invocations for one run are
/// sequential; different runs may call concurrently.
using BatchVisitor = std::function<void(std::size_t index, const TraceRecord&)>;

/// Reference implementations, single threaded.
namespace serial {
std::vector<Transform> forward_kinematics_batch(const RobotModel& model, std::span<const JointPose> poses);
std::vector<RunResult> run_batch(std::span<const Scenario> scenarios);
std::vector<RunMetrics> run_batch(std::span<const Scenario> scenarios, const BatchVisitor& visit);
}  // namespace serial

/// OpenMP versions. Results are identical to the serial ones: every element
/// is computed by the same code with no shared mutable state.
namespace parallel {
std::vector<Transform> forward_kinematics_batch(const RobotModel& model, std::span<const JointPose> poses);
std::vector<RunResult> run_batch(std::span<const Scenario> scenarios);
std::vector<RunMetrics> run_batch(std::span<const Scenario> scenarios, const BatchVisitor& visit);
int max_threads();
}  // namespace parallel

}  // namespace socialarm
