#include "fedppi/task.hpp"

#include "fedppi/error.hpp"

namespace fedppi {

std::string_view to_string(TaskKind kind) noexcept {
  switch (kind) {
    case TaskKind::kMean: return "mean";
    case TaskKind::kQuantile: return "quantile";
    case TaskKind::kLogistic: return "logistic";
    case TaskKind::kLinear: return "linear";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "mean") return TaskKind::kMean;
  if (name == "quantile") return TaskKind::kQuantile;
  if (name == "logistic") return TaskKind::kLogistic;
  if (name == "linear") return TaskKind::kLinear;
  fail(ErrorCategory::kValidation,
       "unsupported task kind '" + std::string(name) + "'");
}

}  // namespace fedppi
