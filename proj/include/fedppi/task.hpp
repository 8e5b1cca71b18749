#pragma once

#include <string>
#include <string_view>

namespace fedppi {

enum class TaskKind { kMean, kQuantile, kLogistic, kLinear };

std::string_view to_string(TaskKind kind) noexcept;
/// Throws a validation error for unknown names.
TaskKind parse_task_kind(std::string_view name);

/// Tasks whose confidence set is a retained grid subset.
constexpr bool is_grid_task(TaskKind kind) noexcept {
  return kind == TaskKind::kQuantile || kind == TaskKind::kLogistic;
}

}  // namespace fedppi
