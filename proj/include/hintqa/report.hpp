#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "hintqa/metrics.hpp"

namespace hintqa {

/// One line per cell: model,method,group,ordering,count,em,precision,recall,f1
/// with percentages at two decimals.
std::string render_csv(const EvalReport& report);

/// Aligned text tables. The first groups metric blocks by method and group
/// with one column per model. A second, ExactMatch-only table by group and
/// ordering follows when the Convergence method has two or more orderings.
std::string render_table(const EvalReport& report);

/// Full-precision machine-readable summary.
nlohmann::json render_json(const EvalReport& report);

}  // namespace hintqa
