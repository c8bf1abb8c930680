#pragma once

#include "maps/eval.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace maps {

// CSV headers. Reals are written with 17 significant digits.
inline constexpr const char* kSuccessHeader = "suite,task,name,method,success_rate";
inline constexpr const char* kUsageHeader =
    "task,module,mean_gate,argmax_fraction,effective_modules";
inline constexpr const char* kAblationHeader =
    "term,task,success_rate,mean_gate_row,effective_modules,"
    "aggregate_effective_modules,pairwise_overlap";
inline constexpr const char* kComparisonHeader =
    "suite,task,experts,method,mean,std,seeds";
inline constexpr const char* kTallyHeader =
    "method,better,worse,ties,cells,better_fraction,worse_fraction";

std::string format_real(double v);

void write_success_csv(std::ostream& out, const TaskSuite& suite, Method method,
                       std::span<const double> rates);
void write_usage_csv(std::ostream& out, const UsageReport& usage);
void write_ablation_csv(std::ostream& out, const AblationResult& result);
void write_comparison_csv(std::ostream& out, const ComparisonTable& table);
void write_tally_csv(std::ostream& out, std::span<const Tally> tally);

/// Grouped bar chart: one group per task, one bar per module.
void write_usage_svg(std::ostream& out, const UsageReport& usage,
                     std::string_view title);

}  // namespace maps
