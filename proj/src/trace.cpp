#include "kavg/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kavg/format.hpp"

namespace kavg {

double average_grad_norm_sq(const RunTrace& trace) {
  if (trace.diverged) return std::numeric_limits<double>::infinity();
  const std::size_t n = std::min(trace.planned_rounds, trace.rows.size());
  if (n == 0) return trace.rows.empty() ? 0.0 : trace.rows.front().grad_norm_sq;
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) sum += trace.rows[r].grad_norm_sq;
  return sum / static_cast<double>(n);
}

bool record_row(RunTrace& trace, const Objective& oracle, std::span<const double> w, std::size_t round,
                std::uint64_t samples, std::uint64_t syncs, bool keep_params) {
  TraceRow row;
  row.round = round;
  row.samples_processed = samples;
  row.sync_count = syncs;
  const bool finite_params = std::all_of(w.begin(), w.end(), [](double x) { return std::isfinite(x); });
  if (finite_params) {
    row.grad_norm_sq = squared_norm(oracle.full_gradient(w));
    row.objective = oracle.value(w);
  } else {
    row.grad_norm_sq = std::numeric_limits<double>::infinity();
    row.objective = std::numeric_limits<double>::quiet_NaN();
  }
  row.diverged = !finite_params || !std::isfinite(row.grad_norm_sq) || !std::isfinite(row.objective);
  trace.rows.push_back(row);
  if (keep_params) trace.params.emplace_back(w.begin(), w.end());
  if (row.diverged) {
    trace.diverged = true;
    return false;
  }
  if (!oracle.in_certified_region(w) &&
      std::none_of(trace.warnings.begin(), trace.warnings.end(),
                   [](const std::string& s) { return s.rfind("left certified region", 0) == 0; })) {
    trace.warnings.push_back("left certified region at round " + std::to_string(round));
  }
  return true;
}

void finalize_trace(RunTrace& trace) {
  trace.avg_grad_norm_sq = average_grad_norm_sq(trace);
  trace.final_objective = trace.rows.empty() ? 0.0 : trace.rows.back().objective;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << "round,grad_norm_sq,objective,samples_processed,sync_count,diverged\n";
  for (const auto& r : trace.rows) {
    out << r.round << ',' << format_double(r.grad_norm_sq) << ',' << format_double(r.objective) << ','
        << r.samples_processed << ',' << r.sync_count << ',' << (r.diverged ? 1 : 0) << '\n';
  }
}

void write_params_text(std::ostream& out, const RunTrace& trace) {
  for (const auto& w : trace.params) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i) out << ' ';
      out << format_double(w[i]);
    }
    out << '\n';
  }
}

}  // namespace kavg
