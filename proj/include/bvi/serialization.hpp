#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bvi/algorithms.hpp"
#include "bvi/expfam.hpp"
#include "bvi/targets.hpp"

namespace bvi {

inline constexpr const char* kTraceSchema = "bvi-trace/1";

/// Formats a double so that it parses back to the same value; NaN and
/// infinities print as nan, inf, -inf.
std::string format_double(double v);

/// {family, d, Q?, theta1, theta2}. Q is written only when it is not the identity.
nlohmann::json params_to_json(const ExponentialFamily& fam, const NaturalParams& theta);
std::pair<ExponentialFamily, NaturalParams> params_from_json(const nlohmann::json& j);

/// Extra per-record columns appended after the fixed trace columns.
struct TraceColumns {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;  // one row per record
};

/// Fixed trace columns, in order.
const std::vector<std::string>& trace_csv_columns();

void write_trace_csv(std::ostream& os, const RunTrace& trace, const TraceColumns& extra = {});
nlohmann::json trace_to_json(const ExponentialFamily& fam, const RunTrace& trace,
                             bool include_theta);

nlohmann::json dataset_to_json(const RegressionDataset& data);
RegressionDataset dataset_from_json(const nlohmann::json& j);
/// Columns x1..xd, y, split (train or test).
void write_dataset_csv(std::ostream& os, const RegressionDataset& data);

}  // namespace bvi
