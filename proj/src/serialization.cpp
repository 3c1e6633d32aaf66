#include "bvi/serialization.hpp"

#include <charconv>
#include <cmath>

#include "bvi/error.hpp"

namespace bvi {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::VectorXd vector_from(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidInput(std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw InvalidInput(std::string(what) + " must be an array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw InvalidInput(std::string(what) + " rows differ in length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

// JSON has no NaN or infinity.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json params_to_json(const ExponentialFamily& fam, const NaturalParams& theta) {
  json j;
  j["family"] = to_string(fam.kind());
  j["d"] = fam.dim();
  if (fam.kind() == FamilyKind::DiagGaussian && !fam.frame_is_identity()) {
    j["Q"] = matrix_json(fam.frame());
  }
  j["theta1"] = vector_json(theta.vec);
  if (fam.kind() == FamilyKind::FullGaussian) {
    j["theta2"] = matrix_json(theta.mat);
  } else {
    j["theta2"] = vector_json(theta.mat.col(0));
  }
  return j;
}

std::pair<ExponentialFamily, NaturalParams> params_from_json(const json& j) {
  try {
    const FamilyKind kind = family_kind_from_string(j.at("family").get<std::string>());
    const int d = j.at("d").get<int>();
    ExponentialFamily fam = ExponentialFamily::centered_gaussian_1d();
    if (kind == FamilyKind::FullGaussian) {
      fam = ExponentialFamily::full_gaussian(d);
    } else if (kind == FamilyKind::DiagGaussian) {
      fam = j.contains("Q") ? ExponentialFamily::diag_gaussian(matrix_from(j["Q"], "Q"))
                            : ExponentialFamily::diag_gaussian(d);
    }
    ParamVector p = fam.zero();
    p.vec = vector_from(j.at("theta1"), "theta1");
    if (kind == FamilyKind::FullGaussian) {
      p.mat = matrix_from(j.at("theta2"), "theta2");
    } else {
      p.mat = vector_from(j.at("theta2"), "theta2");
    }
    if (!fam.has_shape(p)) throw InvalidInput("parameter blocks do not match the family dimension");
    return {fam, NaturalParams(std::move(p))};
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed parameter JSON: ") + e.what());
  }
}

const std::vector<std::string>& trace_csv_columns() {
  static const std::vector<std::string> cols = {"k",     "objective",   "renyi_bound",
                                                "bregman_step", "ess", "prox_active",
                                                "repairs", "theta_norm"};
  return cols;
}

void write_trace_csv(std::ostream& os, const RunTrace& trace, const TraceColumns& extra) {
  if (!extra.names.empty() && extra.rows.size() != trace.records.size()) {
    throw InvalidInput("trace columns: one row per record expected");
  }
  const auto& cols = trace_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  for (const auto& n : extra.names) os << "," << n;
  os << "\n";
  for (std::size_t r = 0; r < trace.records.size(); ++r) {
    const IterationRecord& rec = trace.records[r];
    os << rec.k << "," << format_double(rec.objective) << "," << format_double(rec.renyi_bound)
       << "," << format_double(rec.bregman_step) << "," << format_double(rec.ess) << ","
       << (rec.prox_active ? 1 : 0) << "," << rec.repairs << "," << format_double(rec.theta_norm);
    if (!extra.names.empty()) {
      for (double v : extra.rows[r]) os << "," << format_double(v);
    }
    os << "\n";
  }
}

json trace_to_json(const ExponentialFamily& fam, const RunTrace& trace, bool include_theta) {
  json j;
  j["schema"] = kTraceSchema;
  j["status"] = to_string(trace.status);
  json recs = json::array();
  for (const IterationRecord& rec : trace.records) {
    json r;
    r["k"] = rec.k;
    r["objective"] = number_or_null(rec.objective);
    r["renyi_bound"] = number_or_null(rec.renyi_bound);
    r["bregman_step"] = number_or_null(rec.bregman_step);
    r["ess"] = number_or_null(rec.ess);
    r["prox_active"] = rec.prox_active;
    r["repairs"] = rec.repairs;
    r["theta_norm"] = rec.theta_norm;
    if (include_theta) r["theta"] = params_to_json(fam, rec.theta);
    recs.push_back(std::move(r));
  }
  j["records"] = std::move(recs);
  return j;
}

json dataset_to_json(const RegressionDataset& data) {
  json j;
  j["d"] = data.d();
  j["sigma2"] = data.sigma2;
  j["s"] = data.s;
  j["rho"] = data.rho;
  j["beta_bar"] = vector_json(data.beta_bar);
  j["X"] = matrix_json(data.X);
  j["y"] = vector_json(data.y);
  j["X_test"] = matrix_json(data.X_test);
  j["y_test"] = vector_json(data.y_test);
  return j;
}

RegressionDataset dataset_from_json(const json& j) {
  try {
    RegressionDataset data;
    data.sigma2 = j.at("sigma2").get<double>();
    data.s = j.at("s").get<double>();
    data.rho = j.at("rho").get<double>();
    data.beta_bar = vector_from(j.at("beta_bar"), "beta_bar");
    data.X = matrix_from(j.at("X"), "X");
    data.y = vector_from(j.at("y"), "y");
    data.X_test = matrix_from(j.at("X_test"), "X_test");
    data.y_test = vector_from(j.at("y_test"), "y_test");
    if (data.X.rows() != data.y.size() || data.X_test.rows() != data.y_test.size() ||
        data.X.cols() != data.X_test.cols() || data.beta_bar.size() != data.X.cols() + 1) {
      throw InvalidInput("dataset blocks have inconsistent sizes");
    }
    return data;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed dataset JSON: ") + e.what());
  }
}

void write_dataset_csv(std::ostream& os, const RegressionDataset& data) {
  const int d = data.d();
  for (int i = 1; i <= d; ++i) os << "x" << i << ",";
  os << "y,split\n";
  auto rows = [&](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const char* tag) {
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      for (int i = 0; i < d; ++i) os << format_double(X(r, i)) << ",";
      os << format_double(y(r)) << "," << tag << "\n";
    }
  };
  rows(data.X, data.y, "train");
  rows(data.X_test, data.y_test, "test");
}

}  // namespace bvi
