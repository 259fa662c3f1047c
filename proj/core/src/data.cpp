#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <string_view>

#include "robreg/errors.hpp"
#include "robreg/model.hpp"

namespace robreg {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << "csv line " << line_no << ": '" << field << "' is not a finite number";
    throw DataError(msg.str());
  }
  return value;
}

}  // namespace

RegressionData make_regression_data(Eigen::VectorXd y, const Eigen::MatrixXd& covariates,
                                    std::vector<std::string> covariate_names) {
  if (covariates.rows() != y.size()) {
    throw DataError("response and covariates have different numbers of rows");
  }
  RegressionData data;
  data.X.resize(y.size(), covariates.cols() + 1);
  data.X.col(0).setOnes();
  data.X.rightCols(covariates.cols()) = covariates;
  data.y = std::move(y);
  data.has_intercept = true;
  data.column_names.push_back("intercept");
  for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
    data.column_names.push_back(static_cast<std::size_t>(j) < covariate_names.size()
                                    ? covariate_names[static_cast<std::size_t>(j)]
                                    : "x" + std::to_string(j + 1));
  }
  validate(data);
  return data;
}

void validate(const RegressionData& data) {
  if (data.p() < 1) throw DataError("design matrix has no columns");
  if (data.y.size() != data.n()) throw DataError("response length differs from design rows");
  if (data.n() < data.p()) {
    std::ostringstream msg;
    msg << "need at least as many observations as coefficients (n = " << data.n()
        << ", p = " << data.p() << ")";
    throw DataError(msg.str());
  }
  if (data.has_intercept && !(data.X.col(0).array() == 1.0).all()) {
    throw DataError("first design column must be the intercept (all ones)");
  }
}

RegressionData read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    for (auto f : split(t)) header.emplace_back(f);
    break;
  }
  if (header.empty()) throw DataError("csv: missing header row");

  std::size_t response = header.size();
  std::vector<std::string> names;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "y") {
      if (response != header.size()) throw DataError("csv: more than one column named 'y'");
      response = k;
    } else {
      if (header[k].empty()) throw DataError("csv: empty column name in header");
      names.push_back(header[k]);
    }
  }
  if (response == header.size()) throw DataError("csv: no response column named 'y'");

  std::vector<double> ys;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split(t);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "csv line " << line_no << ": expected " << header.size() << " fields, found "
          << fields.size();
      throw DataError(msg.str());
    }
    std::vector<double> row;
    row.reserve(names.size());
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const double v = parse_number(fields[k], line_no);
      if (k == response) {
        ys.push_back(v);
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("csv: no data rows");

  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  Eigen::MatrixXd covariates(static_cast<Eigen::Index>(rows.size()),
                             static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return make_regression_data(std::move(y), covariates, std::move(names));
}

RegressionData read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return read_csv(in);
}

StandardizedData standardize(const RegressionData& data) {
  validate(data);
  const auto n = static_cast<double>(data.n());
  if (data.n() < 2) throw DataError("standardize: need at least two observations");

  StandardizedData out{data, {}};
  auto& t = out.transform;
  t.column_mean = Eigen::VectorXd::Zero(data.p());
  t.column_scale = Eigen::VectorXd::Ones(data.p());

  auto scale_of = [n](const Eigen::VectorXd& centered) {
    return std::sqrt(centered.squaredNorm() / n);
  };

  t.response_mean = data.y.mean();
  Eigen::VectorXd yc = data.y.array() - t.response_mean;
  t.response_scale = scale_of(yc);
  if (!(t.response_scale > 0.0)) throw DataError("standardize: response is constant");
  out.data.y = yc / t.response_scale;

  for (Eigen::Index j = data.has_intercept ? 1 : 0; j < data.p(); ++j) {
    t.column_mean(j) = data.X.col(j).mean();
    Eigen::VectorXd c = data.X.col(j).array() - t.column_mean(j);
    t.column_scale(j) = scale_of(c);
    // Relative test: a column that is constant up to rounding is degenerate.
    if (!(t.column_scale(j) > 1e-12 * (std::abs(t.column_mean(j)) + 1e-300))) {
      const std::string name = static_cast<std::size_t>(j) < data.column_names.size()
                                   ? data.column_names[static_cast<std::size_t>(j)]
                                   : std::to_string(j);
      throw DataError("standardize: degenerate (constant) column '" + name + "'");
    }
    out.data.X.col(j) = c / t.column_scale(j);
  }
  out.data.standardized = true;
  return out;
}

Eigen::VectorXd ols_fit(const RegressionData& data) {
  validate(data);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);
  if (qr.rank() < data.p()) {
    std::ostringstream msg;
    msg << "rank-deficient design: rank " << qr.rank() << " < " << data.p() << " columns";
    throw DataError(msg.str());
  }
  return qr.solve(data.y);
}

}  // namespace robreg
