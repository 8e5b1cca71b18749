#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedppi/datagen.hpp"
#include "fedppi/error.hpp"
#include "fedppi/format.hpp"

namespace fedppi {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::kIo, "cannot write '" + path.string() + "'");
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::kIo, "cannot read '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string feature_header(Eigen::Index d) {
  std::string h;
  for (Eigen::Index j = 0; j < d; ++j) {
    h += "x" + std::to_string(j) + ",";
  }
  return h;
}

// "# key=value" metadata line; returns false for other lines.
bool meta(const std::string& line, std::string& key, std::string& value) {
  if (line.rfind("# ", 0) != 0) return false;
  const auto eq = line.find('=');
  if (eq == std::string::npos) return false;
  key = std::string(trim(std::string_view(line).substr(2, eq - 2)));
  value = std::string(trim(std::string_view(line).substr(eq + 1)));
  return true;
}

}  // namespace

void write_population_csv(const Population& pop,
                          const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# fedppi-population v1\n";
  out << "# task=" << to_string(pop.task) << "\n";
  out << "# true_theta=";
  for (std::size_t i = 0; i < pop.true_theta.size(); ++i) {
    out << (i ? ";" : "") << format_double(pop.true_theta[i]);
  }
  out << "\n" << feature_header(pop.features.cols()) << "y,f\n";
  for (Eigen::Index i = 0; i < pop.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < pop.features.cols(); ++j) {
      out << format_double(pop.features(i, j)) << ",";
    }
    out << format_double(pop.outcomes[i]) << ","
        << format_double(pop.predictions[i]) << "\n";
  }
  if (!out) fail(ErrorCategory::kIo, "write failed for '" + path.string() + "'");
}

Population read_population_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  Population pop;
  std::size_t i = 0;
  std::string key;
  std::string value;
  for (; i < lines.size() && !lines[i].empty() && lines[i][0] == '#'; ++i) {
    if (!meta(lines[i], key, value)) continue;
    if (key == "task") pop.task = parse_task_kind(value);
    if (key == "true_theta" && !value.empty()) {
      for (auto part : split(value, ';')) {
        pop.true_theta.push_back(parse_double(part, "true_theta"));
      }
    }
  }
  require(i < lines.size(), "'" + path.string() + "': missing header");
  const auto columns = split(lines[i], ',').size();
  require(columns >= 3, "'" + path.string() + "': expected x..., y, f");
  const auto d = static_cast<Eigen::Index>(columns - 2);
  ++i;
  std::vector<std::vector<double>> rows;
  for (; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split(lines[i], ',');
    require(fields.size() == columns, "'" + path.string() + "' line " +
                                          std::to_string(i + 1) +
                                          ": wrong field count");
    std::vector<double> r;
    for (auto f : fields) r.push_back(parse_double(f, "population value"));
    rows.push_back(std::move(r));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  pop.features.resize(n, d);
  pop.outcomes.resize(n);
  pop.predictions.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < d; ++j) pop.features(r, j) = rows[r][j];
    pop.outcomes[r] = rows[r][d];
    pop.predictions[r] = rows[r][d + 1];
  }
  return pop;
}

void write_client_csv(const ClientDataset& ds,
                      const std::filesystem::path& path) {
  ds.validate();
  auto out = open_out(path);
  const auto d = static_cast<Eigen::Index>(ds.dims());
  out << "# fedppi-client v1\n";
  out << "# client_id=" << ds.client_id << "\n";
  out << "role,row," << feature_header(d) << "y,f\n";
  const auto source = [](const std::vector<std::size_t>& rows, Eigen::Index i) {
    return static_cast<std::size_t>(i) < rows.size()
               ? std::to_string(rows[static_cast<std::size_t>(i)])
               : std::string();
  };
  for (Eigen::Index i = 0; i < ds.labeled_x.rows(); ++i) {
    out << "labeled," << source(ds.labeled_rows, i) << ",";
    for (Eigen::Index j = 0; j < d; ++j) {
      out << format_double(ds.labeled_x(i, j)) << ",";
    }
    out << format_double(ds.labeled_y[i]) << ","
        << format_double(ds.labeled_pred[i]) << "\n";
  }
  for (Eigen::Index i = 0; i < ds.unlabeled_x.rows(); ++i) {
    out << "unlabeled," << source(ds.unlabeled_rows, i) << ",";
    for (Eigen::Index j = 0; j < d; ++j) {
      out << format_double(ds.unlabeled_x(i, j)) << ",";
    }
    out << "," << format_double(ds.unlabeled_pred[i]) << "\n";
  }
  if (!out) fail(ErrorCategory::kIo, "write failed for '" + path.string() + "'");
}

ClientDataset read_client_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  ClientDataset ds;
  ds.client_id = path.stem().string();
  std::size_t i = 0;
  std::string key;
  std::string value;
  for (; i < lines.size() && !lines[i].empty() && lines[i][0] == '#'; ++i) {
    if (meta(lines[i], key, value) && key == "client_id") ds.client_id = value;
  }
  require(i < lines.size(), "'" + path.string() + "': missing header");
  const auto columns = split(lines[i], ',').size();
  require(columns >= 5, "'" + path.string() + "': expected role,row,x...,y,f");
  const std::size_t d = columns - 4;
  ++i;
  std::vector<std::vector<double>> lab;
  std::vector<std::vector<double>> unl;
  std::vector<std::size_t> lab_rows;
  std::vector<std::size_t> unl_rows;
  for (; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split(lines[i], ',');
    const std::string where =
        "'" + path.string() + "' line " + std::to_string(i + 1);
    require(fields.size() == columns, where + ": wrong field count");
    const bool labeled = fields[0] == "labeled";
    require(labeled || fields[0] == "unlabeled", where + ": unknown role");
    std::vector<double> r;
    for (std::size_t j = 0; j < d; ++j) {
      r.push_back(parse_double(fields[2 + j], "feature"));
    }
    r.push_back(labeled ? parse_double(fields[2 + d], "y") : 0.0);
    r.push_back(parse_double(fields[3 + d], "f"));
    auto& rows = labeled ? lab_rows : unl_rows;
    if (!trim(fields[1]).empty()) {
      rows.push_back(static_cast<std::size_t>(parse_integer(fields[1], "row")));
    }
    (labeled ? lab : unl).push_back(std::move(r));
  }
  const auto fill = [d](const std::vector<std::vector<double>>& rows,
                        Eigen::MatrixXd& x, Eigen::VectorXd* y,
                        Eigen::VectorXd& f) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    x.resize(n, static_cast<Eigen::Index>(d));
    f.resize(n);
    if (y) y->resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < d; ++j) x(r, j) = rows[r][j];
      if (y) (*y)[r] = rows[r][d];
      f[r] = rows[r][d + 1];
    }
  };
  fill(lab, ds.labeled_x, &ds.labeled_y, ds.labeled_pred);
  fill(unl, ds.unlabeled_x, nullptr, ds.unlabeled_pred);
  ds.labeled_rows = std::move(lab_rows);
  ds.unlabeled_rows = std::move(unl_rows);
  ds.validate();
  return ds;
}

}  // namespace fedppi
