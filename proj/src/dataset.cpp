#include "vicop/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vicop {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim whitespace and CR
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') {
    out.push_back("");
  }
  return out;
}

double parse_number(const std::string& s, int row, const std::string& col) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("load_dataset: non-numeric cell '" + s + "' in row " +
                             std::to_string(row) + ", column " + col);
  }
}

}  // namespace

LoadedDataset load_dataset(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_dataset: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_dataset: empty file " + path);
  }
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2) {
    throw std::runtime_error("load_dataset: need at least one feature and a response");
  }
  int subject_idx = -1;
  if (!opts.subject_column.empty()) {
    const auto it = std::find(header.begin(), header.end(), opts.subject_column);
    if (it == header.end()) {
      throw std::runtime_error("load_dataset: subject column '" + opts.subject_column +
                               "' not found");
    }
    subject_idx = static_cast<int>(it - header.begin());
    if (subject_idx == static_cast<int>(header.size()) - 1) {
      throw std::runtime_error("load_dataset: subject column cannot be the response");
    }
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  std::vector<int> subject;
  std::map<std::string, int> subject_ids;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("load_dataset: ragged row " + std::to_string(row_no) +
                               " (" + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()) + ")");
    }
    std::vector<double> feats;
    feats.reserve(header.size() - 1);
    for (size_t c = 0; c + 1 < cells.size(); ++c) {
      if (static_cast<int>(c) == subject_idx) {
        const auto [it, inserted] =
            subject_ids.emplace(cells[c], static_cast<int>(subject_ids.size()));
        subject.push_back(it->second);
        continue;
      }
      feats.push_back(parse_number(cells[c], row_no, header[c]));
    }
    const double y = parse_number(cells.back(), row_no, header.back());
    if (y != 0.0 && y != 1.0) {
      throw std::runtime_error("load_dataset: non-binary response " + cells.back() +
                               " in row " + std::to_string(row_no));
    }
    rows.push_back(std::move(feats));
    ys.push_back(y);
  }
  if (rows.empty()) {
    throw std::runtime_error("load_dataset: no data rows in " + path);
  }

  const int n = static_cast<int>(rows.size());
  const int p_raw = static_cast<int>(rows.front().size());
  LoadedDataset out;
  Eigen::MatrixXd X(n, p_raw);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p_raw; ++j) {
      X(i, j) = rows[i][j];
    }
  }

  if (opts.standardize) {
    out.feature_mean = X.colwise().mean();
    Eigen::VectorXd sd(p_raw);
    for (int j = 0; j < p_raw; ++j) {
      const double var = (X.col(j).array() - out.feature_mean[j]).square().sum() / n;
      sd[j] = std::sqrt(std::max(var, 1e-300));
      if (sd[j] > 0.0) {
        X.col(j) = (X.col(j).array() - out.feature_mean[j]) / sd[j];
      }
    }
    out.feature_sd = sd;
  }

  std::vector<std::string> names(header.begin(), header.end() - 1);
  if (subject_idx >= 0) {
    names.erase(names.begin() + subject_idx);
  }
  if (opts.add_intercept) {
    Eigen::MatrixXd Xi(n, p_raw + 1);
    Xi.col(0).setOnes();
    Xi.rightCols(p_raw) = X;
    X = std::move(Xi);
    names.insert(names.begin(), "(intercept)");
  }

  out.data.X = std::move(X);
  out.data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  out.data.feature_names = std::move(names);
  out.subject = std::move(subject);
  out.n_subjects = static_cast<int>(subject_ids.size());
  out.data.validate();
  return out;
}

}  // namespace vicop
