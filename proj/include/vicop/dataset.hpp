#ifndef VICOP_DATASET_HPP
#define VICOP_DATASET_HPP

#include <string>
#include <vector>

#include "vicop/targets.hpp"

namespace vicop {

struct LoadOptions {
  bool add_intercept = false;
  bool standardize = false;        // per-column z-score of the features
  std::string subject_column;      // when set, that column holds subject ids
};

struct LoadedDataset {
  DesignMatrix data;
  std::vector<int> subject;        // empty unless subject_column was given
  int n_subjects = 0;
  Eigen::VectorXd feature_mean;    // recorded when standardize is on
  Eigen::VectorXd feature_sd;
};

// CSV with a header row; the last column is the binary response, the rest
// are numeric features.  Throws std::runtime_error on ragged rows,
// non-numeric cells or a non-binary response.
LoadedDataset load_dataset(const std::string& path, const LoadOptions& opts = {});

}  // namespace vicop

#endif
