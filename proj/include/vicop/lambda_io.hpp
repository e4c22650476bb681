#ifndef VICOP_LAMBDA_IO_HPP
#define VICOP_LAMBDA_IO_HPP

#include <string>

#include "vicop/family.hpp"

namespace vicop {

// Binary lambda checkpoint: header of four little-endian uint32 values
// (m, k, transform kind, skew flag) followed by the flat lambda vector as
// little-endian 64-bit floats in layout order.
void save_lambda(const std::string& path, const FamilySpec& spec,
                 const Eigen::Ref<const Eigen::VectorXd>& lambda);

struct LambdaCheckpoint {
  FamilySpec spec;
  Eigen::VectorXd lambda;
};
LambdaCheckpoint load_lambda(const std::string& path);

}  // namespace vicop

#endif
