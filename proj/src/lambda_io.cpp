#include "vicop/lambda_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vicop {

static_assert(std::endian::native == std::endian::little,
              "lambda checkpoints assume a little-endian host");

void save_lambda(const std::string& path, const FamilySpec& spec,
                 const Eigen::Ref<const Eigen::VectorXd>& lambda) {
  if (lambda.size() != make_layout(spec).total) {
    throw std::invalid_argument("save_lambda: lambda size does not match spec");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("save_lambda: cannot open " + path);
  }
  const std::uint32_t header[4] = {
      static_cast<std::uint32_t>(spec.m), static_cast<std::uint32_t>(spec.k),
      static_cast<std::uint32_t>(spec.kind), spec.skew ? 1u : 0u};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(lambda.data()),
            static_cast<std::streamsize>(lambda.size() * sizeof(double)));
  if (!out) {
    throw std::runtime_error("save_lambda: write failed for " + path);
  }
}

LambdaCheckpoint load_lambda(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_lambda: cannot open " + path);
  }
  std::uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) {
    throw std::runtime_error("load_lambda: truncated header in " + path);
  }
  LambdaCheckpoint cp;
  cp.spec.m = static_cast<int>(header[0]);
  cp.spec.k = static_cast<int>(header[1]);
  if (header[2] > 2) {
    throw std::runtime_error("load_lambda: unknown transform kind in " + path);
  }
  cp.spec.kind = static_cast<TransformKind>(header[2]);
  cp.spec.skew = header[3] != 0;
  const int total = make_layout(cp.spec).total;
  cp.lambda.resize(total);
  in.read(reinterpret_cast<char*>(cp.lambda.data()),
          static_cast<std::streamsize>(total * sizeof(double)));
  if (!in) {
    throw std::runtime_error("load_lambda: truncated payload in " + path);
  }
  return cp;
}

}  // namespace vicop
