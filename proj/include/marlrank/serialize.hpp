#pragma once

// Binary checkpoint format (all integers and doubles little-endian):
//
//   magic "MRLKPRMS" | u32 version | u64 feature_dim | u64 neighbors | u64 hidden
//   | u32 activation | u32 encoding
//   then for each of similarity, hidden1, hidden2, output:
//     u64 rows | u64 cols | rows*cols f64 (column-major) | u64 n | n f64 bias

#include <marlrank/nn.hpp>

#include <filesystem>
#include <iosfwd>

namespace marlrank {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_params(std::ostream& out, const nn::ModelParams<Real>& params);
nn::ModelParams<Real> load_params(std::istream& in);

void save_params(const std::filesystem::path& file, const nn::ModelParams<Real>& params);
nn::ModelParams<Real> load_params(const std::filesystem::path& file);

}  // namespace marlrank
