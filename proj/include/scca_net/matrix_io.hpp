#pragma once

#include <filesystem>

#include "scca_net/netweave.hpp"

namespace scca_net {

// Binary container:
//   magic "SCCANETA" (8 bytes), u32 version = 1, u64 p,
//   p gene ids as (u32 byte length, bytes),
//   p * p float64 weights, row-major.
// All integers and floats little-endian.
void write_edge_matrix(const EdgeWeightMatrix& a, const std::filesystem::path& path);
EdgeWeightMatrix read_edge_matrix(const std::filesystem::path& path);

// CSV `gene_i,gene_j,weight` for i < j with weight > threshold.
void write_edge_csv(const EdgeWeightMatrix& a, const std::filesystem::path& path, double threshold = 0.0);

}  // namespace scca_net
