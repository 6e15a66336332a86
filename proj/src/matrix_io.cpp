#include "scca_net/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "scca_net/errors.hpp"

namespace scca_net {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'C', 'C', 'A', 'N', 'E', 'T', 'A'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "binary matrix IO assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ValidationError("truncated matrix file " + path.string());
  return v;
}

}  // namespace

void write_edge_matrix(const EdgeWeightMatrix& a, const std::filesystem::path& path) {
  const auto p = static_cast<std::uint64_t>(a.gene_ids.size());
  if (a.weights.rows() != static_cast<Eigen::Index>(p) || a.weights.cols() != static_cast<Eigen::Index>(p)) {
    throw DimensionError("edge matrix does not match its gene list");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put(out, kFormatVersion);
  put(out, p);
  for (const auto& id : a.gene_ids) {
    put(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = a.weights;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * p * p));
  if (!out) throw ValidationError("write failed for " + path.string());
}

EdgeWeightMatrix read_edge_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw ValidationError(path.string() + " is not an edge matrix file");
  }
  if (get<std::uint32_t>(in, path) != kFormatVersion) throw ValidationError("unsupported matrix file version");
  const auto p = get<std::uint64_t>(in, path);
  if (p > (1u << 20)) throw ValidationError("implausible gene count in " + path.string());
  EdgeWeightMatrix a;
  a.gene_ids.reserve(p);
  for (std::uint64_t i = 0; i < p; ++i) {
    const auto len = get<std::uint32_t>(in, path);
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw ValidationError("truncated matrix file " + path.string());
    a.gene_ids.push_back(std::move(id));
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(static_cast<Eigen::Index>(p),
                                                                            static_cast<Eigen::Index>(p));
  if (!in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * p * p))) {
    throw ValidationError("truncated matrix file " + path.string());
  }
  a.weights = rm;
  return a;
}

void write_edge_csv(const EdgeWeightMatrix& a, const std::filesystem::path& path, double threshold) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  out << "gene_i,gene_j,weight\n";
  const auto p = static_cast<Eigen::Index>(a.gene_ids.size());
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j)
      if (a.weights(i, j) > threshold) out << a.gene_ids[i] << ',' << a.gene_ids[j] << ',' << a.weights(i, j) << '\n';
}

}  // namespace scca_net
