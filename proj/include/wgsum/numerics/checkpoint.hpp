#ifndef WGSUM_NUMERICS_CHECKPOINT_HPP_
#define WGSUM_NUMERICS_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wgsum/numerics/adam.hpp"
#include "wgsum/numerics/tensor.hpp"

namespace wgsum {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedMatrix {
  std::string name;
  Matrix value;
};

/// Binary container, all integers and doubles little-endian:
///
///   "WGSUMCKP" u32 version u64 config_hash
///   u32 n_meta   { str key, str value }*
///   u32 n_params { str name, u64 rows, u64 cols, f64[rows*cols] col-major }*
///   u8 has_optimizer [ i64 step, f64 lr, f64 beta1, f64 beta2, f64 eps,
///                      { f64[] m, f64[] v } per parameter ]
///   u64 fnv1a64 of every preceding byte
///
/// where str is u32 length followed by raw bytes.
struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<NamedMatrix> parameters;
  std::optional<AdamState> optimizer;

  const std::string* find_metadata(const std::string& key) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Copies stored values into `store`, requiring identical names and shapes.
void restore_parameters(const Checkpoint& checkpoint, ParameterStore& store);
std::vector<NamedMatrix> snapshot_parameters(const ParameterStore& store);

}  // namespace wgsum

#endif  // WGSUM_NUMERICS_CHECKPOINT_HPP_
