#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hbm/sde_sim.hpp"

namespace hbm {

/// Binary path file (all integers and doubles little-endian):
///
///   offset  size        field
///   0       8           magic "HBMPATH1"
///   8       4  u32      format version (1)
///   12      4  u32      kind (0 bm1d, 1 radial, 2 ambient_distance)
///   16      4  u32      dimension d (0 if not applicable)
///   20      4  u32      reserved (0)
///   24      8  u64      n_points
///   32      8  u64      n_paths
///   40      8*n_points  f64 grid times
///   then per path: u64 path_id, f64[n_points] values
///
/// All paths in a file share one grid.
inline constexpr char kPathMagic[8] = {'H', 'B', 'M', 'P', 'A', 'T', 'H', '1'};
inline constexpr std::uint32_t kPathFormatVersion = 1;

struct PathSet {
  PathKind kind = PathKind::Radial;
  int d = 0;
  std::shared_ptr<const TimeGrid> grid;
  std::vector<Path> paths;
};

void write_paths_binary(std::ostream& out, std::span<const Path> paths, int d);
PathSet read_paths_binary(std::istream& in);

/// CSV with header "time,value,path_id", one row per (path, grid point),
/// path-major, values printed with 17 significant digits.
void write_paths_csv(std::ostream& out, std::span<const Path> paths);
PathSet read_paths_csv(std::istream& in, PathKind kind, int d = 0);

/// Dispatches on the file's first bytes (magic vs. CSV header).
PathSet read_paths_file(const std::string& filename, PathKind csv_kind,
                        int csv_d = 0);

}  // namespace hbm
