#include "hbm/path_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "hbm/errors.hpp"

namespace hbm {

namespace {

template <class T>
T to_little(T v) noexcept {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(b[i], b[sizeof(T) - 1 - i]);
    }
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <class T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated binary path file");
  return to_little(v);
}

std::uint32_t kind_code(PathKind kind) {
  switch (kind) {
    case PathKind::Bm1d:
      return 0;
    case PathKind::Radial:
      return 1;
    case PathKind::AmbientDistance:
      return 2;
  }
  return 0;
}

PathKind kind_from_code(std::uint32_t code) {
  switch (code) {
    case 0:
      return PathKind::Bm1d;
    case 1:
      return PathKind::Radial;
    case 2:
      return PathKind::AmbientDistance;
    default:
      throw IoError("unknown path kind code " + std::to_string(code));
  }
}

void require_common_grid(std::span<const Path> paths) {
  if (paths.empty()) throw PreconditionError("no paths to write");
  for (const auto& p : paths) {
    if (p.kind != paths.front().kind) {
      throw PreconditionError("paths of mixed kinds cannot share a file");
    }
    if (p.grid != paths.front().grid &&
        !std::equal(p.times().begin(), p.times().end(),
                    paths.front().times().begin(),
                    paths.front().times().end())) {
      throw PreconditionError("paths in one file must share a grid");
    }
  }
}

}  // namespace

void write_paths_binary(std::ostream& out, std::span<const Path> paths,
                        int d) {
  require_common_grid(paths);
  const auto t = paths.front().times();
  out.write(kPathMagic, sizeof(kPathMagic));
  put<std::uint32_t>(out, kPathFormatVersion);
  put<std::uint32_t>(out, kind_code(paths.front().kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, t.size());
  put<std::uint64_t>(out, paths.size());
  for (double x : t) put<double>(out, x);
  for (const auto& p : paths) {
    put<std::uint64_t>(out, p.path_id);
    for (double x : p.values) put<double>(out, x);
  }
  if (!out) throw IoError("failed writing binary path file");
}

PathSet read_paths_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kPathMagic, sizeof(magic)) != 0) {
    throw IoError("not a binary path file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kPathFormatVersion) {
    throw IoError("unsupported path format version " + std::to_string(version));
  }
  PathSet set;
  set.kind = kind_from_code(get<std::uint32_t>(in));
  set.d = static_cast<int>(get<std::uint32_t>(in));
  get<std::uint32_t>(in);
  const auto n_points = get<std::uint64_t>(in);
  const auto n_paths = get<std::uint64_t>(in);
  if (n_points < 2 || n_points > (1ull << 32)) {
    throw IoError("implausible point count in path file");
  }
  std::vector<double> times(n_points);
  for (auto& x : times) x = get<double>(in);
  try {
    set.grid = std::make_shared<const TimeGrid>(
        TimeGrid::from_times(std::move(times)));
  } catch (const PreconditionError& e) {
    throw IoError(std::string("invalid grid in path file: ") + e.what());
  }
  set.paths.reserve(n_paths);
  for (std::uint64_t i = 0; i < n_paths; ++i) {
    Path p{set.grid, std::vector<double>(n_points), set.kind, 0};
    p.path_id = get<std::uint64_t>(in);
    for (auto& x : p.values) x = get<double>(in);
    set.paths.push_back(std::move(p));
  }
  return set;
}

void write_paths_csv(std::ostream& out, std::span<const Path> paths) {
  require_common_grid(paths);
  out << "time,value,path_id\n";
  char buf[96];
  for (const auto& p : paths) {
    const auto t = p.times();
    for (std::size_t k = 0; k < t.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%llu\n", t[k], p.values[k],
                    static_cast<unsigned long long>(p.path_id));
      out << buf;
    }
  }
  if (!out) throw IoError("failed writing CSV path file");
}

PathSet read_paths_csv(std::istream& in, PathKind kind, int d) {
  std::string line;
  if (!std::getline(in, line) || line != "time,value,path_id") {
    throw IoError("CSV path file must start with 'time,value,path_id'");
  }
  std::vector<std::uint64_t> order;
  std::map<std::uint64_t, std::pair<std::vector<double>, std::vector<double>>>
      rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double t = 0.0;
    double v = 0.0;
    unsigned long long id = 0;
    char c1 = 0;
    char c2 = 0;
    if (!(ss >> t >> c1 >> v >> c2 >> id) || c1 != ',' || c2 != ',') {
      throw IoError("malformed CSV row: " + line);
    }
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.first.push_back(t);
    it->second.second.push_back(v);
  }
  if (rows.empty()) throw IoError("CSV path file has no rows");
  PathSet set;
  set.kind = kind;
  set.d = d;
  const auto& first_times = rows.at(order.front()).first;
  try {
    set.grid = std::make_shared<const TimeGrid>(TimeGrid::from_times(first_times));
  } catch (const PreconditionError& e) {
    throw IoError(std::string("invalid grid in CSV: ") + e.what());
  }
  for (auto id : order) {
    auto& [times, values] = rows.at(id);
    if (times != first_times) throw IoError("CSV paths do not share a grid");
    set.paths.push_back(Path{set.grid, std::move(values), kind, id});
  }
  return set;
}

PathSet read_paths_file(const std::string& filename, PathKind csv_kind,
                        int csv_d) {
  std::ifstream in(filename, std::ios::binary);
  if (!in) throw IoError("cannot open path file '" + filename + "'");
  char head[8] = {};
  in.read(head, sizeof(head));
  in.clear();
  in.seekg(0);
  if (std::memcmp(head, kPathMagic, sizeof(head)) == 0) {
    return read_paths_binary(in);
  }
  return read_paths_csv(in, csv_kind, csv_d);
}

}  // namespace hbm
