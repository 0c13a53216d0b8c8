#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "ensoc/value.hpp"

namespace ensoc {

namespace {

constexpr char kMagic[8] = {'E', 'N', 'S', 'O', 'C', 'V', 'G', '1'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "value grid IO assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("value grid: truncated file");
  return v;
}

}  // namespace

void write_value_grid(const std::filesystem::path& path, const ValueGrid& vg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(vg.dims()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(vg.grid().steps()));
  for (double t : vg.grid().nodes()) put<double>(out, t);
  for (const auto& a : vg.axes()) {
    put<double>(out, a.lo);
    put<double>(out, a.hi);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.count));
  }
  put<std::uint64_t>(out, vg.clamp_count);
  for (int j = 0; j <= vg.grid().steps(); ++j)
    out.write(reinterpret_cast<const char*>(vg.values(j).data()),
              static_cast<std::streamsize>(vg.slice_size() * sizeof(double)));
  for (int j = 0; j <= vg.grid().steps(); ++j)
    out.write(reinterpret_cast<const char*>(vg.argmin(j).data()),
              static_cast<std::streamsize>(vg.slice_size() * sizeof(std::int32_t)));
}

ValueGrid read_value_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ParseError("value grid: bad magic");
  if (get<std::uint32_t>(in) != kVersion) throw ParseError("value grid: unsupported version");
  const auto D = get<std::uint32_t>(in);
  const auto N = get<std::uint32_t>(in);
  if (D < 1 || D > kMaxGridDimension || N < 1) throw ParseError("value grid: bad dimensions");
  std::vector<double> nodes(N + 1);
  for (auto& t : nodes) t = get<double>(in);
  std::vector<Axis> axes(D);
  for (auto& a : axes) {
    a.lo = get<double>(in);
    a.hi = get<double>(in);
    a.count = static_cast<int>(get<std::uint32_t>(in));
  }
  ValueGrid vg(TimeGrid::from_nodes(std::move(nodes)), std::move(axes));
  vg.clamp_count = get<std::uint64_t>(in);
  for (std::uint32_t j = 0; j <= N; ++j)
    in.read(reinterpret_cast<char*>(vg.values(static_cast<int>(j)).data()),
            static_cast<std::streamsize>(vg.slice_size() * sizeof(double)));
  for (std::uint32_t j = 0; j <= N; ++j)
    in.read(reinterpret_cast<char*>(vg.argmin(static_cast<int>(j)).data()),
            static_cast<std::streamsize>(vg.slice_size() * sizeof(std::int32_t)));
  if (!in) throw ParseError("value grid: truncated payload");
  return vg;
}

void write_value_slice_csv(const std::filesystem::path& path, const ValueGrid& vg, int j) {
  if (j < 0 || j > vg.grid().steps()) throw ArgumentError("value slice index out of range");
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  for (int d = 1; d <= vg.dims(); ++d) out << 'z' << d << ',';
  out << "value,argmin\n";
  char buf[40];
  for (std::size_t q = 0; q < vg.slice_size(); ++q) {
    const Vector z = vg.point(q);
    for (int d = 0; d < vg.dims(); ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", z[d]);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", vg.values(j)[q]);
    out << buf << ',' << vg.argmin(j)[q] << '\n';
  }
}

}  // namespace ensoc
