#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "khess/errors.hpp"
#include "khess/field.hpp"

namespace khess {

namespace {

constexpr const char* kMagic = "KHESSFIELD 1";

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

std::string join(const std::vector<int>& v) {
  std::ostringstream o;
  for (std::size_t i = 0; i < v.size(); ++i) o << (i ? " " : "") << v[i];
  return o.str();
}

}  // namespace

void write_snapshot(const GridField& f, const std::string& path, const std::string& name) {
  const GridSpec& g = f.grid();
  std::vector<int> per, dir;
  for (int a = 0; a < g.n(); ++a) (g.is_periodic(a) ? per : dir).push_back(g.intervals(a));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write snapshot " + path);
  std::ostringstream hdr;
  hdr.precision(17);
  hdr << kMagic << '\n'
      << "name " << name << '\n'
      << "n " << g.n() << '\n'
      << "k " << g.k() << '\n'
      << "periodic " << join(per) << '\n'
      << "dirichlet " << join(dir) << '\n'
      << "delta0 " << g.delta0() << '\n'
      << "dtype float64\n"
      << "endian little\n"
      << "count " << f.size() << '\n'
      << "end\n";
  out << hdr.str();
  for (double v : f.values()) {
    std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw ConfigError("failed writing snapshot " + path);
}

GridField read_snapshot(const std::string& path, std::string* name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open snapshot " + path);
  std::string line;
  std::getline(in, line);
  if (line != kMagic) throw ConfigError(path + ": not a field snapshot");
  int n = 0, k = 0;
  std::vector<int> per, dir;
  double delta0 = 0.0;
  std::size_t count = 0;
  std::string nm;
  while (std::getline(in, line) && line != "end") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "name") ls >> nm;
    else if (key == "n") ls >> n;
    else if (key == "k") ls >> k;
    else if (key == "delta0") ls >> delta0;
    else if (key == "count") ls >> count;
    else if (key == "periodic" || key == "dirichlet") {
      int v;
      while (ls >> v) (key == "periodic" ? per : dir).push_back(v);
    } else if (key == "dtype") {
      std::string v;
      ls >> v;
      if (v != "float64") throw ConfigError(path + ": unsupported dtype " + v);
    } else if (key == "endian") {
      std::string v;
      ls >> v;
      if (v != "little") throw ConfigError(path + ": unsupported byte order " + v);
    }
  }
  if (line != "end") throw ConfigError(path + ": truncated header");
  GridSpec g(n, k, per, dir, delta0);
  if (count != g.size()) throw ConfigError(path + ": count does not match grid");
  std::vector<double> values(count);
  for (auto& v : values) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    v = std::bit_cast<double>(to_little(bits));
  }
  if (!in) throw ConfigError(path + ": truncated data");
  if (name) *name = nm;
  return GridField(g, std::move(values));
}

void write_slice_csv(const GridField& f, const std::string& path, const std::vector<int>& free_axes,
                     const std::vector<int>& fixed) {
  const GridSpec& g = f.grid();
  if (free_axes.empty() || free_axes.size() > 2) throw DomainError("slice needs 1 or 2 free axes");
  if (static_cast<int>(fixed.size()) != g.n()) throw DomainError("slice needs an index per axis");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out.precision(17);
  for (int a : free_axes) out << 'x' << a + 1 << ',';
  out << "value\n";
  std::vector<int> idx = fixed;
  const int a0 = free_axes[0];
  const int a1 = free_axes.size() == 2 ? free_axes[1] : -1;
  const int n1 = a1 >= 0 ? g.points(a1) : 1;
  for (int i = 0; i < g.points(a0); ++i) {
    idx[static_cast<std::size_t>(a0)] = i;
    for (int j = 0; j < n1; ++j) {
      if (a1 >= 0) idx[static_cast<std::size_t>(a1)] = j;
      out << g.coord(a0, i) << ',';
      if (a1 >= 0) out << g.coord(a1, j) << ',';
      out << f[g.ravel(idx)] << '\n';
    }
  }
}

}  // namespace khess
