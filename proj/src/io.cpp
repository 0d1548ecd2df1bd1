#include "occ/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace occ::io {

std::string format(double x)
{
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string format(std::int64_t x)
{
  char buf[24];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::uint64_t fnv1a(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v)
{
  char buf[17];
  auto r = std::to_chars(buf, buf + sizeof buf, v, 16);
  std::string s(buf, r.ptr);
  return std::string(16 - s.size(), '0') + s;
}

Csv::Csv(std::vector<std::string> columns, std::string const &config_hash) : width_(columns.size())
{
  text_ = "# config_hash=" + config_hash + " version=" OCC_VERSION "\n";
  for (size_t i = 0; i < columns.size(); ++i) text_ += (i ? "," : "") + columns[i];
  text_ += '\n';
}

Csv &Csv::row(std::vector<std::string> cells)
{
  if (cells.size() != width_) throw Error("CSV row has the wrong number of cells");
  for (size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
  text_ += '\n';
  ++rows_;
  return *this;
}

Csv &Csv::row(std::vector<double> const &cells)
{
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double c : cells) s.push_back(format(c));
  return row(std::move(s));
}

void write_file(std::filesystem::path const &path, std::string const &content)
{
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ResourceError("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw ResourceError("write failed for " + path.string());
}

} // namespace occ::io
