#pragma once

#include "types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace occ::io {

// shortest decimal that reads back to the same double
std::string format(double x);
std::string format(std::int64_t x);

std::uint64_t fnv1a(std::string_view bytes);
std::string   hex64(std::uint64_t v);

// CSV with a comment header carrying provenance.
class Csv
{
public:
  Csv(std::vector<std::string> columns, std::string const &config_hash);

  Csv &row(std::vector<std::string> cells);
  Csv &row(std::vector<double> const &cells);
  std::string const &str() const { return text_; }
  size_t             rows() const { return rows_; }

private:
  size_t      width_;
  size_t      rows_ = 0;
  std::string text_;
};

void write_file(std::filesystem::path const &path, std::string const &content);

} // namespace occ::io
