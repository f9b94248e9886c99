#include "headgs/binary_io.hpp"

#include "headgs/errors.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace headgs::io {

void ByteReader::require(std::size_t n) const {
  if (offset_ + n > bytes_.size()) {
    throw Error("unexpected end of data at byte " + std::to_string(offset_) + " (need " +
                std::to_string(n) + " more)");
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace headgs::io
