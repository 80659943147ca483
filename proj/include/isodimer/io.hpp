#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "isodimer/common.hpp"

namespace isodimer {

inline constexpr const char* kToolVersion = "0.1.0";

// Key/value pairs echoed into every output artifact.
struct RunHeader {
  std::vector<std::pair<std::string, std::string>> fields;

  void set(const std::string& key, const std::string& value) { fields.emplace_back(key, value); }
  void set(const std::string& key, double value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    set(key, os.str());
  }
  void set(const std::string& key, long long value) { set(key, std::to_string(value)); }

  // '#'-prefixed header block for CSV-style files.
  std::string comment_block() const {
    std::string out = std::string("# tool=isodimer version=") + kToolVersion + "\n";
    for (const auto& [k, v] : fields) out += "# " + k + "=" + v + "\n";
    return out;
  }
};

// Writes the full content to a temporary file in the target directory and
// renames it into place, so failures never leave partial files.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.parent_path().empty() ? "." : path.parent_path();
  std::filesystem::create_directories(dir);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open output file: " + tmp);
    out << content;
    if (!out) throw ValidationError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_double(double v, int digits = 17) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace isodimer
