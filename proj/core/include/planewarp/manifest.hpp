#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace planewarp {

inline constexpr const char* kToolName = "planewarp";
inline constexpr const char* kToolVersion = "0.1.0";

/// Ordered "[section]" blocks of key=value lines.
class Manifest {
 public:
  using Entries = std::vector<std::pair<std::string, std::string>>;

  void set(const std::string& section, const std::string& key, const std::string& value);
  void set(const std::string& section, const std::string& key, double value);

  /// Empty string if absent.
  std::string get(const std::string& section, const std::string& key) const;
  const Entries* section(const std::string& name) const;

  /// Writes every section; the "timing" section is skipped when
  /// include_timing is false so reruns compare byte-for-byte.
  void write(std::ostream& out, bool include_timing = true) const;
  std::string str(bool include_timing = true) const;
  void save(const std::string& path) const;

  static Manifest parse(std::istream& in);
  static Manifest load(const std::string& path);

 private:
  std::vector<std::pair<std::string, Entries>> sections_;
};

/// Shortest decimal form that round-trips the double.
std::string format_double(double v);

}  // namespace planewarp
