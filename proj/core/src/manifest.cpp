#include "planewarp/manifest.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "planewarp/error.hpp"

namespace planewarp {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void Manifest::set(const std::string& section, const std::string& key, const std::string& value) {
  for (auto& [name, entries] : sections_) {
    if (name != section) continue;
    for (auto& [k, v] : entries) {
      if (k == key) {
        v = value;
        return;
      }
    }
    entries.emplace_back(key, value);
    return;
  }
  sections_.push_back({section, {{key, value}}});
}

void Manifest::set(const std::string& section, const std::string& key, double value) {
  set(section, key, format_double(value));
}

const Manifest::Entries* Manifest::section(const std::string& name) const {
  for (const auto& [n, entries] : sections_) {
    if (n == name) return &entries;
  }
  return nullptr;
}

std::string Manifest::get(const std::string& section_name, const std::string& key) const {
  if (const Entries* entries = section(section_name)) {
    for (const auto& [k, v] : *entries) {
      if (k == key) return v;
    }
  }
  return {};
}

void Manifest::write(std::ostream& out, bool include_timing) const {
  bool first = true;
  for (const auto& [name, entries] : sections_) {
    if (!include_timing && name == "timing") continue;
    if (!first) out << '\n';
    first = false;
    out << '[' << name << "]\n";
    for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
  }
}

std::string Manifest::str(bool include_timing) const {
  std::ostringstream ss;
  write(ss, include_timing);
  return ss.str();
}

void Manifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write manifest " + path);
  write(out);
}

Manifest Manifest::parse(std::istream& in) {
  Manifest m;
  std::string current = "config";
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    const auto start = line.find_first_not_of(' ');
    if (start == std::string::npos || line[start] == '#' || line[start] == ';') continue;
    line.erase(0, start);
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": bad section header");
      }
      current = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    m.set(current, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return m;
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return parse(in);
}

}  // namespace planewarp
