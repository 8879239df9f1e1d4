#ifndef THINFSI_HARNESS_IO_HPP
#define THINFSI_HARNESS_IO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "thinfsi/fields.hpp"
#include "thinfsi/rationals.hpp"

namespace thinfsi {

/// Flat key=value configuration with section-prefixed keys
/// (e.g. "regime.gamma = 1"). '#' starts a comment. The canonical text
/// (sorted key=value lines) feeds the manifest hash, so configs diff and
/// hash stably.
class Config {
 public:
  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
  }

  static Config from_text(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
      c.values_[key] = value;
    }
    return c;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("missing config key: " + key);
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const { return std::stod(get(key)); }
  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }
  int get_int(const std::string& key) const { return std::stoi(get(key)); }
  int get_int_or(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
  }
  Rational get_rational(const std::string& key) const { return parse_rational(get(key)); }
  bool get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key);
    return v == "1" || v == "true" || v == "yes";
  }

  /// Whitespace-separated list, each entry parsed as a rational.
  std::vector<Rational> get_rational_list(const std::string& key) const {
    std::istringstream in(get(key));
    std::vector<Rational> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_rational(tok));
    return out;
  }

  std::string canonical_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

inline uint64_t fnv1a_hash(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Ordered key=value manifest; contains no timestamps so that identical
/// configs reproduce byte-identical files.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void set(const std::string& key, double value) { entries_.emplace_back(key, format_double(value)); }
  void set(const std::string& key, int value) { entries_.emplace_back(key, std::to_string(value)); }
  void set(const std::string& key, uint64_t value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    entries_.emplace_back(key, buf);
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    for (const auto& [k, v] : entries_) out << k << "=" << v << "\n";
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;

 public:
  static std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
};

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open csv for writing: " + path);
    for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  static std::string num(double v) { return Manifest::format_double(v); }

 private:
  std::ofstream out_;
};

/// Fields CSV convention: a comment header "# n1 n2 m domain component"
/// followed by row-major nodal values, one y1-row per line, vertical
/// layers stacked bottom to top. Extra "key=value" tokens may trail the
/// header (physical slab heights, time stamps of the snapshot).
inline void write_field_csv(std::ostream& out, const PeriodicField2D& f,
                            const std::string& domain, const std::string& component,
                            const std::string& extra = "") {
  out << "# " << f.n1() << " " << f.n2() << " 0 " << domain << " " << component;
  if (!extra.empty()) out << " " << extra;
  out << "\n";
  for (int i = 0; i < f.n1(); ++i) {
    for (int j = 0; j < f.n2(); ++j) out << (j ? "," : "") << CsvWriter::num(f.value(i, j));
    out << "\n";
  }
}

inline void write_field_csv(std::ostream& out, const SlabField3D& f, const std::string& domain,
                            const std::string& component, const std::string& extra = "") {
  out << "# " << f.n1() << " " << f.n2() << " " << (f.layer_count() - 1) << " " << domain << " "
      << component;
  if (!extra.empty()) out << " " << extra;
  out << "\n";
  for (int l = 0; l < f.layer_count(); ++l)
    for (int i = 0; i < f.n1(); ++i) {
      const auto& layer = f.layer(l);
      for (int j = 0; j < f.n2(); ++j) out << (j ? "," : "") << CsvWriter::num(layer.value(i, j));
      out << "\n";
    }
}

inline std::filesystem::path output_root(const std::string& cli_out) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv("THINFSI_OUT")) return env;
  return "out";
}

}  // namespace thinfsi

#endif
