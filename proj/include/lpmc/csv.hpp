// CSV emission with round-trip-exact float formatting (shortest form that
// parses back to the same binary64 value).

#pragma once

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>

namespace lpmc {

inline std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  template <typename... Cols>
  void row(const Cols&... cols) {
    bool first = true;
    ((write_cell(cols, first), first = false), ...);
    out_ << '\n';
  }

 private:
  void write_cell(double v, bool first) {
    if (!first) out_ << ',';
    out_ << format_double(v);
  }
  void write_cell(const std::string& v, bool first) {
    if (!first) out_ << ',';
    out_ << v;
  }
  void write_cell(const char* v, bool first) {
    if (!first) out_ << ',';
    out_ << v;
  }
  void write_cell(std::uint64_t v, bool first) {
    if (!first) out_ << ',';
    out_ << v;
  }
  void write_cell(int v, bool first) {
    if (!first) out_ << ',';
    out_ << v;
  }
  void write_cell(bool v, bool first) {
    if (!first) out_ << ',';
    out_ << (v ? 1 : 0);
  }

  std::ostream& out_;
};

}  // namespace lpmc
