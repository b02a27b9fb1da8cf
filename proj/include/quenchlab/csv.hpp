#pragma once

#include <cstdio>
#include <ostream>
#include <string>

namespace quenchlab {

// Round-trip decimal form used by every CSV writer, so output is byte-stable.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvRow {
 public:
  explicit CsvRow(std::ostream& out) : out_(out) {}
  ~CsvRow() { out_ << '\n'; }
  CsvRow(const CsvRow&) = delete;
  CsvRow& operator=(const CsvRow&) = delete;

  CsvRow& operator<<(double v) { return put(fmt_double(v)); }
  CsvRow& operator<<(int v) { return put(std::to_string(v)); }
  CsvRow& operator<<(long v) { return put(std::to_string(v)); }
  CsvRow& operator<<(long long v) { return put(std::to_string(v)); }
  CsvRow& operator<<(unsigned long v) { return put(std::to_string(v)); }
  CsvRow& operator<<(unsigned long long v) { return put(std::to_string(v)); }
  CsvRow& operator<<(bool v) { return put(v ? "1" : "0"); }
  CsvRow& operator<<(const char* v) { return put(v); }
  CsvRow& operator<<(const std::string& v) { return put(v); }

 private:
  CsvRow& put(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace quenchlab
