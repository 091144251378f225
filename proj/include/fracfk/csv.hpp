#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace fracfk {

// Shortest decimal text that reads back to exactly the same double.
[[nodiscard]] std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header);

  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(std::string_view v);
  void end_row();

 private:
  std::ostream& os_;
  bool first_ = true;
};

}  // namespace fracfk
