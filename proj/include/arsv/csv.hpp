#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "arsv/filters.hpp"
#include "arsv/model.hpp"

namespace arsv {

// Round-trip-exact decimal rendering; all numeric CSV output goes through
// this so reruns are byte-identical and parsers recover the exact doubles.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string path_to_csv(const MarketPath& path) {
  std::string s = "t,b,sigma,y,s\n";
  s += "0,,,," + format_double(path.s0) + "\n";
  for (int t = 0; t < path.horizon(); ++t) {
    s += std::to_string(t + 1) + "," + format_double(path.b[t]) + "," +
         format_double(path.sigma[t]) + "," + format_double(path.y[t]) + "," +
         format_double(path.s[t + 1]) + "\n";
  }
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

// Reads a price series from CSV: uses the column named "s" when a header
// is present, otherwise the last column. Returns prices including s0.
inline std::vector<double> read_price_csv(std::istream& in) {
  std::vector<double> prices;
  std::string line;
  int s_col = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (first) {
      first = false;
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i] == "s") s_col = static_cast<int>(i);
      if (s_col >= 0) continue;  // header consumed
      s_col = static_cast<int>(cells.size()) - 1;
    }
    if (s_col >= static_cast<int>(cells.size()))
      throw std::runtime_error("price csv: missing price column in line: " + line);
    try {
      prices.push_back(std::stod(cells[s_col]));
    } catch (const std::exception&) {
      throw std::runtime_error("price csv: bad number in line: " + line);
    }
  }
  if (prices.size() < 2)
    throw std::runtime_error("price csv: need at least s0 and one more price");
  return prices;
}

inline std::vector<double> read_price_csv_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open price csv: " + file);
  return read_price_csv(in);
}

inline std::string forecasts_to_csv(const VolForecastSeries& f) {
  std::string s = "t,sigma_hat,method,aux1,aux2\n";
  for (std::size_t t = 0; t < f.sigma_hat.size(); ++t) {
    s += std::to_string(t + 1) + "," + format_double(f.sigma_hat[t]) + "," +
         to_string(f.method) + "," + format_double(f.aux1[t]) + "," +
         format_double(f.aux2[t]) + "\n";
  }
  return s;
}

}  // namespace arsv
