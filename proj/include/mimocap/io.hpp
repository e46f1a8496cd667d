#pragma once

#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mimocap/asymptotics.hpp"
#include "mimocap/capacity.hpp"
#include "mimocap/common.hpp"

namespace mimocap {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

/**
 * Writes the full text to a sibling temp file and renames it into place,
 * so a crash mid-run never leaves a truncated output file behind.
 */
inline void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw IoError("cannot open '" + tmp + "' for writing");
    const std::size_t n = std::fwrite(text.data(), 1, text.size(), f);
    const bool write_ok = (n == text.size());
    const bool flush_ok = (std::fflush(f) == 0);
    std::fclose(f);
    if (!write_ok || !flush_ok) {
      std::remove(tmp.c_str());
      throw IoError("short write to '" + tmp + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw IoError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
  }
}

inline std::string capacity_csv(const std::vector<CapacityResult>& rows) {
  std::string out = "route,m_t,m_r,e_t,n_0,resolution,bits\n";
  for (const auto& r : rows) {
    out += route_name(r.route);
    out += ',';
    out += std::to_string(r.m_t);
    out += ',';
    out += std::to_string(r.m_r);
    out += ',';
    out += format_g17(r.snr.e_t);
    out += ',';
    out += format_g17(r.snr.n_0);
    out += ',';
    out += std::to_string(r.grid_resolution);
    out += ',';
    out += format_g17(r.bits);
    out += '\n';
  }
  return out;
}

inline std::string sweep_csv(const SweepResult& res) {
  std::string out = "m,m_t,m_r,bits,stat,bound_bits\n";
  for (const auto& row : res.rows) {
    out += std::to_string(row.m);
    out += ',';
    out += std::to_string(row.m_t);
    out += ',';
    out += std::to_string(row.m_r);
    out += ',';
    out += format_g17(row.bits);
    out += ',';
    out += format_g17(row.stat);
    out += ',';
    out += format_g17(row.bound_bits);
    out += '\n';
  }
  return out;
}

inline std::string plot_csv(const SweepResult& res) {
  std::string out = "m,bits\n";
  for (const auto& row : res.rows) {
    out += std::to_string(row.m);
    out += ',';
    out += format_g17(row.bits);
    out += '\n';
  }
  return out;
}

inline std::string verdict_text(const SweepResult& res) {
  std::string out;
  out += "regime: ";
  out += regime_name(res.regime);
  out += '\n';
  out += "verdict: ";
  out += res.verdict ? "pass" : "fail";
  out += '\n';
  out += res.verdict_detail;
  if (!res.verdict_detail.empty() && res.verdict_detail.back() != '\n') out += '\n';
  return out;
}

inline std::string matrix_csv(const Mat& m) {
  std::string out = "row,col,re,im\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out += std::to_string(i);
      out += ',';
      out += std::to_string(j);
      out += ',';
      out += format_g17(m(i, j).real());
      out += ',';
      out += format_g17(m(i, j).imag());
      out += '\n';
    }
  }
  return out;
}

}  // namespace mimocap
