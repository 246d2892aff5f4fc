#pragma once

// File formats: potentials and data matrices as a text header terminated by
// an `end` line, followed by row-major little-endian float64 values (real for
// potentials, interleaved re/im for matrices). CSV tables and SVG plots.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nfis/common.hpp"
#include "nfis/forward.hpp"
#include "nfis/grid.hpp"

namespace nfis {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_f64(std::ostream& os, double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, 8);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline double read_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated binary payload");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double x;
  std::memcpy(&x, &u, 8);
  return x;
}

inline std::map<std::string, std::string> read_header(std::istream& is, const std::string& magic) {
  std::string line;
  if (!std::getline(is, line) || line.rfind(magic, 0) != 0) throw IoError("missing " + magic + " header");
  std::map<std::string, std::string> kv;
  while (std::getline(is, line)) {
    if (line == "end") return kv;
    std::istringstream ls(line);
    std::string k, v;
    ls >> k >> v;
    if (k.empty()) continue;
    kv[k] = v;
  }
  throw IoError("header not terminated by 'end'");
}

inline double num(const std::map<std::string, std::string>& kv, const std::string& k) {
  auto it = kv.find(k);
  if (it == kv.end()) throw IoError("header field '" + k + "' missing");
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw IoError("header field '" + k + "' is not a number");
  }
}

}  // namespace detail

inline void write_potential(const std::string& path, const GridPotential& v, double E = 0.0) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path);
  const auto& m = v.regularity();
  os << "NFIS-POTENTIAL 1\n"
     << "dimension " << v.dim() << "\nr1 " << detail::fmt17(v.r1()) << "\nr " << detail::fmt17(v.r()) << "\nn "
     << v.n() << "\nE " << detail::fmt17(E) << "\nm " << detail::fmt17(m.m) << "\nN " << detail::fmt17(m.N)
     << "\nflatness " << m.flatness << "\nend\n";
  for (double x : v.values()) detail::write_f64(os, x);
  if (!os) throw IoError("write failed: " + path);
}

inline GridPotential read_potential(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  const auto kv = detail::read_header(is, "NFIS-POTENTIAL");
  const int dim = static_cast<int>(detail::num(kv, "dimension"));
  const int n = static_cast<int>(detail::num(kv, "n"));
  const double r1 = detail::num(kv, "r1"), r = detail::num(kv, "r");
  Regularity meta{detail::num(kv, "m"), detail::num(kv, "N"), static_cast<int>(detail::num(kv, "flatness"))};
  if ((dim != 2 && dim != 3) || n < 1) throw IoError("invalid grid in " + path);
  const std::size_t count = dim == 2 ? std::size_t(n) * n : std::size_t(n) * n * n;
  std::vector<double> vals(count);
  for (auto& x : vals) x = detail::read_f64(is);
  return GridPotential(dim, n, r1, r, std::move(vals), meta);
}

inline void write_matrix(const std::string& path, const NearFieldMatrix& S) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path);
  os << "NFIS-MATRIX 1\n"
     << "dimension " << S.mesh.dim() << "\nr1 " << detail::fmt17(S.r1) << "\nr " << detail::fmt17(S.mesh.r())
     << "\nn " << S.n << "\nE " << detail::fmt17(S.E) << "\nm " << detail::fmt17(S.meta.m) << "\nN "
     << detail::fmt17(S.meta.N) << "\nflatness " << S.meta.flatness << "\nmesh_polar " << S.mesh.n_polar()
     << "\nmesh_azimuth " << S.mesh.n_azimuth() << "\nrows " << S.S.rows() << "\ncols " << S.S.cols() << "\nend\n";
  for (Eigen::Index i = 0; i < S.S.rows(); ++i)
    for (Eigen::Index j = 0; j < S.S.cols(); ++j) {
      detail::write_f64(os, S.S(i, j).real());
      detail::write_f64(os, S.S(i, j).imag());
    }
  if (!os) throw IoError("write failed: " + path);
}

inline NearFieldMatrix read_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  const auto kv = detail::read_header(is, "NFIS-MATRIX");
  NearFieldMatrix S;
  const int dim = static_cast<int>(detail::num(kv, "dimension"));
  S.E = detail::num(kv, "E");
  S.r1 = detail::num(kv, "r1");
  S.n = static_cast<int>(detail::num(kv, "n"));
  S.meta = {detail::num(kv, "m"), detail::num(kv, "N"), static_cast<int>(detail::num(kv, "flatness"))};
  S.mesh = BoundaryMesh::make(dim, detail::num(kv, "r"), static_cast<int>(detail::num(kv, "mesh_polar")),
                              static_cast<int>(detail::num(kv, "mesh_azimuth")));
  const auto rows = static_cast<Eigen::Index>(detail::num(kv, "rows"));
  const auto cols = static_cast<Eigen::Index>(detail::num(kv, "cols"));
  if (rows != S.mesh.size() || cols != S.mesh.size()) throw IoError("matrix shape does not match its mesh");
  S.S.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double re = detail::read_f64(is);
      S.S(i, j) = Complex(re, detail::read_f64(is));
    }
  return S;
}

/// Minimal CSV writer: fixed header, %.17g numbers, strings unquoted unless needed.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns) : os_(path), ncol_(columns.size()) {
    if (!os_) throw IoError("cannot open " + path);
    row(columns);
  }

  void row(const std::vector<std::string>& cells) {
    require(cells.size() == ncol_, "CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (quote) {
        os_ << '"';
        for (char c : cells[i]) os_ << (c == '"' ? "\"\"" : std::string(1, c));
        os_ << '"';
      } else {
        os_ << cells[i];
      }
    }
    os_ << '\n';
  }

  static std::string num(double x) { return detail::fmt17(x); }

 private:
  std::ofstream os_;
  std::size_t ncol_;
};

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
  bool line = true;
};

/// Self-contained log-log (or linear) plot.
inline void write_svg_plot(const std::string& path, const std::string& title, const std::string& xlabel,
                           const std::string& ylabel, const std::vector<SvgSeries>& series, bool logx = true,
                           bool logy = true) {
  const double W = 640, H = 440, L = 80, R = 20, T = 40, B = 60;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (x0 > x1) x0 = 0, x1 = 1;
  if (y0 > y1) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4, fy = y0 + (y1 - y0) * t / 4;
    const double sx = L + (W - L - R) * t / 4, sy = H - B - (H - T - B) * t / 4;
    char lx[32], ly[32];
    std::snprintf(lx, sizeof lx, "%.3g", logx ? std::pow(10.0, fx) : fx);
    std::snprintf(ly, sizeof ly, "%.3g", logy ? std::pow(10.0, fy) : fy);
    os << "<text x=\"" << sx << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << lx << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">" << ly << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 6];
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) continue;
      pts << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    }
    if (s.line) os << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"" << pts.str() << "\"/>\n";
    os << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 14 * k << "\" fill=\"" << c << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

/// Heat map of a 2D grid field (row i = first axis).
inline void write_svg_heatmap(const std::string& path, const std::string& title, int n, const std::vector<double>& v) {
  require(static_cast<int>(v.size()) == n * n, "write_svg_heatmap: expected n^2 values");
  double lo = 1e300, hi = -1e300;
  for (double x : v) lo = std::min(lo, x), hi = std::max(hi, x);
  if (hi - lo < 1e-300) hi = lo + 1.0;
  const double cell = 400.0 / n;
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"440\" height=\"470\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"220\" y=\"22\" text-anchor=\"middle\">" << title << "</text>\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double t = (v[i * n + j] - lo) / (hi - lo);
      const int rr = static_cast<int>(255 * t), bb = static_cast<int>(255 * (1 - t));
      os << "<rect x=\"" << 20 + i * cell << "\" y=\"" << 440 - (j + 1) * cell << "\" width=\"" << cell + 0.05
         << "\" height=\"" << cell + 0.05 << "\" fill=\"rgb(" << rr << ",64," << bb << ")\"/>\n";
    }
  char buf[96];
  std::snprintf(buf, sizeof buf, "min %.4g  max %.4g", lo, hi);
  os << "<text x=\"220\" y=\"460\" text-anchor=\"middle\">" << buf << "</text>\n</svg>\n";
}

}  // namespace nfis
