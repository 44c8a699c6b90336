#include "shapereg/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace shapereg {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ParseError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

namespace {

// next whitespace-separated token, skipping '#' comments
std::string pgm_token(std::istream& in) {
  std::string tok;
  for (;;) {
    int c = in.get();
    if (c == EOF) throw ParseError("unexpected end of PGM header");
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
}

int pgm_int(std::istream& in) {
  const std::string t = pgm_token(in);
  try {
    size_t pos = 0;
    const int v = std::stoi(t, &pos);
    if (pos != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad integer in PGM header: '" + t + "'");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number in CSV: '" + s + "'");
  }
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open PGM: " + path);
  const std::string magic = pgm_token(in);
  if (magic != "P2" && magic != "P5") throw ParseError("not a PGM (P2/P5) file: " + path);
  const int W = pgm_int(in);
  const int H = pgm_int(in);
  const int maxval = pgm_int(in);
  if (W <= 0 || H <= 0) throw ParseError("bad PGM dimensions");
  if (maxval <= 0 || maxval > 65535) throw ParseError("PGM maxval out of range (1..65535)");
  GrayImage img;
  img.width = W;
  img.height = H;
  img.intensity.resize(H, W);
  if (magic == "P2") {
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        const int v = pgm_int(in);
        if (v < 0 || v > maxval) throw ParseError("PGM sample out of range");
        img.intensity(r, c) = static_cast<double>(v) / maxval;
      }
  } else {
    // single whitespace byte after maxval, then raw samples
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> buf(static_cast<size_t>(W) * H * bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
      throw ParseError("truncated P5 payload");
    size_t p = 0;
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        int v = buf[p++];
        if (bytes == 2) v = (v << 8) | buf[p++];  // big-endian per format
        if (v > maxval) throw ParseError("PGM sample out of range");
        img.intensity(r, c) = static_cast<double>(v) / maxval;
      }
  }
  validate_image(img);
  return img;
}

SampledCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "t")
    throw ParseError("curve CSV must start with header t,v1,...: " + path);
  for (size_t j = 1; j < header.size(); ++j)
    if (header[j] != "v" + std::to_string(j))
      throw ParseError("curve CSV header column " + std::to_string(j) + " must be v" + std::to_string(j));
  const int d = static_cast<int>(header.size()) - 1;
  std::vector<double> ts;
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != d + 1)
      throw ParseError("curve CSV row has wrong column count: '" + line + "'");
    ts.push_back(parse_double(cells[0]));
    for (int j = 0; j < d; ++j) vals.push_back(parse_double(cells[j + 1]));
  }
  const int K = static_cast<int>(ts.size());
  if (K < 4) throw ParseError("curve CSV needs at least 4 rows");
  SampledCurve c;
  c.nodes = Eigen::Map<Eigen::VectorXd>(ts.data(), K);
  c.values.resize(K, d);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < d; ++j) c.values(i, j) = vals[static_cast<size_t>(i) * d + j];
  validate_curve(c);
  return c;
}

std::string curve_csv(const SampledCurve& c) {
  std::ostringstream out;
  out << "t";
  for (int j = 1; j <= c.d(); ++j) out << ",v" << j;
  out << "\n";
  for (int i = 0; i < c.K(); ++i) {
    out << fmt_double(c.nodes[i]);
    for (int j = 0; j < c.d(); ++j) out << "," << fmt_double(c.values(i, j));
    out << "\n";
  }
  return out.str();
}

SampledSurface read_surface_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV: " + path);
  const auto header = split_csv_line(line);
  const std::vector<std::string> want = {"x", "y", "v1", "v2", "v3"};
  if (header.size() != want.size())
    throw ParseError("surface CSV must have header x,y,v1,v2,v3: " + path);
  for (size_t j = 0; j < want.size(); ++j)
    if (header[j] != want[j]) throw ParseError("surface CSV must have header x,y,v1,v2,v3: " + path);
  std::vector<std::array<double, 5>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) throw ParseError("surface CSV row has wrong column count: '" + line + "'");
    std::array<double, 5> r{};
    for (int j = 0; j < 5; ++j) r[j] = parse_double(cells[j]);
    rows.push_back(r);
  }
  const auto total = rows.size();
  const int K = static_cast<int>(std::llround(std::sqrt(static_cast<double>(total))));
  if (K < 4 || static_cast<size_t>(K) * K != total)
    throw ParseError("surface CSV must hold a square K x K grid with K >= 4");
  SampledSurface s;
  for (auto& m : s.ch) m.resize(K, K);
  size_t p = 0;
  for (int i = 0; i < K; ++i) {
    const double xi = static_cast<double>(i) / (K - 1);
    for (int j = 0; j < K; ++j, ++p) {
      const double yj = static_cast<double>(j) / (K - 1);
      if (std::abs(rows[p][0] - xi) > 1e-9 || std::abs(rows[p][1] - yj) > 1e-9)
        throw ParseError("surface CSV grid must be uniform row-major on [0,1]^2");
      for (int c = 0; c < 3; ++c) s.ch[c](i, j) = rows[p][2 + c];
    }
  }
  validate_surface(s);
  return s;
}

std::string surface_csv(const SampledSurface& s) {
  std::ostringstream out;
  out << "x,y,v1,v2,v3\n";
  const int K = s.K();
  for (int i = 0; i < K; ++i) {
    const double xi = static_cast<double>(i) / (K - 1);
    for (int j = 0; j < K; ++j) {
      const double yj = static_cast<double>(j) / (K - 1);
      out << fmt_double(xi) << "," << fmt_double(yj);
      for (int c = 0; c < 3; ++c) out << "," << fmt_double(s.ch[c](i, j));
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace shapereg
