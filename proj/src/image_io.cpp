#include "deepclaw/image_io.hpp"

#include <cstring>
#include <fstream>

namespace deepclaw {

namespace {

void check_stream(const std::ios& s, const std::string& path, const char* op) {
  if (!s) {
    raise(ErrorCode::Io, std::string(op) + " failed: " + path);
  }
}

}  // namespace

void write_ppm(const std::string& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  check_stream(out, path, "open for write");
  out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
  static_assert(sizeof(Rgb) == 3);
  out.write(reinterpret_cast<const char*>(frame.color.data()),
            std::streamsize(frame.color.size() * 3));
  check_stream(out, path, "write");
}

void read_ppm(const std::string& path, Frame& frame) {
  std::ifstream in(path, std::ios::binary);
  check_stream(in, path, "open");
  std::string magic;
  int maxval = 0;
  in >> magic >> frame.width >> frame.height >> maxval;
  if (magic != "P6" || maxval != 255) {
    raise(ErrorCode::Io, "not an 8-bit P6 ppm: " + path);
  }
  in.ignore(1);  // single whitespace after the header
  frame.color.resize(size_t(frame.width) * frame.height);
  in.read(reinterpret_cast<char*>(frame.color.data()), std::streamsize(frame.color.size() * 3));
  check_stream(in, path, "read");
}

void write_pfm(const std::string& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  check_stream(out, path, "open for write");
  out << "Pf\n" << frame.width << " " << frame.height << "\n-1.0\n";
  std::vector<float> row(size_t(frame.width));
  for (int v = frame.height - 1; v >= 0; --v) {  // pfm stores bottom-up
    for (int u = 0; u < frame.width; ++u) {
      row[size_t(u)] = float(frame.depth[size_t(v) * frame.width + u]);
    }
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size() * 4));
  }
  check_stream(out, path, "write");
}

void read_pfm(const std::string& path, Frame& frame) {
  std::ifstream in(path, std::ios::binary);
  check_stream(in, path, "open");
  std::string magic;
  double scale = 0.0;
  in >> magic >> frame.width >> frame.height >> scale;
  if (magic != "Pf" || scale >= 0.0) {
    raise(ErrorCode::Io, "not a little-endian grayscale pfm: " + path);
  }
  in.ignore(1);
  frame.depth.resize(size_t(frame.width) * frame.height);
  std::vector<float> row(size_t(frame.width));
  for (int v = frame.height - 1; v >= 0; --v) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size() * 4));
    for (int u = 0; u < frame.width; ++u) {
      frame.depth[size_t(v) * frame.width + u] = double(row[size_t(u)]);
    }
  }
  check_stream(in, path, "read");
}

}  // namespace deepclaw
