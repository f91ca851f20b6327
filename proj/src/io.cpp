/******************************************************************************
 * Copyright 2026 The photovo Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/

#include "photovo/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace photovo {
namespace {

// Dimension guard shared by the binary parsers; inputs promising more are
// rejected before anything is allocated.
constexpr int kMaxImageDim = 1 << 15;

bool is_netpbm_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

// Advance past whitespace (and, for PPM headers, '#' comments running to
// the end of the line).
void skip_separators(const std::string& s, std::size_t& pos,
                     bool allow_comments) {
  while (pos < s.size()) {
    if (is_netpbm_space(s[pos])) {
      ++pos;
    } else if (allow_comments && s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

std::string next_header_token(const std::string& s, std::size_t& pos,
                              bool allow_comments, const char* what) {
  skip_separators(s, pos, allow_comments);
  const std::size_t start = pos;
  while (pos < s.size() && !is_netpbm_space(s[pos]) &&
         !(allow_comments && s[pos] == '#')) {
    ++pos;
  }
  if (pos == start) {
    throw IoError(IoErrorKind::kMalformedHeader,
                  std::string("missing ") + what + " in header");
  }
  return s.substr(start, pos - start);
}

int parse_dimension(const std::string& tok, const char* what) {
  int v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw IoError(IoErrorKind::kMalformedHeader,
                  std::string("bad ") + what + " '" + tok + "'");
  }
  if (v < 1 || v > kMaxImageDim) {
    throw IoError(IoErrorKind::kMalformedHeader,
                  std::string(what) + " out of range: " + tok);
  }
  return v;
}

// One whitespace byte separates the header from the binary payload.
void expect_payload_separator(const std::string& s, std::size_t& pos) {
  if (pos >= s.size() || !is_netpbm_space(s[pos])) {
    throw IoError(IoErrorKind::kMalformedHeader,
                  "header not terminated by whitespace");
  }
  ++pos;
}

double parse_number(const std::string& s, std::size_t& pos, bool& found) {
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  double v = 0.0;
  const auto res = std::from_chars(s.data() + pos, s.data() + s.size(), v);
  found = res.ec == std::errc{} && res.ptr != s.data() + pos;
  if (found) pos = static_cast<std::size_t>(res.ptr - s.data());
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream ifs(path, std::ios::binary);
  if (!ifs) {
    throw IoError(IoErrorKind::kOpen, "could not open " + path);
  }
  std::ostringstream ss;
  ss << ifs.rdbuf();
  if (ifs.bad() || ss.bad()) {
    throw IoError(IoErrorKind::kOpen, "could not read " + path);
  }
  return std::move(ss).str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
  if (!ofs) {
    throw IoError(IoErrorKind::kOpen, "could not open " + path +
                                          " for writing");
  }
  ofs.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  ofs.flush();
  if (!ofs) {
    throw IoError(IoErrorKind::kWrite, "could not write " + path);
  }
}

void append_g17(std::string& out, double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  out.append(buf.data(), res.ptr);
}

}  // namespace

ImageBuffer parse_image(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw IoError(IoErrorKind::kMalformedHeader, "not a PPM file");
  }
  if (bytes[1] != '6') {
    if (bytes[1] >= '1' && bytes[1] <= '7') {
      throw IoError(IoErrorKind::kUnsupportedFormat,
                    std::string("unsupported netpbm variant P") + bytes[1]);
    }
    throw IoError(IoErrorKind::kMalformedHeader, "not a PPM file");
  }

  std::size_t pos = 2;
  const int w =
      parse_dimension(next_header_token(bytes, pos, true, "width"), "width");
  const int h =
      parse_dimension(next_header_token(bytes, pos, true, "height"), "height");
  const std::string maxval = next_header_token(bytes, pos, true, "maxval");
  if (maxval != "255") {
    throw IoError(IoErrorKind::kUnsupportedFormat,
                  "only maxval 255 is supported, got " + maxval);
  }
  expect_payload_separator(bytes, pos);

  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - pos < need) {
    throw IoError(IoErrorKind::kTruncated, "pixel payload is truncated");
  }

  ImageBuffer img(w, h);
  for (std::size_t i = 0; i < need; ++i) {
    img.data()[i] =
        static_cast<float>(static_cast<unsigned char>(bytes[pos + i])) /
        255.0f;
  }
  return img;
}

ImageBuffer read_image(const std::string& path) {
  return parse_image(read_file(path));
}

void write_image(const ImageBuffer& img, const std::string& path) {
  if (img.width() <= 0 || img.height() <= 0) {
    throw std::invalid_argument("write_image: empty image");
  }
  std::string out = "P6\n" + std::to_string(img.width()) + " " +
                    std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + img.data().size());
  for (float v : img.data()) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    out.push_back(static_cast<char>(
        static_cast<unsigned char>(std::lround(c * 255.0f))));
  }
  write_file(path, out);
}

DepthMap parse_depth(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw IoError(IoErrorKind::kMalformedHeader, "not a PFM file");
  }
  if (bytes[1] == 'F') {
    throw IoError(IoErrorKind::kUnsupportedFormat,
                  "color PFM is not supported");
  }
  if (bytes[1] != 'f') {
    throw IoError(IoErrorKind::kMalformedHeader, "not a PFM file");
  }

  std::size_t pos = 2;
  const int w =
      parse_dimension(next_header_token(bytes, pos, false, "width"), "width");
  const int h = parse_dimension(next_header_token(bytes, pos, false, "height"),
                                "height");
  const std::string scale_tok = next_header_token(bytes, pos, false, "scale");
  double scale = 0.0;
  {
    const auto res = std::from_chars(
        scale_tok.data(), scale_tok.data() + scale_tok.size(), scale);
    if (res.ec != std::errc{} ||
        res.ptr != scale_tok.data() + scale_tok.size() ||
        !std::isfinite(scale) || scale == 0.0) {
      throw IoError(IoErrorKind::kMalformedHeader,
                    "bad scale '" + scale_tok + "'");
    }
  }
  expect_payload_separator(bytes, pos);

  const bool little = scale < 0.0;
  const std::size_t count = static_cast<std::size_t>(w) * h;
  if ((bytes.size() - pos) / 4 < count) {
    throw IoError(IoErrorKind::kTruncated, "depth payload is truncated");
  }

  DepthMap depth(w, h);
  for (int row = 0; row < h; ++row) {
    const int y = h - 1 - row;  // rows are stored bottom-to-top
    for (int x = 0; x < w; ++x) {
      const auto b = [&](int k) {
        return static_cast<std::uint32_t>(
            static_cast<unsigned char>(bytes[pos + k]));
      };
      const std::uint32_t u =
          little ? (b(0) | b(1) << 8 | b(2) << 16 | b(3) << 24)
                 : (b(3) | b(2) << 8 | b(1) << 16 | b(0) << 24);
      pos += 4;
      const float v = std::bit_cast<float>(u);
      if (!std::isfinite(v) || v < 0.0f) {
        throw IoError(IoErrorKind::kBadValue,
                      "depth values must be finite and non-negative");
      }
      depth.at(x, y) = v;
    }
  }
  return depth;
}

DepthMap read_depth(const std::string& path) {
  return parse_depth(read_file(path));
}

void write_depth(const DepthMap& depth, const std::string& path) {
  if (depth.width() <= 0 || depth.height() <= 0) {
    throw std::invalid_argument("write_depth: empty map");
  }
  for (float v : depth.data()) {
    if (!std::isfinite(v) || v < 0.0f) {
      throw IoError(IoErrorKind::kBadValue,
                    "write_depth: values must be finite and non-negative");
    }
  }
  std::string out = "Pf\n" + std::to_string(depth.width()) + " " +
                    std::to_string(depth.height()) + "\n-1.0\n";
  out.reserve(out.size() + depth.data().size() * 4);
  for (int row = depth.height() - 1; row >= 0; --row) {
    for (int x = 0; x < depth.width(); ++x) {
      const std::uint32_t u = std::bit_cast<std::uint32_t>(depth.at(x, row));
      out.push_back(static_cast<char>(u & 0xff));
      out.push_back(static_cast<char>((u >> 8) & 0xff));
      out.push_back(static_cast<char>((u >> 16) & 0xff));
      out.push_back(static_cast<char>((u >> 24) & 0xff));
    }
  }
  write_file(path, out);
}

Trajectory parse_trajectory(const std::string& text) {
  Trajectory out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::size_t lp = 0;
    while (lp < line.size() && (line[lp] == ' ' || line[lp] == '\t')) ++lp;
    if (lp == line.size() || line[lp] == '#') continue;

    std::array<double, 12> m{};
    for (int k = 0; k < 12; ++k) {
      bool found = false;
      m[k] = parse_number(line, lp, found);
      if (!found) {
        throw IoError(IoErrorKind::kMalformedHeader,
                      "line " + std::to_string(line_no) +
                          ": expected 12 matrix entries");
      }
    }
    while (lp < line.size() && (line[lp] == ' ' || line[lp] == '\t')) ++lp;
    if (lp != line.size()) {
      throw IoError(IoErrorKind::kMalformedHeader,
                    "line " + std::to_string(line_no) +
                        ": trailing characters after 12 entries");
    }
    for (double v : m) {
      if (!std::isfinite(v)) {
        throw IoError(IoErrorKind::kBadValue,
                      "line " + std::to_string(line_no) +
                          ": entries must be finite");
      }
    }

    Eigen::Matrix3d R;
    R << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
    if (!is_rotation(R, 1e-6)) {
      throw IoError(IoErrorKind::kBadValue,
                    "line " + std::to_string(line_no) +
                        ": matrix is not a rotation");
    }
    Se3Transform T;
    T.R = nearest_rotation(R);
    T.t = Eigen::Vector3d(m[3], m[7], m[11]);
    out.push_back(T);
  }
  return out;
}

Trajectory read_trajectory(const std::string& path) {
  return parse_trajectory(read_file(path));
}

void write_trajectory(const Trajectory& traj, const std::string& path) {
  std::string out;
  for (const Se3Transform& T : traj) {
    if (!T.t.allFinite() || !is_rotation(T.R, 1e-6)) {
      throw IoError(IoErrorKind::kBadValue,
                    "write_trajectory: pose is not a finite rigid transform");
    }
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        append_g17(out, T.R(row, col));
        out.push_back(' ');
      }
      append_g17(out, T.t[row]);
      out.push_back(row == 2 ? '\n' : ' ');
    }
  }
  write_file(path, out);
}

CameraIntrinsics parse_intrinsics(const std::string& text) {
  std::size_t pos = 0;
  std::array<double, 4> v{};
  for (int k = 0; k < 4; ++k) {
    // Newlines between values are tolerated; the writer emits one line.
    while (pos < text.size() && is_netpbm_space(text[pos])) ++pos;
    bool found = false;
    v[k] = parse_number(text, pos, found);
    if (!found) {
      throw IoError(IoErrorKind::kMalformedHeader,
                    "expected four numbers: fx fy cx cy");
    }
  }
  while (pos < text.size() && is_netpbm_space(text[pos])) ++pos;
  if (pos != text.size()) {
    throw IoError(IoErrorKind::kMalformedHeader,
                  "trailing characters after fx fy cx cy");
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw IoError(IoErrorKind::kBadValue, "intrinsics must be finite");
    }
  }
  if (!(v[0] > 0.0) || !(v[1] > 0.0)) {
    throw IoError(IoErrorKind::kBadValue, "focal lengths must be positive");
  }
  return CameraIntrinsics{v[0], v[1], v[2], v[3]};
}

CameraIntrinsics read_intrinsics(const std::string& path) {
  return parse_intrinsics(read_file(path));
}

void write_intrinsics(const CameraIntrinsics& K, const std::string& path) {
  if (!K.valid()) {
    throw IoError(IoErrorKind::kBadValue,
                  "write_intrinsics: invalid intrinsics");
  }
  std::string out;
  append_g17(out, K.fx);
  out.push_back(' ');
  append_g17(out, K.fy);
  out.push_back(' ');
  append_g17(out, K.cx);
  out.push_back(' ');
  append_g17(out, K.cy);
  out.push_back('\n');
  write_file(path, out);
}

namespace {

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> toks;
  std::size_t p = 0;
  while (p < line.size()) {
    while (p < line.size() && (line[p] == ' ' || line[p] == '\t')) ++p;
    if (p >= line.size() || line[p] == '#') break;
    const std::size_t start = p;
    while (p < line.size() && line[p] != ' ' && line[p] != '\t') ++p;
    toks.push_back(line.substr(start, p - start));
  }
  return toks;
}

double scene_double(const std::string& tok, int line_no) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() ||
      !std::isfinite(v)) {
    throw IoError(IoErrorKind::kBadValue, "scene line " +
                                              std::to_string(line_no) +
                                              ": bad number '" + tok + "'");
  }
  return v;
}

std::uint32_t scene_u32(const std::string& tok, int line_no) {
  std::uint32_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw IoError(IoErrorKind::kBadValue,
                  "scene line " + std::to_string(line_no) +
                      ": bad texture id '" + tok + "'");
  }
  return v;
}

}  // namespace

SyntheticScene parse_scene(const std::string& text) {
  SyntheticScene scene;
  scene.planes.clear();
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> toks = split_tokens(line);
    if (toks.empty()) continue;

    if (toks[0] == "plane") {
      if (toks.size() != 7) {
        throw IoError(IoErrorKind::kMalformedHeader,
                      "scene line " + std::to_string(line_no) +
                          ": expected 'plane nx ny nz d texture_id scale'");
      }
      ScenePlane p;
      Eigen::Vector3d n(scene_double(toks[1], line_no),
                        scene_double(toks[2], line_no),
                        scene_double(toks[3], line_no));
      if (n.norm() < 1e-12) {
        throw IoError(IoErrorKind::kBadValue,
                      "scene line " + std::to_string(line_no) +
                          ": zero normal");
      }
      p.normal = n.normalized();
      p.offset = scene_double(toks[4], line_no);
      p.texture_id = scene_u32(toks[5], line_no);
      p.texture_scale = scene_double(toks[6], line_no);
      if (!(p.texture_scale > 0.0)) {
        throw IoError(IoErrorKind::kBadValue,
                      "scene line " + std::to_string(line_no) +
                          ": texture scale must be positive");
      }
      scene.planes.push_back(p);
    } else if (toks[0] == "background") {
      if (toks.size() != 4) {
        throw IoError(IoErrorKind::kMalformedHeader,
                      "scene line " + std::to_string(line_no) +
                          ": expected 'background r g b'");
      }
      for (int c = 0; c < 3; ++c) {
        const double v = scene_double(toks[1 + c], line_no);
        if (v < 0.0 || v > 1.0) {
          throw IoError(IoErrorKind::kBadValue,
                        "scene line " + std::to_string(line_no) +
                            ": background channels must lie in [0, 1]");
        }
        scene.background[c] = static_cast<float>(v);
      }
    } else {
      throw IoError(IoErrorKind::kMalformedHeader,
                    "scene line " + std::to_string(line_no) +
                        ": unknown directive '" + toks[0] + "'");
    }
  }
  return scene;
}

SyntheticScene read_scene(const std::string& path) {
  return parse_scene(read_file(path));
}

void write_scene(const SyntheticScene& scene, const std::string& path) {
  std::string out;
  for (const ScenePlane& p : scene.planes) {
    out += "plane ";
    append_g17(out, p.normal[0]);
    out.push_back(' ');
    append_g17(out, p.normal[1]);
    out.push_back(' ');
    append_g17(out, p.normal[2]);
    out.push_back(' ');
    append_g17(out, p.offset);
    out += " " + std::to_string(p.texture_id) + " ";
    append_g17(out, p.texture_scale);
    out.push_back('\n');
  }
  out += "background ";
  append_g17(out, static_cast<double>(scene.background[0]));
  out.push_back(' ');
  append_g17(out, static_cast<double>(scene.background[1]));
  out.push_back(' ');
  append_g17(out, static_cast<double>(scene.background[2]));
  out.push_back('\n');
  write_file(path, out);
}

}  // namespace photovo
