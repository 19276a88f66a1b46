// Copyright 2026, The ReListen Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "relisten/mapper.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "relisten/error.hpp"
#include "relisten/example_mapping.hpp"
#include "relisten/io.hpp"
#include "relisten/wire.hpp"

namespace relisten {

namespace {

[[noreturn]] void bad_line(int line, const std::string& what) {
  fail(Errc::parse, "mapping line " + std::to_string(line) + ": " + what);
}

double wrap_angle(double a) { return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a; }

}  // namespace

ExpressionMapping parse_mapping(const std::string& text) {
  ExpressionMapping map;
  std::set<std::pair<int, int>> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream toks(raw);
    std::string tok;
    if (!(toks >> tok)) continue;

    MappingRecord rec;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), rec.index);
    if (ec != std::errc() || p != tok.data() + tok.size() || rec.index < 0) bad_line(line, "bad index '" + tok + "'");
    if (!(toks >> tok) || (tok != "+" && tok != "-")) bad_line(line, "sign must be + or -");
    rec.sign = tok == "+" ? +1 : -1;
    while (toks >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0) bad_line(line, "expected name=weight, got '" + tok + "'");
      double w = 0.0;
      const char* b = tok.data() + eq + 1;
      const char* e = tok.data() + tok.size();
      const auto [q, ec2] = std::from_chars(b, e, w);
      if (ec2 != std::errc() || q != e) bad_line(line, "bad weight in '" + tok + "'");
      if (!(w >= 0.0 && w <= 1.0)) {
        fail(Errc::validation, "mapping line " + std::to_string(line) + ": weight outside [0,1] in '" + tok + "'");
      }
      rec.weights.emplace_back(tok.substr(0, eq), w);
    }
    if (!seen.insert({rec.index, rec.sign}).second) {
      fail(Errc::validation, "mapping line " + std::to_string(line) + ": duplicate record for " +
                                 std::to_string(rec.index) + (rec.sign > 0 ? " +" : " -"));
    }
    map.records.push_back(std::move(rec));
  }
  return map;
}

ExpressionMapping load_mapping(const std::string& path) {
  const auto bytes = read_file(path);
  return parse_mapping(std::string(bytes.begin(), bytes.end()));
}

const std::string& example_mapping_text() {
  static const std::string text = detail::kExampleMapping;
  return text;
}

GLMatrix build_gl(const ExpressionMapping& map, GlMode mode, std::size_t expr_dim) {
  GLMatrix gl;
  gl.mode = mode;
  gl.values = MatrixRd::Zero(static_cast<Eigen::Index>(expr_dim), static_cast<Eigen::Index>(kArkitCount));
  for (const auto& rec : map.records) {
    if (rec.index < 0 || static_cast<std::size_t>(rec.index) >= expr_dim) {
      fail(Errc::validation, "mapping index " + std::to_string(rec.index) + " outside expr_dim " +
                                 std::to_string(expr_dim));
    }
    if (rec.sign != 1 && rec.sign != -1) fail(Errc::validation, "mapping sign must be +1 or -1");
    double scale = 0.0;
    if (mode == GlMode::difference) scale = rec.sign / 6.0;
    else if (rec.sign > 0) scale = 1.0 / 3.0;
    for (const auto& [name, w] : rec.weights) {
      const int col = arkit_index(name);
      if (col < 0) fail(Errc::validation, "unknown ARKit blendshape '" + name + "'");
      if (!(w >= 0.0 && w <= 1.0)) fail(Errc::validation, "weight for '" + name + "' outside [0,1]");
      gl.values(rec.index, col) += scale * w;
    }
  }
  return gl;
}

std::vector<std::uint8_t> encode_gl(const GLMatrix& gl) {
  if (gl.values.cols() != static_cast<Eigen::Index>(kArkitCount)) fail(Errc::contract, "GL must have 52 columns");
  wire::Writer w;
  w.raw("GLM1");
  w.u32(static_cast<std::uint32_t>(gl.values.rows()));
  w.u32(static_cast<std::uint32_t>(kArkitCount));
  w.u8(static_cast<std::uint8_t>(gl.mode));
  for (Eigen::Index i = 0; i < gl.values.size(); ++i) w.f32(static_cast<float>(gl.values.data()[i]));
  return w.take();
}

GLMatrix decode_gl(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  if (r.str(4) != "GLM1") fail(Errc::format, "GL file: bad magic");
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const std::uint8_t mode = r.u8();
  if (cols != kArkitCount) fail(Errc::format, "GL file: expected 52 columns, found " + std::to_string(cols));
  if (mode > 1) fail(Errc::format, "GL file: unknown mode " + std::to_string(mode));
  if (r.remaining() != static_cast<std::size_t>(rows) * cols * 4) fail(Errc::format, "GL file: size mismatch");
  GLMatrix gl;
  gl.mode = static_cast<GlMode>(mode);
  gl.values.resize(rows, cols);
  for (Eigen::Index i = 0; i < gl.values.size(); ++i) gl.values.data()[i] = r.f32();
  if (!gl.values.allFinite()) fail(Errc::format, "GL file: non-finite value");
  return gl;
}

void save_gl(const GLMatrix& gl, const std::string& path) { write_file(path, encode_gl(gl)); }

GLMatrix load_gl(const std::string& path) { return decode_gl(read_file(path)); }

MatrixRd flame_to_arkit_unclamped(const MatrixRd& F, const GLMatrix& gl) {
  if (F.cols() != gl.values.rows()) {
    fail(Errc::contract, "flame_to_arkit: input has " + std::to_string(F.cols()) + " columns, GL expects " +
                             std::to_string(gl.values.rows()));
  }
  return F * gl.values;
}

MatrixRd flame_to_arkit(const MatrixRd& F, const GLMatrix& gl) {
  return flame_to_arkit_unclamped(F, gl).cwiseMax(0.0).cwiseMin(1.0);
}

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion axis_angle_to_quaternion(const std::array<double, 3>& aa) {
  if (!std::isfinite(aa[0]) || !std::isfinite(aa[1]) || !std::isfinite(aa[2])) {
    fail(Errc::numeric, "axis_angle_to_quaternion: non-finite input");
  }
  const double theta = std::sqrt(aa[0] * aa[0] + aa[1] * aa[1] + aa[2] * aa[2]);
  if (theta < 1e-12) return {};
  const double s = std::sin(theta / 2.0) / theta;
  Quaternion q{std::cos(theta / 2.0), s * aa[0], s * aa[1], s * aa[2]};
  if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
  return q;
}

std::array<double, 9> quaternion_to_matrix(const Quaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

std::array<double, 3> quaternion_to_xyz_euler(const Quaternion& q) {
  if (!(std::abs(q.norm() - 1.0) <= 1e-6)) {
    fail(Errc::contract, "quaternion_to_xyz_euler: quaternion is not unit norm");
  }
  const auto R = quaternion_to_matrix(q);
  const double b = std::asin(std::clamp(R[2], -1.0, 1.0));
  double a = 0.0;
  double c = 0.0;
  if (std::abs(std::abs(b) - std::numbers::pi / 2.0) <= 1e-7) {
    a = std::atan2(R[7], R[4]);
  } else {
    a = std::atan2(-R[5], R[8]);
    c = std::atan2(-R[1], R[0]);
  }
  return {wrap_angle(a), wrap_angle(b), wrap_angle(c)};
}

std::vector<ArkitFrame> convert_frames(const RowMatrix& motion, const GLMatrix& gl, int F_fps,
                                       std::uint64_t first_slot) {
  const auto expr_dim = static_cast<Eigen::Index>(gl.expr_dim());
  if (motion.cols() != expr_dim + static_cast<Eigen::Index>(kPoseDim)) {
    fail(Errc::contract, "convert_frames: motion rows have " + std::to_string(motion.cols()) +
                             " components, GL implies " + std::to_string(expr_dim + 6));
  }
  if (F_fps <= 0) fail(Errc::parameter, "convert_frames: F_fps must be positive");
  const MatrixRd F = motion.leftCols(expr_dim).cast<double>();
  const MatrixRd W = flame_to_arkit(F, gl);
  std::vector<ArkitFrame> out(static_cast<std::size_t>(motion.rows()));
  for (Eigen::Index r = 0; r < motion.rows(); ++r) {
    auto& f = out[static_cast<std::size_t>(r)];
    for (std::size_t k = 0; k < kArkitCount; ++k) f.weights[k] = W(r, static_cast<Eigen::Index>(k));
    const std::array<double, 3> jaw{motion(r, expr_dim), motion(r, expr_dim + 1), motion(r, expr_dim + 2)};
    const std::array<double, 3> head{motion(r, expr_dim + 3), motion(r, expr_dim + 4), motion(r, expr_dim + 5)};
    f.jaw_euler = quaternion_to_xyz_euler(axis_angle_to_quaternion(jaw));
    f.head_euler = quaternion_to_xyz_euler(axis_angle_to_quaternion(head));
    f.seq = first_slot + static_cast<std::uint64_t>(r);
    f.t_ms = static_cast<std::uint64_t>(std::llround(static_cast<double>(f.seq) * 1000.0 / F_fps));
  }
  return out;
}

}  // namespace relisten
