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

#ifndef RELISTEN_MAPPER_HPP_
#define RELISTEN_MAPPER_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "relisten/fusion.hpp"
#include "relisten/types.hpp"

namespace relisten {

using MatrixRd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Annotated ARKit activation at FLAME expression value sign x 3.
struct MappingRecord {
  int index = 0;
  int sign = +1;  ///< +1 or -1
  std::vector<std::pair<std::string, double>> weights;
};

struct ExpressionMapping {
  std::vector<MappingRecord> records;
};

/// Mapping table text: `index sign name=weight ...` per line, `#` comments.
ExpressionMapping parse_mapping(const std::string& text);
ExpressionMapping load_mapping(const std::string& path);
/// Built-in table shipped as data/example_mapping.txt.
const std::string& example_mapping_text();

enum class GlMode : std::uint8_t { difference = 0, positive_only = 1 };

struct GLMatrix {
  MatrixRd values;  ///< F_e x 52
  GlMode mode = GlMode::difference;

  std::size_t expr_dim() const { return static_cast<std::size_t>(values.rows()); }
};

/// difference: row_i = (pi(i,+) - pi(i,-)) / 6; positive_only: row_i = pi(i,+) / 3.
/// Unmentioned indices give zero rows.
GLMatrix build_gl(const ExpressionMapping& map, GlMode mode, std::size_t expr_dim);

// "GLM1", u32 F_e, u32 52, u8 mode, f32 row-major values.
std::vector<std::uint8_t> encode_gl(const GLMatrix& gl);
GLMatrix decode_gl(std::span<const std::uint8_t> bytes);
void save_gl(const GLMatrix& gl, const std::string& path);
GLMatrix load_gl(const std::string& path);

/// n x F_e -> n x 52, clamped to [0, 1].
MatrixRd flame_to_arkit(const MatrixRd& F, const GLMatrix& gl);
/// Same product without the clamp.
MatrixRd flame_to_arkit_unclamped(const MatrixRd& F, const GLMatrix& gl);

struct Quaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const;
};

/// Unit quaternion with w >= 0; identity below 1e-12 rad.
Quaternion axis_angle_to_quaternion(const std::array<double, 3>& aa);
/// Intrinsic x-y-z angles (R = Rx Ry Rz), each in (-pi, pi]. At gimbal lock
/// z is 0 and x carries the combined rotation.
std::array<double, 3> quaternion_to_xyz_euler(const Quaternion& q);
/// Row-major 3x3 rotation matrix of a unit quaternion.
std::array<double, 9> quaternion_to_matrix(const Quaternion& q);

/// Predicted motion rows (expr_dim + 6 wide) to ARKit frames. Row r is
/// output slot first_slot + r: seq = slot, t_ms = round(slot x 1000 / F_fps).
std::vector<ArkitFrame> convert_frames(const RowMatrix& motion, const GLMatrix& gl, int F_fps,
                                       std::uint64_t first_slot);

}  // namespace relisten

#endif  // RELISTEN_MAPPER_HPP_
