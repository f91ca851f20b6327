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

#ifndef PHOTOVO_IO_HPP
#define PHOTOVO_IO_HPP

#include <stdexcept>
#include <string>

#include "photovo/imaging.hpp"
#include "photovo/metrics.hpp"
#include "photovo/synth.hpp"

namespace photovo {

/// Why a read or write failed. Parsers never crash on malformed input:
/// every failure surfaces as an IoError carrying one of these.
enum class IoErrorKind {
  kOpen,              ///< file could not be opened
  kMalformedHeader,   ///< header did not scan
  kUnsupportedFormat, ///< recognizable but unsupported (e.g. P5, maxval != 255)
  kTruncated,         ///< payload shorter than the header promised
  kBadValue,          ///< forbidden value (NaN depth, non-rotation matrix, ...)
  kWrite,             ///< output could not be written
};

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  IoErrorKind kind() const { return kind_; }

 private:
  IoErrorKind kind_;
};

/// Binary PPM (P6, maxval 255). Bytes map linearly onto [0, 1]; writing
/// rounds to the nearest byte, so byte -> float -> byte round trips are
/// exact.
ImageBuffer read_image(const std::string& path);
void write_image(const ImageBuffer& img, const std::string& path);

/// Grayscale PFM ("Pf"). The scale line's sign encodes endianness (written
/// as "-1.0", little-endian); rows are stored bottom-to-top. Reading
/// accepts either endianness and rejects non-finite or negative payloads;
/// writing preserves float bits exactly.
DepthMap read_depth(const std::string& path);
void write_depth(const DepthMap& depth, const std::string& path);

/// Plain-text trajectories: one pose per line as the 12 row-major entries
/// of the 3x4 [R|t] camera-to-world matrix. Parsed rotations must pass the
/// orthonormality check within 1e-6 and are re-orthonormalized (nearest
/// rotation) on load. Values are written with 17 significant digits.
Trajectory read_trajectory(const std::string& path);
void write_trajectory(const Trajectory& traj, const std::string& path);

/// One line: "fx fy cx cy" (fx, fy > 0).
CameraIntrinsics read_intrinsics(const std::string& path);
void write_intrinsics(const CameraIntrinsics& K, const std::string& path);

/// Scene descriptions: line-oriented text with one plane per line,
/// "plane nx ny nz d texture_id scale", plus an optional "background r g b"
/// line; '#' starts a comment. Normals must be non-zero and are normalized
/// on load; scale must be positive; background channels lie in [0, 1].
SyntheticScene read_scene(const std::string& path);
void write_scene(const SyntheticScene& scene, const std::string& path);

/// In-memory parser entry points used by the fuzz harnesses; the file
/// readers above are thin wrappers over these.
ImageBuffer parse_image(const std::string& bytes);
DepthMap parse_depth(const std::string& bytes);
Trajectory parse_trajectory(const std::string& text);
CameraIntrinsics parse_intrinsics(const std::string& text);
SyntheticScene parse_scene(const std::string& text);

}  // namespace photovo

#endif  // PHOTOVO_IO_HPP
