#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hoikit/capture.hpp"
#include "hoikit/models.hpp"

namespace hoikit {

/// Controls one generated sequence. Trajectories are Catmull-Rom splines
/// through random keyframes spaced `smoothness` frames apart; keyframes are
/// drawn with a 25% safety margin inside each amplitude so the interpolant
/// never leaves the stated bounds.
struct SynthConfig {
  std::uint64_t seed = 1;
  int frame_count = 100;
  double fps = 30.0;
  double marker_noise_sigma = 0.0;  // meters, isotropic Gaussian
  double dropout_rate = 0.0;        // i.i.d. per marker per frame
  // Articulation profile: omega stays in [min, max]; smoothness is the
  // keyframe spacing in frames (larger = smoother).
  double articulation_min = 0.0;
  double articulation_max = 1.2;
  double smoothness = 12.0;
  // Motion amplitudes per DOF group, all centered bounds.
  double hand_rotation_amplitude = 0.5;      // rad per global axis-angle entry
  double hand_translation_amplitude = 0.12;  // m around the hand's home point
  double finger_curl_amplitude = 0.7;        // rad, main bend channels
  double object_rotation_amplitude = 0.6;    // rad per axis-angle entry
  double object_translation_amplitude = 0.15;  // m

  void validate() const;
};

/// Home points the hand translation channels oscillate around.
inline const Vec3 kLeftHandHome{0.05, -0.22, 0.05};
inline const Vec3 kRightHandHome{0.05, 0.22, 0.05};

/// Uniform Catmull-Rom interpolation through keyframes `interval` frames
/// apart. C1-continuous; clamps outside the key range.
class CatmullRom {
 public:
  CatmullRom(std::vector<double> keys, double interval);

  double eval(double frame) const;
  double derivative(double frame) const;

 private:
  double key(long long index) const;

  std::vector<double> keys_;
  double interval_;
};

/// Low-poly articulated mitten satisfying the HandModel contract: a palm
/// box plus five 3-segment box fingers, hard skinning, 16-joint tree, and a
/// 21-row landmark regressor. The left hand is the right mirrored in y.
HandModel generate_hand_asset(bool left);

enum class ObjectKind { BoxHinge, Flap, Scissors };

std::string to_string(ObjectKind kind);
ObjectKind object_kind_from_string(const std::string& name);

/// Watertight two-part hinged object built from welded grid boxes.
/// resolution = grid segments per box edge. Landmarks come from farthest
/// point sampling over the canonical combined mesh; rest angle is 0.
ArticulatedObject generate_object_asset(ObjectKind kind, int resolution,
                                        int landmark_count = 16);

/// Dorsal-biased marker layout derived from the assets themselves: 4 wrist
/// markers, 2 markers per non-leaf finger joint (enough to pin segment
/// twist), 3 per fingertip joint, and farthest-point subsets on each object
/// part.
std::vector<MarkerCorrespondence> default_marker_set(
    const CaptureAssets& assets);

struct SynthSequence {
  std::vector<MarkerCorrespondence> correspondences;
  std::vector<MarkerFrame> frames;  // noisy, with dropout
  std::vector<FramePoses> gt;
};

/// Deterministic given (assets, config): same seed, same bytes.
SynthSequence generate_sequence(const CaptureAssets& assets,
                                const SynthConfig& config);

}  // namespace hoikit
