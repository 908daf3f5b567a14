#include "hoikit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>

namespace hoikit {

void SynthConfig::validate() const {
  if (frame_count < 1) throw ParameterError("frame_count must be >= 1");
  if (!(fps > 0.0)) throw ParameterError("fps must be > 0");
  if (!(marker_noise_sigma >= 0.0) || !std::isfinite(marker_noise_sigma))
    throw ParameterError("marker_noise_sigma must be finite and >= 0");
  if (!(dropout_rate >= 0.0) || !(dropout_rate <= 1.0))
    throw ParameterError("dropout_rate must lie in [0, 1]");
  if (!std::isfinite(articulation_min) || !std::isfinite(articulation_max) ||
      articulation_min > articulation_max)
    throw ParameterError("articulation profile must satisfy min <= max");
  if (articulation_min <= -std::numbers::pi ||
      articulation_max > std::numbers::pi)
    throw ParameterError("articulation profile must lie in (-pi, pi]");
  if (!(smoothness >= 2.0))
    throw ParameterError("smoothness (keyframe spacing) must be >= 2 frames");
  const double amps[] = {hand_rotation_amplitude, hand_translation_amplitude,
                         finger_curl_amplitude, object_rotation_amplitude,
                         object_translation_amplitude};
  for (const double a : amps)
    if (!(a >= 0.0) || !std::isfinite(a))
      throw ParameterError("motion amplitudes must be finite and >= 0");
}

CatmullRom::CatmullRom(std::vector<double> keys, double interval)
    : keys_(std::move(keys)), interval_(interval) {
  if (keys_.empty()) throw ParameterError("spline needs at least one key");
  if (!(interval_ > 0.0)) throw ParameterError("spline interval must be > 0");
}

double CatmullRom::key(long long index) const {
  const long long last = static_cast<long long>(keys_.size()) - 1;
  return keys_[static_cast<std::size_t>(std::clamp(index, 0LL, last))];
}

double CatmullRom::eval(double frame) const {
  const double u = frame / interval_;
  const long long i = static_cast<long long>(std::floor(u));
  const double s = u - static_cast<double>(i);
  const double p0 = key(i - 1), p1 = key(i), p2 = key(i + 1), p3 = key(i + 2);
  return 0.5 * (2.0 * p1 + s * (-p0 + p2) +
                s * s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) +
                s * s * s * (-p0 + 3.0 * p1 - 3.0 * p2 + p3));
}

double CatmullRom::derivative(double frame) const {
  const double u = frame / interval_;
  const long long i = static_cast<long long>(std::floor(u));
  const double s = u - static_cast<double>(i);
  const double p0 = key(i - 1), p1 = key(i), p2 = key(i + 1), p3 = key(i + 2);
  const double dpds =
      0.5 * ((-p0 + p2) + 2.0 * s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) +
             3.0 * s * s * (-p0 + 3.0 * p1 - 3.0 * p2 + p3));
  return dpds / interval_;
}

namespace {

// Corner i of a box: sign bits (i&1 -> +x, i&2 -> +y, i&4 -> +z).
int add_box(std::vector<Vec3>& verts, std::vector<Eigen::Vector3i>& faces,
            const Vec3& center, const Vec3& half) {
  const int base = static_cast<int>(verts.size());
  for (int i = 0; i < 8; ++i) {
    const Vec3 sign((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0,
                    (i & 4) ? 1.0 : -1.0);
    verts.push_back(center + sign.cwiseProduct(half));
  }
  // Two triangles per face, outward winding.
  const int quads[6][4] = {
      {1, 3, 7, 5},  // +x
      {0, 4, 6, 2},  // -x
      {2, 6, 7, 3},  // +y
      {0, 1, 5, 4},  // -y
      {4, 5, 7, 6},  // +z
      {0, 2, 3, 1},  // -z
  };
  for (const auto& q : quads) {
    faces.emplace_back(base + q[0], base + q[1], base + q[2]);
    faces.emplace_back(base + q[0], base + q[2], base + q[3]);
  }
  return base;
}

Mesh assemble(const std::vector<Vec3>& verts,
              const std::vector<Eigen::Vector3i>& faces) {
  Mesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i)
    mesh.vertices.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
  mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i)
    mesh.faces.row(static_cast<Eigen::Index>(i)) = faces[i].transpose();
  return mesh;
}

constexpr double kPalmLength = 0.08;
constexpr double kPalmHalfWidth = 0.05;
constexpr double kPalmHalfThick = 0.012;
constexpr double kSegmentLength[3] = {0.035, 0.030, 0.025};
constexpr double kFingerHalfWidth = 0.008;
constexpr double kFingerHalfThick = 0.008;
constexpr double kFingerSpacing = 0.02;

double finger_y(int finger) { return (finger - 2) * kFingerSpacing; }

}  // namespace

HandModel generate_hand_asset(bool left) {
  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> faces;

  const int palm_base =
      add_box(verts, faces, Vec3(kPalmLength / 2, 0, 0),
              Vec3(kPalmLength / 2, kPalmHalfWidth, kPalmHalfThick));

  // seg_base[f][s]: first vertex of that segment's box.
  int seg_base[5][3];
  for (int f = 0; f < 5; ++f) {
    double x0 = kPalmLength;
    for (int s = 0; s < 3; ++s) {
      const double len = kSegmentLength[s];
      seg_base[f][s] =
          add_box(verts, faces, Vec3(x0 + len / 2, finger_y(f), 0),
                  Vec3(len / 2, kFingerHalfWidth, kFingerHalfThick));
      x0 += len;
    }
  }

  HandModel model;
  model.tmpl = assemble(verts, faces);
  const Eigen::Index v = model.tmpl.vertices.rows();

  model.parents.assign(kHandJoints, 0);
  model.parents[0] = -1;
  model.rest_offsets = Points::Zero(kHandJoints, 3);
  for (int f = 0; f < 5; ++f) {
    for (int s = 0; s < 3; ++s) {
      const int joint = 1 + 3 * f + s;
      model.parents[static_cast<std::size_t>(joint)] =
          s == 0 ? 0 : joint - 1;
      model.rest_offsets.row(joint) =
          s == 0 ? Eigen::RowVector3d(kPalmLength, finger_y(f), 0)
                 : Eigen::RowVector3d(kSegmentLength[s - 1], 0, 0);
    }
  }

  // Hard skinning: every vertex follows exactly one joint.
  model.skinning_weights = MatX::Zero(v, kHandJoints);
  for (int i = 0; i < 8; ++i) model.skinning_weights(palm_base + i, 0) = 1.0;
  for (int f = 0; f < 5; ++f)
    for (int s = 0; s < 3; ++s)
      for (int i = 0; i < 8; ++i)
        model.skinning_weights(seg_base[f][s] + i, 1 + 3 * f + s) = 1.0;

  // Landmarks as averages of box-face corners that sit exactly on the
  // joint (proximal face) or the fingertip (distal face of the last
  // segment). Corner sets: -x face = {0,2,4,6}, +x face = {1,3,5,7}.
  model.joint_regressor = MatX::Zero(kHandLandmarks, v);
  const int near_face[4] = {0, 2, 4, 6};
  const int far_face[4] = {1, 3, 5, 7};
  for (const int c : near_face)
    model.joint_regressor(0, palm_base + c) = 0.25;
  for (int f = 0; f < 5; ++f) {
    for (int s = 0; s < 3; ++s)
      for (const int c : near_face)
        model.joint_regressor(1 + 3 * f + s, seg_base[f][s] + c) = 0.25;
    for (const int c : far_face)
      model.joint_regressor(16 + f, seg_base[f][2] + c) = 0.25;
  }

  // Shape space: axis scales on the first three coefficients, then gentle
  // deterministic bumps.
  model.shape_blendshapes = MatX::Zero(3 * v, kHandShapeDof);
  for (Eigen::Index i = 0; i < v; ++i) {
    for (int c = 0; c < 3; ++c)
      model.shape_blendshapes(3 * i + c, c) = 0.1 * model.tmpl.vertices(i, c);
    for (int j = 3; j < kHandShapeDof; ++j)
      for (int c = 0; c < 3; ++c)
        model.shape_blendshapes(3 * i + c, j) =
            0.002 * std::sin(0.7 * (j + 1) * static_cast<double>(i) + c);
  }

  if (left) {
    model.tmpl.vertices.col(1) *= -1.0;
    model.tmpl.faces.col(1).swap(model.tmpl.faces.col(2));
    model.rest_offsets.col(1) *= -1.0;
    for (Eigen::Index i = 0; i < v; ++i)
      model.shape_blendshapes.row(3 * i + 1) *= -1.0;
  }

  model.validate();
  return model;
}

std::string to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::BoxHinge: return "box-hinge";
    case ObjectKind::Flap: return "flap";
    case ObjectKind::Scissors: return "scissors-like";
  }
  throw ParameterError("unknown object kind");
}

ObjectKind object_kind_from_string(const std::string& name) {
  if (name == "box-hinge") return ObjectKind::BoxHinge;
  if (name == "flap") return ObjectKind::Flap;
  if (name == "scissors-like" || name == "scissors") return ObjectKind::Scissors;
  throw ParameterError("unknown object kind: " + name);
}

namespace {

// Watertight box with an r x r grid on every face; shared edge vertices are
// welded through an integer lattice key.
Mesh grid_box(const Vec3& center, const Vec3& half, int r) {
  const Vec3 lo = center - half;
  const Vec3 step = 2.0 * half / static_cast<double>(r);
  std::map<long long, int> lattice;
  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> faces;

  const auto vertex_at = [&](int i, int j, int k) {
    const long long key =
        (static_cast<long long>(i) * (r + 1) + j) * (r + 1) + k;
    const auto it = lattice.find(key);
    if (it != lattice.end()) return it->second;
    const int index = static_cast<int>(verts.size());
    verts.push_back(lo + Vec3(i * step.x(), j * step.y(), k * step.z()));
    lattice.emplace(key, index);
    return index;
  };

  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int w = (axis + 2) % 3;
    for (const bool at_max : {false, true}) {
      for (int a = 0; a < r; ++a) {
        for (int b = 0; b < r; ++b) {
          int coords[4][3];
          const int corner_uv[4][2] = {{a, b}, {a + 1, b}, {a + 1, b + 1},
                                       {a, b + 1}};
          for (int cidx = 0; cidx < 4; ++cidx) {
            coords[cidx][axis] = at_max ? r : 0;
            coords[cidx][u] = corner_uv[cidx][0];
            coords[cidx][w] = corner_uv[cidx][1];
          }
          int p[4];
          for (int cidx = 0; cidx < 4; ++cidx)
            p[cidx] = vertex_at(coords[cidx][0], coords[cidx][1],
                                coords[cidx][2]);
          if (at_max) {
            faces.emplace_back(p[0], p[1], p[2]);
            faces.emplace_back(p[0], p[2], p[3]);
          } else {
            faces.emplace_back(p[0], p[2], p[1]);
            faces.emplace_back(p[0], p[3], p[2]);
          }
        }
      }
    }
  }
  return assemble(verts, faces);
}

}  // namespace

ArticulatedObject generate_object_asset(ObjectKind kind, int resolution,
                                        int landmark_count) {
  if (resolution < 1) throw ParameterError("object resolution must be >= 1");
  ArticulatedObject obj;
  switch (kind) {
    case ObjectKind::BoxHinge:
      obj.base_part =
          grid_box(Vec3(0, 0, 0.03), Vec3(0.10, 0.075, 0.03), resolution);
      obj.top_part = grid_box(Vec3(0, 0, 0.0675), Vec3(0.10, 0.075, 0.0075),
                              resolution);
      obj.axis_origin = Vec3(-0.10, 0, 0.06);
      obj.axis_direction = Vec3(0, 1, 0);
      break;
    case ObjectKind::Flap:
      obj.base_part =
          grid_box(Vec3(-0.06, 0, 0.005), Vec3(0.06, 0.09, 0.005), resolution);
      obj.top_part =
          grid_box(Vec3(0.06, 0, 0.015), Vec3(0.06, 0.09, 0.005), resolution);
      obj.axis_origin = Vec3(0, 0, 0.01);
      obj.axis_direction = Vec3(0, 1, 0);
      break;
    case ObjectKind::Scissors:
      obj.base_part = grid_box(Vec3(0.07, 0, -0.004), Vec3(0.11, 0.012, 0.004),
                               resolution);
      obj.top_part = grid_box(Vec3(0.07, 0, 0.004), Vec3(0.11, 0.012, 0.004),
                              resolution);
      obj.axis_origin = Vec3(0, 0, 0);
      obj.axis_direction = Vec3(0, 0, 1);
      break;
  }
  obj.rest_angle = 0.0;
  obj.fps_start = 0;

  const Points all = object_vertices(obj.base_part, obj.top_part);
  const Eigen::Index total = all.rows();
  if (landmark_count < 1 || landmark_count > total)
    throw ParameterError("landmark count out of range for this resolution");
  const std::vector<int> picks =
      fps_landmarks(all, landmark_count, obj.fps_start);
  const int base_count = static_cast<int>(obj.base_part.vertices.rows());
  for (const int pick : picks) {
    ObjectLandmark lm;
    lm.part = pick < base_count ? Entity::ObjectBase : Entity::ObjectTop;
    lm.vertex = pick < base_count ? pick : pick - base_count;
    obj.landmarks.push_back(lm);
  }
  obj.validate();
  return obj;
}

namespace {

std::string joint_marker_id(const char* side, int joint, int index) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%s_j%02d_%d", side, joint, index);
  return buffer;
}

void hand_markers(const HandModel& model, Entity entity, const char* side,
                  std::vector<MarkerCorrespondence>& out) {
  const Eigen::Index v = model.tmpl.vertices.rows();
  std::vector<std::vector<int>> dominant(kHandJoints);
  for (Eigen::Index i = 0; i < v; ++i) {
    Eigen::Index joint = 0;
    model.skinning_weights.row(i).maxCoeff(&joint);
    dominant[static_cast<std::size_t>(joint)].push_back(static_cast<int>(i));
  }
  std::vector<bool> leaf(kHandJoints, true);
  for (int k = 1; k < kHandJoints; ++k)
    leaf[static_cast<std::size_t>(model.parents[static_cast<std::size_t>(k)])] =
        false;

  for (int k = 0; k < kHandJoints; ++k) {
    const auto& own = dominant[static_cast<std::size_t>(k)];
    if (own.empty())
      throw DegenerateInputError("hand joint without dominant vertices");
    const int want = k == 0 ? 4 : (leaf[static_cast<std::size_t>(k)] ? 3 : 2);
    if (static_cast<int>(own.size()) < want)
      throw DegenerateInputError("hand joint owns too few vertices");
    Points subset(static_cast<Eigen::Index>(own.size()), 3);
    for (std::size_t i = 0; i < own.size(); ++i)
      subset.row(static_cast<Eigen::Index>(i)) =
          model.tmpl.vertices.row(own[i]);
    const std::vector<int> picks = fps_landmarks(subset, want, 0);
    for (std::size_t i = 0; i < picks.size(); ++i)
      out.push_back({joint_marker_id(side, k, static_cast<int>(i)), entity,
                     own[static_cast<std::size_t>(picks[i])]});
  }
}

void object_markers(const Mesh& part, Entity entity, const char* prefix,
                    std::vector<MarkerCorrespondence>& out) {
  const int count = static_cast<int>(std::min<Eigen::Index>(
      6, part.vertices.rows()));
  const std::vector<int> picks = fps_landmarks(part.vertices, count, 0);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%s_%d", prefix,
                  static_cast<int>(i));
    out.push_back({buffer, entity, picks[i]});
  }
}

}  // namespace

std::vector<MarkerCorrespondence> default_marker_set(
    const CaptureAssets& assets) {
  std::vector<MarkerCorrespondence> out;
  hand_markers(assets.left, Entity::LeftHand, "L", out);
  hand_markers(assets.right, Entity::RightHand, "R", out);
  object_markers(assets.object.base_part, Entity::ObjectBase, "O_base", out);
  object_markers(assets.object.top_part, Entity::ObjectTop, "O_top", out);
  return out;
}

namespace {

CatmullRom make_channel(std::mt19937_64& rng, int key_count, double center,
                        double amplitude) {
  std::vector<double> keys(static_cast<std::size_t>(key_count));
  // 25% margin: Catmull-Rom overshoot past the key range is below 8/27 of
  // the key bound, so values stay within the full amplitude.
  std::uniform_real_distribution<double> dist(center - 0.75 * amplitude,
                                              center + 0.75 * amplitude);
  for (auto& k : keys) k = dist(rng);
  return CatmullRom(std::move(keys), 1.0);
}

}  // namespace

SynthSequence generate_sequence(const CaptureAssets& assets,
                                const SynthConfig& config) {
  config.validate();
  assets.left.validate();
  assets.right.validate();
  assets.object.validate();

  std::mt19937_64 rng(config.seed);
  const int key_count = static_cast<int>(std::ceil(
                            (config.frame_count - 1) / config.smoothness)) +
                        1;

  const auto hand_channels = [&](const Vec3& home) {
    std::vector<CatmullRom> channels;
    channels.reserve(kHandPoseDof + 3);
    for (int j = 0; j < kHandPoseDof; ++j) {
      double amp = config.hand_rotation_amplitude;
      if (j >= 3)
        amp = (j % 3 == 1) ? config.finger_curl_amplitude
                           : 0.25 * config.finger_curl_amplitude;
      channels.push_back(make_channel(rng, key_count, 0.0, amp));
    }
    for (int c = 0; c < 3; ++c)
      channels.push_back(make_channel(rng, key_count, home[c],
                                      config.hand_translation_amplitude));
    return channels;
  };

  const std::vector<CatmullRom> left_channels = hand_channels(kLeftHandHome);
  const std::vector<CatmullRom> right_channels = hand_channels(kRightHandHome);

  std::vector<CatmullRom> object_channels;
  for (int c = 0; c < 3; ++c)
    object_channels.push_back(make_channel(
        rng, key_count, 0.0, config.object_rotation_amplitude));
  for (int c = 0; c < 3; ++c)
    object_channels.push_back(make_channel(
        rng, key_count, 0.0, config.object_translation_amplitude));
  const double omega_center =
      0.5 * (config.articulation_min + config.articulation_max);
  const double omega_amp =
      0.5 * (config.articulation_max - config.articulation_min);
  const CatmullRom omega_channel =
      make_channel(rng, key_count, omega_center, omega_amp);

  SynthSequence seq;
  seq.correspondences = default_marker_set(assets);

  std::vector<int> left_verts, right_verts, base_verts, top_verts;
  for (const auto& c : seq.correspondences) {
    switch (c.entity) {
      case Entity::LeftHand: left_verts.push_back(c.vertex); break;
      case Entity::RightHand: right_verts.push_back(c.vertex); break;
      case Entity::ObjectBase: base_verts.push_back(c.vertex); break;
      case Entity::ObjectTop: top_verts.push_back(c.vertex); break;
      default:
        throw ParameterError("marker correspondences must name a hand or an "
                             "object part");
    }
  }

  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::bernoulli_distribution drop(config.dropout_rate);
  const double key_step = config.smoothness;

  seq.frames.reserve(static_cast<std::size_t>(config.frame_count));
  seq.gt.reserve(static_cast<std::size_t>(config.frame_count));
  for (int frame = 0; frame < config.frame_count; ++frame) {
    const double u = static_cast<double>(frame) / key_step;

    FramePoses poses;
    const auto eval_hand = [&](const std::vector<CatmullRom>& channels) {
      HandParams params = HandParams::rest();
      for (int j = 0; j < kHandPoseDof; ++j)
        params.theta[j] = channels[static_cast<std::size_t>(j)].eval(u);
      for (int c = 0; c < 3; ++c)
        params.translation[c] =
            channels[static_cast<std::size_t>(kHandPoseDof + c)].eval(u);
      return params;
    };
    poses.left = eval_hand(left_channels);
    poses.right = eval_hand(right_channels);
    for (int c = 0; c < 3; ++c) {
      poses.object.rotation[c] =
          object_channels[static_cast<std::size_t>(c)].eval(u);
      poses.object.translation[c] =
          object_channels[static_cast<std::size_t>(3 + c)].eval(u);
    }
    poses.object.omega = omega_channel.eval(u);

    const Points left_pos =
        pose_hand_subset(assets.left, poses.left, left_verts);
    const Points right_pos =
        pose_hand_subset(assets.right, poses.right, right_verts);
    const auto [base_mesh, top_mesh] =
        pose_object(assets.object, poses.object);

    MarkerFrame marker_frame;
    marker_frame.time = static_cast<double>(frame) / config.fps;
    int li = 0, ri = 0, bi = 0, ti = 0;
    for (const auto& c : seq.correspondences) {
      Vec3 pos;
      switch (c.entity) {
        case Entity::LeftHand: pos = left_pos.row(li++).transpose(); break;
        case Entity::RightHand: pos = right_pos.row(ri++).transpose(); break;
        case Entity::ObjectBase:
          pos = base_mesh.vertices.row(base_verts[static_cast<std::size_t>(
                    bi++)]).transpose();
          break;
        default:
          pos = top_mesh.vertices.row(top_verts[static_cast<std::size_t>(
                    ti++)]).transpose();
          break;
      }
      const Vec3 noise(unit_normal(rng), unit_normal(rng), unit_normal(rng));
      pos += config.marker_noise_sigma * noise;
      const bool occluded = drop(rng);
      if (!occluded) marker_frame.positions[c.marker_id] = pos;
    }
    seq.frames.push_back(std::move(marker_frame));
    seq.gt.push_back(std::move(poses));
  }
  return seq;
}

}  // namespace hoikit
