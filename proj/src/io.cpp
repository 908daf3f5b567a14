#include "hoikit/io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hoikit/version.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace hoikit {

using nlohmann::json;

namespace {

constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int base64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode(const std::uint8_t* data, std::size_t size) {
  std::string out;
  out.reserve((size + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= size; i += 3) {
    const unsigned v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(kBase64Alphabet[(v >> 6) & 63]);
    out.push_back(kBase64Alphabet[v & 63]);
  }
  const std::size_t rest = size - i;
  if (rest == 1) {
    const unsigned v = data[i] << 16;
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (rest == 2) {
    const unsigned v = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(kBase64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0)
    throw DataError("base64 payload length must be a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2)
          throw DataError("misplaced base64 padding");
        vals[k] = 0;
        ++pad;
      } else {
        if (pad > 0) throw DataError("base64 data after padding");
        vals[k] = base64_value(c);
        if (vals[k] < 0) throw DataError("invalid base64 character");
      }
    }
    const unsigned v = (static_cast<unsigned>(vals[0]) << 18) |
                       (static_cast<unsigned>(vals[1]) << 12) |
                       (static_cast<unsigned>(vals[2]) << 6) |
                       static_cast<unsigned>(vals[3]);
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

namespace {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (!in.good() && !in.eof())
    throw DataError("failed reading " + path.string());
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out.good()) throw DataError("failed writing " + path.string());
}

json parse_json(const std::string& text, const std::filesystem::path& path) {
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded())
    throw DataError("malformed JSON in " + path.string());
  return value;
}

const json& require(const json& value, const char* key,
                    const std::filesystem::path& path) {
  const auto it = value.find(key);
  if (it == value.end())
    throw DataError(path.string() + ": missing key \"" + key + "\"");
  return *it;
}

void check_format(const json& value, const char* format, int version,
                  const std::filesystem::path& path) {
  if (require(value, "format", path) != format)
    throw DataError(path.string() + ": expected format \"" + format + "\"");
  if (require(value, "format_version", path).get<int>() > version)
    throw DataError(path.string() + ": format_version newer than this build");
}

// Row-major little-endian float64 <-> base64.
template <typename Derived>
std::string encode_matrix(const Eigen::MatrixBase<Derived>& m) {
  std::vector<std::uint8_t> bytes(
      static_cast<std::size_t>(m.size()) * sizeof(double));
  std::size_t offset = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      std::memcpy(bytes.data() + offset, &v, sizeof v);
      offset += sizeof v;
    }
  return base64_encode(bytes.data(), bytes.size());
}

MatX decode_matrix(const json& value, Eigen::Index rows, Eigen::Index cols,
                   const char* what, const std::filesystem::path& path) {
  if (!value.is_string())
    throw DataError(path.string() + ": " + what + " must be a base64 string");
  const std::vector<std::uint8_t> bytes =
      base64_decode(value.get<std::string>());
  const std::size_t expected =
      static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) *
      sizeof(double);
  if (bytes.size() != expected)
    throw DataError(path.string() + ": " + what + " has " +
                    std::to_string(bytes.size()) + " bytes, expected " +
                    std::to_string(expected));
  MatX m(rows, cols);
  std::size_t offset = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v;
      std::memcpy(&v, bytes.data() + offset, sizeof v);
      offset += sizeof v;
      m(r, c) = v;
    }
  return m;
}

json faces_to_json(const Triangles& faces) {
  json out = json::array();
  for (Eigen::Index i = 0; i < faces.rows(); ++i)
    out.push_back({faces(i, 0), faces(i, 1), faces(i, 2)});
  return out;
}

Triangles faces_from_json(const json& value,
                          const std::filesystem::path& path) {
  if (!value.is_array())
    throw DataError(path.string() + ": faces must be an array");
  Triangles faces(static_cast<Eigen::Index>(value.size()), 3);
  Eigen::Index row = 0;
  for (const auto& tri : value) {
    if (!tri.is_array() || tri.size() != 3)
      throw DataError(path.string() + ": each face needs three indices");
    for (int c = 0; c < 3; ++c) faces(row, c) = tri[c].get<int>();
    ++row;
  }
  return faces;
}

json vec3_to_json(const Vec3& v) { return json{v.x(), v.y(), v.z()}; }

Vec3 vec3_from_json(const json& value, const char* what,
                    const std::filesystem::path& path) {
  if (!value.is_array() || value.size() != 3)
    throw DataError(path.string() + ": " + what + " must be [x, y, z]");
  return Vec3(value[0].get<double>(), value[1].get<double>(),
              value[2].get<double>());
}

json vecx_to_json(const VecX& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VecX vecx_from_json(const json& value, Eigen::Index expected,
                    const char* what, const std::filesystem::path& path) {
  if (!value.is_array() ||
      (expected >= 0 &&
       static_cast<Eigen::Index>(value.size()) != expected))
    throw DataError(path.string() + ": " + what + " has the wrong length");
  VecX v(static_cast<Eigen::Index>(value.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = value[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  return parse_json(read_text_file(path), path);
}

void write_json_file(const std::filesystem::path& path, const json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Hand asset
// ---------------------------------------------------------------------------

void save_hand_asset(const std::filesystem::path& path,
                     const HandModel& model) {
  model.validate();
  json out;
  out["format"] = "hoikit-hand";
  out["format_version"] = kHandAssetFormatVersion;
  out["encoding"] = "base64/float64-le";
  out["vertex_count"] = model.tmpl.vertices.rows();
  out["template"] = encode_matrix(model.tmpl.vertices);
  out["blendshapes"] = encode_matrix(model.shape_blendshapes);
  out["weights"] = encode_matrix(model.skinning_weights);
  out["regressor"] = encode_matrix(model.joint_regressor);
  out["rest_offsets"] = encode_matrix(model.rest_offsets);
  out["parents"] = model.parents;
  out["faces"] = faces_to_json(model.tmpl.faces);
  write_json_file(path, out);
}

HandModel load_hand_asset(const std::filesystem::path& path) {
  const json in = read_json_file(path);
  check_format(in, "hoikit-hand", kHandAssetFormatVersion, path);
  const Eigen::Index v = require(in, "vertex_count", path).get<Eigen::Index>();
  if (v < 1) throw DataError(path.string() + ": vertex_count must be >= 1");

  HandModel model;
  model.tmpl.vertices = decode_matrix(require(in, "template", path), v, 3,
                                      "template", path);
  model.tmpl.faces = faces_from_json(require(in, "faces", path), path);
  model.shape_blendshapes = decode_matrix(
      require(in, "blendshapes", path), 3 * v, kHandShapeDof, "blendshapes",
      path);
  model.skinning_weights = decode_matrix(require(in, "weights", path), v,
                                         kHandJoints, "weights", path);
  model.joint_regressor = decode_matrix(require(in, "regressor", path),
                                        kHandLandmarks, v, "regressor", path);
  model.rest_offsets = decode_matrix(require(in, "rest_offsets", path),
                                     kHandJoints, 3, "rest_offsets", path);
  const json& parents = require(in, "parents", path);
  if (!parents.is_array() || parents.size() != kHandJoints)
    throw DataError(path.string() + ": parents must list 16 entries");
  model.parents.clear();
  for (const auto& p : parents) model.parents.push_back(p.get<int>());
  try {
    model.validate();
  } catch (const ParameterError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return model;
}

// ---------------------------------------------------------------------------
// OBJ meshes and the object asset
// ---------------------------------------------------------------------------

void save_obj(const std::filesystem::path& path, const Mesh& mesh) {
  mesh.validate();
  std::string text;
  text.reserve(static_cast<std::size_t>(mesh.vertices.rows()) * 48);
  char line[128];
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i) {
    std::snprintf(line, sizeof line, "v %.17g %.17g %.17g\n",
                  mesh.vertices(i, 0), mesh.vertices(i, 1),
                  mesh.vertices(i, 2));
    text += line;
  }
  for (Eigen::Index i = 0; i < mesh.faces.rows(); ++i) {
    std::snprintf(line, sizeof line, "f %d %d %d\n", mesh.faces(i, 0) + 1,
                  mesh.faces(i, 1) + 1, mesh.faces(i, 2) + 1);
    text += line;
  }
  write_text_file(path, text);
}

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::istringstream tokens(line);
    std::string head;
    if (!(tokens >> head)) continue;
    if (head == "#" || head == "vn" || head == "vt" || head == "s" ||
        head == "o" || head == "g" || head == "mtllib" || head == "usemtl")
      continue;
    const auto fail = [&](const std::string& why) {
      throw DataError(path.string() + ":" + std::to_string(line_number) +
                      ": " + why);
    };
    if (head == "v") {
      Vec3 v;
      if (!(tokens >> v.x() >> v.y() >> v.z())) fail("malformed vertex");
      verts.push_back(v);
    } else if (head == "f") {
      std::vector<long> indices;
      std::string item;
      while (tokens >> item) {
        // Accept v, v/vt, v//vn references; only the vertex index is used.
        const std::size_t slash = item.find('/');
        if (slash != std::string::npos) item = item.substr(0, slash);
        try {
          indices.push_back(std::stol(item));
        } catch (const std::exception&) {
          fail("malformed face index");
        }
      }
      if (indices.size() != 3) fail("faces must be triangles");
      Eigen::Vector3i tri;
      for (int c = 0; c < 3; ++c) {
        long idx = indices[static_cast<std::size_t>(c)];
        if (idx < 0) idx = static_cast<long>(verts.size()) + idx + 1;
        if (idx < 1) fail("face index out of range");
        tri[c] = static_cast<int>(idx - 1);
      }
      faces.push_back(tri);
    } else {
      fail("unsupported OBJ directive: " + head);
    }
  }
  Mesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i)
    mesh.vertices.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
  mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i)
    mesh.faces.row(static_cast<Eigen::Index>(i)) = faces[i].transpose();
  try {
    mesh.validate();
  } catch (const DataError&) {
    throw;
  } catch (const ParameterError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return mesh;
}

void save_object_asset(const std::filesystem::path& path,
                       const ArticulatedObject& object,
                       const std::string& base_obj_name,
                       const std::string& top_obj_name) {
  object.validate();
  const std::filesystem::path dir = path.parent_path();
  save_obj(dir / base_obj_name, object.base_part);
  save_obj(dir / top_obj_name, object.top_part);

  json out;
  out["format"] = "hoikit-object";
  out["format_version"] = kObjectAssetFormatVersion;
  out["base_mesh"] = base_obj_name;
  out["top_mesh"] = top_obj_name;
  out["axis_origin"] = vec3_to_json(object.axis_origin);
  out["axis_direction"] = vec3_to_json(object.axis_direction);
  out["rest_angle"] = object.rest_angle;
  out["fps_start"] = object.fps_start;
  json landmarks = json::array();
  for (const auto& lm : object.landmarks)
    landmarks.push_back({{"part", to_string(lm.part)},
                         {"vertex", lm.vertex}});
  out["landmarks"] = landmarks;
  write_json_file(path, out);
}

ArticulatedObject load_object_asset(const std::filesystem::path& path) {
  const json in = read_json_file(path);
  check_format(in, "hoikit-object", kObjectAssetFormatVersion, path);
  const std::filesystem::path dir = path.parent_path();

  ArticulatedObject object;
  object.base_part =
      load_obj(dir / require(in, "base_mesh", path).get<std::string>());
  object.top_part =
      load_obj(dir / require(in, "top_mesh", path).get<std::string>());
  object.axis_origin =
      vec3_from_json(require(in, "axis_origin", path), "axis_origin", path);
  object.axis_direction = vec3_from_json(require(in, "axis_direction", path),
                                         "axis_direction", path);
  object.rest_angle = require(in, "rest_angle", path).get<double>();
  object.fps_start = require(in, "fps_start", path).get<int>();
  for (const auto& lm : require(in, "landmarks", path)) {
    ObjectLandmark landmark;
    landmark.part =
        entity_from_string(require(lm, "part", path).get<std::string>());
    landmark.vertex = require(lm, "vertex", path).get<int>();
    object.landmarks.push_back(landmark);
  }
  try {
    object.validate();
  } catch (const ParameterError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return object;
}

// ---------------------------------------------------------------------------
// Marker sequences
// ---------------------------------------------------------------------------

void save_marker_sequence(const std::filesystem::path& path,
                          const MarkerSequence& sequence) {
  json out;
  out["format"] = "hoikit-markers";
  out["format_version"] = kMarkerFormatVersion;
  out["units"] = "m";
  out["fps"] = sequence.fps;
  json ids = json::array();
  json correspondences = json::array();
  for (const auto& c : sequence.correspondences) {
    ids.push_back(c.marker_id);
    correspondences.push_back({{"marker", c.marker_id},
                               {"entity", to_string(c.entity)},
                               {"vertex", c.vertex}});
  }
  out["marker_ids"] = ids;
  out["correspondences"] = correspondences;

  json frames = json::array();
  for (const auto& frame : sequence.frames) {
    json positions;
    for (const auto& c : sequence.correspondences) {
      const auto it = frame.positions.find(c.marker_id);
      positions[c.marker_id] =
          it == frame.positions.end() ? json() : vec3_to_json(it->second);
    }
    frames.push_back({{"time", frame.time}, {"positions", positions}});
  }
  out["frames"] = frames;
  write_json_file(path, out);
}

MarkerSequence load_marker_sequence(const std::filesystem::path& path) {
  const json in = read_json_file(path);
  check_format(in, "hoikit-markers", kMarkerFormatVersion, path);
  if (require(in, "units", path) != "m")
    throw DataError(path.string() + ": units must be \"m\"");

  MarkerSequence sequence;
  sequence.fps = require(in, "fps", path).get<double>();
  for (const auto& c : require(in, "correspondences", path)) {
    MarkerCorrespondence corr;
    corr.marker_id = require(c, "marker", path).get<std::string>();
    corr.entity =
        entity_from_string(require(c, "entity", path).get<std::string>());
    corr.vertex = require(c, "vertex", path).get<int>();
    sequence.correspondences.push_back(std::move(corr));
  }
  for (const auto& f : require(in, "frames", path)) {
    MarkerFrame frame;
    frame.time = require(f, "time", path).get<double>();
    const json& positions = require(f, "positions", path);
    for (const auto& [id, pos] : positions.items()) {
      if (pos.is_null()) continue;
      frame.positions[id] = vec3_from_json(pos, "marker position", path);
    }
    sequence.frames.push_back(std::move(frame));
  }
  return sequence;
}

// ---------------------------------------------------------------------------
// Pose sequences
// ---------------------------------------------------------------------------

namespace {

json hand_params_to_json(const HandParams& params) {
  return json{{"theta", vecx_to_json(params.theta)},
              {"beta", vecx_to_json(params.beta)},
              {"T", vec3_to_json(params.translation)}};
}

HandParams hand_params_from_json(const json& value,
                                 const std::filesystem::path& path) {
  HandParams params;
  params.theta =
      vecx_from_json(require(value, "theta", path), kHandPoseDof, "theta",
                     path);
  params.beta = vecx_from_json(require(value, "beta", path), kHandShapeDof,
                               "beta", path);
  params.translation = vec3_from_json(require(value, "T", path), "T", path);
  return params;
}

FrameFlag frame_flag_from_string(const std::string& name,
                                 const std::filesystem::path& path) {
  for (const FrameFlag flag :
       {FrameFlag::LeftGap, FrameFlag::RightGap, FrameFlag::ObjectGap,
        FrameFlag::LeftNoConverge, FrameFlag::RightNoConverge}) {
    if (to_string(flag) == name) return flag;
  }
  throw DataError(path.string() + ": unknown frame flag \"" + name + "\"");
}

}  // namespace

void save_pose_sequence(const std::filesystem::path& path,
                        const std::vector<FramePoses>& frames) {
  json out = json::array();
  for (const auto& frame : frames) {
    json flags = json::array();
    for (const FrameFlag flag : frame.flags) flags.push_back(to_string(flag));
    out.push_back({{"left", hand_params_to_json(frame.left)},
                   {"right", hand_params_to_json(frame.right)},
                   {"object",
                    {{"omega", frame.object.omega},
                     {"rot", vec3_to_json(frame.object.rotation)},
                     {"trans", vec3_to_json(frame.object.translation)}}},
                   {"flags", flags}});
  }
  write_json_file(path, out);
}

std::vector<FramePoses> load_pose_sequence(
    const std::filesystem::path& path) {
  const json in = read_json_file(path);
  if (!in.is_array())
    throw DataError(path.string() + ": pose file must be a JSON array");
  std::vector<FramePoses> frames;
  frames.reserve(in.size());
  for (const auto& f : in) {
    FramePoses frame;
    frame.left = hand_params_from_json(require(f, "left", path), path);
    frame.right = hand_params_from_json(require(f, "right", path), path);
    const json& object = require(f, "object", path);
    frame.object.omega = require(object, "omega", path).get<double>();
    frame.object.rotation =
        vec3_from_json(require(object, "rot", path), "rot", path);
    frame.object.translation =
        vec3_from_json(require(object, "trans", path), "trans", path);
    for (const auto& flag : require(f, "flags", path))
      frame.flags.push_back(
          frame_flag_from_string(flag.get<std::string>(), path));
    frames.push_back(std::move(frame));
  }
  return frames;
}

void save_sequence_meta(const std::filesystem::path& path,
                        const SequenceMeta& meta) {
  meta.validate();
  write_json_file(path, json{{"subject_id", meta.subject_id},
                             {"object_id", meta.object_id},
                             {"seq_id", meta.seq_id},
                             {"view_id", meta.view_id}});
}

SequenceMeta load_sequence_meta(const std::filesystem::path& path) {
  const json in = read_json_file(path);
  SequenceMeta meta;
  meta.subject_id = require(in, "subject_id", path).get<int>();
  meta.object_id = require(in, "object_id", path).get<int>();
  meta.seq_id = require(in, "seq_id", path).get<int>();
  meta.view_id = require(in, "view_id", path).get<int>();
  try {
    meta.validate();
  } catch (const ParameterError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return meta;
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

namespace {

json field_header(const InteractionField& field) {
  return json{{"source", to_string(field.source)},
              {"target", to_string(field.target)},
              {"count", field.distances.size()},
              {"d_max", field.d_max}};
}

void field_from_header(const json& header, InteractionField& field,
                       const std::filesystem::path& path) {
  field.source = entity_from_string(
      require(header, "source", path).get<std::string>());
  field.target = entity_from_string(
      require(header, "target", path).get<std::string>());
  field.d_max = require(header, "d_max", path).get<double>();
}

std::array<const InteractionField*, 4> ordered(const HandObjectFields& f) {
  return {&f.left_to_object, &f.right_to_object, &f.object_to_left,
          &f.object_to_right};
}

std::array<InteractionField*, 4> ordered(HandObjectFields& f) {
  return {&f.left_to_object, &f.right_to_object, &f.object_to_left,
          &f.object_to_right};
}

}  // namespace

void save_fields_json(const std::filesystem::path& path,
                      const HandObjectFields& fields) {
  json out;
  out["format"] = "hoikit-fields";
  out["format_version"] = kFieldFormatVersion;
  json list = json::array();
  for (const InteractionField* field : ordered(fields)) {
    field->validate();
    json entry = field_header(*field);
    entry["distances"] = vecx_to_json(field->distances);
    list.push_back(std::move(entry));
  }
  out["fields"] = list;
  write_json_file(path, out);
}

void save_fields_binary(const std::filesystem::path& path,
                        const HandObjectFields& fields) {
  json header;
  header["format"] = "hoikit-fields-bin";
  header["format_version"] = kFieldFormatVersion;
  json list = json::array();
  for (const InteractionField* field : ordered(fields)) {
    field->validate();
    list.push_back(field_header(*field));
  }
  header["fields"] = list;

  std::string blob = header.dump() + "\n";
  for (const InteractionField* field : ordered(fields)) {
    const Eigen::Index n = field->distances.size();
    std::vector<float> data(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      data[static_cast<std::size_t>(i)] =
          static_cast<float>(field->distances[i]);
    blob.append(reinterpret_cast<const char*>(data.data()),
                data.size() * sizeof(float));
  }
  write_text_file(path, blob);
}

HandObjectFields load_fields(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const std::size_t newline = text.find('\n');
  const std::string first_line =
      newline == std::string::npos ? text : text.substr(0, newline);

  json header = json::parse(first_line, nullptr, false);
  const bool binary = newline != std::string::npos && !header.is_discarded() &&
                      header.is_object() &&
                      header.value("format", "") == "hoikit-fields-bin";

  HandObjectFields fields;
  if (binary) {
    check_format(header, "hoikit-fields-bin", kFieldFormatVersion, path);
    const json& list = require(header, "fields", path);
    if (!list.is_array() || list.size() != 4)
      throw DataError(path.string() + ": expected four fields");
    std::size_t offset = newline + 1;
    auto slots = ordered(fields);
    for (std::size_t k = 0; k < 4; ++k) {
      InteractionField& field = *slots[k];
      field_from_header(list[k], field, path);
      const Eigen::Index count =
          list[k].at("count").get<Eigen::Index>();
      const std::size_t bytes =
          static_cast<std::size_t>(count) * sizeof(float);
      if (offset + bytes > text.size())
        throw DataError(path.string() + ": truncated field payload");
      field.distances.resize(count);
      for (Eigen::Index i = 0; i < count; ++i) {
        float v;
        std::memcpy(&v, text.data() + offset +
                            static_cast<std::size_t>(i) * sizeof(float),
                    sizeof v);
        field.distances[i] = v;
      }
      offset += bytes;
    }
    if (offset != text.size())
      throw DataError(path.string() + ": trailing bytes after field payload");
    return fields;
  }

  const json in = parse_json(text, path);
  check_format(in, "hoikit-fields", kFieldFormatVersion, path);
  const json& list = require(in, "fields", path);
  if (!list.is_array() || list.size() != 4)
    throw DataError(path.string() + ": expected four fields");
  auto slots = ordered(fields);
  for (std::size_t k = 0; k < 4; ++k) {
    InteractionField& field = *slots[k];
    field_from_header(list[k], field, path);
    field.distances = vecx_from_json(require(list[k], "distances", path), -1,
                                     "distances", path);
    if (field.distances.size() != list[k].at("count").get<Eigen::Index>())
      throw DataError(path.string() + ": field count mismatch");
  }
  return fields;
}

std::string field_frame_name(int frame, bool binary) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "frame_%06d.field.%s", frame,
                binary ? "bin" : "json");
  return buffer;
}

// ---------------------------------------------------------------------------
// Heatmaps and reports
// ---------------------------------------------------------------------------

void save_heatmap(const std::filesystem::path& path,
                  const ContactHeatmap& map) {
  json out;
  out["format"] = "hoikit-heatmap";
  out["format_version"] = kReportFormatVersion;
  out["entity"] = to_string(map.entity);
  out["frame_count"] = map.frame_count;
  out["frequencies"] = vecx_to_json(map.frequencies);
  write_json_file(path, out);
}

ContactHeatmap load_heatmap(const std::filesystem::path& path) {
  const json in = read_json_file(path);
  check_format(in, "hoikit-heatmap", kReportFormatVersion, path);
  ContactHeatmap map;
  map.entity =
      entity_from_string(require(in, "entity", path).get<std::string>());
  map.frame_count = require(in, "frame_count", path).get<int>();
  map.frequencies = vecx_from_json(require(in, "frequencies", path), -1,
                                   "frequencies", path);
  return map;
}

namespace {

json report_scalars(const EvalReport& report) {
  return json{{"mpjpe_left_mm", report.mpjpe_left},
              {"mpjpe_right_mm", report.mpjpe_right},
              {"mrrpe_lr_mm", report.mrrpe_lr},
              {"mrrpe_or_mm", report.mrrpe_or},
              {"aae_deg", report.aae},
              {"v2v_top_mm", report.v2v_top},
              {"v2v_bottom_mm", report.v2v_bottom},
              {"frame_count", report.frame_count}};
}

void scalars_from_json(const json& value, EvalReport& report,
                       const std::filesystem::path& path) {
  report.mpjpe_left = require(value, "mpjpe_left_mm", path).get<double>();
  report.mpjpe_right = require(value, "mpjpe_right_mm", path).get<double>();
  report.mrrpe_lr = require(value, "mrrpe_lr_mm", path).get<double>();
  report.mrrpe_or = require(value, "mrrpe_or_mm", path).get<double>();
  report.aae = require(value, "aae_deg", path).get<double>();
  report.v2v_top = require(value, "v2v_top_mm", path).get<double>();
  report.v2v_bottom = require(value, "v2v_bottom_mm", path).get<double>();
  report.frame_count = require(value, "frame_count", path).get<int>();
}

}  // namespace

void save_report_json(const std::filesystem::path& path,
                      const EvalReport& report) {
  report.validate();
  json out = report_scalars(report);
  out["format"] = "hoikit-report";
  out["format_version"] = kReportFormatVersion;
  json per_object = json::object();
  for (const auto& [object_id, sub] : report.per_object)
    per_object[std::to_string(object_id)] = report_scalars(sub);
  out["per_object"] = per_object;
  json curves = json::object();
  for (const auto& [name, curve] : report.pcd_curves) {
    json samples = json::array();
    for (const auto& [alpha, fraction] : curve)
      samples.push_back({alpha, fraction});
    curves[name] = samples;
  }
  out["pcd"] = curves;
  write_json_file(path, out);
}

EvalReport load_report_json(const std::filesystem::path& path) {
  const json in = read_json_file(path);
  check_format(in, "hoikit-report", kReportFormatVersion, path);
  EvalReport report;
  scalars_from_json(in, report, path);
  for (const auto& [key, value] : require(in, "per_object", path).items()) {
    EvalReport sub;
    scalars_from_json(value, sub, path);
    report.per_object.emplace_back(std::stoi(key), std::move(sub));
  }
  for (const auto& [name, samples] : require(in, "pcd", path).items()) {
    PcdCurve curve;
    for (const auto& sample : samples) {
      if (!sample.is_array() || sample.size() != 2)
        throw DataError(path.string() + ": PCD samples must be pairs");
      curve.emplace_back(sample[0].get<double>(), sample[1].get<double>());
    }
    report.pcd_curves[name] = std::move(curve);
  }
  return report;
}

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line,
                "%-12s %9s %9s %9s %9s %8s %8s %8s %7s\n", "scope",
                "MPJPE_l", "MPJPE_r", "MRRPE_lr", "MRRPE_or", "AAE",
                "V2V_top", "V2V_bot", "frames");
  out << line;
  const auto row = [&](const std::string& scope, const EvalReport& r) {
    std::snprintf(line, sizeof line,
                  "%-12s %9.3f %9.3f %9.3f %9.3f %8.3f %8.3f %8.3f %7d\n",
                  scope.c_str(), r.mpjpe_left, r.mpjpe_right, r.mrrpe_lr,
                  r.mrrpe_or, r.aae, r.v2v_top, r.v2v_bottom, r.frame_count);
    out << line;
  };
  row("overall", report);
  for (const auto& [object_id, sub] : report.per_object)
    row("object " + std::to_string(object_id), sub);
  out << "units: mm except AAE (degrees)\n";
  return out.str();
}

void save_pcd_csv(const std::filesystem::path& path, const PcdCurve& curve) {
  std::string text = "alpha_mm,fraction\n";
  char line[64];
  for (const auto& [alpha, fraction] : curve) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", alpha, fraction);
    text += line;
  }
  write_text_file(path, text);
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

void save_run_manifest(const std::filesystem::path& path,
                       const RunManifest& manifest) {
  json out;
  out["command"] = manifest.command;
  out["inputs"] = manifest.inputs;
  out["outputs"] = manifest.outputs;
  out["config"] = manifest.config;
  out["toolkit_version"] = manifest.toolkit_version;
  out["seed"] = manifest.seed;
  write_json_file(path, out);
}

}  // namespace hoikit
