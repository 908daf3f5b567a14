// hoikit: command-line front end for the hand-object interaction capture
// library. Subcommands: synth, solve, fields, eval, heatmap, axis.
//
// Exit codes: 0 success, 2 usage, 3 data/schema, 4 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "hoikit/fields.hpp"
#include "hoikit/io.hpp"
#include "hoikit/losses.hpp"
#include "hoikit/metrics.hpp"
#include "hoikit/models.hpp"
#include "hoikit/synth.hpp"
#include "hoikit/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hoikit;

namespace {

std::string version_text() {
  std::string text = std::string("hoikit ") + kToolkitVersion + "\n";
  text += "formats: hand=" + std::to_string(kHandAssetFormatVersion) +
          " object=" + std::to_string(kObjectAssetFormatVersion) +
          " markers=" + std::to_string(kMarkerFormatVersion) +
          " fields=" + std::to_string(kFieldFormatVersion) +
          " report=" + std::to_string(kReportFormatVersion);
  return text;
}

/// Resolves a config-file path: as given if it exists, otherwise under
/// $HOIKIT_CONFIG_DIR.
fs::path resolve_config(const std::string& given) {
  fs::path path(given);
  if (fs::exists(path)) return path;
  if (path.is_relative()) {
    if (const char* dir = std::getenv("HOIKIT_CONFIG_DIR")) {
      const fs::path fallback = fs::path(dir) / path;
      if (fs::exists(fallback)) return fallback;
    }
  }
  throw DataError("config file not found: " + given);
}

void refuse_existing(const fs::path& target, bool force) {
  if (!fs::exists(target)) return;
  if (force) return;
  throw ParameterError(target.string() +
                       " already exists (pass --force to overwrite)");
}

CaptureAssets load_assets(const fs::path& dir) {
  CaptureAssets assets;
  assets.left = load_hand_asset(dir / "hand_left.json");
  assets.right = load_hand_asset(dir / "hand_right.json");
  assets.object = load_object_asset(dir / "object.json");
  return assets;
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

// -------------------------------------------------------------------------
// synth
// -------------------------------------------------------------------------

struct SynthCmd {
  std::string config_path;
  std::string out_dir;
  bool force = false;
};

SynthConfig synth_config_from_json(const json& in, const fs::path& path) {
  SynthConfig config;
  const auto num = [&](const char* key, double fallback) {
    if (!in.contains(key)) return fallback;
    if (!in[key].is_number())
      throw DataError(path.string() + ": " + key + " must be a number");
    return in[key].get<double>();
  };
  config.seed = static_cast<std::uint64_t>(num("seed", 1));
  config.frame_count = static_cast<int>(num("frame_count", 100));
  config.fps = num("fps", 30.0);
  config.marker_noise_sigma = num("marker_noise_sigma", 0.0);
  config.dropout_rate = num("dropout_rate", 0.0);
  config.articulation_min = num("articulation_min", 0.0);
  config.articulation_max = num("articulation_max", 1.2);
  config.smoothness = num("smoothness", 12.0);
  config.hand_rotation_amplitude = num("hand_rotation_amplitude", 0.5);
  config.hand_translation_amplitude = num("hand_translation_amplitude", 0.12);
  config.finger_curl_amplitude = num("finger_curl_amplitude", 0.7);
  config.object_rotation_amplitude = num("object_rotation_amplitude", 0.6);
  config.object_translation_amplitude =
      num("object_translation_amplitude", 0.15);
  try {
    config.validate();
  } catch (const ParameterError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return config;
}

void run_synth(const SynthCmd& cmd) {
  json config_json = json::object();
  std::vector<std::string> inputs;
  if (!cmd.config_path.empty()) {
    const fs::path path = resolve_config(cmd.config_path);
    config_json = read_json_file(path);
    inputs.push_back(cmd.config_path);
  }
  const SynthConfig config =
      synth_config_from_json(config_json, cmd.config_path);
  const ObjectKind kind = object_kind_from_string(
      config_json.value("object_kind", std::string("box-hinge")));
  const int resolution = config_json.value("object_resolution", 4);
  const int landmark_count = config_json.value("landmark_count", 16);

  std::vector<SequenceMeta> metas;
  if (config_json.contains("sequences")) {
    for (const auto& entry : config_json["sequences"]) {
      SequenceMeta meta;
      meta.subject_id = entry.value("subject_id", 0);
      meta.object_id = entry.value("object_id", 0);
      meta.seq_id = entry.value("seq_id", 0);
      meta.view_id = entry.value("view_id", 1);
      meta.validate();
      metas.push_back(meta);
    }
  } else {
    const int count = config_json.value("sequence_count", 1);
    if (count < 1) throw DataError("sequence_count must be >= 1");
    for (int i = 0; i < count; ++i) {
      SequenceMeta meta;
      meta.seq_id = i;
      meta.view_id = 1;
      metas.push_back(meta);
    }
  }

  const fs::path out(cmd.out_dir);
  refuse_existing(out / "manifest.json", cmd.force);
  fs::create_directories(out / "assets");

  CaptureAssets assets;
  assets.left = generate_hand_asset(true);
  assets.right = generate_hand_asset(false);
  assets.object = generate_object_asset(kind, resolution, landmark_count);

  RunManifest manifest;
  manifest.command = "synth";
  manifest.inputs = inputs;
  manifest.toolkit_version = kToolkitVersion;
  manifest.seed = config.seed;
  manifest.config["object_kind"] = to_string(kind);
  manifest.config["object_resolution"] = std::to_string(resolution);
  manifest.config["landmark_count"] = std::to_string(landmark_count);
  manifest.config["frame_count"] = std::to_string(config.frame_count);
  manifest.config["marker_noise_sigma"] =
      format_double(config.marker_noise_sigma);
  manifest.config["dropout_rate"] = format_double(config.dropout_rate);
  manifest.config["sequence_count"] = std::to_string(metas.size());

  const auto emit = [&](const fs::path& path) {
    manifest.outputs.push_back(fs::relative(path, out).string());
  };

  save_hand_asset(out / "assets" / "hand_left.json", assets.left);
  emit(out / "assets" / "hand_left.json");
  save_hand_asset(out / "assets" / "hand_right.json", assets.right);
  emit(out / "assets" / "hand_right.json");
  save_object_asset(out / "assets" / "object.json", assets.object,
                    "base.obj", "top.obj");
  emit(out / "assets" / "object.json");
  emit(out / "assets" / "base.obj");
  emit(out / "assets" / "top.obj");

  for (std::size_t i = 0; i < metas.size(); ++i) {
    SynthConfig seq_config = config;
    seq_config.seed = config.seed + i;
    const SynthSequence seq = generate_sequence(assets, seq_config);

    char name[32];
    std::snprintf(name, sizeof name, "seq_%03d", static_cast<int>(i));
    const fs::path seq_dir = out / name;
    fs::create_directories(seq_dir);

    MarkerSequence markers;
    markers.fps = seq_config.fps;
    markers.correspondences = seq.correspondences;
    markers.frames = seq.frames;
    save_marker_sequence(seq_dir / "markers.json", markers);
    emit(seq_dir / "markers.json");
    save_pose_sequence(seq_dir / "gt_poses.json", seq.gt);
    emit(seq_dir / "gt_poses.json");
    save_sequence_meta(seq_dir / "meta.json", metas[i]);
    emit(seq_dir / "meta.json");
    std::cerr << "synth: wrote " << seq_dir.string() << " ("
              << seq.frames.size() << " frames)\n";
  }

  save_run_manifest(out / "manifest.json", manifest);
}

// -------------------------------------------------------------------------
// solve
// -------------------------------------------------------------------------

struct SolveCmd {
  std::string assets_dir;
  std::string markers_path;
  std::string out_path;
  bool force = false;
  bool optimize_shape = false;
  int max_iterations = 50;
  double residual_tolerance = 1e-10;
};

void run_solve(const SolveCmd& cmd) {
  refuse_existing(cmd.out_path, cmd.force);
  const CaptureAssets assets = load_assets(cmd.assets_dir);
  const MarkerSequence markers = load_marker_sequence(cmd.markers_path);

  SolverSettings settings;
  settings.optimize_shape = cmd.optimize_shape;
  settings.max_iterations = cmd.max_iterations;
  settings.residual_tolerance = cmd.residual_tolerance;
  settings.validate();

  std::cerr << "solve: " << markers.frames.size() << " frames, "
            << markers.correspondences.size() << " markers\n";
  const SequenceSolve solved = solve_sequence(
      assets, markers.frames, markers.correspondences, settings);

  int flagged = 0;
  for (const auto& frame : solved.frames)
    if (!frame.flags.empty()) ++flagged;
  if (flagged > 0)
    std::cerr << "solve: " << flagged << " of " << solved.frames.size()
              << " frames flagged (gap or no-convergence)\n";

  save_pose_sequence(cmd.out_path, solved.frames);

  RunManifest manifest;
  manifest.command = "solve";
  manifest.inputs = {cmd.assets_dir, cmd.markers_path};
  manifest.outputs = {cmd.out_path};
  manifest.config["optimize_shape"] = cmd.optimize_shape ? "true" : "false";
  manifest.config["max_iterations"] = std::to_string(cmd.max_iterations);
  manifest.config["residual_tolerance"] =
      format_double(cmd.residual_tolerance);
  manifest.toolkit_version = kToolkitVersion;
  save_run_manifest(fs::path(cmd.out_path).string() + ".manifest.json",
                    manifest);
}

// -------------------------------------------------------------------------
// fields
// -------------------------------------------------------------------------

struct FieldsCmd {
  std::string assets_dir;
  std::string poses_path;
  std::string out_dir;
  double d_max = kDefaultFieldClamp;
  bool binary = false;
  bool force = false;
};

HandObjectFields fields_for_frame(const CaptureAssets& assets,
                                  const FramePoses& poses, double d_max) {
  const Mesh left = pose_hand(assets.left, poses.left);
  const Mesh right = pose_hand(assets.right, poses.right);
  const auto [base, top] = pose_object(assets.object, poses.object);
  return extract_gt_fields(left, right, merge_object_mesh(base, top), d_max);
}

void run_fields(const FieldsCmd& cmd) {
  const fs::path out(cmd.out_dir);
  refuse_existing(out / "manifest.json", cmd.force);
  const CaptureAssets assets = load_assets(cmd.assets_dir);
  const std::vector<FramePoses> poses = load_pose_sequence(cmd.poses_path);
  if (poses.empty()) throw DataError("pose file has no frames");

  fs::create_directories(out);
  RunManifest manifest;
  manifest.command = "fields";
  manifest.inputs = {cmd.assets_dir, cmd.poses_path};
  manifest.config["d_max"] = format_double(cmd.d_max);
  manifest.config["binary"] = cmd.binary ? "true" : "false";
  manifest.toolkit_version = kToolkitVersion;

  for (std::size_t f = 0; f < poses.size(); ++f) {
    const HandObjectFields fields =
        fields_for_frame(assets, poses[f], cmd.d_max);
    const std::string name =
        field_frame_name(static_cast<int>(f), cmd.binary);
    if (cmd.binary)
      save_fields_binary(out / name, fields);
    else
      save_fields_json(out / name, fields);
    manifest.outputs.push_back(name);
  }
  save_run_manifest(out / "manifest.json", manifest);
  std::cerr << "fields: wrote " << poses.size() << " frames to "
            << out.string() << "\n";
}

// -------------------------------------------------------------------------
// eval
// -------------------------------------------------------------------------

struct EvalCmd {
  std::string assets_dir;
  std::string list_path;
  std::string gt_path;
  std::string pred_path;
  std::string meta_path;
  std::string gt_fields_dir;
  std::string pred_fields_dir;
  std::string protocol;
  std::string out_dir;
  double d_max = kDefaultFieldClamp;
  bool force = false;
};

std::vector<HandObjectFields> load_field_dir(const fs::path& dir,
                                             std::size_t frames) {
  std::vector<HandObjectFields> fields;
  fields.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const fs::path json_path = dir / field_frame_name(static_cast<int>(f),
                                                      false);
    const fs::path bin_path = dir / field_frame_name(static_cast<int>(f),
                                                     true);
    if (fs::exists(json_path))
      fields.push_back(load_fields(json_path));
    else if (fs::exists(bin_path))
      fields.push_back(load_fields(bin_path));
    else
      throw CoverageError("missing field dump for frame " +
                          std::to_string(f) + " in " + dir.string());
  }
  return fields;
}

void run_eval(const EvalCmd& cmd) {
  const fs::path out(cmd.out_dir);
  refuse_existing(out / "report.json", cmd.force);
  const CaptureAssets assets = load_assets(cmd.assets_dir);

  struct Entry {
    std::string meta, gt, pred, gt_fields, pred_fields;
  };
  std::vector<Entry> entries;
  if (!cmd.list_path.empty()) {
    const json list = read_json_file(cmd.list_path);
    if (!list.is_array())
      throw DataError(cmd.list_path + ": eval list must be a JSON array");
    for (const auto& item : list) {
      Entry entry;
      entry.meta = item.at("meta").get<std::string>();
      entry.gt = item.at("gt").get<std::string>();
      entry.pred = item.at("pred").get<std::string>();
      entry.gt_fields = item.value("gt_fields", std::string());
      entry.pred_fields = item.value("pred_fields", std::string());
      entries.push_back(std::move(entry));
    }
  } else {
    if (cmd.gt_path.empty() || cmd.pred_path.empty() || cmd.meta_path.empty())
      throw ParameterError(
          "eval needs --list, or all of --gt, --pred and --meta");
    entries.push_back({cmd.meta_path, cmd.gt_path, cmd.pred_path,
                       cmd.gt_fields_dir, cmd.pred_fields_dir});
  }

  std::vector<SequenceEval> sequences;
  for (const auto& entry : entries) {
    SequenceEval seq;
    seq.meta = load_sequence_meta(entry.meta);
    seq.gt = load_pose_sequence(entry.gt);
    seq.pred = load_pose_sequence(entry.pred);
    if (!entry.gt_fields.empty())
      seq.gt_fields = load_field_dir(entry.gt_fields, seq.gt.size());
    if (!entry.pred_fields.empty())
      seq.pred_fields = load_field_dir(entry.pred_fields, seq.gt.size());
    sequences.push_back(std::move(seq));
  }

  EvalOptions options;
  options.field_clamp = cmd.d_max;
  const EvalReport report =
      cmd.protocol.empty()
          ? evaluate_sequences(assets, sequences, options)
          : evaluate_split(assets, sequences,
                           protocol_from_string(cmd.protocol), options);

  fs::create_directories(out);
  save_report_json(out / "report.json", report);
  std::ofstream table(out / "report.txt");
  table << report_table(report);
  table.close();

  RunManifest manifest;
  manifest.command = "eval";
  manifest.inputs = {cmd.assets_dir};
  for (const auto& entry : entries) {
    manifest.inputs.push_back(entry.gt);
    manifest.inputs.push_back(entry.pred);
  }
  manifest.outputs = {"report.json", "report.txt"};
  for (const auto& [name, curve] : report.pcd_curves) {
    const std::string csv_name = "pcd_" + name + ".csv";
    save_pcd_csv(out / csv_name, curve);
    manifest.outputs.push_back(csv_name);
  }
  manifest.config["protocol"] =
      cmd.protocol.empty() ? "none" : cmd.protocol;
  manifest.config["d_max"] = format_double(cmd.d_max);
  manifest.toolkit_version = kToolkitVersion;
  save_run_manifest(out / "manifest.json", manifest);

  std::cout << report_table(report);
}

// -------------------------------------------------------------------------
// heatmap
// -------------------------------------------------------------------------

struct HeatmapCmd {
  std::string assets_dir;
  std::string poses_path;
  std::string out_dir;
  double threshold = kDefaultContactThreshold;
  double d_max = kDefaultFieldClamp;
  bool force = false;
};

void run_heatmap(const HeatmapCmd& cmd) {
  const fs::path out(cmd.out_dir);
  refuse_existing(out / "manifest.json", cmd.force);
  const CaptureAssets assets = load_assets(cmd.assets_dir);
  const std::vector<FramePoses> poses = load_pose_sequence(cmd.poses_path);
  if (poses.empty()) throw DataError("pose file has no frames");

  std::vector<std::vector<std::uint8_t>> left_frames, right_frames,
      object_frames;
  for (const auto& frame : poses) {
    const HandObjectFields fields =
        fields_for_frame(assets, frame, cmd.d_max);
    left_frames.push_back(
        contact_labels(fields.left_to_object, cmd.threshold));
    right_frames.push_back(
        contact_labels(fields.right_to_object, cmd.threshold));
    // Object vertices count as contact when either hand touches them.
    std::vector<std::uint8_t> against_left =
        contact_labels(fields.object_to_left, cmd.threshold);
    const std::vector<std::uint8_t> against_right =
        contact_labels(fields.object_to_right, cmd.threshold);
    for (std::size_t i = 0; i < against_left.size(); ++i)
      against_left[i] = against_left[i] || against_right[i];
    object_frames.push_back(std::move(against_left));
  }

  fs::create_directories(out);
  save_heatmap(out / "heatmap_left.json",
               aggregate_heatmap(left_frames, Entity::LeftHand));
  save_heatmap(out / "heatmap_right.json",
               aggregate_heatmap(right_frames, Entity::RightHand));
  save_heatmap(out / "heatmap_object.json",
               aggregate_heatmap(object_frames, Entity::Object));
  // Canonical meshes alongside, for visualization tools.
  save_obj(out / "heatmap_left.obj", assets.left.tmpl);
  save_obj(out / "heatmap_right.obj", assets.right.tmpl);
  save_obj(out / "heatmap_object.obj",
           merge_object_mesh(assets.object.base_part, assets.object.top_part));

  RunManifest manifest;
  manifest.command = "heatmap";
  manifest.inputs = {cmd.assets_dir, cmd.poses_path};
  manifest.outputs = {"heatmap_left.json",  "heatmap_right.json",
                      "heatmap_object.json", "heatmap_left.obj",
                      "heatmap_right.obj",  "heatmap_object.obj"};
  manifest.config["threshold"] = format_double(cmd.threshold);
  manifest.config["d_max"] = format_double(cmd.d_max);
  manifest.toolkit_version = kToolkitVersion;
  save_run_manifest(out / "manifest.json", manifest);
}

// -------------------------------------------------------------------------
// axis
// -------------------------------------------------------------------------

struct AxisCmd {
  std::string relative_path;
  std::string markers_path;
  std::string assets_dir;
  std::string out_path;
  bool force = false;
};

std::vector<RigidTransform> relative_poses_from_markers(
    const CaptureAssets& assets, const MarkerSequence& markers) {
  std::vector<int> base_verts, top_verts;
  std::vector<std::string> base_ids, top_ids;
  for (const auto& c : markers.correspondences) {
    if (c.entity == Entity::ObjectBase) {
      base_verts.push_back(c.vertex);
      base_ids.push_back(c.marker_id);
    } else if (c.entity == Entity::ObjectTop) {
      top_verts.push_back(c.vertex);
      top_ids.push_back(c.marker_id);
    }
  }
  if (base_verts.size() < 3 || top_verts.size() < 3)
    throw DataError("axis calibration needs >= 3 markers per object part");

  const auto gather = [](const Mesh& mesh, const std::vector<int>& verts,
                         const std::vector<std::string>& ids,
                         const MarkerFrame& frame, Points& model_out,
                         Points& world_out) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (frame.positions.count(ids[i]))
        rows.push_back(static_cast<Eigen::Index>(i));
    model_out.resize(static_cast<Eigen::Index>(rows.size()), 3);
    world_out.resize(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t i = static_cast<std::size_t>(rows[r]);
      model_out.row(static_cast<Eigen::Index>(r)) =
          mesh.vertices.row(verts[i]);
      world_out.row(static_cast<Eigen::Index>(r)) =
          frame.positions.at(ids[i]).transpose();
    }
  };

  std::vector<RigidTransform> relative;
  for (const auto& frame : markers.frames) {
    Points base_model, base_world, top_model, top_world;
    gather(assets.object.base_part, base_verts, base_ids, frame, base_model,
           base_world);
    gather(assets.object.top_part, top_verts, top_ids, frame, top_model,
           top_world);
    if (base_model.rows() < 3 || top_model.rows() < 3) continue;
    const RigidTransform base = solve_rigid(base_model, base_world);
    const RigidTransform top = solve_rigid(top_model, top_world);
    const Mat3 rb = rotation_from_axis_angle(base.rotation);
    const Mat3 rt = rotation_from_axis_angle(top.rotation);
    RigidTransform rel;
    rel.rotation = axis_angle_from_rotation(rb.transpose() * rt);
    rel.translation = rb.transpose() * (top.translation - base.translation);
    rel.rms_residual = std::max(base.rms_residual, top.rms_residual);
    relative.push_back(rel);
  }
  return relative;
}

void run_axis(const AxisCmd& cmd) {
  refuse_existing(cmd.out_path, cmd.force);

  std::vector<RigidTransform> relative;
  std::vector<std::string> inputs;
  if (!cmd.relative_path.empty()) {
    const json in = read_json_file(cmd.relative_path);
    if (!in.is_array())
      throw DataError(cmd.relative_path +
                      ": expected a JSON array of {rot, trans}");
    for (const auto& entry : in) {
      RigidTransform t;
      const json& rot = entry.at("rot");
      const json& trans = entry.at("trans");
      for (int c = 0; c < 3; ++c) {
        t.rotation[c] = rot.at(c).get<double>();
        t.translation[c] = trans.at(c).get<double>();
      }
      relative.push_back(t);
    }
    inputs.push_back(cmd.relative_path);
  } else {
    if (cmd.markers_path.empty() || cmd.assets_dir.empty())
      throw ParameterError(
          "axis needs --relative, or both --markers and --assets");
    const CaptureAssets assets = load_assets(cmd.assets_dir);
    const MarkerSequence markers = load_marker_sequence(cmd.markers_path);
    relative = relative_poses_from_markers(assets, markers);
    inputs = {cmd.assets_dir, cmd.markers_path};
  }

  const HingeEstimate estimate = estimate_axis(relative);
  json out;
  out["axis_direction"] = {estimate.axis_direction.x(),
                           estimate.axis_direction.y(),
                           estimate.axis_direction.z()};
  out["axis_origin"] = {estimate.axis_origin.x(), estimate.axis_origin.y(),
                        estimate.axis_origin.z()};
  out["rms_residual"] = estimate.rms_residual;
  out["pose_count"] = relative.size();
  write_json_file(cmd.out_path, out);

  RunManifest manifest;
  manifest.command = "axis";
  manifest.inputs = inputs;
  manifest.outputs = {cmd.out_path};
  manifest.toolkit_version = kToolkitVersion;
  save_run_manifest(fs::path(cmd.out_path).string() + ".manifest.json",
                    manifest);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hand-object interaction capture toolkit"};
  app.set_version_flag("--version", version_text());
  app.require_subcommand(1);

  int jobs = 0;
  app.add_option("--jobs", jobs,
                 "worker thread count (default: all logical cores)");

  SynthCmd synth_cmd;
  CLI::App* synth = app.add_subcommand(
      "synth", "generate synthetic assets, markers and ground truth");
  synth->add_option("--config", synth_cmd.config_path,
                    "synthesis config JSON (searched in $HOIKIT_CONFIG_DIR)");
  synth->add_option("--out", synth_cmd.out_dir, "output directory")
      ->required();
  synth->add_flag("--force", synth_cmd.force, "overwrite existing outputs");

  SolveCmd solve_cmd;
  CLI::App* solve = app.add_subcommand(
      "solve", "solve hand and object poses from a marker sequence");
  solve->add_option("--assets", solve_cmd.assets_dir, "asset directory")
      ->required();
  solve->add_option("--markers", solve_cmd.markers_path,
                    "marker sequence JSON")
      ->required();
  solve->add_option("--out", solve_cmd.out_path, "output pose JSON")
      ->required();
  solve->add_option("--max-iterations", solve_cmd.max_iterations,
                    "solver iteration cap");
  solve->add_option("--tolerance", solve_cmd.residual_tolerance,
                    "rms residual tolerance (m)");
  solve->add_flag("--optimize-shape", solve_cmd.optimize_shape,
                  "also solve shape coefficients");
  solve->add_flag("--force", solve_cmd.force, "overwrite existing outputs");

  FieldsCmd fields_cmd;
  CLI::App* fields = app.add_subcommand(
      "fields", "extract interaction fields from solved poses");
  fields->add_option("--assets", fields_cmd.assets_dir, "asset directory")
      ->required();
  fields->add_option("--poses", fields_cmd.poses_path, "pose JSON")
      ->required();
  fields->add_option("--out", fields_cmd.out_dir, "output directory")
      ->required();
  fields->add_option("--dmax", fields_cmd.d_max, "distance clamp (m)");
  fields->add_flag("--binary", fields_cmd.binary,
                   "write raw float32 payloads instead of JSON arrays");
  fields->add_flag("--force", fields_cmd.force, "overwrite existing outputs");

  EvalCmd eval_cmd;
  CLI::App* eval = app.add_subcommand(
      "eval", "evaluate predicted poses against ground truth");
  eval->add_option("--assets", eval_cmd.assets_dir, "asset directory")
      ->required();
  eval->add_option("--list", eval_cmd.list_path,
                   "JSON list of {meta, gt, pred[, gt_fields, pred_fields]}");
  eval->add_option("--gt", eval_cmd.gt_path, "ground-truth pose JSON");
  eval->add_option("--pred", eval_cmd.pred_path, "predicted pose JSON");
  eval->add_option("--meta", eval_cmd.meta_path, "sequence metadata JSON");
  eval->add_option("--gt-fields", eval_cmd.gt_fields_dir,
                   "precomputed ground-truth field directory");
  eval->add_option("--pred-fields", eval_cmd.pred_fields_dir,
                   "precomputed predicted field directory");
  eval->add_option("--protocol", eval_cmd.protocol,
                   "evaluation protocol P1|P2|P3 (default: use all frames)");
  eval->add_option("--out", eval_cmd.out_dir, "report directory")->required();
  eval->add_option("--dmax", eval_cmd.d_max,
                   "field clamp for on-the-fly fields (m)");
  eval->add_flag("--force", eval_cmd.force, "overwrite existing outputs");

  HeatmapCmd heatmap_cmd;
  CLI::App* heatmap = app.add_subcommand(
      "heatmap", "aggregate per-vertex contact frequencies");
  heatmap->add_option("--assets", heatmap_cmd.assets_dir, "asset directory")
      ->required();
  heatmap->add_option("--poses", heatmap_cmd.poses_path, "pose JSON")
      ->required();
  heatmap->add_option("--out", heatmap_cmd.out_dir, "output directory")
      ->required();
  heatmap->add_option("--threshold", heatmap_cmd.threshold,
                      "contact distance threshold (m)");
  heatmap->add_option("--dmax", heatmap_cmd.d_max, "field clamp (m)");
  heatmap->add_flag("--force", heatmap_cmd.force,
                    "overwrite existing outputs");

  AxisCmd axis_cmd;
  CLI::App* axis = app.add_subcommand(
      "axis", "calibrate a hinge axis from relative part poses");
  axis->add_option("--relative", axis_cmd.relative_path,
                   "JSON array of relative {rot, trans} poses");
  axis->add_option("--markers", axis_cmd.markers_path,
                   "marker sequence JSON (solves part poses first)");
  axis->add_option("--assets", axis_cmd.assets_dir, "asset directory");
  axis->add_option("--out", axis_cmd.out_path, "output axis JSON")
      ->required();
  axis->add_flag("--force", axis_cmd.force, "overwrite existing outputs");

  try {
    app.parse(argc, argv);
    if (jobs > 0) omp_set_num_threads(jobs);
    if (*synth) run_synth(synth_cmd);
    if (*solve) run_solve(solve_cmd);
    if (*fields) run_fields(fields_cmd);
    if (*eval) run_eval(eval_cmd);
    if (*heatmap) run_heatmap(heatmap_cmd);
    if (*axis) run_axis(axis_cmd);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
