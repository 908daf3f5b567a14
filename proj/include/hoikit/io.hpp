#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hoikit/capture.hpp"
#include "hoikit/fields.hpp"
#include "hoikit/metrics.hpp"
#include "hoikit/models.hpp"

namespace hoikit {

std::string base64_encode(const std::uint8_t* data, std::size_t size);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Reads and parses a JSON file; malformed content raises DataError.
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes pretty-printed JSON (2-space indent, sorted keys, trailing
/// newline). Output is byte-stable for equal values.
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& value);

// ---------------------------------------------------------------------------
// Assets
// ---------------------------------------------------------------------------

/// Single JSON manifest; numeric arrays are base64 little-endian float64,
/// row-major. Faces ride along as plain index triples so the mesh is
/// loadable without a side file.
void save_hand_asset(const std::filesystem::path& path,
                     const HandModel& model);
HandModel load_hand_asset(const std::filesystem::path& path);

/// ASCII OBJ, triangles only.
void save_obj(const std::filesystem::path& path, const Mesh& mesh);
Mesh load_obj(const std::filesystem::path& path);

/// JSON manifest holding hinge data and landmark list; part meshes live in
/// two OBJ files referenced relative to the manifest.
void save_object_asset(const std::filesystem::path& path,
                       const ArticulatedObject& object,
                       const std::string& base_obj_name,
                       const std::string& top_obj_name);
ArticulatedObject load_object_asset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

struct MarkerSequence {
  double fps = 0.0;
  std::vector<MarkerCorrespondence> correspondences;
  std::vector<MarkerFrame> frames;
};

/// Header (ids, correspondences, units "m", fps) plus a frames array; every
/// frame lists every marker id, occluded ones as null.
void save_marker_sequence(const std::filesystem::path& path,
                          const MarkerSequence& sequence);
MarkerSequence load_marker_sequence(const std::filesystem::path& path);

/// Top-level JSON array, one entry per frame.
void save_pose_sequence(const std::filesystem::path& path,
                        const std::vector<FramePoses>& frames);
std::vector<FramePoses> load_pose_sequence(const std::filesystem::path& path);

void save_sequence_meta(const std::filesystem::path& path,
                        const SequenceMeta& meta);
SequenceMeta load_sequence_meta(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Fields, heatmaps, reports
// ---------------------------------------------------------------------------

/// One frame's four fields. JSON flavor stores distances inline; the binary
/// flavor is a single JSON header line followed by raw little-endian
/// float32 payloads in header order. load_fields handles both.
void save_fields_json(const std::filesystem::path& path,
                      const HandObjectFields& fields);
void save_fields_binary(const std::filesystem::path& path,
                        const HandObjectFields& fields);
HandObjectFields load_fields(const std::filesystem::path& path);

/// Per-frame field dumps for a sequence live in one directory as
/// frame_000000.field.json (or .field.bin); these helpers name the files.
std::string field_frame_name(int frame, bool binary);

void save_heatmap(const std::filesystem::path& path,
                  const ContactHeatmap& map);
ContactHeatmap load_heatmap(const std::filesystem::path& path);

void save_report_json(const std::filesystem::path& path,
                      const EvalReport& report);
EvalReport load_report_json(const std::filesystem::path& path);

/// Aligned text table: overall row plus one row per object, columns in the
/// order MPJPE l/r, MRRPE l->r / o->r, AAE, V2V top/bottom.
std::string report_table(const EvalReport& report);

/// Two columns: alpha_mm,fraction.
void save_pcd_csv(const std::filesystem::path& path, const PcdCurve& curve);

// ---------------------------------------------------------------------------
// Provenance
// ---------------------------------------------------------------------------

/// What a CLI run read, wrote, and was configured with. Deliberately free
/// of timestamps so identical runs produce identical bytes.
struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> config;
  std::string toolkit_version;
  std::uint64_t seed = 0;
};

void save_run_manifest(const std::filesystem::path& path,
                       const RunManifest& manifest);

}  // namespace hoikit
