#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "hoikit/io.hpp"
#include "hoikit/models.hpp"
#include "hoikit/version.hpp"

using namespace hoikit;
namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "hoikit_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct CliResult {
  int code = -1;
  std::string output;  // stdout and stderr combined
};

CliResult run_cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const fs::path log = scratch() / ("run_" + std::to_string(counter++) + ".log");
  std::string command;
  if (!env.empty()) command += env + " ";
  command += std::string(HOIKIT_CLI_PATH) + " " + args + " > " + log.string() +
             " 2>&1";
  const int status = std::system(command.c_str());

  CliResult result;
  if (WIFEXITED(status)) result.code = WEXITSTATUS(status);
  std::ifstream in(log);
  result.output.assign(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  return result;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// Shared noise-free dataset generated through the CLI itself: 6 frames,
// one sequence, default box-hinge object.
const fs::path& workspace() {
  static const fs::path dir = [] {
    const fs::path d = scratch() / "workspace";
    const fs::path config = scratch() / "synth_config.json";
    std::ofstream out(config);
    out << "{\"seed\": 7, \"frame_count\": 6, \"sequence_count\": 1}\n";
    out.close();
    const CliResult result = run_cli("synth --config " + config.string() +
                                     " --out " + d.string());
    REQUIRE(result.code == 0);
    return d;
  }();
  return dir;
}

const fs::path& solved_poses() {
  static const fs::path path = [] {
    const fs::path p = scratch() / "solved.json";
    const CliResult result =
        run_cli("solve --assets " + (workspace() / "assets").string() +
                " --markers " + (workspace() / "seq_000" / "markers.json").string() +
                " --out " + p.string());
    REQUIRE(result.code == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("version and help exit cleanly; bad usage exits 2") {
  const CliResult version = run_cli("--version");
  CHECK(version.code == 0);
  CHECK(version.output.find(kToolkitVersion) != std::string::npos);

  const CliResult help = run_cli("--help");
  CHECK(help.code == 0);
  for (const char* name : {"synth", "solve", "fields", "eval", "heatmap", "axis"})
    CHECK(help.output.find(name) != std::string::npos);

  CHECK(run_cli("").code == 2);                       // subcommand required
  CHECK(run_cli("frobnicate").code == 2);             // unknown subcommand
  CHECK(run_cli("synth --no-such-flag --out x").code == 2);
  CHECK(run_cli("solve --assets a").code == 2);       // missing required options
}

TEST_CASE("synth writes a loadable dataset with a run manifest") {
  const fs::path& dir = workspace();
  CHECK(fs::exists(dir / "manifest.json"));

  const HandModel left = load_hand_asset(dir / "assets" / "hand_left.json");
  const HandModel right = load_hand_asset(dir / "assets" / "hand_right.json");
  const ArticulatedObject object = load_object_asset(dir / "assets" / "object.json");
  left.validate();
  right.validate();
  object.validate();

  const MarkerSequence markers =
      load_marker_sequence(dir / "seq_000" / "markers.json");
  CHECK(markers.frames.size() == 6);
  CHECK(markers.correspondences.size() == 90);

  const std::vector<FramePoses> gt =
      load_pose_sequence(dir / "seq_000" / "gt_poses.json");
  CHECK(gt.size() == 6);

  const SequenceMeta meta = load_sequence_meta(dir / "seq_000" / "meta.json");
  CHECK(meta.seq_id == 0);
  CHECK(meta.view_id == 1);

  const nlohmann::json manifest = read_json_file(dir / "manifest.json");
  CHECK(manifest.at("command") == "synth");
  CHECK(manifest.at("seed") == 7);
  CHECK(manifest.at("toolkit_version") == kToolkitVersion);
}

TEST_CASE("synth refuses to overwrite without --force") {
  const fs::path& dir = workspace();
  const fs::path config = scratch() / "synth_config.json";
  const std::string args =
      "synth --config " + config.string() + " --out " + dir.string();

  const CliResult refused = run_cli(args);
  CHECK(refused.code == 2);
  CHECK(refused.output.find("--force") != std::string::npos);

  CHECK(run_cli(args + " --force").code == 0);
}

TEST_CASE("same seed and config reproduce the dataset byte for byte") {
  const fs::path config = scratch() / "synth_config.json";
  const fs::path a = scratch() / "repro_a";
  const fs::path b = scratch() / "repro_b";
  REQUIRE(run_cli("synth --config " + config.string() + " --out " + a.string())
              .code == 0);
  REQUIRE(run_cli("synth --config " + config.string() + " --out " + b.string())
              .code == 0);

  for (const char* name :
       {"manifest.json", "assets/hand_left.json", "assets/object.json",
        "assets/base.obj", "seq_000/markers.json", "seq_000/gt_poses.json",
        "seq_000/meta.json"})
    CHECK(read_bytes(a / name) == read_bytes(b / name));
}

TEST_CASE("config files resolve through the config directory variable") {
  const fs::path config_home = scratch() / "config_home";
  fs::create_directories(config_home);
  std::ofstream out(config_home / "tiny.json");
  out << "{\"seed\": 3, \"frame_count\": 2}\n";
  out.close();

  const fs::path dest = scratch() / "env_synth";
  // The bare name only exists under the config home.
  CHECK(run_cli("synth --config tiny.json --out " + dest.string()).code == 3);
  const CliResult ok = run_cli("synth --config tiny.json --out " + dest.string(),
                               "HOIKIT_CONFIG_DIR=" + config_home.string());
  CHECK(ok.code == 0);
  CHECK(load_pose_sequence(dest / "seq_000" / "gt_poses.json").size() == 2);
}

TEST_CASE("solve recovers the generating poses from noise-free markers") {
  const std::vector<FramePoses> solved = load_pose_sequence(solved_poses());
  const std::vector<FramePoses> gt =
      load_pose_sequence(workspace() / "seq_000" / "gt_poses.json");
  REQUIRE(solved.size() == gt.size());
  for (std::size_t f = 0; f < gt.size(); ++f) {
    CHECK(solved[f].flags.empty());
    CHECK(std::abs(solved[f].object.omega - gt[f].object.omega) < 1e-6);
    CHECK((solved[f].object.translation - gt[f].object.translation)
              .cwiseAbs()
              .maxCoeff() < 1e-6);
    CHECK((solved[f].left.translation - gt[f].left.translation)
              .cwiseAbs()
              .maxCoeff() < 1e-5);
    CHECK((solved[f].right.translation - gt[f].right.translation)
              .cwiseAbs()
              .maxCoeff() < 1e-5);
  }

  CHECK(fs::exists(solved_poses().string() + ".manifest.json"));

  // Refusal semantics match the other writers.
  const std::string args =
      "solve --assets " + (workspace() / "assets").string() + " --markers " +
      (workspace() / "seq_000" / "markers.json").string() + " --out " +
      solved_poses().string();
  CHECK(run_cli(args).code == 2);
}

TEST_CASE("solve reports progress on stderr and rejects bad inputs") {
  const fs::path bad_markers = scratch() / "bad_markers.json";
  std::ofstream out(bad_markers);
  out << "{ not json\n";
  out.close();
  const CliResult bad = run_cli("solve --assets " +
                                (workspace() / "assets").string() +
                                " --markers " + bad_markers.string() +
                                " --out " + (scratch() / "nope.json").string());
  CHECK(bad.code == 3);

  const CliResult missing =
      run_cli("solve --assets " + (scratch() / "no_assets").string() +
              " --markers " + (workspace() / "seq_000" / "markers.json").string() +
              " --out " + (scratch() / "nope2.json").string());
  CHECK(missing.code == 3);
}

TEST_CASE("fields dumps per-frame files in json and binary flavors") {
  const fs::path json_dir = scratch() / "fields_json";
  const CliResult json_run =
      run_cli("fields --assets " + (workspace() / "assets").string() +
              " --poses " + (workspace() / "seq_000" / "gt_poses.json").string() +
              " --out " + json_dir.string());
  REQUIRE(json_run.code == 0);
  for (int f = 0; f < 6; ++f)
    CHECK(fs::exists(json_dir / field_frame_name(f, false)));
  CHECK(fs::exists(json_dir / "manifest.json"));

  const HandObjectFields frame0 = load_fields(json_dir / field_frame_name(0, false));
  CHECK(frame0.left_to_object.distances.size() == 128);
  CHECK(frame0.object_to_left.distances.size() ==
        frame0.object_to_right.distances.size());
  CHECK(frame0.left_to_object.d_max == kDefaultFieldClamp);

  const fs::path bin_dir = scratch() / "fields_bin";
  const CliResult bin_run =
      run_cli("fields --assets " + (workspace() / "assets").string() +
              " --poses " + (workspace() / "seq_000" / "gt_poses.json").string() +
              " --out " + bin_dir.string() + " --binary --dmax 0.05");
  REQUIRE(bin_run.code == 0);
  const HandObjectFields bin0 = load_fields(bin_dir / field_frame_name(0, true));
  CHECK(bin0.left_to_object.d_max == 0.05);
  CHECK(bin0.left_to_object.distances.size() == 128);
  // Same geometry up to the float32 payload and the tighter clamp.
  for (Eigen::Index i = 0; i < 128; ++i) {
    const double clamped = std::min(frame0.left_to_object.distances[i], 0.05);
    CHECK(std::abs(bin0.left_to_object.distances[i] - clamped) < 1e-6);
  }
}

TEST_CASE("eval on identical poses produces an all-zero report") {
  const fs::path pred = scratch() / "pred_equal.json";
  fs::copy_file(workspace() / "seq_000" / "gt_poses.json", pred,
                fs::copy_options::overwrite_existing);

  const fs::path out = scratch() / "eval_zero";
  const CliResult result =
      run_cli("eval --assets " + (workspace() / "assets").string() + " --gt " +
              (workspace() / "seq_000" / "gt_poses.json").string() + " --pred " +
              pred.string() + " --meta " +
              (workspace() / "seq_000" / "meta.json").string() + " --out " +
              out.string());
  REQUIRE(result.code == 0);
  CHECK(result.output.find("overall") != std::string::npos);

  const EvalReport report = load_report_json(out / "report.json");
  CHECK(report.frame_count == 6);
  CHECK(report.mpjpe_left < 1e-9);
  CHECK(report.mpjpe_right < 1e-9);
  CHECK(report.mrrpe_lr < 1e-9);
  CHECK(report.mrrpe_or < 1e-9);
  CHECK(report.aae < 1e-9);
  CHECK(report.v2v_top < 1e-9);
  CHECK(report.v2v_bottom < 1e-9);
  REQUIRE(report.pcd_curves.size() == 4);
  for (const auto& [name, curve] : report.pcd_curves) {
    REQUIRE(curve.size() == 100);
    for (const auto& [alpha, frac] : curve) CHECK(frac == 1.0);
    CHECK(fs::exists(out / ("pcd_" + name + ".csv")));
  }
  CHECK(fs::exists(out / "report.txt"));
  CHECK(read_bytes(out / "report.txt").find("units: mm") != std::string::npos);
}

TEST_CASE("eval failure modes map to the documented exit codes") {
  const fs::path out = scratch() / "eval_fail";

  // Missing one of the required source options.
  CHECK(run_cli("eval --assets " + (workspace() / "assets").string() +
                " --gt x.json --out " + out.string())
            .code == 2);

  // Truncated predictions: coverage failure.
  const std::vector<FramePoses> gt =
      load_pose_sequence(workspace() / "seq_000" / "gt_poses.json");
  std::vector<FramePoses> short_pred(gt.begin(), gt.end() - 1);
  const fs::path pred = scratch() / "pred_short.json";
  save_pose_sequence(pred, short_pred);
  const CliResult truncated =
      run_cli("eval --assets " + (workspace() / "assets").string() + " --gt " +
              (workspace() / "seq_000" / "gt_poses.json").string() + " --pred " +
              pred.string() + " --meta " +
              (workspace() / "seq_000" / "meta.json").string() + " --out " +
              out.string());
  CHECK(truncated.code == 3);
  CHECK(truncated.output.find("prediction coverage incomplete") !=
        std::string::npos);

  // The dataset's only view is allocentric, so the egocentric protocol has
  // no test rows.
  const fs::path full_pred = scratch() / "pred_full.json";
  save_pose_sequence(full_pred, gt);
  const CliResult empty_split =
      run_cli("eval --assets " + (workspace() / "assets").string() + " --gt " +
              (workspace() / "seq_000" / "gt_poses.json").string() + " --pred " +
              full_pred.string() + " --meta " +
              (workspace() / "seq_000" / "meta.json").string() +
              " --protocol P2 --out " + out.string() + " --force");
  CHECK(empty_split.code == 3);
  CHECK(empty_split.output.find("no test sequences under protocol P2") !=
        std::string::npos);

  // Malformed prediction JSON.
  const fs::path broken = scratch() / "pred_broken.json";
  std::ofstream bad(broken);
  bad << "[{]";
  bad.close();
  CHECK(run_cli("eval --assets " + (workspace() / "assets").string() + " --gt " +
                (workspace() / "seq_000" / "gt_poses.json").string() +
                " --pred " + broken.string() + " --meta " +
                (workspace() / "seq_000" / "meta.json").string() + " --out " +
                out.string() + " --force")
            .code == 3);
}

TEST_CASE("eval under a protocol keeps only the test split") {
  // The single sequence is its object's last (only) entry, so it is the
  // test row under the allocentric protocol and the report matches the
  // unfiltered one.
  const fs::path pred = scratch() / "pred_equal.json";
  const fs::path out = scratch() / "eval_p1";
  const CliResult result =
      run_cli("eval --assets " + (workspace() / "assets").string() + " --gt " +
              (workspace() / "seq_000" / "gt_poses.json").string() + " --pred " +
              pred.string() + " --meta " +
              (workspace() / "seq_000" / "meta.json").string() +
              " --protocol P1 --out " + out.string());
  REQUIRE(result.code == 0);
  const EvalReport report = load_report_json(out / "report.json");
  CHECK(report.frame_count == 6);
  CHECK(report.mpjpe_left < 1e-9);
}

TEST_CASE("heatmap writes per-entity contact frequencies and meshes") {
  const fs::path out = scratch() / "heatmap";
  const CliResult result =
      run_cli("heatmap --assets " + (workspace() / "assets").string() +
              " --poses " + (workspace() / "seq_000" / "gt_poses.json").string() +
              " --out " + out.string() + " --threshold 0.02");
  REQUIRE(result.code == 0);

  for (const char* name : {"left", "right", "object"}) {
    const ContactHeatmap map =
        load_heatmap(out / ("heatmap_" + std::string(name) + ".json"));
    CHECK(map.frame_count == 6);
    CHECK(map.frequencies.size() > 0);
    CHECK(map.frequencies.minCoeff() >= 0.0);
    CHECK(map.frequencies.maxCoeff() <= 1.0);
    CHECK(fs::exists(out / ("heatmap_" + std::string(name) + ".obj")));
  }
  const ContactHeatmap left = load_heatmap(out / "heatmap_left.json");
  CHECK(left.entity == Entity::LeftHand);
  CHECK(left.frequencies.size() == 128);
}

TEST_CASE("axis calibration from markers recovers the hinge") {
  const fs::path out = scratch() / "axis.json";
  const CliResult result =
      run_cli("axis --assets " + (workspace() / "assets").string() +
              " --markers " + (workspace() / "seq_000" / "markers.json").string() +
              " --out " + out.string());
  REQUIRE(result.code == 0);

  const nlohmann::json axis = read_json_file(out);
  const ArticulatedObject object =
      load_object_asset(workspace() / "assets" / "object.json");
  Vec3 direction(axis.at("axis_direction").at(0).get<double>(),
                 axis.at("axis_direction").at(1).get<double>(),
                 axis.at("axis_direction").at(2).get<double>());
  Vec3 origin(axis.at("axis_origin").at(0).get<double>(),
              axis.at("axis_origin").at(1).get<double>(),
              axis.at("axis_origin").at(2).get<double>());
  CHECK(std::abs(std::abs(direction.dot(object.axis_direction)) - 1.0) < 1e-9);
  // Estimated pivot sits on the true hinge line.
  const Vec3 rel = origin - object.axis_origin;
  const double off_line =
      (rel - rel.dot(object.axis_direction) * object.axis_direction).norm();
  CHECK(off_line < 1e-6);
  CHECK(axis.at("pose_count").get<int>() == 6);

  // A hinge that never moves cannot be calibrated.
  const fs::path still = scratch() / "still.json";
  std::ofstream rel_out(still);
  rel_out << "[{\"rot\": [0,0,0], \"trans\": [0,0,0]},"
          << " {\"rot\": [0,0,0], \"trans\": [0,0,0]}]\n";
  rel_out.close();
  const CliResult degenerate =
      run_cli("axis --relative " + still.string() + " --out " +
              (scratch() / "axis_fail.json").string());
  CHECK(degenerate.code == 4);
}

TEST_SUITE_END();
