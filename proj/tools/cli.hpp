#pragma once

#include <ostream>

namespace scene_cluster::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,         // bad arguments or malformed config
  kMissingInput = 3,  // an upstream stage or input file is missing
  kFailed = 4,        // invalid inputs or a stage failure
};

/// `scene-cluster <stage> --config <path> [--jobs N] [--force] [--dump-intermediates] [--method M]`
///
/// Prints one JSON summary line to `out` on success. Failures print one
/// JSON line `{"error": {"stage", "code", "message"}}` to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// `scene-cluster-export --images <list> --layers 2,4 --out <dir> [--model <onnx>] [--seed N] [--pooled]`
///
/// Writes `<image_id>.<scope>.<layer>.ftns` for every list entry using the
/// random-projection extractor, or the given ONNX network.
int run_export(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scene_cluster::cli
