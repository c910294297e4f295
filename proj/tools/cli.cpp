#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "scene_cluster/config.hpp"
#include "scene_cluster/features.hpp"
#include "scene_cluster/image.hpp"
#include "scene_cluster/pipeline.hpp"
#include "scene_cluster/tensor.hpp"

namespace scene_cluster::cli {

using nlohmann::json;

namespace {

void print_error(std::ostream& err, std::string_view stage, std::string_view code, std::string_view message) {
  err << json{{"error", {{"stage", stage}, {"code", code}, {"message", message}}}}.dump() << '\n';
}

int exit_code_for(const std::string& code) {
  if (code == "config") return kUsage;
  if (code == "missing_input") return kMissingInput;
  return kFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cluster eating-scene images by environment", "scene-cluster"};
  app.require_subcommand(1);

  std::string config_path;
  int jobs = 1;
  bool force = false;
  bool dump = false;
  std::string method;
  const std::vector<std::string> names{"synth", "preprocess", "extract", "cluster", "evaluate", "sweep"};
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name, fmt::format("run the {} stage", name));
    sub->add_option("--config", config_path, "pipeline config file")->required();
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--force", force, "recompute even when cached outputs are current");
    sub->add_flag("--dump-intermediates", dump, "write component tables with preprocess outputs");
    if (name == "cluster" || name == "evaluate") {
      sub->add_option("--method", method, "proposed | ap | dbscan | meanshift | optics");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "cli", "usage", e.what());
    return kUsage;
  }

  const std::string stage_name = app.get_subcommands().front()->get_name();
  const Stage stage = parse_stage(stage_name);
  RunOptions opts;
  opts.jobs = jobs;
  opts.force = force;
  opts.dump_intermediates = dump;
  try {
    if (!method.empty()) opts.method = parse_method(method);
  } catch (const Error& e) {
    print_error(err, stage_name, "config", e.what());
    return kUsage;
  }

  PipelineConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    print_error(err, stage_name, "config", e.what());
    return kUsage;
  }

  try {
    const auto summary = run_stage(stage, cfg, opts);
    json outputs = json::array();
    for (const auto& p : summary.outputs) outputs.push_back(p.string());
    out << json{{"stage", stage_name},
                {"processed", summary.processed},
                {"cached", summary.cached},
                {"outputs", outputs}}
               .dump()
        << '\n';
    return kOk;
  } catch (const StageError& e) {
    err << e.to_json().dump() << '\n';
    return exit_code_for(e.code());
  }
}

int run_export(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Write conv-layer feature maps for an image list", "scene-cluster-export"};
  std::string list_path;
  std::string layers_text = "2";
  std::string out_dir;
  std::string model;
  std::uint64_t seed = 0;
  int width = 224;
  int height = 224;
  bool pooled = false;
  app.add_option("--images", list_path, "list file: <image_id>\\t<scope>\\t<path> per line")->required();
  app.add_option("--layers", layers_text, "comma-separated subset of 2,4,7,10,13");
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--model", model, "ONNX network; default is the random-projection extractor");
  app.add_option("--seed", seed, "random-projection seed");
  app.add_option("--width", width, "network input width")->check(CLI::Range(32, 4096));
  app.add_option("--height", height, "network input height")->check(CLI::Range(32, 4096));
  app.add_flag("--pooled", pooled, "store the GAP vector as a C x 1 x 1 map");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "export", "usage", e.what());
    return kUsage;
  }

  std::vector<int> layers;
  try {
    for (const auto& item : CLI::detail::split(layers_text, ',')) {
      const int m = std::stoi(item);
      if (!is_pre_pool_layer(m)) throw InvalidArgument(fmt::format("layer index invalid: {}", m));
      layers.push_back(m);
    }
  } catch (const std::exception& e) {
    print_error(err, "export", "config", e.what());
    return kUsage;
  }

  const std::filesystem::path list_file(list_path);
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(list_file);
  } catch (const Error& e) {
    print_error(err, "export", "missing_input", e.what());
    return kMissingInput;
  }
  try {
    const auto entries =
        parse_export_list(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                          list_file.parent_path());
    ExtractorSpec spec;
    spec.backend = Backend::inference;
    spec.engine = model.empty() ? InferenceEngine::random_projection : InferenceEngine::onnx;
    spec.model_path = model;
    spec.input_width = width;
    spec.input_height = height;
    spec.projection_seed = seed;
    auto extractor = make_extractor(spec);
    std::filesystem::create_directories(out_dir);
    json written = json::array();
    for (const auto& e : entries) {
      const auto img = load_real_image(e.path);
      for (int m : layers) {
        auto map = extractor->extract({"", e.image_id, e.scope, m, &img});
        if (pooled) {
          auto v = global_average_pool(map);
          const auto channels = v.values.size();
          map = FeatureMap(channels, 1, 1, std::move(v.values));
        }
        const auto path = std::filesystem::path(out_dir) / tensor_file_name(e.image_id, e.scope, m);
        write_tensor(path, map);
        written.push_back(path.string());
      }
    }
    out << json{{"written", written.size()}, {"files", written}}.dump() << '\n';
    return kOk;
  } catch (const std::exception& e) {
    print_error(err, "export", "failed", e.what());
    return kFailed;
  }
}

}  // namespace scene_cluster::cli
