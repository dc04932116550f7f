// crossview: cross-view geo-localization toolkit CLI.
//
// Subcommands: synth, train, embed, eval, sweep, query, orient.
// Exit codes: 0 success, 1 usage, 2 validation, 3 io, 4 numeric.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>

#include "crossview/checkpoint.hpp"
#include "crossview/errors.hpp"
#include "crossview/pipeline.hpp"
#include "crossview/synthetic.hpp"

namespace fs = std::filesystem;
using namespace crossview;

namespace {

constexpr const char* kRunKeys[] = {
    "manifest", "out_dir",     "checkpoint",       "schedule",  "scheme",      "pano_width",
    "pano_height", "sat_width", "sat_height",      "batch_size", "lr",         "alpha",
    "gem_p",    "steps",       "epochs",           "seed",      "augment",     "checkpoint_every",
    "log_every", "embed_batch", "sweep_levels",
};

// Every RunConfig key doubles as a CLI flag that overrides the config file.
struct RunOptions {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration file (key = value lines)");
    for (const char* key : kRunKeys)
      options[key] = cmd->add_option("--" + std::string(key), values[key]);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = parse_run_config(config_path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) apply_override(cfg, key, values.at(key));
    return cfg;
  }
};

std::optional<Split> parse_split_flag(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw ValidationError("--split must be train, test, or all");
}

View parse_side(const std::string& s) {
  if (s == "ground") return View::kGround;
  if (s == "satellite") return View::kSatellite;
  throw ValidationError("--side must be ground or satellite");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-view geo-localization toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic cross-view dataset");
  SyntheticWorldConfig synth_cfg;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_cfg.seed);
  synth->add_option("--locations", synth_cfg.n_locations);
  synth->add_option("--train", synth_cfg.n_train);
  synth->add_option("--landmarks", synth_cfg.landmarks_per_location);
  synth->add_option("--pano_width", synth_cfg.pano_width);
  synth->add_option("--pano_height", synth_cfg.pano_height);
  synth->add_option("--sat_width", synth_cfg.sat_width);
  synth->add_option("--sat_height", synth_cfg.sat_height);
  synth->add_option("--mpp", synth_cfg.meters_per_pixel);
  synth->add_option("--min_range", synth_cfg.min_landmark_range_m);
  synth->add_option("--max_range", synth_cfg.max_landmark_range_m);
  synth->add_option("--noise", synth_cfg.noise_level);

  // train
  auto* train = app.add_subcommand("train", "train the Siamese embedding model");
  RunOptions train_opts;
  train_opts.attach(train);

  // embed
  auto* embed = app.add_subcommand("embed", "embed one side of a manifest into an index");
  RunOptions embed_opts;
  embed_opts.attach(embed);
  std::string embed_side, embed_split = "all", embed_out;
  embed->add_option("--side", embed_side, "ground or satellite")->required();
  embed->add_option("--split", embed_split, "train, test, or all");
  embed->add_option("--out", embed_out, "output index file")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "recall and localization reports from two indexes");
  std::string eval_ground, eval_satellite, eval_out;
  int eval_loc_top = 1;
  double eval_radius = 5.0;
  eval->add_option("--ground_index", eval_ground)->required();
  eval->add_option("--satellite_index", eval_satellite)->required();
  eval->add_option("--out", eval_out, "report directory")->required();
  eval->add_option("--loc_top", eval_loc_top, "localization top-N");
  eval->add_option("--radius", eval_radius, "localization radius in meters");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "north-error robustness sweep");
  RunOptions sweep_opts;
  sweep_opts.attach(sweep);
  std::string sweep_split = "test", sweep_out, sweep_index;
  sweep->add_option("--split", sweep_split);
  sweep->add_option("--satellite_index", sweep_index)->required();
  sweep->add_option("--out", sweep_out, "report directory")->required();

  // query
  auto* query = app.add_subcommand("query", "top-K tiles for one panorama");
  RunOptions query_opts;
  query_opts.attach(query);
  std::string query_index, query_image;
  int query_k = 5;
  query->add_option("--index", query_index, "satellite index")->required();
  query->add_option("--image", query_image, "panorama image")->required();
  query->add_option("--k", query_k);

  // orient
  auto* orient = app.add_subcommand("orient", "export a U-V orientation map as PNG");
  std::string orient_view = "ground", orient_out;
  int orient_w = 128, orient_h = 64;
  bool orient_color = false;
  orient->add_option("--view", orient_view, "ground or satellite");
  orient->add_option("--width", orient_w);
  orient->add_option("--height", orient_h);
  orient->add_option("--out", orient_out)->required();
  orient->add_flag("--color", orient_color, "color-coded 3-channel export");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) {
      const SyntheticWorld world = generate_synthetic_world(synth_cfg, synth_out);
      std::cout << "wrote " << world.records.size() << " pairs to " << synth_out << "\n";
      return 0;
    }
    if (train->parsed()) {
      const RunConfig cfg = train_opts.resolve();
      const TrainResult result = run_training(cfg);
      std::cout << "trained " << result.losses.size() << " steps; checkpoint at "
                << result.checkpoint_path << "\n";
      return 0;
    }
    if (embed->parsed()) {
      const RunConfig cfg = embed_opts.resolve();
      if (cfg.checkpoint.empty()) throw ValidationError("embed: --checkpoint required");
      if (cfg.manifest.empty()) throw ValidationError("embed: --manifest required");
      run_embed(cfg, cfg.checkpoint, cfg.manifest, parse_side(embed_side),
                parse_split_flag(embed_split), embed_out);
      std::cout << "wrote index " << embed_out << "\n";
      return 0;
    }
    if (eval->parsed()) {
      const EvalResult result = run_eval(eval_ground, eval_satellite, eval_loc_top, eval_radius);
      write_eval_reports(result, eval_out);
      std::cout << recall_report_csv(result.recall);
      if (result.localization)
        std::cout << "localization@" << result.localization_n_top << "," << result.localization_n_top
                  << "," << *result.localization << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      const RunConfig cfg = sweep_opts.resolve();
      if (cfg.checkpoint.empty()) throw ValidationError("sweep: --checkpoint required");
      if (cfg.manifest.empty()) throw ValidationError("sweep: --manifest required");
      const NoiseSweepReport report = run_sweep(cfg, cfg.checkpoint, cfg.manifest, sweep_index,
                                                parse_split_flag(sweep_split), cfg.seed);
      write_sweep_reports(report, sweep_out);
      std::cout << sweep_report_csv(report);
      return 0;
    }
    if (query->parsed()) {
      const RunConfig cfg = query_opts.resolve();
      if (cfg.checkpoint.empty()) throw ValidationError("query: --checkpoint required");
      Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
      const EmbeddingIndex index = load_index(query_index);
      const ImageBuffer pano = load_image(query_image, cfg.pano_height, cfg.pano_width);
      const OrientationMap uv = ground_orientation_map(cfg.pano_width, cfg.pano_height);
      const Tensor desc = ckpt.model.embed(pano, uv, View::kGround, Mode::kEval);
      std::cout << "rank,id,squared_distance\n";
      int rank = 1;
      for (const Neighbor& nb : top_k(index, desc, query_k)) {
        std::cout << rank++ << ',' << index.ids[static_cast<size_t>(nb.index)] << ','
                  << nb.squared_distance << "\n";
      }
      return 0;
    }
    if (orient->parsed()) {
      const OrientationMap map = orient_view == "satellite"
                                     ? satellite_orientation_map(orient_w, orient_h)
                                     : ground_orientation_map(orient_w, orient_h);
      save_png(orient_out, orient_color ? uv_to_color_raster(map) : uv_to_raster(map));
      std::cout << "wrote " << orient_out << "\n";
      return 0;
    }
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
