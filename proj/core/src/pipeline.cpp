#include "crossview/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "crossview/errors.hpp"
#include "crossview/loss.hpp"

namespace fs = std::filesystem;

namespace crossview {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Tensor images_to_batch(const std::vector<const ImageBuffer*>& images) {
  const int n = static_cast<int>(images.size());
  Tensor batch({n, 3, images[0]->height, images[0]->width});
  for (int i = 0; i < n; ++i) write_image_planes(*images[i], batch, i);
  return batch;
}

}  // namespace

bool verbose_logging() {
  const char* v = std::getenv("CROSSVIEW_VERBOSE");
  return v != nullptr && v[0] != '\0' && v[0] != '0';
}

std::vector<ImageBuffer> load_side_images(const std::vector<PairRecord>& records,
                                          const std::string& manifest_path, View side, int height,
                                          int width) {
  std::vector<ImageBuffer> out;
  out.reserve(records.size());
  for (const PairRecord& rec : records) {
    const std::string& rel = side == View::kGround ? rec.ground_path : rec.satellite_path;
    out.push_back(load_image(resolve_manifest_path(manifest_path, rel), height, width));
  }
  return out;
}

TrainResult run_training(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.manifest.empty()) throw ValidationError("train: manifest path required");
  if (cfg.out_dir.empty()) throw ValidationError("train: out_dir required");

  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (!fs::is_directory(cfg.out_dir)) throw IoError("train: cannot create out_dir: " + cfg.out_dir);

  const std::vector<PairRecord> all = load_manifest(cfg.manifest);
  const std::vector<PairRecord> train = filter_split(all, Split::kTrain);
  if (static_cast<int>(train.size()) < cfg.batch_size)
    throw ValidationError("train: manifest has " + std::to_string(train.size()) +
                          " train pairs, need at least batch_size = " + std::to_string(cfg.batch_size));

  {
    std::ofstream os(fs::path(cfg.out_dir) / "resolved.cfg", std::ios::binary);
    if (!os) throw IoError("train: cannot write resolved.cfg");
    os << render_run_config(cfg);
  }

  if (verbose_logging())
    std::cerr << "[train] " << train.size() << " pairs, scheme " << scheme_name(cfg.scheme)
              << ", seed " << cfg.seed << "\n";

  const std::vector<ImageBuffer> ground_images =
      load_side_images(train, cfg.manifest, View::kGround, cfg.pano_height, cfg.pano_width);
  const std::vector<ImageBuffer> satellite_images =
      load_side_images(train, cfg.manifest, View::kSatellite, cfg.sat_height, cfg.sat_width);

  const OrientationMap ground_uv = ground_orientation_map(cfg.pano_width, cfg.pano_height);
  const OrientationMap satellite_uv = satellite_orientation_map(cfg.sat_width, cfg.sat_height);

  SiameseModel model(cfg.model_config());
  write_model_manifest((fs::path(cfg.out_dir) / "model.txt").string(), model);
  model.enable_grads();
  std::vector<NamedTensor> named = model.named_parameters();
  std::vector<Tensor*> params;
  params.reserve(named.size());
  for (NamedTensor& p : named) params.push_back(p.tensor);

  AdamState adam;
  adam.config.lr = cfg.lr;
  adam.init(params);

  BatchIterator batches(static_cast<int>(train.size()), cfg.batch_size, cfg.seed, cfg.augment,
                        cfg.pano_width, true);
  int64_t steps = cfg.steps;
  if (steps == 0) steps = cfg.epochs * batches.batches_per_epoch();

  const LossParams loss_params{cfg.alpha};
  TrainResult result;
  result.loss_log_path = (fs::path(cfg.out_dir) / "loss_log.csv").string();
  result.checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.bin").string();
  std::ofstream loss_log(result.loss_log_path, std::ios::binary);
  std::ofstream timing(fs::path(cfg.out_dir) / "timing.csv", std::ios::binary);
  if (!loss_log || !timing) throw IoError("train: cannot open log files");
  loss_log << "step,loss\n";
  timing << "step,wall_ms\n";

  const auto t0 = std::chrono::steady_clock::now();
  for (int64_t step = 1; step <= steps; ++step) {
    const BatchPlan plan = batches.next();
    const int B = static_cast<int>(plan.indices.size());

    Tensor ground_batch({B, 3, cfg.pano_height, cfg.pano_width});
    Tensor satellite_batch({B, 3, cfg.sat_height, cfg.sat_width});
    for (int i = 0; i < B; ++i) {
      const ImageBuffer& pano = ground_images[static_cast<size_t>(plan.indices[static_cast<size_t>(i)])];
      if (plan.shifts[static_cast<size_t>(i)] != 0) {
        write_image_planes(circular_shift_panorama(pano, plan.shifts[static_cast<size_t>(i)]),
                           ground_batch, i);
      } else {
        write_image_planes(pano, ground_batch, i);
      }
      write_image_planes(satellite_images[static_cast<size_t>(plan.indices[static_cast<size_t>(i)])],
                         satellite_batch, i);
    }

    model.zero_grads();
    BranchForward ground_fw =
        model.ground().forward(ground_batch, ground_uv, Mode::kTrain, cfg.gem_p, true);
    BranchForward satellite_fw =
        model.satellite().forward(satellite_batch, satellite_uv, Mode::kTrain, cfg.gem_p, true);

    TripletBatch tb{ground_fw.embeddings, satellite_fw.embeddings};
    const double loss = batch_loss_with_grad(tb, loss_params);
    ground_fw.embeddings.grad_values() = tb.ground.grad_values();
    satellite_fw.embeddings.grad_values() = tb.satellite.grad_values();

    model.ground().backward(ground_fw, Mode::kTrain, cfg.gem_p);
    model.satellite().backward(satellite_fw, Mode::kTrain, cfg.gem_p);
    adam_step(params, adam);

    result.losses.push_back(loss);
    if (step % cfg.log_every == 0 || step == steps) {
      loss_log << step << ',' << format_double(loss) << "\n";
      const auto now = std::chrono::steady_clock::now();
      timing << step << ','
             << std::chrono::duration_cast<std::chrono::milliseconds>(now - t0).count() << "\n";
    }
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && step != steps) {
      save_checkpoint((fs::path(cfg.out_dir) / ("checkpoint_step_" + std::to_string(step) + ".bin")).string(),
                      model, &adam);
    }
    if (verbose_logging() && (step % 50 == 0 || step == steps))
      std::cerr << "[train] step " << step << "/" << steps << " loss " << loss << "\n";
  }

  save_checkpoint(result.checkpoint_path, model, &adam);
  if (!loss_log || !timing) throw IoError("train: log write failure");
  return result;
}

namespace {

Tensor embed_images(SiameseModel& model, const std::vector<ImageBuffer>& images,
                    const OrientationMap& uv, View side, int embed_batch) {
  const int n = static_cast<int>(images.size());
  const int d = model.descriptor_dim();
  Tensor rows({n, d});
  for (int start = 0; start < n; start += embed_batch) {
    const int count = std::min(embed_batch, n - start);
    std::vector<const ImageBuffer*> chunk;
    chunk.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) chunk.push_back(&images[static_cast<size_t>(start + i)]);
    Tensor batch = images_to_batch(chunk);
    Tensor emb = model.embed_batch(batch, uv, side, Mode::kEval);
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < d; ++j) rows[(static_cast<int64_t>(start + i)) * d + j] = emb[static_cast<int64_t>(i) * d + j];
  }
  return rows;
}

}  // namespace

std::string run_embed(const RunConfig& cfg, const std::string& checkpoint_path,
                      const std::string& manifest_path, View side, std::optional<Split> split,
                      const std::string& out_index_path) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  std::vector<PairRecord> records = load_manifest(manifest_path);
  if (split) records = filter_split(records, *split);
  if (records.empty()) throw ValidationError("embed: no records selected");

  const int h = side == View::kGround ? cfg.pano_height : cfg.sat_height;
  const int w = side == View::kGround ? cfg.pano_width : cfg.sat_width;
  const OrientationMap uv =
      side == View::kGround ? ground_orientation_map(w, h) : satellite_orientation_map(w, h);

  const std::vector<ImageBuffer> images = load_side_images(records, manifest_path, side, h, w);
  Tensor rows = embed_images(ckpt.model, images, uv, side, cfg.embed_batch);

  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const PairRecord& r : records) ids.push_back(r.id);

  std::vector<std::array<double, 2>> positions;
  bool all_positions = true;
  for (const PairRecord& r : records) all_positions = all_positions && r.has_position();
  if (all_positions) {
    positions.reserve(records.size());
    for (const PairRecord& r : records) positions.push_back({*r.lat, *r.lon});
  }

  EmbeddingIndex index = build_index(std::move(ids), std::move(rows), std::move(positions));
  save_index(out_index_path, index);
  if (verbose_logging())
    std::cerr << "[embed] wrote " << index.count() << " x " << index.dim() << " index to "
              << out_index_path << "\n";
  return out_index_path;
}

EvalResult run_eval(const std::string& ground_index_path, const std::string& satellite_index_path,
                    int localization_n_top, double localization_radius_m) {
  const EmbeddingIndex ground = load_index(ground_index_path);
  const EmbeddingIndex satellite = load_index(satellite_index_path);

  EvalResult result;
  result.localization_n_top = localization_n_top;
  result.localization_radius_m = localization_radius_m;
  result.recall = recall_at_k(satellite, ground.matrix, ground.ids);
  if (ground.has_positions() && satellite.has_positions()) {
    result.localization = localization_recall(satellite, ground.matrix, ground.positions,
                                              localization_n_top, localization_radius_m);
  }
  return result;
}

void write_eval_reports(const EvalResult& result, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream json(fs::path(out_dir) / "report.json", std::ios::binary);
  std::ofstream csv(fs::path(out_dir) / "report.csv", std::ios::binary);
  if (!json || !csv) throw IoError("eval: cannot write reports in " + out_dir);
  std::string body = recall_report_json(result.recall);
  if (result.localization) {
    // splice localization into the JSON object
    body.erase(body.find_last_of('}'));
    body += ",\n  \"localization\": {\"n_top\": " + std::to_string(result.localization_n_top) +
            ", \"radius_m\": " + format_double(result.localization_radius_m) +
            ", \"recall\": " + format_double(*result.localization) + "}\n}\n";
  }
  json << body;
  csv << recall_report_csv(result.recall);
  if (result.localization)
    csv << "localization@" << result.localization_n_top << ',' << result.localization_n_top << ','
        << *result.localization << "\n";
}

NoiseSweepReport run_sweep(const RunConfig& cfg, const std::string& checkpoint_path,
                           const std::string& manifest_path,
                           const std::string& satellite_index_path, std::optional<Split> split,
                           uint64_t seed) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  std::vector<PairRecord> records = load_manifest(manifest_path);
  if (split) records = filter_split(records, *split);
  if (records.empty()) throw ValidationError("sweep: no records selected");

  const EmbeddingIndex satellite = load_index(satellite_index_path);
  const OrientationMap ground_uv = ground_orientation_map(cfg.pano_width, cfg.pano_height);
  const std::vector<ImageBuffer> panoramas =
      load_side_images(records, manifest_path, View::kGround, cfg.pano_height, cfg.pano_width);
  std::vector<std::string> gt_ids;
  gt_ids.reserve(records.size());
  for (const PairRecord& r : records) gt_ids.push_back(r.id);

  SiameseModel& model = ckpt.model;
  const int embed_batch = cfg.embed_batch;
  PanoramaEmbedFn embed = [&model, &ground_uv, embed_batch](const std::vector<ImageBuffer>& imgs) {
    return embed_images(model, imgs, ground_uv, View::kGround, embed_batch);
  };
  return north_noise_sweep(embed, panoramas, gt_ids, satellite, cfg.sweep_levels, seed);
}

void write_sweep_reports(const NoiseSweepReport& report, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream json(fs::path(out_dir) / "sweep.json", std::ios::binary);
  std::ofstream csv(fs::path(out_dir) / "sweep.csv", std::ios::binary);
  if (!json || !csv) throw IoError("sweep: cannot write reports in " + out_dir);
  json << sweep_report_json(report);
  csv << sweep_report_csv(report);
}

}  // namespace crossview
