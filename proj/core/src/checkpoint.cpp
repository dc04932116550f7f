#include "crossview/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "crossview/errors.hpp"

namespace crossview {

namespace {

constexpr char kMagic[4] = {'C', 'V', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<char*>(b), 8);
}

void put_f32(std::ostream& os, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

void put_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("checkpoint: truncated file");
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw IoError("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

float get_f32(std::istream& is) {
  const uint32_t bits = get_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

double get_f64(std::istream& is) {
  const uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string get_string(std::istream& is) {
  const uint32_t len = get_u32(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw IoError("checkpoint: truncated file");
  return s;
}

void put_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
  put_string(os, name);
  put_u32(os, static_cast<uint32_t>(t.ndim()));
  for (int d : t.shape()) put_u32(os, static_cast<uint32_t>(d));
  const int64_t n = t.size();
  for (int64_t i = 0; i < n; ++i) put_f32(os, static_cast<float>(t[i]));
}

void get_tensor_into(std::istream& is, const std::string& expect_name, Tensor& t) {
  const std::string name = get_string(is);
  if (name != expect_name)
    throw ValidationError("checkpoint: expected tensor '" + expect_name + "', found '" + name + "'");
  const uint32_t ndim = get_u32(is);
  std::vector<int> shape(ndim);
  for (uint32_t i = 0; i < ndim; ++i) shape[i] = static_cast<int>(get_u32(is));
  if (shape != t.shape()) throw ValidationError("checkpoint: shape mismatch for '" + name + "'");
  const int64_t n = t.size();
  for (int64_t i = 0; i < n; ++i) t[i] = static_cast<double>(get_f32(is));
}

}  // namespace

void save_checkpoint(const std::string& path, SiameseModel& model, const AdamState* adam) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("checkpoint: cannot open for write: " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);

  const ModelConfig& cfg = model.config();
  put_u32(os, static_cast<uint32_t>(cfg.branch.scheme));
  put_u32(os, static_cast<uint32_t>(cfg.branch.channel_schedule.size()));
  for (int c : cfg.branch.channel_schedule) put_u32(os, static_cast<uint32_t>(c));
  put_f64(os, cfg.gem_p);
  put_u64(os, cfg.seed);

  const uint32_t has_adam = adam != nullptr ? 1 : 0;
  put_u32(os, has_adam);
  if (adam) {
    put_f64(os, adam->config.lr);
    put_f64(os, adam->config.beta1);
    put_f64(os, adam->config.beta2);
    put_f64(os, adam->config.epsilon);
    put_u64(os, static_cast<uint64_t>(adam->step));
  }

  std::vector<NamedTensor> params = model.named_parameters();
  std::vector<NamedTensor> buffers = model.named_buffers();
  uint32_t entries = static_cast<uint32_t>(params.size() + buffers.size());
  if (adam) entries += static_cast<uint32_t>(2 * params.size());
  put_u32(os, entries);
  for (const NamedTensor& p : params) put_tensor(os, p.name, *p.tensor);
  for (const NamedTensor& b : buffers) put_tensor(os, b.name, *b.tensor);
  if (adam) {
    for (size_t i = 0; i < params.size(); ++i) put_tensor(os, "adam.m." + params[i].name, adam->m[i]);
    for (size_t i = 0; i < params.size(); ++i) put_tensor(os, "adam.v." + params[i].name, adam->v[i]);
  }
  if (!os) throw IoError("checkpoint: write failure: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw ValidationError("checkpoint: bad magic in " + path);
  const uint32_t version = get_u32(is);
  if (version != kVersion)
    throw ValidationError("checkpoint: unsupported version " + std::to_string(version));

  ModelConfig cfg;
  cfg.branch.scheme = static_cast<Scheme>(get_u32(is));
  const uint32_t sched_len = get_u32(is);
  cfg.branch.channel_schedule.resize(sched_len);
  for (uint32_t i = 0; i < sched_len; ++i)
    cfg.branch.channel_schedule[i] = static_cast<int>(get_u32(is));
  cfg.gem_p = get_f64(is);
  cfg.seed = get_u64(is);

  Checkpoint ckpt;
  ckpt.model = SiameseModel(cfg);

  const uint32_t has_adam = get_u32(is);
  if (has_adam) {
    AdamState adam;
    adam.config.lr = get_f64(is);
    adam.config.beta1 = get_f64(is);
    adam.config.beta2 = get_f64(is);
    adam.config.epsilon = get_f64(is);
    adam.step = static_cast<int64_t>(get_u64(is));
    ckpt.adam = std::move(adam);
  }

  const uint32_t entries = get_u32(is);
  std::vector<NamedTensor> params = ckpt.model.named_parameters();
  std::vector<NamedTensor> buffers = ckpt.model.named_buffers();
  uint32_t expect = static_cast<uint32_t>(params.size() + buffers.size());
  if (has_adam) expect += static_cast<uint32_t>(2 * params.size());
  if (entries != expect)
    throw ValidationError("checkpoint: entry count mismatch in " + path);

  for (NamedTensor& p : params) get_tensor_into(is, p.name, *p.tensor);
  for (NamedTensor& b : buffers) get_tensor_into(is, b.name, *b.tensor);
  if (has_adam) {
    std::vector<Tensor*> ptensors;
    for (NamedTensor& p : params) ptensors.push_back(p.tensor);
    const int64_t step = ckpt.adam->step;
    ckpt.adam->init(ptensors);  // allocates moments, resets step
    ckpt.adam->step = step;
    for (size_t i = 0; i < params.size(); ++i)
      get_tensor_into(is, "adam.m." + params[i].name, ckpt.adam->m[i]);
    for (size_t i = 0; i < params.size(); ++i)
      get_tensor_into(is, "adam.v." + params[i].name, ckpt.adam->v[i]);
  }
  return ckpt;
}

void write_model_manifest(const std::string& path, const SiameseModel& model) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for write: " + path);
  const ModelConfig& cfg = model.config();
  os << "scheme = " << scheme_name(cfg.branch.scheme) << "\n";
  os << "schedule = ";
  for (size_t i = 0; i < cfg.branch.channel_schedule.size(); ++i) {
    if (i) os << ",";
    os << cfg.branch.channel_schedule[i];
  }
  os << "\n";
  os << "input_channels = " << cfg.branch.input_channels() << "\n";
  os << "gem_p = " << cfg.gem_p << "\n";
  os << "seed = " << cfg.seed << "\n";
  if (!os) throw IoError("write failure: " + path);
}

}  // namespace crossview
