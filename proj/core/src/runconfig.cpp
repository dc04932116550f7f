#include "crossview/runconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "crossview/errors.hpp"

namespace crossview {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  size_t b = s.find_last_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

int64_t to_i64(const std::string& s, const std::string& key) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("config: bad integer for " + key + ": '" + s + "'");
  return v;
}

double to_f64(const std::string& s, const std::string& key) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ValidationError("config: bad number for " + key + ": '" + s + "'");
  }
}

bool to_bool(const std::string& s, const std::string& key) {
  if (s == "on" || s == "true" || s == "1") return true;
  if (s == "off" || s == "false" || s == "0") return false;
  throw ValidationError("config: bad flag for " + key + " (use on/off): '" + s + "'");
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ValidationError("config: empty list entry in '" + text + "'");
    out.push_back(static_cast<int>(to_i64(item, "list")));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ValidationError("config: empty list entry in '" + text + "'");
    out.push_back(to_f64(item, "list"));
  }
  return out;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig mc;
  mc.branch.channel_schedule = schedule;
  mc.branch.scheme = scheme;
  mc.gem_p = gem_p;
  mc.seed = seed;
  return mc;
}

void RunConfig::validate() const {
  ModelConfig mc = model_config();
  mc.branch.validate();
  if (batch_size < 2) throw ValidationError("config: batch_size must be >= 2 for training");
  if (lr <= 0.0) throw ValidationError("config: lr must be positive");
  if (alpha < 0.0) throw ValidationError("config: alpha must be >= 0");
  if (gem_p < 1.0) throw ValidationError("config: gem_p must be >= 1");
  if (pano_width < 2 || pano_height < 2 || sat_width < 2 || sat_height < 2)
    throw ValidationError("config: input resolutions must be >= 2");
  if (steps < 0 || epochs < 0) throw ValidationError("config: steps/epochs must be >= 0");
  if (steps == 0 && epochs == 0) throw ValidationError("config: set steps or epochs");
  if (embed_batch < 1) throw ValidationError("config: embed_batch must be >= 1");
  if (log_every < 1) throw ValidationError("config: log_every must be >= 1");
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "manifest") cfg.manifest = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "schedule") cfg.schedule = parse_int_list(value);
  else if (key == "scheme") cfg.scheme = scheme_from_name(value);
  else if (key == "pano_width") cfg.pano_width = static_cast<int>(to_i64(value, key));
  else if (key == "pano_height") cfg.pano_height = static_cast<int>(to_i64(value, key));
  else if (key == "sat_width") cfg.sat_width = static_cast<int>(to_i64(value, key));
  else if (key == "sat_height") cfg.sat_height = static_cast<int>(to_i64(value, key));
  else if (key == "batch_size") cfg.batch_size = static_cast<int>(to_i64(value, key));
  else if (key == "lr") cfg.lr = to_f64(value, key);
  else if (key == "alpha") cfg.alpha = to_f64(value, key);
  else if (key == "gem_p") cfg.gem_p = to_f64(value, key);
  else if (key == "steps") cfg.steps = to_i64(value, key);
  else if (key == "epochs") cfg.epochs = to_i64(value, key);
  else if (key == "seed") cfg.seed = static_cast<uint64_t>(to_i64(value, key));
  else if (key == "augment") cfg.augment = to_bool(value, key);
  else if (key == "checkpoint_every") cfg.checkpoint_every = to_i64(value, key);
  else if (key == "log_every") cfg.log_every = to_i64(value, key);
  else if (key == "embed_batch") cfg.embed_batch = static_cast<int>(to_i64(value, key));
  else if (key == "sweep_levels") cfg.sweep_levels = parse_double_list(value);
  else throw ValidationError("config: unknown key '" + key + "'");
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("config: cannot open: " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected key = value", line_no);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    apply_override(cfg, key, value);
  }
  return cfg;
}

std::string render_run_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "manifest = " << cfg.manifest << "\n";
  os << "out_dir = " << cfg.out_dir << "\n";
  os << "checkpoint = " << cfg.checkpoint << "\n";
  os << "schedule = ";
  for (size_t i = 0; i < cfg.schedule.size(); ++i) os << (i ? "," : "") << cfg.schedule[i];
  os << "\n";
  os << "scheme = " << scheme_name(cfg.scheme) << "\n";
  os << "pano_width = " << cfg.pano_width << "\n";
  os << "pano_height = " << cfg.pano_height << "\n";
  os << "sat_width = " << cfg.sat_width << "\n";
  os << "sat_height = " << cfg.sat_height << "\n";
  os << "batch_size = " << cfg.batch_size << "\n";
  os << "lr = " << format_double(cfg.lr) << "\n";
  os << "alpha = " << format_double(cfg.alpha) << "\n";
  os << "gem_p = " << format_double(cfg.gem_p) << "\n";
  os << "steps = " << cfg.steps << "\n";
  os << "epochs = " << cfg.epochs << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "augment = " << (cfg.augment ? "on" : "off") << "\n";
  os << "checkpoint_every = " << cfg.checkpoint_every << "\n";
  os << "log_every = " << cfg.log_every << "\n";
  os << "embed_batch = " << cfg.embed_batch << "\n";
  os << "sweep_levels = ";
  for (size_t i = 0; i < cfg.sweep_levels.size(); ++i)
    os << (i ? "," : "") << format_double(cfg.sweep_levels[i]);
  os << "\n";
  return os.str();
}

}  // namespace crossview
