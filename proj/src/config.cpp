#include "protojoint/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace protojoint {

namespace {

const std::set<std::string> kKnownKeys = {
    "lambda",        "gamma",
    "delta",         "tau",
    "l",             "d_h",
    "d_w",           "learning_rate",
    "epochs",        "episodes_per_epoch",
    "u_max",         "seed",
    "mode",          "optimizer",
    "weight_decay",  "dropout",
    "window_norm",   "scl_normalize",
    "sf_scl_source", "dev_episodes",
};

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("unparsable value for key '" + key + "': '" + value +
                          "'");
  }
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    long long x = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("unparsable value for key '" + key + "': '" + value +
                          "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    unsigned long long x = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("unparsable value for key '" + key + "': '" + value +
                          "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ValidationError("unparsable value for key '" + key + "': '" + value +
                        "'");
}

void apply(TrainConfig& cfg, const std::string& key,
           const std::string& value) {
  if (key == "lambda") cfg.lambda = to_double(key, value);
  else if (key == "gamma") cfg.gamma = to_double(key, value);
  else if (key == "delta") cfg.delta = to_double(key, value);
  else if (key == "tau") cfg.tau = to_double(key, value);
  else if (key == "l") cfg.l = static_cast<int>(to_int(key, value));
  else if (key == "d_h") cfg.d_h = static_cast<int>(to_int(key, value));
  else if (key == "d_w") cfg.d_w = static_cast<int>(to_int(key, value));
  else if (key == "learning_rate") cfg.learning_rate = to_double(key, value);
  else if (key == "epochs") cfg.epochs = static_cast<int>(to_int(key, value));
  else if (key == "episodes_per_epoch")
    cfg.episodes_per_epoch = static_cast<int>(to_int(key, value));
  else if (key == "u_max") cfg.u_max = static_cast<int>(to_int(key, value));
  else if (key == "seed") cfg.seed = to_u64(key, value);
  else if (key == "mode") cfg.mode = mode_from_string(value);
  else if (key == "optimizer") {
    if (value == "adamw") cfg.optimizer = OptimizerKind::kAdamW;
    else if (value == "sgd") cfg.optimizer = OptimizerKind::kSgd;
    else
      throw ValidationError("unparsable value for key 'optimizer': '" + value +
                            "' (expected adamw or sgd)");
  } else if (key == "weight_decay") cfg.weight_decay = to_double(key, value);
  else if (key == "dropout") cfg.dropout = to_double(key, value);
  else if (key == "window_norm") {
    if (value == "actual") cfg.window_norm = WindowNorm::kActual;
    else if (value == "fixed") cfg.window_norm = WindowNorm::kFixed;
    else
      throw ValidationError(
          "unparsable value for key 'window_norm': '" + value +
          "' (expected actual or fixed)");
  } else if (key == "scl_normalize") cfg.scl_normalize = to_bool(key, value);
  else if (key == "sf_scl_source") {
    if (value == "h") cfg.sf_scl_from_hs = false;
    else if (value == "hs") cfg.sf_scl_from_hs = true;
    else
      throw ValidationError("unparsable value for key 'sf_scl_source': '" +
                            value + "' (expected h or hs)");
  } else if (key == "dev_episodes")
    cfg.dev_episodes = static_cast<int>(to_int(key, value));
  else
    throw ValidationError("unknown config key '" + key + "'");
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            " is not key=value: '" + line + "'");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto strip = [](std::string s) {
      size_t x = s.find_first_not_of(" \t");
      size_t y = s.find_last_not_of(" \t");
      return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
    };
    key = strip(key);
    value = strip(value);
    if (!kKnownKeys.count(key)) {
      throw ValidationError("unknown config key '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

TrainConfig parse_train_config(
    const std::string& file_path,
    const std::map<std::string, std::string>& flag_overrides) {
  TrainConfig cfg;
  std::map<std::string, std::string> effective;
  if (!file_path.empty()) effective = read_config_file(file_path);
  for (const auto& [key, value] : flag_overrides) {
    if (!kKnownKeys.count(key)) {
      throw ValidationError("unknown config key '" + key + "'");
    }
    effective[key] = value;
  }
  for (const auto& [key, value] : effective) apply(cfg, key, value);

  bool gamma_set = effective.count("gamma") > 0;
  bool delta_set = effective.count("delta") > 0;
  if (cfg.mode == Mode::kOO && gamma_set && cfg.gamma != 0.0) {
    throw ValidationError("mode oo disables the gamma term; gamma=" +
                          effective.at("gamma") + " contradicts it");
  }
  if (cfg.mode != Mode::kWW && delta_set && cfg.delta != 0.0) {
    throw ValidationError("mode " + mode_to_string(cfg.mode) +
                          " disables the delta term; delta=" +
                          effective.at("delta") + " contradicts it");
  }
  cfg = normalized(cfg);
  validate_config(cfg);
  return cfg;
}

std::map<std::string, std::string> config_to_map(const TrainConfig& cfg) {
  std::map<std::string, std::string> m;
  auto num = [](double x) {
    std::ostringstream ss;
    ss << x;
    return ss.str();
  };
  m["lambda"] = num(cfg.lambda);
  m["gamma"] = num(cfg.gamma);
  m["delta"] = num(cfg.delta);
  m["tau"] = num(cfg.tau);
  m["l"] = std::to_string(cfg.l);
  m["d_h"] = std::to_string(cfg.d_h);
  m["d_w"] = std::to_string(cfg.d_w);
  m["learning_rate"] = num(cfg.learning_rate);
  m["epochs"] = std::to_string(cfg.epochs);
  m["episodes_per_epoch"] = std::to_string(cfg.episodes_per_epoch);
  m["u_max"] = std::to_string(cfg.u_max);
  m["seed"] = std::to_string(cfg.seed);
  m["mode"] = mode_to_string(cfg.mode);
  m["optimizer"] = cfg.optimizer == OptimizerKind::kAdamW ? "adamw" : "sgd";
  m["weight_decay"] = num(cfg.weight_decay);
  m["dropout"] = num(cfg.dropout);
  m["window_norm"] =
      cfg.window_norm == WindowNorm::kActual ? "actual" : "fixed";
  m["scl_normalize"] = cfg.scl_normalize ? "true" : "false";
  m["sf_scl_source"] = cfg.sf_scl_from_hs ? "hs" : "h";
  m["dev_episodes"] = std::to_string(cfg.dev_episodes);
  return m;
}

}  // namespace protojoint
