#include "vqa/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "vqa/errors.hpp"

namespace vqa {

namespace {

int to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const int r = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config", key + ": expected an integer, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long r = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config", key + ": expected an unsigned integer, got '" + v + "'");
  }
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config", key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config", key + ": expected a boolean, got '" + v + "'");
}

std::vector<StageDims> parse_stages(const std::string& v, const std::string& key) {
  std::vector<StageDims> dims;
  std::stringstream ss(v);
  std::string stage;
  while (std::getline(ss, stage, ',')) {
    int parts[3];
    std::size_t at = 0;
    for (int i = 0; i < 3; ++i) {
      const auto x = stage.find('x', at);
      const bool last = (i == 2);
      if ((x == std::string::npos) != last) {
        throw ConfigError("config", key + ": stage '" + stage + "' must look like HxWxC");
      }
      parts[i] = to_int(stage.substr(at, last ? std::string::npos : x - at), key);
      at = x + 1;
    }
    dims.push_back(StageDims{parts[0], parts[1], parts[2]});
  }
  if (dims.empty()) throw ConfigError("config", key + ": no stages given");
  return dims;
}

std::string stages_string(const std::vector<StageDims>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i].grid_h) + "x" + std::to_string(dims[i].grid_w) + "x" +
         std::to_string(dims[i].channels);
  }
  return s;
}

struct KeyDef {
  std::string key;
  std::string desc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

const std::vector<KeyDef>& schema() {
  static const std::vector<KeyDef> defs = [] {
    std::vector<KeyDef> d;
    auto add = [&d](std::string key, std::string desc, auto get, auto set) {
      d.push_back(KeyDef{std::move(key), std::move(desc),
                         [get](const RunConfig& c) { return get(c); },
                         [set](RunConfig& c, const std::string& v) { set(c, v); }});
    };

    add("data.manifest", "training manifest path",
        [](const RunConfig& c) { return c.data.manifest; },
        [](RunConfig& c, const std::string& v) { c.data.manifest = v; });
    add("data.eval_manifest", "held-out manifest path (empty: split data.manifest)",
        [](const RunConfig& c) { return c.data.eval_manifest; },
        [](RunConfig& c, const std::string& v) { c.data.eval_manifest = v; });
    add("data.vmaf_scores", "VMAF scores file ingested into unlabeled records",
        [](const RunConfig& c) { return c.data.vmaf_scores; },
        [](RunConfig& c, const std::string& v) { c.data.vmaf_scores = v; });
    add("data.split", "train fraction of the manifest, (0, 1]",
        [](const RunConfig& c) { return fmt(c.data.split); },
        [](RunConfig& c, const std::string& v) { c.data.split = to_double(v, "data.split"); });
    add("data.frame_count", "frames sampled uniformly per video",
        [](const RunConfig& c) { return std::to_string(c.data.frame_count); },
        [](RunConfig& c, const std::string& v) { c.data.frame_count = to_int(v, "data.frame_count"); });

    add("model.seed", "weight initialization seed",
        [](const RunConfig& c) { return std::to_string(c.model.init_seed); },
        [](RunConfig& c, const std::string& v) { c.model.init_seed = to_u64(v, "model.seed"); });
    add("model.input_size", "square frame resolution fed to the backbone",
        [](const RunConfig& c) { return std::to_string(c.model.spatial.input_size); },
        [](RunConfig& c, const std::string& v) {
          c.model.spatial.input_size = to_int(v, "model.input_size");
        });
    add("model.backbone.kind", "stub | pretrained",
        [](const RunConfig& c) {
          return c.model.spatial.backbone.kind == BackboneKind::deterministic_stub
                     ? std::string("stub")
                     : std::string("pretrained");
        },
        [](RunConfig& c, const std::string& v) {
          if (v == "stub") {
            c.model.spatial.backbone.kind = BackboneKind::deterministic_stub;
          } else if (v == "pretrained") {
            c.model.spatial.backbone.kind = BackboneKind::pretrained_hierarchical_attention;
          } else {
            throw ConfigError("config", "model.backbone.kind: 'stub' or 'pretrained', got '" + v + "'");
          }
        });
    add("model.backbone.stages", "stub stage grids as HxWxC[,HxWxC...]",
        [](const RunConfig& c) { return stages_string(c.model.spatial.backbone.stage_dims); },
        [](RunConfig& c, const std::string& v) {
          c.model.spatial.backbone.stage_dims = parse_stages(v, "model.backbone.stages");
        });
    add("model.backbone.weights", "pretrained backbone tensor container",
        [](const RunConfig& c) { return c.model.spatial.backbone.weights_path; },
        [](RunConfig& c, const std::string& v) { c.model.spatial.backbone.weights_path = v; });
    add("model.backbone.seed", "stub projection seed",
        [](const RunConfig& c) { return std::to_string(c.model.spatial.backbone.stub_seed); },
        [](RunConfig& c, const std::string& v) {
          c.model.spatial.backbone.stub_seed = to_u64(v, "model.backbone.seed");
        });
    add("model.pool.tokens", "pooled tokens per stage (perfect square)",
        [](const RunConfig& c) { return std::to_string(c.model.spatial.pool_tokens); },
        [](RunConfig& c, const std::string& v) {
          c.model.spatial.pool_tokens = to_int(v, "model.pool.tokens");
        });
    add("model.pool.dim", "pooled token width",
        [](const RunConfig& c) { return std::to_string(c.model.spatial.pool_dim); },
        [](RunConfig& c, const std::string& v) { c.model.spatial.pool_dim = to_int(v, "model.pool.dim"); });
    add("model.fusion.layers", "spatial fusion encoder layers",
        [](const RunConfig& c) { return std::to_string(c.model.spatial.fusion_layers); },
        [](RunConfig& c, const std::string& v) {
          c.model.spatial.fusion_layers = to_int(v, "model.fusion.layers");
        });
    add("model.fusion.heads", "spatial fusion attention heads",
        [](const RunConfig& c) { return std::to_string(c.model.spatial.fusion_heads); },
        [](RunConfig& c, const std::string& v) {
          c.model.spatial.fusion_heads = to_int(v, "model.fusion.heads");
        });
    add("model.fusion.ff_mult", "spatial fusion feed-forward width multiplier",
        [](const RunConfig& c) { return std::to_string(c.model.spatial.fusion_ff_mult); },
        [](RunConfig& c, const std::string& v) {
          c.model.spatial.fusion_ff_mult = to_int(v, "model.fusion.ff_mult");
        });
    add("model.embed_dim", "frame/video embedding width",
        [](const RunConfig& c) { return std::to_string(c.model.spatial.embed_dim); },
        [](RunConfig& c, const std::string& v) {
          const int d2 = to_int(v, "model.embed_dim");
          c.model.spatial.embed_dim = d2;
          c.model.temporal.embed_dim = d2;
        });
    add("model.temporal.layers", "temporal encoder layers",
        [](const RunConfig& c) { return std::to_string(c.model.temporal.layers); },
        [](RunConfig& c, const std::string& v) { c.model.temporal.layers = to_int(v, "model.temporal.layers"); });
    add("model.temporal.heads", "temporal attention heads",
        [](const RunConfig& c) { return std::to_string(c.model.temporal.heads); },
        [](RunConfig& c, const std::string& v) { c.model.temporal.heads = to_int(v, "model.temporal.heads"); });
    add("model.temporal.ff_mult", "temporal feed-forward width multiplier",
        [](const RunConfig& c) { return std::to_string(c.model.temporal.ff_mult); },
        [](RunConfig& c, const std::string& v) {
          c.model.temporal.ff_mult = to_int(v, "model.temporal.ff_mult");
        });
    add("model.temporal.max_frames", "positional table length (max sequence)",
        [](const RunConfig& c) { return std::to_string(c.model.temporal.max_frames); },
        [](RunConfig& c, const std::string& v) {
          c.model.temporal.max_frames = to_int(v, "model.temporal.max_frames");
        });
    add("model.temporal.positional", "add learned positional encodings",
        [](const RunConfig& c) { return c.model.temporal.positional ? "true" : "false"; },
        [](RunConfig& c, const std::string& v) {
          c.model.temporal.positional = to_bool(v, "model.temporal.positional");
        });

    add("loss.tau", "contrastive temperature",
        [](const RunConfig& c) { return fmt(c.loss.tau); },
        [](RunConfig& c, const std::string& v) { c.loss.tau = to_double(v, "loss.tau"); });
    add("loss.p", "group proportion (p*batch_size must be integral)",
        [](const RunConfig& c) { return fmt(c.loss.p); },
        [](RunConfig& c, const std::string& v) { c.loss.p = to_double(v, "loss.p"); });
    add("loss.margin", "rank hinge margin; 'auto' = 5% of the label range",
        [](const RunConfig& c) { return c.margin_auto ? "auto" : fmt(c.loss.margin); },
        [](RunConfig& c, const std::string& v) {
          if (v == "auto") {
            c.margin_auto = true;
          } else {
            c.margin_auto = false;
            c.loss.margin = to_double(v, "loss.margin");
          }
        });
    add("loss.lambda1", "group contrastive weight",
        [](const RunConfig& c) { return fmt(c.loss.lambda1); },
        [](RunConfig& c, const std::string& v) { c.loss.lambda1 = to_double(v, "loss.lambda1"); });
    add("loss.lambda2", "rank loss weight",
        [](const RunConfig& c) { return fmt(c.loss.lambda2); },
        [](RunConfig& c, const std::string& v) { c.loss.lambda2 = to_double(v, "loss.lambda2"); });
    add("loss.gc_denominator", "opposing | literal",
        [](const RunConfig& c) {
          return c.loss.gc_denominator == GcDenominator::opposing ? "opposing" : "literal";
        },
        [](RunConfig& c, const std::string& v) {
          if (v == "opposing") {
            c.loss.gc_denominator = GcDenominator::opposing;
          } else if (v == "literal") {
            c.loss.gc_denominator = GcDenominator::literal;
          } else {
            throw ConfigError("config", "loss.gc_denominator: 'opposing' or 'literal', got '" + v + "'");
          }
        });
    add("loss.gc_level", "video | frame (which embeddings feed the contrastive term)",
        [](const RunConfig& c) { return c.loss.gc_level == GcLevel::video ? "video" : "frame"; },
        [](RunConfig& c, const std::string& v) {
          if (v == "video") {
            c.loss.gc_level = GcLevel::video;
          } else if (v == "frame") {
            c.loss.gc_level = GcLevel::frame;
          } else {
            throw ConfigError("config", "loss.gc_level: 'video' or 'frame', got '" + v + "'");
          }
        });

    add("train.batch_size", "videos per contrastive batch",
        [](const RunConfig& c) { return std::to_string(c.train.batch_size); },
        [](RunConfig& c, const std::string& v) { c.train.batch_size = to_int(v, "train.batch_size"); });
    add("train.lr0", "initial learning rate",
        [](const RunConfig& c) { return fmt(c.train.lr0); },
        [](RunConfig& c, const std::string& v) { c.train.lr0 = to_double(v, "train.lr0"); });
    add("train.lr_decay", "per-epoch exponential decay rate",
        [](const RunConfig& c) { return fmt(c.train.lr_decay); },
        [](RunConfig& c, const std::string& v) { c.train.lr_decay = to_double(v, "train.lr_decay"); });
    add("train.epochs", "training epochs",
        [](const RunConfig& c) { return std::to_string(c.train.epochs); },
        [](RunConfig& c, const std::string& v) { c.train.epochs = to_int(v, "train.epochs"); });
    add("train.seed", "batch composition / split seed",
        [](const RunConfig& c) { return std::to_string(c.train.seed); },
        [](RunConfig& c, const std::string& v) { c.train.seed = to_u64(v, "train.seed"); });
    add("train.eval_every", "evaluate every this many epochs",
        [](const RunConfig& c) { return std::to_string(c.train.eval_every); },
        [](RunConfig& c, const std::string& v) { c.train.eval_every = to_int(v, "train.eval_every"); });
    add("train.checkpoint_dir", "checkpoints and logs land here",
        [](const RunConfig& c) { return c.train.checkpoint_dir; },
        [](RunConfig& c, const std::string& v) { c.train.checkpoint_dir = v; });
    add("train.steps_per_epoch", "batches per epoch (0: records/batch_size)",
        [](const RunConfig& c) { return std::to_string(c.train.steps_per_epoch); },
        [](RunConfig& c, const std::string& v) {
          c.train.steps_per_epoch = to_int(v, "train.steps_per_epoch");
        });
    add("train.grad_clip", "global gradient norm ceiling",
        [](const RunConfig& c) { return fmt(c.train.grad_clip); },
        [](RunConfig& c, const std::string& v) { c.train.grad_clip = to_double(v, "train.grad_clip"); });
    add("train.grad_clip_enabled", "enable gradient clipping",
        [](const RunConfig& c) { return c.train.grad_clip_enabled ? "true" : "false"; },
        [](RunConfig& c, const std::string& v) {
          c.train.grad_clip_enabled = to_bool(v, "train.grad_clip_enabled");
        });
    add("train.plcc_logistic", "apply the 4-parameter logistic before PLCC",
        [](const RunConfig& c) { return c.train.plcc_logistic ? "true" : "false"; },
        [](RunConfig& c, const std::string& v) {
          c.train.plcc_logistic = to_bool(v, "train.plcc_logistic");
        });
    return d;
  }();
  return defs;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& def : schema()) {
    if (def.key == key) {
      def.set(cfg, value);
      return;
    }
  }
  throw ConfigError("config", "unknown key '" + key + "'");
}

void flatten_yaml(const YAML::Node& node, const std::string& prefix,
                  std::vector<std::pair<std::string, std::string>>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      flatten_yaml(kv.second, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else if (node.IsScalar()) {
    out.emplace_back(prefix, node.Scalar());
  } else if (node.IsNull()) {
    out.emplace_back(prefix, "");
  } else {
    throw ConfigError("config", "key '" + prefix + "': lists are not supported; use a scalar");
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!(data.split > 0.0 && data.split <= 1.0)) {
    throw ConfigError("config", "data.split must be in (0, 1]");
  }
  if (data.frame_count < 1) throw ConfigError("config", "data.frame_count must be >= 1");
  if (train.batch_size < 2) throw ConfigError("config", "train.batch_size must be >= 2");
  if (!(train.lr0 >= 0.0)) throw ConfigError("config", "train.lr0 must be >= 0 (0 is a null update)");
  if (!(train.lr_decay > 0.0 && train.lr_decay < 1.0)) {
    throw ConfigError("config", "train.lr_decay must be in (0, 1)");
  }
  if (train.epochs < 1) throw ConfigError("config", "train.epochs must be >= 1");
  if (train.eval_every < 1) throw ConfigError("config", "train.eval_every must be >= 1");
  if (train.steps_per_epoch < 0) throw ConfigError("config", "train.steps_per_epoch must be >= 0");
  const double pn = loss.p * train.batch_size;
  if (std::abs(pn - std::lround(pn)) > 1e-9) {
    throw ConfigError("config", "loss.p * train.batch_size must be integral");
  }
  if (data.frame_count > model.temporal.max_frames) {
    throw ConfigError("config", "data.frame_count exceeds model.temporal.max_frames");
  }
  model.validate();
  loss.validate();
}

double RunConfig::resolve_margin(double label_range) const {
  return margin_auto ? 0.05 * label_range : loss.margin;
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("config", "override '" + kv + "' is not key=value");
    }
    set_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw ConfigError("config", "cannot open " + path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError("config", path.string() + ": " + e.what());
  }

  RunConfig cfg;
  std::vector<std::pair<std::string, std::string>> entries;
  flatten_yaml(root, "", entries);
  for (const auto& [key, value] : entries) set_key(cfg, key, value);
  apply_overrides(cfg, overrides);
  cfg.validate();
  return cfg;
}

std::string config_help() {
  std::ostringstream os;
  const RunConfig defaults;
  for (const auto& def : schema()) {
    std::string d = def.get(defaults);
    if (d.empty()) d = "<empty>";
    os << "  " << def.key << " (default: " << d << ")\n      " << def.desc << "\n";
  }
  return os.str();
}

std::vector<std::pair<std::string, std::string>> config_snapshot(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& def : schema()) out.emplace_back(def.key, def.get(cfg));
  return out;
}

RunConfig config_from_snapshot(const std::vector<std::pair<std::string, std::string>>& entries) {
  RunConfig cfg;
  for (const auto& [key, value] : entries) set_key(cfg, key, value);
  cfg.validate();
  return cfg;
}

}  // namespace vqa
