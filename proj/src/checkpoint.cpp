#include "vqa/checkpoint.hpp"

#include <string>

#include "vqa/errors.hpp"
#include "vqa/tensorfile.hpp"

namespace vqa {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const VqaModel& model, const Adam* optimizer,
                     const TrainState& state, const RunConfig& cfg) {
  tensorfile::Contents out;
  const std::string arch = model.config().arch_string();
  out.meta["kind"] = "checkpoint";
  out.meta["arch"] = arch;
  out.meta["arch_hash"] = fnv1a64(arch);
  out.meta["backbone"] = model.spatial().backbone().identifier();
  out.meta["state"] = {{"epoch", state.epoch},
                       {"step", state.step},
                       {"lr", state.lr},
                       {"best_srocc", state.best_srocc},
                       {"batch_seed", state.batch_seed}};
  auto& snap = out.meta["config"] = nlohmann::json::object();
  for (const auto& [key, value] : config_snapshot(cfg)) snap[key] = value;

  const auto& store = model.params();
  for (const auto& name : store.names()) out.tensors.emplace_back("param/" + name, store.at(name));
  if (optimizer) {
    out.meta["adam_step"] = optimizer->step_count();
    for (const auto& [name, m] : optimizer->first_moments()) {
      out.tensors.emplace_back("adam/m/" + name, m);
    }
    for (const auto& [name, v] : optimizer->second_moments()) {
      out.tensors.emplace_back("adam/v/" + name, v);
    }
  }
  tensorfile::save(path, out);
}

TrainState load_checkpoint(const std::filesystem::path& path, VqaModel& model, Adam* optimizer) {
  const auto file = tensorfile::load(path);
  if (file.meta.value("kind", "") != std::string("checkpoint")) {
    throw IntegrityError("checkpoint", path.string() + ": not a checkpoint container");
  }
  const std::string arch = file.meta.value("arch", "");
  const std::string want = model.config().arch_string();
  if (arch != want) {
    throw CompatibilityError("checkpoint", path.string() + ": architecture mismatch\n  checkpoint: " +
                                               arch + "\n  model:      " + want);
  }

  auto& store = model.params();
  for (const auto& name : store.names()) {
    const auto& tensor = file.require("param/" + name);
    auto& value = store.at(name);
    if (tensor.rows() != value.rows() || tensor.cols() != value.cols()) {
      throw IntegrityError("checkpoint", path.string() + ": shape mismatch for '" + name + "'");
    }
    value = tensor;
  }

  if (optimizer && file.meta.contains("adam_step")) {
    optimizer->set_step_count(file.meta["adam_step"].get<long>());
    for (const auto& name : store.names()) {
      if (const auto* m = file.find("adam/m/" + name)) optimizer->first_moments()[name] = *m;
      if (const auto* v = file.find("adam/v/" + name)) optimizer->second_moments()[name] = *v;
    }
  }

  TrainState state;
  if (file.meta.contains("state")) {
    const auto& s = file.meta["state"];
    state.epoch = s.value("epoch", 0);
    state.step = s.value("step", 0L);
    state.lr = s.value("lr", 0.0);
    state.best_srocc = s.value("best_srocc", -2.0);
    state.batch_seed = s.value("batch_seed", 0ULL);
  }
  return state;
}

ScoringBundle load_for_scoring(const std::filesystem::path& path) {
  const auto file = tensorfile::load(path);
  if (file.meta.value("kind", "") != std::string("checkpoint")) {
    throw IntegrityError("checkpoint", path.string() + ": not a checkpoint container");
  }
  if (!file.meta.contains("config")) {
    throw IntegrityError("checkpoint", path.string() + ": missing config snapshot");
  }
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& [key, value] : file.meta["config"].items()) {
    entries.emplace_back(key, value.get<std::string>());
  }

  ScoringBundle bundle;
  bundle.cfg = config_from_snapshot(entries);
  bundle.model = std::make_unique<VqaModel>(bundle.cfg.model);
  bundle.state = load_checkpoint(path, *bundle.model, nullptr);
  return bundle;
}

}  // namespace vqa
