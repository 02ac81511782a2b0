#include "pairfeat/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pairfeat {

namespace {

using nlohmann::json;

constexpr uint32_t kVersion = 1;

void put_u32(std::ofstream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF),
               static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

void put_u64(std::ofstream& out, uint64_t v) {
  put_u32(out, static_cast<uint32_t>(v & 0xFFFFFFFFULL));
  put_u32(out, static_cast<uint32_t>(v >> 32));
}

uint32_t get_u32(std::ifstream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::ifstream& in) {
  const uint64_t lo = get_u32(in);
  const uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

void write_tensor(std::ofstream& out, const std::string& name, const Tensor& t) {
  put_u32(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, static_cast<uint32_t>(t.ndim()));
  for (int i = 0; i < t.ndim(); ++i) put_u64(out, static_cast<uint64_t>(t.dim(i)));
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

json trainer_state_to_json(const TrainerState& s) {
  json log = json::array();
  for (const auto& r : s.log.records)
    log.push_back({{"epoch", r.epoch},
                   {"stage", r.stage},
                   {"mse", r.mse},
                   {"pair_loss", r.pair_loss},
                   {"seconds", r.seconds}});
  return json{{"mode", s.mode},
              {"epochs_done", s.epochs_done},
              {"steps", s.steps},
              {"adam_t", s.adam_t},
              {"config", s.config},
              {"log", log}};
}

TrainerState trainer_state_from_json(const json& j) {
  TrainerState s;
  j.at("mode").get_to(s.mode);
  j.at("epochs_done").get_to(s.epochs_done);
  j.at("steps").get_to(s.steps);
  j.at("adam_t").get_to(s.adam_t);
  j.at("config").get_to(s.config);
  for (const auto& r : j.at("log")) {
    EpochRecord rec;
    r.at("epoch").get_to(rec.epoch);
    r.at("stage").get_to(rec.stage);
    r.at("mse").get_to(rec.mse);
    r.at("pair_loss").get_to(rec.pair_loss);
    r.at("seconds").get_to(rec.seconds);
    s.log.records.push_back(std::move(rec));
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, FramePredictor& model,
                     const FrontendConfig& frontend, const NormParams& norm,
                     const TrainerState* trainer_state, Adam* optimizer) {
  json header{{"model", model.config()},
              {"frontend", frontend},
              {"norm", norm},
              {"trainer", nullptr}};
  if (trainer_state) header["trainer"] = trainer_state_to_json(*trainer_state);
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write("PFCK", 4);
  put_u32(out, kVersion);
  put_u64(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (const auto& p : model.parameters()) tensors.emplace_back(p.name, p.value);
  for (const auto& p : model.buffers()) tensors.emplace_back(p.name, p.value);
  if (optimizer) {
    for (const auto& [name, t] : optimizer->m())
      tensors.emplace_back("adam.m." + name, &t);
    for (const auto& [name, t] : optimizer->v())
      tensors.emplace_back("adam.v." + name, &t);
  }
  put_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) write_tensor(out, name, *t);
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PFCK", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const uint32_t version = get_u32(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  const uint64_t hlen = get_u64(in);
  std::string header_text(hlen, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("checkpoint: truncated header in " + path);

  Checkpoint ckpt;
  json header;
  try {
    header = json::parse(header_text);
    header.at("model").get_to(ckpt.model_config);
    header.at("frontend").get_to(ckpt.frontend_config);
    header.at("norm").get_to(ckpt.norm);
    if (!header.at("trainer").is_null())
      ckpt.trainer = trainer_state_from_json(header.at("trainer"));
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: corrupt header in " + path + ": " + e.what());
  }

  const uint32_t n_tensors = get_u32(in);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    const uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t ndim = get_u32(in);
    if (!in || ndim > 8)
      throw std::runtime_error("checkpoint: corrupt tensor record in " + path);
    std::vector<int64_t> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d)
      shape[d] = static_cast<int64_t>(get_u64(in));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor data in " + path);
    ckpt.tensors.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

void load_weights_into(FramePredictor& model, const Checkpoint& ckpt) {
  if (!(ckpt.model_config.resolved() == model.config()))
    throw std::runtime_error(
        "checkpoint: model config mismatch (stored code_channels " +
        std::to_string(ckpt.model_config.code_channels) + ", model has " +
        std::to_string(model.config().code_channels) + ")");
  auto restore = [&](const std::vector<ParamRef>& refs) {
    for (const auto& p : refs) {
      const auto it = ckpt.tensors.find(p.name);
      if (it == ckpt.tensors.end())
        throw std::runtime_error("checkpoint: missing tensor " + p.name);
      if (!(it->second.shape() == p.value->shape()))
        throw std::runtime_error("checkpoint: shape mismatch for " + p.name);
      *p.value = it->second;
    }
  };
  restore(model.parameters());
  restore(model.buffers());
}

void load_weights_into(FramePredictor& model, const std::string& path) {
  load_weights_into(model, read_checkpoint(path));
}

FramePredictor load_model(const Checkpoint& ckpt) {
  FramePredictor model(ckpt.model_config);
  load_weights_into(model, ckpt);
  return model;
}

void restore_optimizer(Adam& optimizer, const Checkpoint& ckpt) {
  if (!ckpt.trainer)
    throw std::runtime_error("checkpoint: no trainer state to restore");
  optimizer.set_t(ckpt.trainer->adam_t);
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.rfind("adam.m.", 0) == 0) optimizer.m()[name.substr(7)] = t;
    else if (name.rfind("adam.v.", 0) == 0) optimizer.v()[name.substr(7)] = t;
  }
}

}  // namespace pairfeat
