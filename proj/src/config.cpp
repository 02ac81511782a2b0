#include "pairfeat/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pairfeat {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for " + where + ": " + v);
}

double parse_double(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + where + ": " + v);
  }
}

int parse_int(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(d);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + where + ": " + v);
  }
}

uint64_t parse_u64(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<uint64_t>(d);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad seed for " + where + ": " + v);
  }
}

/// "32:2,64:2,128:2" -> stage list; empty string -> empty (defaults apply)
std::vector<StageSpec> parse_stages(const std::string& v, const std::string& where) {
  std::vector<StageSpec> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("config: bad stage '" + item + "' for " + where +
                                  " (want channels:scale)");
    StageSpec s;
    s.channels = parse_int(trim(item.substr(0, colon)), where);
    s.scale = parse_int(trim(item.substr(colon + 1)), where);
    out.push_back(s);
  }
  return out;
}

std::string stages_to_string(const std::vector<StageSpec>& stages) {
  std::string out;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(stages[i].channels) + ":" + std::to_string(stages[i].scale);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void apply_kv(RunConfig& c, const std::string& sec, const std::string& key,
              const std::string& val) {
  const std::string where = sec + "." + key;
  if (sec == "frontend") {
    auto& f = c.frontend;
    if (key == "frame_seconds") f.frame_seconds = parse_double(val, where);
    else if (key == "hop_fraction") f.hop_fraction = parse_double(val, where);
    else if (key == "sample_rate") f.sample_rate = parse_int(val, where);
    else if (key == "stft_window") f.stft_window = parse_int(val, where);
    else if (key == "stft_hop") f.stft_hop = parse_int(val, where);
    else if (key == "mel_bins") f.mel_bins = parse_int(val, where);
    else if (key == "log_floor") f.log_floor = parse_double(val, where);
    else throw std::invalid_argument("config: unknown key " + where);
  } else if (sec == "model") {
    auto& m = c.model;
    if (key == "code_channels") m.code_channels = parse_int(val, where);
    else if (key == "encoder") m.encoder = parse_stages(val, where);
    else if (key == "decoder") m.decoder = parse_stages(val, where);
    else if (key == "kernel_size") m.kernel_size = parse_int(val, where);
    else if (key == "decoder_recurrent") m.decoder_recurrent = parse_bool(val, where);
    else if (key == "init_seed") m.init_seed = parse_u64(val, where);
    else throw std::invalid_argument("config: unknown key " + where);
  } else if (sec == "pair_loss") {
    auto& p = c.training.pair;
    if (key == "threshold") p.threshold = parse_double(val, where);
    else if (key == "margin") p.margin = parse_double(val, where);
    else if (key == "kl_epsilon") p.kl_epsilon = parse_double(val, where);
    else if (key == "lambda") p.lambda = parse_double(val, where);
    else if (key == "exclude_diagonal_in_mean")
      p.exclude_diagonal_in_mean = parse_bool(val, where);
    else throw std::invalid_argument("config: unknown key " + where);
  } else if (sec == "training") {
    auto& t = c.training;
    if (key == "batch_size") t.batch_size = parse_int(val, where);
    else if (key == "stage1_epochs") t.stage1_epochs = parse_int(val, where);
    else if (key == "stage2_epochs") t.stage2_epochs = parse_int(val, where);
    else if (key == "baseline_epochs") t.baseline_epochs = parse_int(val, where);
    else if (key == "learning_rate") t.learning_rate = parse_double(val, where);
    else if (key == "adam_beta1") t.adam_beta1 = parse_double(val, where);
    else if (key == "adam_beta2") t.adam_beta2 = parse_double(val, where);
    else if (key == "adam_epsilon") t.adam_epsilon = parse_double(val, where);
    else if (key == "seed") t.seed = parse_u64(val, where);
    else if (key == "reset_optimizer_stage2")
      t.reset_optimizer_stage2 = parse_bool(val, where);
    else throw std::invalid_argument("config: unknown key " + where);
  } else if (sec == "evaluation") {
    auto& e = c.eval;
    if (key == "test_fraction") e.test_fraction = parse_double(val, where);
    else if (key == "perplexity") e.perplexity = parse_double(val, where);
    else if (key == "tsne_iters") e.tsne_iters = parse_int(val, where);
    else if (key == "tsne_learning_rate") e.tsne_learning_rate = parse_double(val, where);
    else if (key == "clusters") e.clusters = parse_int(val, where);
    else if (key == "kmeans_restarts") e.kmeans_restarts = parse_int(val, where);
    else if (key == "classifier_iters") e.classifier_iters = parse_int(val, where);
    else if (key == "classifier_lr") e.classifier_lr = parse_double(val, where);
    else if (key == "classify_pooled") e.classify_pooled = parse_bool(val, where);
    else if (key == "cluster_on_features") e.cluster_on_features = parse_bool(val, where);
    else throw std::invalid_argument("config: unknown key " + where);
  } else {
    throw std::invalid_argument("config: unknown section [" + sec + "]");
  }
}

}  // namespace

void EvalConfig::validate() const {
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw std::invalid_argument("evaluation: test_fraction must be in (0, 1)");
  if (perplexity <= 0) throw std::invalid_argument("evaluation: perplexity must be > 0");
  if (tsne_iters < 1) throw std::invalid_argument("evaluation: tsne_iters must be >= 1");
  if (clusters < 0) throw std::invalid_argument("evaluation: clusters must be >= 0");
  if (kmeans_restarts < 1)
    throw std::invalid_argument("evaluation: kmeans_restarts must be >= 1");
  if (classifier_iters < 1)
    throw std::invalid_argument("evaluation: classifier_iters must be >= 1");
  if (classifier_lr <= 0)
    throw std::invalid_argument("evaluation: classifier_lr must be > 0");
}

void RunConfig::validate() const {
  frontend.validate();
  model.resolved();  // throws on inconsistency
  training.validate();
  eval.validate();
}

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: bad section header on line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value on line " +
                                  std::to_string(lineno));
    if (section.empty())
      throw std::invalid_argument("config: key outside any section on line " +
                                  std::to_string(lineno));
    apply_kv(c, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str());
}

std::string serialize_run_config(const RunConfig& c) {
  std::string s;
  s += "[frontend]\n";
  s += "frame_seconds = " + fmt(c.frontend.frame_seconds) + "\n";
  s += "hop_fraction = " + fmt(c.frontend.hop_fraction) + "\n";
  s += "sample_rate = " + std::to_string(c.frontend.sample_rate) + "\n";
  s += "stft_window = " + std::to_string(c.frontend.stft_window) + "\n";
  s += "stft_hop = " + std::to_string(c.frontend.stft_hop) + "\n";
  s += "mel_bins = " + std::to_string(c.frontend.mel_bins) + "\n";
  s += "log_floor = " + fmt(c.frontend.log_floor) + "\n";
  s += "\n[model]\n";
  s += "code_channels = " + std::to_string(c.model.code_channels) + "\n";
  s += "encoder = " + stages_to_string(c.model.encoder) + "\n";
  s += "decoder = " + stages_to_string(c.model.decoder) + "\n";
  s += "kernel_size = " + std::to_string(c.model.kernel_size) + "\n";
  s += std::string("decoder_recurrent = ") +
       (c.model.decoder_recurrent ? "true" : "false") + "\n";
  s += "init_seed = " + std::to_string(c.model.init_seed) + "\n";
  s += "\n[pair_loss]\n";
  s += "threshold = " + fmt(c.training.pair.threshold) + "\n";
  s += "margin = " + fmt(c.training.pair.margin) + "\n";
  s += "kl_epsilon = " + fmt(c.training.pair.kl_epsilon) + "\n";
  s += "lambda = " + fmt(c.training.pair.lambda) + "\n";
  s += std::string("exclude_diagonal_in_mean = ") +
       (c.training.pair.exclude_diagonal_in_mean ? "true" : "false") + "\n";
  s += "\n[training]\n";
  s += "batch_size = " + std::to_string(c.training.batch_size) + "\n";
  s += "stage1_epochs = " + std::to_string(c.training.stage1_epochs) + "\n";
  s += "stage2_epochs = " + std::to_string(c.training.stage2_epochs) + "\n";
  s += "baseline_epochs = " + std::to_string(c.training.baseline_epochs) + "\n";
  s += "learning_rate = " + fmt(c.training.learning_rate) + "\n";
  s += "adam_beta1 = " + fmt(c.training.adam_beta1) + "\n";
  s += "adam_beta2 = " + fmt(c.training.adam_beta2) + "\n";
  s += "adam_epsilon = " + fmt(c.training.adam_epsilon) + "\n";
  s += "seed = " + std::to_string(c.training.seed) + "\n";
  s += std::string("reset_optimizer_stage2 = ") +
       (c.training.reset_optimizer_stage2 ? "true" : "false") + "\n";
  s += "\n[evaluation]\n";
  s += "test_fraction = " + fmt(c.eval.test_fraction) + "\n";
  s += "perplexity = " + fmt(c.eval.perplexity) + "\n";
  s += "tsne_iters = " + std::to_string(c.eval.tsne_iters) + "\n";
  s += "tsne_learning_rate = " + fmt(c.eval.tsne_learning_rate) + "\n";
  s += "clusters = " + std::to_string(c.eval.clusters) + "\n";
  s += "kmeans_restarts = " + std::to_string(c.eval.kmeans_restarts) + "\n";
  s += "classifier_iters = " + std::to_string(c.eval.classifier_iters) + "\n";
  s += "classifier_lr = " + fmt(c.eval.classifier_lr) + "\n";
  s += std::string("classify_pooled = ") +
       (c.eval.classify_pooled ? "true" : "false") + "\n";
  s += std::string("cluster_on_features = ") +
       (c.eval.cluster_on_features ? "true" : "false") + "\n";
  return s;
}

std::string config_hash(const RunConfig& config) {
  const std::string text = serialize_run_config(config);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : text) h = (h ^ static_cast<uint8_t>(ch)) * 0x100000001b3ULL;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ------------------------------------------------------------------ JSON

using nlohmann::json;

void to_json(json& j, const FrontendConfig& c) {
  j = json{{"frame_seconds", c.frame_seconds}, {"hop_fraction", c.hop_fraction},
           {"sample_rate", c.sample_rate},     {"stft_window", c.stft_window},
           {"stft_hop", c.stft_hop},           {"mel_bins", c.mel_bins},
           {"log_floor", c.log_floor}};
}
void from_json(const json& j, FrontendConfig& c) {
  j.at("frame_seconds").get_to(c.frame_seconds);
  j.at("hop_fraction").get_to(c.hop_fraction);
  j.at("sample_rate").get_to(c.sample_rate);
  j.at("stft_window").get_to(c.stft_window);
  j.at("stft_hop").get_to(c.stft_hop);
  j.at("mel_bins").get_to(c.mel_bins);
  j.at("log_floor").get_to(c.log_floor);
}

void to_json(json& j, const ModelConfig& c) {
  json enc = json::array(), dec = json::array();
  for (const auto& s : c.encoder) enc.push_back({s.channels, s.scale});
  for (const auto& s : c.decoder) dec.push_back({s.channels, s.scale});
  j = json{{"code_channels", c.code_channels},
           {"encoder", enc},
           {"decoder", dec},
           {"input_time", c.input_time},
           {"input_mel", c.input_mel},
           {"kernel_size", c.kernel_size},
           {"decoder_recurrent", c.decoder_recurrent},
           {"init_seed", c.init_seed}};
}
void from_json(const json& j, ModelConfig& c) {
  j.at("code_channels").get_to(c.code_channels);
  c.encoder.clear();
  for (const auto& s : j.at("encoder"))
    c.encoder.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
  c.decoder.clear();
  for (const auto& s : j.at("decoder"))
    c.decoder.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
  j.at("input_time").get_to(c.input_time);
  j.at("input_mel").get_to(c.input_mel);
  j.at("kernel_size").get_to(c.kernel_size);
  j.at("decoder_recurrent").get_to(c.decoder_recurrent);
  j.at("init_seed").get_to(c.init_seed);
}

void to_json(json& j, const PairLossConfig& c) {
  j = json{{"threshold", c.threshold},
           {"margin", c.margin},
           {"kl_epsilon", c.kl_epsilon},
           {"lambda", c.lambda},
           {"exclude_diagonal_in_mean", c.exclude_diagonal_in_mean}};
}
void from_json(const json& j, PairLossConfig& c) {
  j.at("threshold").get_to(c.threshold);
  j.at("margin").get_to(c.margin);
  j.at("kl_epsilon").get_to(c.kl_epsilon);
  j.at("lambda").get_to(c.lambda);
  j.at("exclude_diagonal_in_mean").get_to(c.exclude_diagonal_in_mean);
}

void to_json(json& j, const TrainingConfig& c) {
  j = json{{"batch_size", c.batch_size},
           {"stage1_epochs", c.stage1_epochs},
           {"stage2_epochs", c.stage2_epochs},
           {"baseline_epochs", c.baseline_epochs},
           {"learning_rate", c.learning_rate},
           {"adam_beta1", c.adam_beta1},
           {"adam_beta2", c.adam_beta2},
           {"adam_epsilon", c.adam_epsilon},
           {"seed", c.seed},
           {"reset_optimizer_stage2", c.reset_optimizer_stage2},
           {"pair_loss", c.pair}};
}
void from_json(const json& j, TrainingConfig& c) {
  j.at("batch_size").get_to(c.batch_size);
  j.at("stage1_epochs").get_to(c.stage1_epochs);
  j.at("stage2_epochs").get_to(c.stage2_epochs);
  j.at("baseline_epochs").get_to(c.baseline_epochs);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("adam_beta1").get_to(c.adam_beta1);
  j.at("adam_beta2").get_to(c.adam_beta2);
  j.at("adam_epsilon").get_to(c.adam_epsilon);
  j.at("seed").get_to(c.seed);
  j.at("reset_optimizer_stage2").get_to(c.reset_optimizer_stage2);
  j.at("pair_loss").get_to(c.pair);
}

void to_json(json& j, const EvalConfig& c) {
  j = json{{"test_fraction", c.test_fraction},
           {"perplexity", c.perplexity},
           {"tsne_iters", c.tsne_iters},
           {"tsne_learning_rate", c.tsne_learning_rate},
           {"clusters", c.clusters},
           {"kmeans_restarts", c.kmeans_restarts},
           {"classifier_iters", c.classifier_iters},
           {"classifier_lr", c.classifier_lr},
           {"classify_pooled", c.classify_pooled},
           {"cluster_on_features", c.cluster_on_features}};
}
void from_json(const json& j, EvalConfig& c) {
  j.at("test_fraction").get_to(c.test_fraction);
  j.at("perplexity").get_to(c.perplexity);
  j.at("tsne_iters").get_to(c.tsne_iters);
  j.at("tsne_learning_rate").get_to(c.tsne_learning_rate);
  j.at("clusters").get_to(c.clusters);
  j.at("kmeans_restarts").get_to(c.kmeans_restarts);
  j.at("classifier_iters").get_to(c.classifier_iters);
  j.at("classifier_lr").get_to(c.classifier_lr);
  j.at("classify_pooled").get_to(c.classify_pooled);
  j.at("cluster_on_features").get_to(c.cluster_on_features);
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"frontend", c.frontend},
           {"model", c.model},
           {"training", c.training},
           {"evaluation", c.eval}};
}
void from_json(const json& j, RunConfig& c) {
  j.at("frontend").get_to(c.frontend);
  j.at("model").get_to(c.model);
  j.at("training").get_to(c.training);
  j.at("evaluation").get_to(c.eval);
}

void to_json(json& j, const NormParams& p) {
  j = json{{"mean", p.mean}, {"std", p.std}};
}
void from_json(const json& j, NormParams& p) {
  j.at("mean").get_to(p.mean);
  j.at("std").get_to(p.std);
}

}  // namespace pairfeat
