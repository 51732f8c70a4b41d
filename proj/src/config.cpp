#include "wgsum/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "wgsum/numerics/checkpoint.hpp"

namespace wgsum {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
  }
}

bool to_onoff(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected on|off, got '" + v + "'");
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(Variant v) { return v == Variant::Lstm ? "lstm" : "transformer"; }

std::string to_string(GnnKind g) {
  switch (g) {
    case GnnKind::Gcn: return "gcn";
    case GnnKind::Gat: return "gat";
    case GnnKind::Off: return "off";
  }
  return "off";
}

void ModelConfig::validate() const {
  auto positive = [](const char* name, int v) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive("embedding_dim", embedding_dim);
  positive("encoder_hidden", encoder_hidden);
  positive("encoder_layers", encoder_layers);
  positive("decoder_hidden", decoder_hidden);
  positive("model_dim", model_dim);
  positive("ff_dim", ff_dim);
  positive("heads", heads);
  positive("transformer_layers", transformer_layers);
  positive("graph_hidden", graph_hidden);
  positive("graph_layers", graph_layers);
  if (variant == Variant::Transformer && model_dim % heads != 0) {
    throw ConfigError("model_dim must be divisible by heads");
  }
}

void TrainConfig::validate() const {
  model.validate();
  if (!(learning_rate >= 0.0)) throw ConfigError("lr must be non-negative");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (max_findings <= 0 || max_impression <= 0) throw ConfigError("length limits must be positive");
  if (max_decode_length <= 0) throw ConfigError("max_decode_length must be positive");
  if (beam_width <= 0) throw ConfigError("beam_width must be positive");
  if (min_count <= 0) throw ConfigError("min_count must be positive");
}

void set_config_value(TrainConfig& c, const std::string& key, const std::string& value) {
  ModelConfig& m = c.model;
  const std::string& v = value;
  if (key == "variant") {
    if (v == "lstm") m.variant = Variant::Lstm;
    else if (v == "transformer") m.variant = Variant::Transformer;
    else throw ConfigError("variant must be lstm|transformer, got '" + v + "'");
  } else if (key == "gnn") {
    if (v == "gcn") m.gnn = GnnKind::Gcn;
    else if (v == "gat") m.gnn = GnnKind::Gat;
    else if (v == "off") m.gnn = GnnKind::Off;
    else throw ConfigError("gnn must be gcn|gat|off, got '" + v + "'");
  } else if (key == "copy") {
    m.copy = to_onoff(key, v);
  } else if (key == "edge_types") {
    try {
      m.edge_types = EdgeTypeSet::parse(v);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string("edge_types: ") + ex.what());
    }
  } else if (key == "embedding_dim") {
    m.embedding_dim = to_int(key, v);
  } else if (key == "encoder_hidden") {
    m.encoder_hidden = to_int(key, v);
  } else if (key == "encoder_layers") {
    m.encoder_layers = to_int(key, v);
  } else if (key == "decoder_hidden") {
    m.decoder_hidden = to_int(key, v);
  } else if (key == "model_dim") {
    m.model_dim = to_int(key, v);
  } else if (key == "ff_dim") {
    m.ff_dim = to_int(key, v);
  } else if (key == "heads") {
    m.heads = to_int(key, v);
  } else if (key == "transformer_layers") {
    m.transformer_layers = to_int(key, v);
  } else if (key == "graph_hidden") {
    m.graph_hidden = to_int(key, v);
  } else if (key == "graph_layers") {
    m.graph_layers = to_int(key, v);
  } else if (key == "gat_negative_slope") {
    m.gat_negative_slope = to_double(key, v);
  } else if (key == "guidance_key") {
    if (v == "cell") m.guidance_key = GuidanceKey::Cell;
    else if (v == "hidden") m.guidance_key = GuidanceKey::Hidden;
    else throw ConfigError("guidance_key must be cell|hidden, got '" + v + "'");
  } else if (key == "update_source") {
    if (v == "guidance") m.update_source = UpdateSource::Guidance;
    else if (v == "graph_mean") m.update_source = UpdateSource::GraphMean;
    else throw ConfigError("update_source must be guidance|graph_mean, got '" + v + "'");
  } else if (key == "scale_guidance") {
    m.scale_guidance = to_onoff(key, v);
  } else if (key == "lr") {
    c.learning_rate = to_double(key, v);
  } else if (key == "batch_size") {
    c.batch_size = to_int(key, v);
  } else if (key == "epochs") {
    c.epochs = to_int(key, v);
  } else if (key == "seed") {
    c.seed = to_u64(key, v);
  } else if (key == "dropout") {
    c.dropout = to_double(key, v);
  } else if (key == "clip_norm") {
    c.clip_norm = to_double(key, v);
  } else if (key == "min_count") {
    c.min_count = to_int(key, v);
  } else if (key == "max_findings") {
    c.max_findings = to_int(key, v);
  } else if (key == "max_impression") {
    c.max_impression = to_int(key, v);
  } else if (key == "max_decode_length") {
    c.max_decode_length = to_int(key, v);
  } else if (key == "decode") {
    if (v == "greedy") c.decode_mode = DecodeMode::Greedy;
    else if (v == "beam") c.decode_mode = DecodeMode::Beam;
    else throw ConfigError("decode must be greedy|beam, got '" + v + "'");
  } else if (key == "beam_width") {
    c.beam_width = to_int(key, v);
  } else if (key == "train") {
    c.train_path = v;
  } else if (key == "valid") {
    c.valid_path = v;
  } else if (key == "test") {
    c.test_path = v;
  } else if (key == "ablation_seeds") {
    c.ablation_seeds.clear();
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      if (!part.empty()) c.ablation_seeds.push_back(to_u64(key, part));
    }
    if (c.ablation_seeds.empty()) throw ConfigError("ablation_seeds must not be empty");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

TrainConfig parse_config(const std::string& text) {
  TrainConfig c;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const TrainConfig& c) {
  const ModelConfig& m = c.model;
  std::ostringstream os;
  os << "variant = " << to_string(m.variant) << '\n'
     << "gnn = " << to_string(m.gnn) << '\n'
     << "copy = " << (m.copy ? "on" : "off") << '\n'
     << "edge_types = " << m.edge_types.to_string() << '\n'
     << "embedding_dim = " << m.embedding_dim << '\n'
     << "encoder_hidden = " << m.encoder_hidden << '\n'
     << "encoder_layers = " << m.encoder_layers << '\n'
     << "decoder_hidden = " << m.decoder_hidden << '\n'
     << "model_dim = " << m.model_dim << '\n'
     << "ff_dim = " << m.ff_dim << '\n'
     << "heads = " << m.heads << '\n'
     << "transformer_layers = " << m.transformer_layers << '\n'
     << "graph_hidden = " << m.graph_hidden << '\n'
     << "graph_layers = " << m.graph_layers << '\n'
     << "gat_negative_slope = " << fmt_double(m.gat_negative_slope) << '\n'
     << "guidance_key = " << (m.guidance_key == GuidanceKey::Cell ? "cell" : "hidden") << '\n'
     << "update_source = "
     << (m.update_source == UpdateSource::Guidance ? "guidance" : "graph_mean") << '\n'
     << "scale_guidance = " << (m.scale_guidance ? "on" : "off") << '\n'
     << "lr = " << fmt_double(c.learning_rate) << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "epochs = " << c.epochs << '\n'
     << "seed = " << c.seed << '\n'
     << "dropout = " << fmt_double(c.dropout) << '\n'
     << "clip_norm = " << fmt_double(c.clip_norm) << '\n'
     << "min_count = " << c.min_count << '\n'
     << "max_findings = " << c.max_findings << '\n'
     << "max_impression = " << c.max_impression << '\n'
     << "max_decode_length = " << c.max_decode_length << '\n'
     << "decode = " << (c.decode_mode == DecodeMode::Greedy ? "greedy" : "beam") << '\n'
     << "beam_width = " << c.beam_width << '\n';
  if (!c.train_path.empty()) os << "train = " << c.train_path << '\n';
  if (!c.valid_path.empty()) os << "valid = " << c.valid_path << '\n';
  if (!c.test_path.empty()) os << "test = " << c.test_path << '\n';
  os << "ablation_seeds = ";
  for (std::size_t i = 0; i < c.ablation_seeds.size(); ++i) {
    if (i) os << ',';
    os << c.ablation_seeds[i];
  }
  os << '\n';
  return os.str();
}

std::uint64_t architecture_hash(const ModelConfig& m) {
  std::ostringstream os;
  os << to_string(m.variant) << '|' << to_string(m.gnn) << '|' << m.copy << '|'
     << m.edge_types.to_string() << '|';
  if (m.variant == Variant::Lstm) {
    os << m.embedding_dim << '|' << m.encoder_hidden << '|' << m.encoder_layers << '|'
       << m.decoder_hidden << '|' << m.graph_hidden << '|' << static_cast<int>(m.guidance_key);
  } else {
    os << m.model_dim << '|' << m.ff_dim << '|' << m.heads << '|' << m.transformer_layers << '|'
       << m.scale_guidance;
  }
  os << '|' << m.graph_layers << '|' << fmt_double(m.gat_negative_slope) << '|'
     << static_cast<int>(m.update_source);
  return fnv1a64(os.str());
}

}  // namespace wgsum
