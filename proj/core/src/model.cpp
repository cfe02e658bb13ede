#include "dlva/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "json.hpp"

#include "dlva/error.hpp"

namespace dlva {

namespace {
constexpr char kMagic[4] = {'D', 'L', 'V', 'A'};
constexpr uint16_t kFormatVersion = 1;
}  // namespace

VulnerabilityModel VulnerabilityModel::random_init(const std::string& vulnerability,
                                                   SizeClass size_class, const GridConfig& arch,
                                                   uint64_t seed) {
  VulnerabilityModel m;
  m.vulnerability = vulnerability;
  m.size_class = size_class;
  m.arch = arch;
  m.seed = seed;
  m.vocab = TokenVocab::standard();
  Rng rng(seed);
  Rng enc_rng = rng.split(1);
  Rng sc2v_rng = rng.split(2);
  Rng cc_rng = rng.split(3);
  m.encoder = DanEncoder::random_init(m.vocab.size(), enc_rng);
  m.encoder_ref = "seed:" + std::to_string(seed);
  m.sc2v = Sc2vNet::random_init(arch.sc2v_config(size_class), sc2v_rng);
  m.cc = CoreClassifier::random_init(m.sc2v.cfg.embedding_dim(), arch.dense_hidden_sizes(),
                                     cc_rng);
  return m;
}

float VulnerabilityModel::predict_from_nodes(const ControlFlowGraph& cfg, const Tensor& nodes) {
  ContractEmbedding e = embed_contract(cfg, nodes, sc2v, size_class);
  return cc_forward(e.vector, cc);
}

float VulnerabilityModel::predict(const ControlFlowGraph& cfg, const DisassemblyListing& listing) {
  Tensor nodes = encode_contract_nodes(cfg, listing, vocab, encoder);
  return predict_from_nodes(cfg, nodes);
}

void VulnerabilityModel::visit_state(const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("encoder.embed", encoder.embed.value);
  fn("encoder.w1", encoder.w1.value);
  fn("encoder.b1", encoder.b1.value);
  fn("encoder.w2", encoder.w2.value);
  fn("encoder.b2", encoder.b2.value);
  sc2v.visit_state(fn);
  cc.visit_state(fn);
}

float cc_forward(const std::vector<float>& embedding, CoreClassifier& cc) {
  Tensor x({1, embedding.size()});
  std::copy(embedding.begin(), embedding.end(), x.data.begin());
  Tensor p = cc.forward(x, Mode::Infer, nullptr, nullptr);
  return p.data[0];
}

uint32_t crc32(const uint8_t* data, size_t size) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = 0xFFFFFFFFu;
  for (size_t i = 0; i < size; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<uint8_t>& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) raise(ErrorKind::ChecksumMismatch, "file ends inside a record");
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(buf[pos] | (buf[pos + 1] << 8));
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(size_t n) {
    need(n);
    std::string s(buf.begin() + pos, buf.begin() + pos + n);
    pos += n;
    return s;
  }
};

nlohmann::json grid_to_json(const GridConfig& g) {
  return {
      {"gcn_layers", g.gcn_layers},
      {"gcn_leading", g.gcn_leading},
      {"aggregation", aggregation_name(g.aggregation)},
      {"conv_layers", g.conv_layers},
      {"dense_layers", g.dense_layers},
      {"dense_leading", g.dense_leading},
      {"activation", activation_name(g.activation)},
  };
}

GridConfig grid_from_json(const nlohmann::json& j) {
  GridConfig g;
  g.gcn_layers = j.at("gcn_layers").get<size_t>();
  g.gcn_leading = j.at("gcn_leading").get<size_t>();
  g.aggregation = aggregation_from_name(j.at("aggregation").get<std::string>());
  g.conv_layers = j.at("conv_layers").get<size_t>();
  g.dense_layers = j.at("dense_layers").get<size_t>();
  g.dense_leading = j.at("dense_leading").get<size_t>();
  g.activation = activation_from_name(j.at("activation").get<std::string>());
  return g;
}

}  // namespace

std::vector<uint8_t> serialize_model(const VulnerabilityModel& model) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kFormatVersion);

  nlohmann::json meta;
  meta["vulnerability"] = model.vulnerability;
  meta["size_class"] = size_class_name(model.size_class);
  meta["architecture"] = grid_to_json(model.arch);
  meta["threshold"] = model.threshold;
  meta["seed"] = model.seed;
  meta["encoder_ref"] = model.encoder_ref;
  meta["vocab"] = model.vocab.to_lines();
  const std::string meta_str = meta.dump();
  put_u32(out, static_cast<uint32_t>(meta_str.size()));
  out.insert(out.end(), meta_str.begin(), meta_str.end());

  std::vector<std::pair<std::string, Tensor*>> tensors;
  const_cast<VulnerabilityModel&>(model).visit_state(
      [&](const std::string& name, Tensor& t) { tensors.push_back({name, &t}); });

  put_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<uint32_t>(tensor->shape.size()));
    for (size_t e : tensor->shape) put_u64(out, e);
    for (float v : tensor->data) put_f32(out, v);
  }

  put_u32(out, crc32(out.data(), out.size()));
  return out;
}

VulnerabilityModel deserialize_model(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    raise(ErrorKind::BadMagic, "not a model container");
  }
  Reader r{bytes, 4};
  const uint16_t version = r.u16();
  if (version != kFormatVersion) {
    raise(ErrorKind::VersionMismatch, "format version " + std::to_string(version));
  }
  if (bytes.size() < 10) raise(ErrorKind::ChecksumMismatch, "file too short");
  uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
  if (crc32(bytes.data(), bytes.size() - 4) != stored) {
    raise(ErrorKind::ChecksumMismatch, "corrupt model container");
  }

  const uint32_t meta_len = r.u32();
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(r.str(meta_len));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::ChecksumMismatch, std::string("bad metadata: ") + e.what());
  }

  VulnerabilityModel m;
  m.vulnerability = meta.at("vulnerability").get<std::string>();
  m.size_class = size_class_from_name(meta.at("size_class").get<std::string>());
  m.arch = grid_from_json(meta.at("architecture"));
  m.threshold = meta.at("threshold").get<float>();
  m.seed = meta.at("seed").get<uint64_t>();
  m.encoder_ref = meta.at("encoder_ref").get<std::string>();
  m.vocab = TokenVocab::from_lines(meta.at("vocab").get<std::vector<std::string>>());

  // allocate the architecture, then fill tensors by name
  Rng rng(m.seed);
  Rng r1 = rng.split(1), r2 = rng.split(2), r3 = rng.split(3);
  m.encoder = DanEncoder::random_init(m.vocab.size(), r1);
  m.sc2v = Sc2vNet::random_init(m.arch.sc2v_config(m.size_class), r2);
  m.cc = CoreClassifier::random_init(m.sc2v.cfg.embedding_dim(), m.arch.dense_hidden_sizes(), r3);

  std::map<std::string, std::pair<std::vector<size_t>, std::vector<float>>> loaded;
  const uint32_t tensor_count = r.u32();
  for (uint32_t t = 0; t < tensor_count; ++t) {
    const uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const uint32_t rank = r.u32();
    std::vector<size_t> shape(rank);
    size_t count = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<size_t>(r.u64());
      count *= shape[d];
    }
    std::vector<float> data(count);
    for (size_t i = 0; i < count; ++i) data[i] = r.f32();
    loaded[name] = {std::move(shape), std::move(data)};
  }

  m.visit_state([&](const std::string& name, Tensor& t) {
    auto it = loaded.find(name);
    if (it == loaded.end()) {
      raise(ErrorKind::ChecksumMismatch, "missing tensor " + name);
    }
    if (it->second.first != t.shape) {
      raise(ErrorKind::ChecksumMismatch, "tensor " + name + " has unexpected shape");
    }
    t.data = std::move(it->second.second);
  });
  return m;
}

void save_model(const VulnerabilityModel& model, const std::string& path) {
  std::vector<uint8_t> bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::IoError, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorKind::IoError, "short write to " + path);
}

VulnerabilityModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoError, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace dlva
