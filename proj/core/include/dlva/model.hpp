#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlva/classifier.hpp"
#include "dlva/dan.hpp"
#include "dlva/grid.hpp"
#include "dlva/sc2v.hpp"
#include "dlva/vocab.hpp"

namespace dlva {

// One trained detector: block encoder, contract embedder and classifier head
// for a single (vulnerability, size class) pair.
struct VulnerabilityModel {
  std::string vulnerability;
  SizeClass size_class = SizeClass::Large;
  GridConfig arch;
  float threshold = 0.5f;
  uint64_t seed = 0;
  std::string encoder_ref;

  TokenVocab vocab;
  DanEncoder encoder;
  Sc2vNet sc2v;
  CoreClassifier cc;

  size_t embedding_dim() const { return sc2v.cfg.embedding_dim(); }

  static VulnerabilityModel random_init(const std::string& vulnerability, SizeClass size_class,
                                        const GridConfig& arch, uint64_t seed);

  // inference-mode probability for already-computed node features
  float predict_from_nodes(const ControlFlowGraph& cfg, const Tensor& nodes);
  // full path: tokenize + encode + embed + classify
  float predict(const ControlFlowGraph& cfg, const DisassemblyListing& listing);

  void visit_state(const std::function<void(const std::string&, Tensor&)>& fn);
};

// Container format: magic "DLVA", format version u16, JSON metadata block,
// named tensors (name, rank, extents, little-endian f32 row-major), CRC-32 of
// everything preceding it. Byte order and float format are fixed regardless
// of host.
void save_model(const VulnerabilityModel& model, const std::string& path);
VulnerabilityModel load_model(const std::string& path);

std::vector<uint8_t> serialize_model(const VulnerabilityModel& model);
VulnerabilityModel deserialize_model(const std::vector<uint8_t>& bytes);

uint32_t crc32(const uint8_t* data, size_t size);

}  // namespace dlva
