#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlva/cfg.hpp"
#include "dlva/dataset.hpp"
#include "dlva/disasm.hpp"
#include "dlva/rng.hpp"

namespace dlva::testutil {

// Assembles a synthetic contract with a valid block structure: block 0 is the
// entry, every later block starts with JUMPDEST, terminators are a mix of
// fall-throughs, pushed jumps and conditional jumps. When `positive` is set,
// one block carries a CALL followed by SSTORE; negatives keep CALL and SSTORE
// in separate blocks.
inline RawBytecode synthetic_contract(Rng& rng, size_t n_blocks, bool positive) {
  struct Plan {
    std::vector<uint8_t> body;   // before the terminator, excluding JUMPDEST
    int jump_to = -1;            // block index, -1 none
    bool conditional = false;
    bool stop = false;
  };

  auto push_pop_filler = [&](std::vector<uint8_t>& body, size_t units) {
    for (size_t u = 0; u < units; ++u) {
      switch (rng.range(6)) {
        case 0:
          body.push_back(0x60);  // PUSH1
          body.push_back(static_cast<uint8_t>(rng.range(256)));
          body.push_back(0x50);  // POP
          break;
        case 1: body.push_back(0x34); body.push_back(0x50); break;  // CALLVALUE POP
        case 2: body.push_back(0x33); body.push_back(0x50); break;  // CALLER POP
        case 3: body.push_back(0x42); body.push_back(0x50); break;  // TIMESTAMP POP
        case 4:
          body.push_back(0x60);
          body.push_back(static_cast<uint8_t>(rng.range(256)));
          body.push_back(0x80);  // DUP1
          body.push_back(0x01);  // ADD
          body.push_back(0x50);
          break;
        default:
          body.push_back(0x60);
          body.push_back(static_cast<uint8_t>(rng.range(256)));
          body.push_back(0x15);  // ISZERO
          body.push_back(0x50);
          break;
      }
    }
  };

  // CALL needs gas, to, value, argsOffset, argsLength, retOffset, retLength
  auto call_unit = [&](std::vector<uint8_t>& body, bool then_sstore) {
    for (int i = 0; i < 7; ++i) {
      body.push_back(0x60);
      body.push_back(static_cast<uint8_t>(rng.range(256)));
    }
    body.push_back(0xf1);  // CALL
    if (then_sstore) {
      body.push_back(0x60);
      body.push_back(static_cast<uint8_t>(rng.range(256)));
      body.push_back(0x55);  // SSTORE
    } else {
      body.push_back(0x50);  // POP the call result
    }
  };

  auto sstore_unit = [&](std::vector<uint8_t>& body) {
    body.push_back(0x60);
    body.push_back(static_cast<uint8_t>(rng.range(256)));
    body.push_back(0x60);
    body.push_back(static_cast<uint8_t>(rng.range(256)));
    body.push_back(0x55);  // SSTORE
  };

  std::vector<Plan> plans(n_blocks);
  const size_t special_a = rng.range(n_blocks);
  size_t special_b = rng.range(n_blocks);
  while (n_blocks > 1 && special_b == special_a) special_b = rng.range(n_blocks);
  const bool negative_has_both = !positive && rng.range(2) == 0;

  for (size_t b = 0; b < n_blocks; ++b) {
    Plan& plan = plans[b];
    push_pop_filler(plan.body, 1 + rng.range(3));
    if (positive && b == special_a) {
      call_unit(plan.body, /*then_sstore=*/true);
    } else if (negative_has_both && b == special_a) {
      call_unit(plan.body, /*then_sstore=*/false);
    } else if (negative_has_both && b == special_b) {
      sstore_unit(plan.body);
    }
    if (b + 1 == n_blocks) {
      plan.stop = true;
    } else {
      const uint64_t dice = rng.range(10);
      if (dice < 3 && n_blocks > 1) {
        plan.jump_to = static_cast<int>(1 + rng.range(n_blocks - 1));
      } else if (dice < 5 && n_blocks > 1) {
        plan.jump_to = static_cast<int>(1 + rng.range(n_blocks - 1));
        plan.conditional = true;
      }
    }
  }

  // sizes: [JUMPDEST] body [CALLVALUE] PUSH2 tt tt JUMP[I] | STOP
  std::vector<uint32_t> offset(n_blocks + 1, 0);
  for (size_t b = 0; b < n_blocks; ++b) {
    uint32_t len = static_cast<uint32_t>(plans[b].body.size());
    if (b != 0) len += 1;  // JUMPDEST
    if (plans[b].jump_to >= 0) len += plans[b].conditional ? 5 : 4;
    if (plans[b].stop) len += 1;
    offset[b + 1] = offset[b] + len;
  }

  RawBytecode code;
  for (size_t b = 0; b < n_blocks; ++b) {
    if (b != 0) code.bytes.push_back(0x5b);  // JUMPDEST
    code.bytes.insert(code.bytes.end(), plans[b].body.begin(), plans[b].body.end());
    if (plans[b].jump_to >= 0) {
      const uint32_t target = offset[static_cast<size_t>(plans[b].jump_to)];
      if (plans[b].conditional) code.bytes.push_back(0x34);  // CALLVALUE as condition
      code.bytes.push_back(0x61);                            // PUSH2
      code.bytes.push_back(static_cast<uint8_t>(target >> 8));
      code.bytes.push_back(static_cast<uint8_t>(target & 0xFF));
      code.bytes.push_back(plans[b].conditional ? 0x57 : 0x56);
    }
    if (plans[b].stop) code.bytes.push_back(0x00);
  }
  return code;
}

// Labeled corpus with a planted same-block CALL-then-SSTORE motif in the
// positive half.
inline std::vector<ContractRecord> motif_dataset(size_t n, uint64_t seed,
                                                 const std::string& vulnerability,
                                                 size_t min_blocks = 18, size_t max_blocks = 34) {
  Rng rng(seed);
  std::vector<ContractRecord> records;
  records.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const bool positive = i % 2 == 0;
    const size_t blocks = min_blocks + rng.range(max_blocks - min_blocks + 1);
    ContractRecord rec;
    char addr[64];
    std::snprintf(addr, sizeof addr, "0x%040zx", i + 1);
    rec.address = addr;
    rec.bytecode = synthetic_contract(rng, blocks, positive);
    rec.labels[vulnerability] = positive ? 1 : 0;
    records.push_back(std::move(rec));
  }
  return records;
}

// A free-standing CFG with the requested node and (approximate) edge count,
// for geometry and invariance tests that do not need real bytecode.
inline ControlFlowGraph fake_cfg(size_t nodes, size_t edges, Rng& rng) {
  ControlFlowGraph cfg;
  for (size_t i = 0; i < nodes; ++i) {
    BasicBlock b;
    b.id = static_cast<uint32_t>(i * 16);
    cfg.nodes.push_back(b);
  }
  for (size_t e = 0; e < edges; ++e) {
    const uint32_t a = cfg.nodes[rng.range(nodes)].id;
    const uint32_t b = cfg.nodes[rng.range(nodes)].id;
    cfg.edges.push_back({a, b});
  }
  return cfg;
}

inline Tensor random_features(size_t n, size_t dim, Rng& rng) {
  Tensor t({n, dim});
  for (auto& v : t.data) v = static_cast<float>(rng.normal() * 0.1);
  return t;
}

}  // namespace dlva::testutil
