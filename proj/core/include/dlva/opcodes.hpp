#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace dlva {

// Control transfer class of an opcode; None means execution falls through.
enum class TermClass : uint8_t {
  None,
  Jump,
  JumpI,
  Stop,
  Return,
  Revert,
  SelfDestruct,
  Invalid,
};

struct OpcodeInfo {
  std::string_view mnemonic;
  uint8_t pops = 0;
  uint8_t pushes = 0;
  bool defined = false;
  bool is_jumpdest = false;
  TermClass term = TermClass::None;
  uint8_t push_bytes = 0;  // immediate width, nonzero only for PUSH1..PUSH32

  bool is_terminator() const { return term != TermClass::None; }
};

// One static table covering every defined EVM opcode; undefined values carry
// mnemonic "UNKNOWN" and terminate like INVALID.
struct OpcodeTable {
  std::array<OpcodeInfo, 256> entries;

  const OpcodeInfo& operator[](uint8_t value) const { return entries[value]; }
  size_t defined_count() const;
};

const OpcodeTable& opcode_table();

}  // namespace dlva
