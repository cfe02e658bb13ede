#include "dlva/opcodes.hpp"

#include <cstdio>
#include <cstring>

namespace dlva {
namespace {

struct Row {
  uint8_t value;
  std::string_view mnemonic;
  uint8_t pops;
  uint8_t pushes;
  TermClass term;
};

constexpr Row kRows[] = {
    {0x00, "STOP", 0, 0, TermClass::Stop},
    {0x01, "ADD", 2, 1, TermClass::None},
    {0x02, "MUL", 2, 1, TermClass::None},
    {0x03, "SUB", 2, 1, TermClass::None},
    {0x04, "DIV", 2, 1, TermClass::None},
    {0x05, "SDIV", 2, 1, TermClass::None},
    {0x06, "MOD", 2, 1, TermClass::None},
    {0x07, "SMOD", 2, 1, TermClass::None},
    {0x08, "ADDMOD", 3, 1, TermClass::None},
    {0x09, "MULMOD", 3, 1, TermClass::None},
    {0x0a, "EXP", 2, 1, TermClass::None},
    {0x0b, "SIGNEXTEND", 2, 1, TermClass::None},
    {0x10, "LT", 2, 1, TermClass::None},
    {0x11, "GT", 2, 1, TermClass::None},
    {0x12, "SLT", 2, 1, TermClass::None},
    {0x13, "SGT", 2, 1, TermClass::None},
    {0x14, "EQ", 2, 1, TermClass::None},
    {0x15, "ISZERO", 1, 1, TermClass::None},
    {0x16, "AND", 2, 1, TermClass::None},
    {0x17, "OR", 2, 1, TermClass::None},
    {0x18, "XOR", 2, 1, TermClass::None},
    {0x19, "NOT", 1, 1, TermClass::None},
    {0x1a, "BYTE", 2, 1, TermClass::None},
    {0x1b, "SHL", 2, 1, TermClass::None},
    {0x1c, "SHR", 2, 1, TermClass::None},
    {0x1d, "SAR", 2, 1, TermClass::None},
    {0x20, "KECCAK256", 2, 1, TermClass::None},
    {0x30, "ADDRESS", 0, 1, TermClass::None},
    {0x31, "BALANCE", 1, 1, TermClass::None},
    {0x32, "ORIGIN", 0, 1, TermClass::None},
    {0x33, "CALLER", 0, 1, TermClass::None},
    {0x34, "CALLVALUE", 0, 1, TermClass::None},
    {0x35, "CALLDATALOAD", 1, 1, TermClass::None},
    {0x36, "CALLDATASIZE", 0, 1, TermClass::None},
    {0x37, "CALLDATACOPY", 3, 0, TermClass::None},
    {0x38, "CODESIZE", 0, 1, TermClass::None},
    {0x39, "CODECOPY", 3, 0, TermClass::None},
    {0x3a, "GASPRICE", 0, 1, TermClass::None},
    {0x3b, "EXTCODESIZE", 1, 1, TermClass::None},
    {0x3c, "EXTCODECOPY", 4, 0, TermClass::None},
    {0x3d, "RETURNDATASIZE", 0, 1, TermClass::None},
    {0x3e, "RETURNDATACOPY", 3, 0, TermClass::None},
    {0x3f, "EXTCODEHASH", 1, 1, TermClass::None},
    {0x40, "BLOCKHASH", 1, 1, TermClass::None},
    {0x41, "COINBASE", 0, 1, TermClass::None},
    {0x42, "TIMESTAMP", 0, 1, TermClass::None},
    {0x43, "NUMBER", 0, 1, TermClass::None},
    {0x44, "DIFFICULTY", 0, 1, TermClass::None},
    {0x45, "GASLIMIT", 0, 1, TermClass::None},
    {0x46, "CHAINID", 0, 1, TermClass::None},
    {0x47, "SELFBALANCE", 0, 1, TermClass::None},
    {0x48, "BASEFEE", 0, 1, TermClass::None},
    {0x50, "POP", 1, 0, TermClass::None},
    {0x51, "MLOAD", 1, 1, TermClass::None},
    {0x52, "MSTORE", 2, 0, TermClass::None},
    {0x53, "MSTORE8", 2, 0, TermClass::None},
    {0x54, "SLOAD", 1, 1, TermClass::None},
    {0x55, "SSTORE", 2, 0, TermClass::None},
    {0x56, "JUMP", 1, 0, TermClass::Jump},
    {0x57, "JUMPI", 2, 0, TermClass::JumpI},
    {0x58, "PC", 0, 1, TermClass::None},
    {0x59, "MSIZE", 0, 1, TermClass::None},
    {0x5a, "GAS", 0, 1, TermClass::None},
    {0x5b, "JUMPDEST", 0, 0, TermClass::None},
    {0x5f, "PUSH0", 0, 1, TermClass::None},
    {0xf0, "CREATE", 3, 1, TermClass::None},
    {0xf1, "CALL", 7, 1, TermClass::None},
    {0xf2, "CALLCODE", 7, 1, TermClass::None},
    {0xf3, "RETURN", 2, 0, TermClass::Return},
    {0xf4, "DELEGATECALL", 6, 1, TermClass::None},
    {0xf5, "CREATE2", 4, 1, TermClass::None},
    {0xfa, "STATICCALL", 6, 1, TermClass::None},
    {0xfd, "REVERT", 2, 0, TermClass::Revert},
    {0xfe, "INVALID", 0, 0, TermClass::Invalid},
    {0xff, "SELFDESTRUCT", 1, 0, TermClass::SelfDestruct},
};

// PUSH1..PUSH32, DUP1..DUP16, SWAP1..SWAP16, LOG0..LOG4 mnemonics need static
// storage; build them once.
struct NumberedNames {
  char push[32][8];
  char dup[16][8];
  char swap[16][8];
  char log[5][8];

  NumberedNames() {
    for (int i = 0; i < 32; ++i) std::snprintf(push[i], sizeof push[i], "PUSH%d", i + 1);
    for (int i = 0; i < 16; ++i) std::snprintf(dup[i], sizeof dup[i], "DUP%d", i + 1);
    for (int i = 0; i < 16; ++i) std::snprintf(swap[i], sizeof swap[i], "SWAP%d", i + 1);
    for (int i = 0; i < 5; ++i) std::snprintf(log[i], sizeof log[i], "LOG%d", i);
  }
};

OpcodeTable build_table() {
  static const NumberedNames names;
  OpcodeTable t;
  for (int v = 0; v < 256; ++v) {
    t.entries[v] = OpcodeInfo{"UNKNOWN", 0, 0, false, false, TermClass::Invalid, 0};
  }
  for (const Row& r : kRows) {
    OpcodeInfo& e = t.entries[r.value];
    e = OpcodeInfo{r.mnemonic, r.pops, r.pushes, true, r.value == 0x5b, r.term, 0};
  }
  for (int i = 0; i < 32; ++i) {
    t.entries[0x60 + i] = OpcodeInfo{names.push[i], 0, 1, true, false, TermClass::None,
                                     static_cast<uint8_t>(i + 1)};
  }
  for (int i = 0; i < 16; ++i) {
    t.entries[0x80 + i] = OpcodeInfo{names.dup[i], static_cast<uint8_t>(i + 1),
                                     static_cast<uint8_t>(i + 2), true, false, TermClass::None, 0};
    t.entries[0x90 + i] = OpcodeInfo{names.swap[i], static_cast<uint8_t>(i + 2),
                                     static_cast<uint8_t>(i + 2), true, false, TermClass::None, 0};
  }
  for (int i = 0; i < 5; ++i) {
    t.entries[0xa0 + i] =
        OpcodeInfo{names.log[i], static_cast<uint8_t>(i + 2), 0, true, false, TermClass::None, 0};
  }
  return t;
}

}  // namespace

size_t OpcodeTable::defined_count() const {
  size_t n = 0;
  for (const auto& e : entries) n += e.defined ? 1 : 0;
  return n;
}

const OpcodeTable& opcode_table() {
  static const OpcodeTable table = build_table();
  return table;
}

}  // namespace dlva
