#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dlva/opcodes.hpp"

namespace dlva {

struct RawBytecode {
  std::vector<uint8_t> bytes;
  bool had_0x_prefix = false;

  bool operator==(const RawBytecode& other) const { return bytes == other.bytes; }
};

struct Instruction {
  uint32_t offset = 0;
  uint8_t opcode = 0;
  std::string_view mnemonic;            // points into the static opcode table
  std::vector<uint8_t> immediate;       // nonempty only for PUSH1..PUSH32
  bool unknown_opcode = false;
  bool truncated_immediate = false;

  const OpcodeInfo& info() const { return opcode_table()[opcode]; }
  uint32_t length() const { return 1 + static_cast<uint32_t>(immediate.size()); }
};

struct DisassemblyListing {
  std::vector<Instruction> instructions;
  uint32_t code_length = 0;
};

// Hex text -> bytes. Accepts an optional 0x/0X prefix, upper or lower case
// digits, and surrounding whitespace. Odd digit counts and stray characters
// raise MalformedHex with the offending position.
RawBytecode parse_hex(std::string_view text);

std::string to_hex(const std::vector<uint8_t>& bytes, bool with_prefix = true);

// Total function: every byte of input decodes to exactly one instruction.
// Undefined opcode values become UNKNOWN instructions of length 1; a PUSH
// whose immediate runs past the end of code is zero-padded and flagged.
DisassemblyListing disassemble(const RawBytecode& code);

// Exact inverse of disassemble. Raises InconsistentListing when offsets or
// immediate widths violate the Instruction invariants.
RawBytecode reassemble(const DisassemblyListing& listing);

// Splits off the Solidity compiler metadata trailer when the final two bytes
// encode its length and the blob carries the "solc" marker; otherwise the
// trailer is empty and the body is the whole input.
std::pair<RawBytecode, RawBytecode> strip_metadata(const RawBytecode& code);

// "OFFSET: MNEMONIC [0xIMMEDIATE]", offsets and immediates in minimal
// lowercase hex with 0x prefix, one instruction per line.
std::string format_listing(const DisassemblyListing& listing);
std::string format_instruction(const Instruction& ins);

// Space-separated mnemonic sequence, e.g. "PUSH1 0x80 PUSH1 0x40 MSTORE".
std::string mnemonic_sequence(const DisassemblyListing& listing);

}  // namespace dlva
