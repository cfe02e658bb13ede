#include "dlva/disasm.hpp"

#include <cctype>
#include <sstream>

#include "dlva/error.hpp"

namespace dlva {
namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Minimal lowercase hex with 0x prefix ("0x0" for zero).
std::string hex_number(const uint8_t* bytes, size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (size_t i = 0; i < n; ++i) {
    out.push_back(digits[bytes[i] >> 4]);
    out.push_back(digits[bytes[i] & 0xf]);
  }
  size_t first = out.find_first_not_of('0');
  if (first == std::string::npos) return "0x0";
  return "0x" + out.substr(first);
}

std::string hex_number(uint64_t v) {
  uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<uint8_t>(v >> (8 * (7 - i)));
  return hex_number(buf, 8);
}

}  // namespace

RawBytecode parse_hex(std::string_view text) {
  size_t begin = 0, end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;

  RawBytecode out;
  if (end - begin >= 2 && text[begin] == '0' && (text[begin + 1] == 'x' || text[begin + 1] == 'X')) {
    out.had_0x_prefix = true;
    begin += 2;
  }
  size_t digits = end - begin;
  if (digits % 2 != 0) {
    raise(ErrorKind::MalformedHex, "odd number of hex digits (" + std::to_string(digits) + ")");
  }
  out.bytes.reserve(digits / 2);
  for (size_t i = begin; i < end; i += 2) {
    int hi = hex_digit(text[i]);
    int lo = hex_digit(text[i + 1]);
    if (hi < 0) raise(ErrorKind::MalformedHex, "invalid hex character at position " + std::to_string(i));
    if (lo < 0) raise(ErrorKind::MalformedHex, "invalid hex character at position " + std::to_string(i + 1));
    out.bytes.push_back(static_cast<uint8_t>((hi << 4) | lo));
  }
  return out;
}

std::string to_hex(const std::vector<uint8_t>& bytes, bool with_prefix) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  if (with_prefix) out = "0x";
  out.reserve(out.size() + bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

DisassemblyListing disassemble(const RawBytecode& code) {
  const OpcodeTable& table = opcode_table();
  DisassemblyListing listing;
  listing.code_length = static_cast<uint32_t>(code.bytes.size());
  size_t pc = 0;
  while (pc < code.bytes.size()) {
    const uint8_t op = code.bytes[pc];
    const OpcodeInfo& info = table[op];
    Instruction ins;
    ins.offset = static_cast<uint32_t>(pc);
    ins.opcode = op;
    ins.mnemonic = info.mnemonic;
    ins.unknown_opcode = !info.defined;
    if (info.push_bytes > 0) {
      size_t want = info.push_bytes;
      size_t have = std::min(want, code.bytes.size() - pc - 1);
      ins.immediate.assign(code.bytes.begin() + pc + 1, code.bytes.begin() + pc + 1 + have);
      if (have < want) {
        // code beyond the end reads as zero
        ins.immediate.resize(want, 0);
        ins.truncated_immediate = true;
      }
      pc += 1 + have;
    } else {
      pc += 1;
    }
    listing.instructions.push_back(std::move(ins));
  }
  return listing;
}

RawBytecode reassemble(const DisassemblyListing& listing) {
  RawBytecode out;
  uint32_t expected_offset = 0;
  for (const Instruction& ins : listing.instructions) {
    if (ins.offset != expected_offset) {
      raise(ErrorKind::InconsistentListing,
            "instruction at offset " + std::to_string(ins.offset) + " expected " +
                std::to_string(expected_offset));
    }
    const OpcodeInfo& info = opcode_table()[ins.opcode];
    if (ins.immediate.size() != info.push_bytes) {
      raise(ErrorKind::InconsistentListing,
            "immediate width " + std::to_string(ins.immediate.size()) + " for " +
                std::string(info.mnemonic));
    }
    out.bytes.push_back(ins.opcode);
    out.bytes.insert(out.bytes.end(), ins.immediate.begin(), ins.immediate.end());
    expected_offset += ins.length();
  }
  // A flagged trailing PUSH carries zero padding that was never part of the
  // input; code_length records where the real bytes end.
  if (!listing.instructions.empty() && listing.instructions.back().truncated_immediate) {
    if (listing.code_length > out.bytes.size()) {
      raise(ErrorKind::InconsistentListing, "code_length exceeds reassembled size");
    }
    for (size_t i = listing.code_length; i < out.bytes.size(); ++i) {
      if (out.bytes[i] != 0) {
        raise(ErrorKind::InconsistentListing, "nonzero byte in truncated immediate padding");
      }
    }
    out.bytes.resize(listing.code_length);
  }
  return out;
}

std::pair<RawBytecode, RawBytecode> strip_metadata(const RawBytecode& code) {
  const auto& b = code.bytes;
  const size_t n = b.size();
  auto whole = std::make_pair(code, RawBytecode{});
  if (n < 2) return whole;
  const size_t len = (static_cast<size_t>(b[n - 2]) << 8) | b[n - 1];
  if (len < 4 || len + 2 > n) return whole;
  const size_t split = n - 2 - len;
  // CBOR-encoded map carrying at least the "solc" version key
  if ((b[split] & 0xe0) != 0xa0) return whole;
  static const uint8_t marker[4] = {0x73, 0x6f, 0x6c, 0x63};
  bool found = false;
  for (size_t i = split; i + 4 <= n - 2 && !found; ++i) {
    found = b[i] == marker[0] && b[i + 1] == marker[1] && b[i + 2] == marker[2] && b[i + 3] == marker[3];
  }
  if (!found) return whole;
  RawBytecode body{std::vector<uint8_t>(b.begin(), b.begin() + split), code.had_0x_prefix};
  RawBytecode trailer{std::vector<uint8_t>(b.begin() + split, b.end()), false};
  return {std::move(body), std::move(trailer)};
}

std::string format_instruction(const Instruction& ins) {
  std::string line = hex_number(ins.offset) + ": " + std::string(ins.mnemonic);
  if (!ins.immediate.empty()) {
    line += " " + hex_number(ins.immediate.data(), ins.immediate.size());
  }
  return line;
}

std::string format_listing(const DisassemblyListing& listing) {
  std::string out;
  for (const Instruction& ins : listing.instructions) {
    out += format_instruction(ins);
    out += '\n';
  }
  return out;
}

std::string mnemonic_sequence(const DisassemblyListing& listing) {
  std::string out;
  for (const Instruction& ins : listing.instructions) {
    if (!out.empty()) out += ' ';
    out += std::string(ins.mnemonic);
    if (!ins.immediate.empty()) out += " " + hex_number(ins.immediate.data(), ins.immediate.size());
  }
  return out;
}

}  // namespace dlva
