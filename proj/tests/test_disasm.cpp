#include "doctest.h"

#include "dlva/disasm.hpp"
#include "dlva/error.hpp"
#include "dlva/rng.hpp"

using namespace dlva;

TEST_CASE("parse_hex basics") {
  CHECK(parse_hex("0x60").bytes == std::vector<uint8_t>{0x60});
  CHECK(parse_hex("0x60").had_0x_prefix);
  CHECK(parse_hex("").bytes.empty());
  CHECK(parse_hex("  0xAB  ").bytes == std::vector<uint8_t>{0xab});
  CHECK(parse_hex("aBcD").bytes == std::vector<uint8_t>{0xab, 0xcd});
  CHECK_FALSE(parse_hex("abcd").had_0x_prefix);

  CHECK_THROWS_AS(parse_hex("0x6"), Error);
  CHECK_THROWS_AS(parse_hex("0x6z"), Error);
  try {
    parse_hex("0x6z");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedHex);
  }
}

TEST_CASE("parse_hex of a deployed-contract prefix") {
  RawBytecode code = parse_hex("0x608060405234801561001057600080fd5b50");
  REQUIRE(code.bytes.size() == 18);
  CHECK(code.bytes[0] == 0x60);
  CHECK(code.bytes[1] == 0x80);
  CHECK(code.bytes[2] == 0x60);
  CHECK(code.bytes[3] == 0x40);
  CHECK(code.bytes[4] == 0x52);
  CHECK(code.bytes[5] == 0x34);
  CHECK(code.bytes[6] == 0x80);
  CHECK(code.bytes[7] == 0x15);
}

TEST_CASE("disassemble basics") {
  SUBCASE("PUSH1 and MSTORE") {
    DisassemblyListing l = disassemble(RawBytecode{{0x60, 0x80}, false});
    REQUIRE(l.instructions.size() == 1);
    CHECK(l.instructions[0].mnemonic == "PUSH1");
    CHECK(l.instructions[0].immediate == std::vector<uint8_t>{0x80});

    l = disassemble(RawBytecode{{0x52}, false});
    CHECK(l.instructions[0].mnemonic == "MSTORE");
  }
  SUBCASE("the standard dispatcher prologue") {
    RawBytecode code = parse_hex("0x608060405234801561001057600080fd");
    CHECK(mnemonic_sequence(disassemble(code)) ==
          "PUSH1 0x80 PUSH1 0x40 MSTORE CALLVALUE DUP1 ISZERO PUSH2 0x10 JUMPI PUSH1 0x0 DUP1 "
          "REVERT");
  }
  SUBCASE("undefined opcode is UNKNOWN, length 1") {
    DisassemblyListing l = disassemble(RawBytecode{{0x0c, 0x00}, false});
    REQUIRE(l.instructions.size() == 2);
    CHECK(l.instructions[0].mnemonic == "UNKNOWN");
    CHECK(l.instructions[0].unknown_opcode);
    CHECK(l.instructions[1].mnemonic == "STOP");
  }
  SUBCASE("truncated PUSH immediate is zero padded and flagged") {
    DisassemblyListing l = disassemble(RawBytecode{{0x61, 0xAA}, false});
    REQUIRE(l.instructions.size() == 1);
    CHECK(l.instructions[0].truncated_immediate);
    CHECK(l.instructions[0].immediate == std::vector<uint8_t>{0xAA, 0x00});
    CHECK(l.code_length == 2);
  }
  SUBCASE("offsets chain through immediates") {
    DisassemblyListing l = disassemble(parse_hex("6080604052"));
    REQUIRE(l.instructions.size() == 3);
    CHECK(l.instructions[0].offset == 0);
    CHECK(l.instructions[1].offset == 2);
    CHECK(l.instructions[2].offset == 4);
    uint32_t expected = 0;
    for (const auto& ins : l.instructions) {
      CHECK(ins.offset == expected);
      expected += ins.length();
    }
  }
}

TEST_CASE("reassemble inverts disassemble") {
  CHECK(reassemble(DisassemblyListing{}).bytes.empty());

  SUBCASE("hand case") {
    RawBytecode code = parse_hex("6080");
    CHECK(reassemble(disassemble(code)).bytes == code.bytes);
  }
  SUBCASE("round trip on random byte strings") {
    Rng rng(0x5eed);
    for (int iter = 0; iter < 1000; ++iter) {
      const size_t len = rng.range(2000);
      RawBytecode code;
      code.bytes.resize(len);
      for (auto& b : code.bytes) b = static_cast<uint8_t>(rng.range(256));
      DisassemblyListing l = disassemble(code);
      // totality: every input byte decodes exactly once
      uint32_t consumed = 0;
      for (const auto& ins : l.instructions) consumed += ins.length();
      CHECK(consumed >= l.code_length);
      CHECK(reassemble(l).bytes == code.bytes);
    }
  }
  SUBCASE("inconsistent offsets rejected") {
    DisassemblyListing l = disassemble(parse_hex("600160"));
    l.instructions[1].offset = 7;
    CHECK_THROWS_AS(reassemble(l), Error);
  }
}

TEST_CASE("listing text format") {
  DisassemblyListing l = disassemble(parse_hex("0x6080604052"));
  CHECK(format_listing(l) == "0x0: PUSH1 0x80\n0x2: PUSH1 0x40\n0x4: MSTORE\n");
  // offsets render in lowercase hex
  DisassemblyListing l2 = disassemble(parse_hex("0x5b5b5b5b5b5b5b5b5b5b5b5b5b5b5b00"));
  CHECK(format_instruction(l2.instructions[15]) == "0xf: STOP");
}

TEST_CASE("strip_metadata") {
  SUBCASE("no marker, no split") {
    RawBytecode code = parse_hex("6080604052");
    auto [body, trailer] = strip_metadata(code);
    CHECK(body.bytes == code.bytes);
    CHECK(trailer.bytes.empty());
  }
  SUBCASE("synthetic trailer splits at the exact point") {
    // body, then CBOR map {"ipfs": <34 bytes>, "solc": <3 bytes>}, then length
    RawBytecode body = parse_hex("60806040526000f3");
    std::vector<uint8_t> blob = {0xa2, 0x64, 'i', 'p', 'f', 's', 0x58, 0x22};
    Rng rng(9);
    for (int i = 0; i < 34; ++i) blob.push_back(static_cast<uint8_t>(rng.range(256)));
    blob.insert(blob.end(), {0x64, 0x73, 0x6f, 0x6c, 0x63, 0x43, 0x00, 0x08, 0x07});
    RawBytecode full = body;
    full.bytes.insert(full.bytes.end(), blob.begin(), blob.end());
    full.bytes.push_back(static_cast<uint8_t>(blob.size() >> 8));
    full.bytes.push_back(static_cast<uint8_t>(blob.size() & 0xFF));

    auto [code_body, trailer] = strip_metadata(full);
    CHECK(code_body.bytes == body.bytes);
    REQUIRE(trailer.bytes.size() == blob.size() + 2);
    // trailer carries the solc marker bytes
    bool marker = false;
    for (size_t i = 0; i + 4 <= trailer.bytes.size(); ++i) {
      marker |= trailer.bytes[i] == 0x73 && trailer.bytes[i + 1] == 0x6f &&
                trailer.bytes[i + 2] == 0x6c && trailer.bytes[i + 3] == 0x63;
    }
    CHECK(marker);
  }
  SUBCASE("bogus length leaves input intact") {
    RawBytecode code = parse_hex("6080ffff");
    auto [body, trailer] = strip_metadata(code);
    CHECK(body.bytes == code.bytes);
    CHECK(trailer.bytes.empty());
  }
}

TEST_CASE("opcode table coverage") {
  const OpcodeTable& t = opcode_table();
  CHECK(t.defined_count() == 144);  // every opcode defined through Shanghai
  CHECK(t[0x60].mnemonic == "PUSH1");
  CHECK(t[0x60].push_bytes == 1);
  CHECK(t[0x7f].push_bytes == 32);
  CHECK(t[0x5b].is_jumpdest);
  CHECK(t[0x56].term == TermClass::Jump);
  CHECK(t[0xfd].term == TermClass::Revert);
  CHECK(t[0x0c].defined == false);
  CHECK(t[0x0c].term == TermClass::Invalid);
  CHECK(t[0xf1].pops == 7);
  CHECK(t[0xf1].pushes == 1);
}

TEST_CASE("disassemble is injective on random inputs") {
  Rng rng(0xd15a);
  for (int iter = 0; iter < 200; ++iter) {
    RawBytecode a, b;
    a.bytes.resize(rng.range(64));
    b.bytes.resize(rng.range(64));
    for (auto& x : a.bytes) x = static_cast<uint8_t>(rng.range(256));
    for (auto& x : b.bytes) x = static_cast<uint8_t>(rng.range(256));
    if (a.bytes == b.bytes) continue;
    CHECK(reassemble(disassemble(a)).bytes != reassemble(disassemble(b)).bytes);
  }
}
