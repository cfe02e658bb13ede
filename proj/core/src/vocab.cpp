#include "dlva/vocab.hpp"

#include <cstdio>

#include "dlva/error.hpp"

namespace dlva {

TokenVocab TokenVocab::standard() {
  TokenVocab v;
  const OpcodeTable& table = opcode_table();
  for (int op = 0; op < 256; ++op) {
    if (!table[op].defined) continue;
    v.tokens_.emplace_back(table[op].mnemonic);
  }
  char buf[16];
  for (int b = 0; b < 256; ++b) {
    std::snprintf(buf, sizeof buf, "IMM_%02X", b);
    v.tokens_.emplace_back(buf);
  }
  for (int n = 2; n <= 32; ++n) {
    std::snprintf(buf, sizeof buf, "PUSHDATA_%d", n);
    v.tokens_.emplace_back(buf);
  }
  v.tokens_.emplace_back("UNK");
  v.tokens_.emplace_back("PAD");
  v.rebuild_index();
  return v;
}

TokenVocab TokenVocab::from_lines(const std::vector<std::string>& lines) {
  TokenVocab v;
  v.tokens_ = lines;
  v.rebuild_index();
  return v;
}

std::vector<std::string> TokenVocab::to_lines() const { return tokens_; }

void TokenVocab::rebuild_index() {
  index_.clear();
  for (uint32_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = i;
  auto it = index_.find("UNK");
  unk_ = it == index_.end() ? 0 : it->second;
  it = index_.find("PAD");
  pad_ = it == index_.end() ? unk_ : it->second;
}

uint32_t TokenVocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_ : it->second;
}

std::vector<uint32_t> tokenize_block(const BasicBlock& block, const DisassemblyListing& listing,
                                     const TokenVocab& vocab) {
  std::vector<uint32_t> out;
  out.reserve(block.instruction_count * 2);
  char buf[40];
  for (uint32_t k = 0; k < block.instruction_count; ++k) {
    const Instruction& ins = listing.instructions[block.first_instruction + k];
    if (ins.unknown_opcode) {
      out.push_back(vocab.unk_id());
      continue;
    }
    out.push_back(vocab.id(std::string(ins.mnemonic)));
    if (ins.immediate.size() == 1) {
      std::snprintf(buf, sizeof buf, "IMM_%02X", ins.immediate[0]);
      out.push_back(vocab.id(buf));
    } else if (ins.immediate.size() >= 2) {
      std::snprintf(buf, sizeof buf, "PUSHDATA_%zu", ins.immediate.size());
      out.push_back(vocab.id(buf));
    }
  }
  return out;
}

}  // namespace dlva
