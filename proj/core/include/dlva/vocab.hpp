#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dlva/cfg.hpp"
#include "dlva/disasm.hpp"

namespace dlva {

// Token vocabulary for basic-block "sentences": every opcode mnemonic, one
// IMM_xx token per 1-byte immediate value, PUSHDATA_n length classes for
// longer immediates, plus UNK and PAD. Ids are dense line numbers of the
// vocabulary file.
class TokenVocab {
 public:
  static TokenVocab standard();

  static TokenVocab from_lines(const std::vector<std::string>& lines);
  std::vector<std::string> to_lines() const;

  size_t size() const { return tokens_.size(); }
  const std::string& token(uint32_t id) const { return tokens_[id]; }
  uint32_t id(const std::string& token) const;  // UNK id when absent
  uint32_t unk_id() const { return unk_; }
  uint32_t pad_id() const { return pad_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, uint32_t> index_;
  uint32_t unk_ = 0;
  uint32_t pad_ = 0;

  void rebuild_index();
};

// One token per mnemonic; PUSH1 immediates keep their value (IMM_xx), longer
// immediates reduce to PUSHDATA_n; unknown opcodes map to UNK.
std::vector<uint32_t> tokenize_block(const BasicBlock& block, const DisassemblyListing& listing,
                                     const TokenVocab& vocab);

}  // namespace dlva
