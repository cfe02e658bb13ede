#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlva/disasm.hpp"

namespace dlva {

// 256-bit EVM word, big-endian limbs for comparison convenience.
struct Word256 {
  std::array<uint64_t, 4> limbs{};  // limbs[0] most significant

  static Word256 from_bytes(const std::vector<uint8_t>& bytes);
  bool fits_u64() const { return limbs[0] == 0 && limbs[1] == 0 && limbs[2] == 0; }
  uint64_t low_u64() const { return limbs[3]; }
  bool operator==(const Word256&) const = default;
};

// Stack entry lattice: Known(v) or Unknown (empty optional).
using StackEntry = std::optional<Word256>;

struct AbstractStack {
  std::vector<StackEntry> entries;  // entries.back() is top of stack
  bool overflow_flag = false;

  static constexpr size_t kDepthCap = 1024;

  size_t depth() const { return entries.size(); }
  void push(StackEntry e);
  // Pops the top entry; returns Unknown and reports via underflow when empty.
  StackEntry pop(bool& underflow);
};

struct BasicBlock {
  uint32_t id = 0;  // offset of the first instruction
  uint32_t first_instruction = 0;
  uint32_t instruction_count = 0;
  TermClass terminator = TermClass::None;  // None means fall-through
};

enum class DiagReason : uint8_t {
  UnresolvedJumpTarget,   // top of stack Unknown at JUMP/JUMPI
  TargetNotJumpdest,      // resolved target is not a JUMPDEST block start
  TargetOutOfRange,       // resolved target outside the code
  StackUnderflow,
  StackOverflow,
};

const char* diag_reason_name(DiagReason reason);

struct Diagnostic {
  uint32_t block = 0;
  DiagReason reason = DiagReason::UnresolvedJumpTarget;
};

struct ControlFlowGraph {
  std::vector<BasicBlock> nodes;                      // sorted by id
  std::vector<std::pair<uint32_t, uint32_t>> edges;   // (from, to), sorted, unique
  std::vector<Diagnostic> diagnostics;
  uint32_t entry = 0;
  uint64_t fixpoint_iterations = 0;  // block executions before stabilizing

  const BasicBlock* find(uint32_t id) const;
  size_t node_index(uint32_t id) const;  // nodes.size() when absent
};

std::vector<BasicBlock> partition_blocks(const DisassemblyListing& listing);

// Executes one block over the abstract stack. PUSH/DUP/SWAP/POP are tracked
// exactly; every other opcode pops its table arity and pushes Unknowns. For
// Jump/JumpI terminators the returned target is the top-of-stack value seen
// by the terminator, when known.
struct StepResult {
  AbstractStack out;
  std::optional<Word256> jump_target;
  bool underflow = false;
  bool overflow = false;
};
StepResult step_block(const BasicBlock& block, const DisassemblyListing& listing,
                      const AbstractStack& in);

ControlFlowGraph build_cfg(const DisassemblyListing& listing);

struct CfgStats {
  size_t node_count = 0;
  size_t edge_count = 0;
};
CfgStats cfg_stats(const ControlFlowGraph& cfg);

std::string cfg_to_json(const ControlFlowGraph& cfg, const DisassemblyListing& listing);
std::string cfg_to_dot(const ControlFlowGraph& cfg, const DisassemblyListing& listing);

}  // namespace dlva
