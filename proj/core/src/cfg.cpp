#include "dlva/cfg.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "json.hpp"

namespace dlva {

Word256 Word256::from_bytes(const std::vector<uint8_t>& bytes) {
  Word256 w;
  // right-align: the last byte of the immediate is the least significant
  size_t n = std::min<size_t>(bytes.size(), 32);
  for (size_t i = 0; i < n; ++i) {
    uint8_t b = bytes[bytes.size() - 1 - i];
    w.limbs[3 - i / 8] |= static_cast<uint64_t>(b) << (8 * (i % 8));
  }
  return w;
}

void AbstractStack::push(StackEntry e) {
  if (entries.size() >= kDepthCap) {
    // keep the top of the stack meaningful; discard from the bottom
    entries.erase(entries.begin());
    overflow_flag = true;
  }
  entries.push_back(std::move(e));
}

StackEntry AbstractStack::pop(bool& underflow) {
  if (entries.empty()) {
    underflow = true;
    return std::nullopt;
  }
  StackEntry e = std::move(entries.back());
  entries.pop_back();
  return e;
}

const char* diag_reason_name(DiagReason reason) {
  switch (reason) {
    case DiagReason::UnresolvedJumpTarget: return "unresolved-jump-target";
    case DiagReason::TargetNotJumpdest: return "target-not-jumpdest";
    case DiagReason::TargetOutOfRange: return "target-out-of-range";
    case DiagReason::StackUnderflow: return "stack-underflow";
    case DiagReason::StackOverflow: return "stack-overflow";
  }
  return "unknown";
}

const BasicBlock* ControlFlowGraph::find(uint32_t id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                             [](const BasicBlock& b, uint32_t v) { return b.id < v; });
  if (it == nodes.end() || it->id != id) return nullptr;
  return &*it;
}

size_t ControlFlowGraph::node_index(uint32_t id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                             [](const BasicBlock& b, uint32_t v) { return b.id < v; });
  if (it == nodes.end() || it->id != id) return nodes.size();
  return static_cast<size_t>(it - nodes.begin());
}

std::vector<BasicBlock> partition_blocks(const DisassemblyListing& listing) {
  const auto& ins = listing.instructions;
  std::vector<BasicBlock> blocks;
  if (ins.empty()) return blocks;

  // leaders: instruction 0, every JUMPDEST, every instruction after a terminator
  std::vector<bool> leader(ins.size(), false);
  leader[0] = true;
  for (size_t i = 0; i < ins.size(); ++i) {
    if (ins[i].info().is_jumpdest) leader[i] = true;
    if (ins[i].info().is_terminator() && i + 1 < ins.size()) leader[i + 1] = true;
  }
  for (size_t i = 0; i < ins.size();) {
    size_t j = i + 1;
    while (j < ins.size() && !leader[j]) ++j;
    BasicBlock b;
    b.id = ins[i].offset;
    b.first_instruction = static_cast<uint32_t>(i);
    b.instruction_count = static_cast<uint32_t>(j - i);
    b.terminator = ins[j - 1].info().term;
    blocks.push_back(b);
    i = j;
  }
  return blocks;
}

StepResult step_block(const BasicBlock& block, const DisassemblyListing& listing,
                      const AbstractStack& in) {
  StepResult r;
  r.out = in;
  for (uint32_t k = 0; k < block.instruction_count; ++k) {
    const Instruction& ins = listing.instructions[block.first_instruction + k];
    const OpcodeInfo& info = ins.info();
    const uint8_t op = ins.opcode;
    if (info.push_bytes > 0) {
      r.out.push(Word256::from_bytes(ins.immediate));
    } else if (op == 0x5f) {  // PUSH0
      r.out.push(Word256{});
    } else if (op >= 0x80 && op <= 0x8f) {  // DUPn
      size_t n = op - 0x80 + 1;
      if (r.out.depth() >= n) {
        r.out.push(r.out.entries[r.out.depth() - n]);
      } else {
        r.underflow = true;
        r.out.push(std::nullopt);
      }
    } else if (op >= 0x90 && op <= 0x9f) {  // SWAPn
      size_t n = op - 0x90 + 1;
      if (r.out.depth() >= n + 1) {
        std::swap(r.out.entries[r.out.depth() - 1], r.out.entries[r.out.depth() - 1 - n]);
      } else {
        r.underflow = true;
      }
    } else if (op == 0x50) {  // POP
      bool uf = false;
      r.out.pop(uf);
      r.underflow |= uf;
    } else {
      if (op == 0x56 || op == 0x57) {
        // JUMP/JUMPI read the target from the top of the stack
        if (!r.out.entries.empty() && r.out.entries.back().has_value()) {
          r.jump_target = *r.out.entries.back();
        }
      }
      bool uf = false;
      for (uint8_t p = 0; p < info.pops; ++p) r.out.pop(uf);
      r.underflow |= uf;
      for (uint8_t p = 0; p < info.pushes; ++p) r.out.push(std::nullopt);
    }
  }
  r.overflow = r.out.overflow_flag;
  return r;
}

namespace {

// Per-depth meet aligned at the top of the stack; where depths differ the
// positions beyond the shallower stack collapse to Unknown.
AbstractStack merge_stacks(const AbstractStack& a, const AbstractStack& b, bool& changed_vs_a) {
  AbstractStack m;
  m.overflow_flag = a.overflow_flag || b.overflow_flag;
  const size_t da = a.depth(), db = b.depth();
  const size_t dmax = std::max(da, db);
  m.entries.resize(dmax);
  for (size_t i = 0; i < dmax; ++i) {
    // position i from the top
    StackEntry ea = i < da ? a.entries[da - 1 - i] : std::nullopt;
    StackEntry eb = i < db ? b.entries[db - 1 - i] : std::nullopt;
    StackEntry met = (i < da && i < db && ea.has_value() && eb.has_value() && *ea == *eb)
                         ? ea
                         : StackEntry{};
    m.entries[dmax - 1 - i] = met;
  }
  changed_vs_a = m.entries != a.entries || m.overflow_flag != a.overflow_flag;
  return m;
}

}  // namespace

ControlFlowGraph build_cfg(const DisassemblyListing& listing) {
  ControlFlowGraph cfg;
  cfg.nodes = partition_blocks(listing);
  if (cfg.nodes.empty()) return cfg;

  std::map<uint32_t, size_t> index;  // block id -> node index
  for (size_t i = 0; i < cfg.nodes.size(); ++i) index[cfg.nodes[i].id] = i;

  std::set<std::pair<uint32_t, uint32_t>> edges;
  std::set<std::pair<uint32_t, uint8_t>> diags;
  auto diag = [&](uint32_t block, DiagReason reason) {
    diags.insert({block, static_cast<uint8_t>(reason)});
  };

  std::vector<std::optional<AbstractStack>> entry_state(cfg.nodes.size());
  std::vector<bool> queued(cfg.nodes.size(), false);
  std::deque<size_t> worklist;

  entry_state[0] = AbstractStack{};
  worklist.push_back(0);
  queued[0] = true;

  auto propagate = [&](size_t to, const AbstractStack& state) {
    if (!entry_state[to].has_value()) {
      entry_state[to] = state;
    } else {
      bool changed = false;
      AbstractStack merged = merge_stacks(*entry_state[to], state, changed);
      if (!changed) return;
      entry_state[to] = std::move(merged);
    }
    if (!queued[to]) {
      worklist.push_back(to);
      queued[to] = true;
    }
  };

  while (!worklist.empty()) {
    size_t bi = worklist.front();
    worklist.pop_front();
    queued[bi] = false;
    cfg.fixpoint_iterations++;

    const BasicBlock& block = cfg.nodes[bi];
    StepResult step = step_block(block, listing, *entry_state[bi]);
    if (step.underflow) diag(block.id, DiagReason::StackUnderflow);
    if (step.overflow) diag(block.id, DiagReason::StackOverflow);

    const bool has_next = bi + 1 < cfg.nodes.size();
    auto jump_edge = [&]() {
      if (!step.jump_target.has_value()) {
        diag(block.id, DiagReason::UnresolvedJumpTarget);
        return;
      }
      if (!step.jump_target->fits_u64() || step.jump_target->low_u64() >= listing.code_length) {
        diag(block.id, DiagReason::TargetOutOfRange);
        return;
      }
      uint32_t target = static_cast<uint32_t>(step.jump_target->low_u64());
      auto it = index.find(target);
      bool ok = it != index.end();
      if (ok) {
        const BasicBlock& tb = cfg.nodes[it->second];
        ok = listing.instructions[tb.first_instruction].info().is_jumpdest;
      }
      if (!ok) {
        diag(block.id, DiagReason::TargetNotJumpdest);
        return;
      }
      edges.insert({block.id, target});
      propagate(it->second, step.out);
    };

    switch (block.terminator) {
      case TermClass::Jump:
        jump_edge();
        break;
      case TermClass::JumpI:
        jump_edge();
        if (has_next) {
          edges.insert({block.id, cfg.nodes[bi + 1].id});
          propagate(bi + 1, step.out);
        }
        break;
      case TermClass::None:  // fall-through
        if (has_next) {
          edges.insert({block.id, cfg.nodes[bi + 1].id});
          propagate(bi + 1, step.out);
        }
        break;
      case TermClass::Stop:
      case TermClass::Return:
      case TermClass::Revert:
      case TermClass::SelfDestruct:
      case TermClass::Invalid:
        break;
    }
  }

  cfg.edges.assign(edges.begin(), edges.end());
  for (const auto& [block, reason] : diags) {
    cfg.diagnostics.push_back({block, static_cast<DiagReason>(reason)});
  }
  return cfg;
}

CfgStats cfg_stats(const ControlFlowGraph& cfg) {
  return {cfg.nodes.size(), cfg.edges.size()};
}

std::string cfg_to_json(const ControlFlowGraph& cfg, const DisassemblyListing& listing) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const BasicBlock& b : cfg.nodes) {
    nlohmann::json node;
    node["id"] = b.id;
    auto offsets = nlohmann::json::array();
    auto opcodes = nlohmann::json::array();
    for (uint32_t k = 0; k < b.instruction_count; ++k) {
      const Instruction& ins = listing.instructions[b.first_instruction + k];
      offsets.push_back(ins.offset);
      opcodes.push_back(std::string(ins.mnemonic));
    }
    node["offsets"] = std::move(offsets);
    node["opcodes"] = std::move(opcodes);
    j["nodes"].push_back(std::move(node));
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& [from, to] : cfg.edges) {
    j["edges"].push_back(nlohmann::json::array({from, to}));
  }
  j["diagnostics"] = nlohmann::json::array();
  for (const Diagnostic& d : cfg.diagnostics) {
    j["diagnostics"].push_back({{"block", d.block}, {"reason", diag_reason_name(d.reason)}});
  }
  return j.dump(2);
}

std::string cfg_to_dot(const ControlFlowGraph& cfg, const DisassemblyListing& listing) {
  std::string out = "digraph cfg {\n  node [shape=box, fontname=\"monospace\"];\n";
  for (const BasicBlock& b : cfg.nodes) {
    std::string label;
    for (uint32_t k = 0; k < b.instruction_count; ++k) {
      label += format_instruction(listing.instructions[b.first_instruction + k]);
      label += "\\l";
    }
    out += "  b" + std::to_string(b.id) + " [label=\"" + label + "\"];\n";
  }
  for (const auto& [from, to] : cfg.edges) {
    out += "  b" + std::to_string(from) + " -> b" + std::to_string(to) + ";\n";
  }
  out += "}\n";
  return out;
}

}  // namespace dlva
