#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dlva/disasm.hpp"
#include "dlva/sc2v.hpp"

namespace dlva {

struct ContractRecord {
  std::string address;
  RawBytecode bytecode;
  std::map<std::string, uint8_t> labels;  // vulnerability -> {0,1}
};

// JSONL, one record per line:
//   {"address":"0x..","bytecode":"0x..","labels":{"reentrancy-eth":1,...}}
// Order preserved; duplicate addresses rejected.
std::vector<ContractRecord> ingest(const std::string& path);
std::vector<ContractRecord> ingest_lines(const std::vector<std::string>& lines);
std::string record_to_json(const ContractRecord& record);

struct DatasetSplit {
  std::vector<ContractRecord> train, valid, test;
};

// First floor(0.6n) / next floor(0.2n) / remainder, in the order given.
DatasetSplit split_dataset(const std::vector<ContractRecord>& records);

struct SizeRoute {
  SizeClass size_class = SizeClass::Large;
  bool oversize_warning = false;
};

// < 750 opcodes -> Small; 750..10,000 -> Large; above that Large plus a
// warning (the shipped models saw nothing that long).
SizeRoute route_by_size(const DisassemblyListing& listing);

}  // namespace dlva
