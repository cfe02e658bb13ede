#include "dlva/dataset.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

#include "dlva/error.hpp"

namespace dlva {

std::vector<ContractRecord> ingest_lines(const std::vector<std::string>& lines) {
  std::vector<ContractRecord> out;
  std::set<std::string> seen;
  size_t line_no = 0;
  for (const std::string& line : lines) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
    ContractRecord rec;
    try {
      rec.address = j.at("address").get<std::string>();
      rec.bytecode = parse_hex(j.at("bytecode").get<std::string>());
      if (j.contains("labels")) {
        for (auto it = j["labels"].begin(); it != j["labels"].end(); ++it) {
          rec.labels[it.key()] = it.value().get<int>() ? 1 : 0;
        }
      }
    } catch (const Error& e) {
      raise(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(rec.address).second) {
      raise(ErrorKind::DuplicateAddress,
            "line " + std::to_string(line_no) + ": " + rec.address + " appears twice");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ContractRecord> ingest(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return ingest_lines(lines);
}

std::string record_to_json(const ContractRecord& record) {
  nlohmann::json j;
  j["address"] = record.address;
  j["bytecode"] = to_hex(record.bytecode.bytes);
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [k, v] : record.labels) labels[k] = static_cast<int>(v);
  j["labels"] = std::move(labels);
  return j.dump();
}

DatasetSplit split_dataset(const std::vector<ContractRecord>& records) {
  const size_t n = records.size();
  // floor(0.6n), floor(0.2n) in exact integer arithmetic
  const size_t n_train = n * 6 / 10;
  const size_t n_valid = n * 2 / 10;
  DatasetSplit s;
  s.train.assign(records.begin(), records.begin() + n_train);
  s.valid.assign(records.begin() + n_train, records.begin() + n_train + n_valid);
  s.test.assign(records.begin() + n_train + n_valid, records.end());
  return s;
}

SizeRoute route_by_size(const DisassemblyListing& listing) {
  const size_t n = listing.instructions.size();
  if (n < 750) return {SizeClass::Small, false};
  if (n <= 10000) return {SizeClass::Large, false};
  return {SizeClass::Large, true};
}

}  // namespace dlva
