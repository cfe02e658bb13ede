#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dlva {

struct IndexEntry {
  std::string id;
  uint8_t label = 0;
  std::vector<float> vector;
};

// Labeled embedding store for one (vulnerability, size class) space. Flat
// array with exhaustive scan; at the scale in play this is milliseconds.
struct TrainingIndex {
  std::string vulnerability;
  size_t dimension = 0;
  std::vector<IndexEntry> entries;
};

struct SiblingConfig {
  double max_distance = 0.1;
  double step = 0.00001;
};

enum class SiblingOutcome : uint8_t { Vulnerable, NonVulnerable, Unknown };
const char* sibling_outcome_name(SiblingOutcome o);

struct Voter {
  std::string id;
  double distance = 0.0;
  uint8_t label = 0;
};

struct SiblingVerdict {
  SiblingOutcome outcome = SiblingOutcome::Unknown;
  std::optional<double> band_threshold;  // absent for Unknown
  std::vector<Voter> voters;
};

double euclidean(const std::vector<float>& q, const std::vector<float>& p);

// Nearest distance rounded up to the step grid defines the voting band: all
// entries within it vote, vulnerable wins only on a strict majority. Nothing
// within max_distance -> Unknown.
SiblingVerdict sibling_lookup(const std::vector<float>& q, const TrainingIndex& index,
                              const SiblingConfig& config = {});

struct Contradiction {
  std::string id_a, id_b;
  double distance = 0.0;
};

// All unordered pairs within epsilon whose labels differ, sorted by distance.
std::vector<Contradiction> find_contradictions(const TrainingIndex& index, double epsilon);

// JSONL: header {"vulnerability":...,"dimension":N}, then one
// {"id":...,"label":0|1,"vector":[...]} per line.
void write_index(const TrainingIndex& index, const std::string& path);
TrainingIndex read_index(const std::string& path);

}  // namespace dlva
