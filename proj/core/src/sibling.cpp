#include "dlva/sibling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "dlva/error.hpp"

namespace dlva {

const char* sibling_outcome_name(SiblingOutcome o) {
  switch (o) {
    case SiblingOutcome::Vulnerable: return "Vulnerable";
    case SiblingOutcome::NonVulnerable: return "NonVulnerable";
    case SiblingOutcome::Unknown: return "Unknown";
  }
  return "?";
}

double euclidean(const std::vector<float>& q, const std::vector<float>& p) {
  if (q.size() != p.size()) {
    raise(ErrorKind::DimensionMismatch, std::to_string(q.size()) + " vs " + std::to_string(p.size()));
  }
  double sum = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    const double d = static_cast<double>(q[i]) - static_cast<double>(p[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

SiblingVerdict sibling_lookup(const std::vector<float>& q, const TrainingIndex& index,
                              const SiblingConfig& config) {
  if (index.entries.empty()) raise(ErrorKind::EmptyIndex, index.vulnerability);
  if (q.size() != index.dimension) {
    raise(ErrorKind::DimensionMismatch,
          "query has " + std::to_string(q.size()) + ", index " + std::to_string(index.dimension));
  }
  std::vector<double> dist(index.entries.size());
  double dstar = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < index.entries.size(); ++i) {
    dist[i] = euclidean(q, index.entries[i].vector);
    dstar = std::min(dstar, dist[i]);
  }

  SiblingVerdict v;
  if (dstar > config.max_distance) {
    v.outcome = SiblingOutcome::Unknown;
    return v;
  }
  // smallest multiple of step (from 0.0) that reaches the nearest entry
  uint64_t k = static_cast<uint64_t>(std::ceil(dstar / config.step));
  while (k > 0 && static_cast<double>(k - 1) * config.step >= dstar) --k;
  while (static_cast<double>(k) * config.step < dstar) ++k;
  const double band = static_cast<double>(k) * config.step;
  v.band_threshold = band;

  size_t vulnerable = 0;
  for (size_t i = 0; i < index.entries.size(); ++i) {
    if (dist[i] <= band) {
      v.voters.push_back({index.entries[i].id, dist[i], index.entries[i].label});
      vulnerable += index.entries[i].label ? 1 : 0;
    }
  }
  v.outcome = 2 * vulnerable > v.voters.size() ? SiblingOutcome::Vulnerable
                                               : SiblingOutcome::NonVulnerable;
  return v;
}

std::vector<Contradiction> find_contradictions(const TrainingIndex& index, double epsilon) {
  std::vector<Contradiction> out;
  const auto& e = index.entries;
  for (size_t i = 0; i < e.size(); ++i) {
    for (size_t j = i + 1; j < e.size(); ++j) {
      if (e[i].label == e[j].label) continue;
      const double d = euclidean(e[i].vector, e[j].vector);
      if (d <= epsilon) out.push_back({e[i].id, e[j].id, d});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Contradiction& a, const Contradiction& b) { return a.distance < b.distance; });
  return out;
}

void write_index(const TrainingIndex& index, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorKind::IoError, "cannot open " + path + " for writing");
  nlohmann::json header;
  header["vulnerability"] = index.vulnerability;
  header["dimension"] = index.dimension;
  out << header.dump() << '\n';
  for (const IndexEntry& e : index.entries) {
    nlohmann::json j;
    j["id"] = e.id;
    j["label"] = static_cast<int>(e.label);
    j["vector"] = e.vector;
    out << j.dump() << '\n';
  }
  if (!out) raise(ErrorKind::IoError, "short write to " + path);
}

TrainingIndex read_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot open " + path);
  TrainingIndex index;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorKind::MalformedRecord, path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (line_no == 1) {
      index.vulnerability = j.at("vulnerability").get<std::string>();
      index.dimension = j.at("dimension").get<size_t>();
      continue;
    }
    IndexEntry e;
    e.id = j.at("id").get<std::string>();
    e.label = j.at("label").get<int>() ? 1 : 0;
    e.vector = j.at("vector").get<std::vector<float>>();
    if (e.vector.size() != index.dimension) {
      raise(ErrorKind::DimensionMismatch,
            path + " line " + std::to_string(line_no) + ": vector length " +
                std::to_string(e.vector.size()));
    }
    index.entries.push_back(std::move(e));
  }
  return index;
}

}  // namespace dlva
