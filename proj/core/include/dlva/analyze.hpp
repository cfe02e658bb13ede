#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dlva/dataset.hpp"
#include "dlva/metrics.hpp"
#include "dlva/model.hpp"
#include "dlva/sibling.hpp"

namespace dlva {

// All loaded detectors, addressable by (vulnerability, size class).
struct ModelSet {
  std::vector<VulnerabilityModel> models;

  VulnerabilityModel* find(const std::string& vulnerability, SizeClass size_class);
  std::vector<std::string> vulnerabilities(SizeClass size_class) const;
  static ModelSet load_dir(const std::string& dir);
};

// Sibling indices keyed by vulnerability; the dimension picks the class.
struct IndexSet {
  std::vector<TrainingIndex> indices;

  const TrainingIndex* find(const std::string& vulnerability, size_t dimension) const;
  static IndexSet load_dir(const std::string& dir);
};

enum class Provenance : uint8_t { SD, CC, Unsupported, Error };
const char* provenance_name(Provenance p);

struct VerdictCell {
  std::string vulnerability;
  Provenance provenance = Provenance::Unsupported;
  bool vulnerable = false;
  std::optional<float> probability;      // CC path only
  std::optional<SiblingVerdict> sibling; // SD evidence when consulted
  double millis = 0.0;
  std::string error;
};

struct AnalysisRow {
  std::string address;
  SizeClass size_class = SizeClass::Large;
  bool oversize_warning = false;
  size_t cfg_nodes = 0;
  size_t cfg_edges = 0;
  std::vector<VerdictCell> cells;
  double total_millis = 0.0;
  std::string error;  // nonempty when the contract itself failed
};

// Sibling lookup first (large class only), classifier when the sibling
// detector answers Unknown.
AnalysisRow analyze(const ContractRecord& record, ModelSet& models, const IndexSet* indices,
                    const SiblingConfig& sibling_config = {});

// Parallel across contracts; one bad contract yields an error row, never an
// aborted batch. Output order follows input order.
std::vector<AnalysisRow> analyze_batch(const std::vector<ContractRecord>& records,
                                       ModelSet& models, const IndexSet* indices,
                                       const SiblingConfig& sibling_config = {});

std::string analysis_to_json(const std::vector<AnalysisRow>& rows);

enum class EvalMode : uint8_t { CcOnly, SdEasy, CcHard, SdCc };
EvalMode eval_mode_from_name(const std::string& name);
const char* eval_mode_name(EvalMode m);

struct EvalRow {
  std::string vulnerability;
  size_t population = 0;
  ConfusionMatrix cm;
  MetricReport metrics;
  bool has_auc = false;
};

// Per-vulnerability confusion matrices for the selected decision path.
// CcOnly scores every labeled contract with the classifier; SdEasy keeps the
// contracts the sibling detector can judge; CcHard the complement; SdCc the
// composition.
std::vector<EvalRow> evaluate(const std::vector<ContractRecord>& records, ModelSet& models,
                              const IndexSet* indices, EvalMode mode,
                              const SiblingConfig& sibling_config = {});

// Aligned text table: Test size, TP, FP, TN, FN, Accuracy, TPR, TNR, FPR,
// FNR[, AUC]. `balanced` picks which accuracy convention fills the Accuracy
// column; both appear in the JSON form.
std::string render_eval_table(const std::vector<EvalRow>& rows, bool balanced);
std::string eval_to_json(const std::vector<EvalRow>& rows);

}  // namespace dlva
