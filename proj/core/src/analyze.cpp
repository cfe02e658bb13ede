#include "dlva/analyze.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <set>

#include "json.hpp"

#include "dlva/cfg.hpp"
#include "dlva/error.hpp"
#include "dlva/parallel.hpp"

namespace dlva {

namespace fs = std::filesystem;

VulnerabilityModel* ModelSet::find(const std::string& vulnerability, SizeClass size_class) {
  for (auto& m : models) {
    if (m.vulnerability == vulnerability && m.size_class == size_class) return &m;
  }
  return nullptr;
}

std::vector<std::string> ModelSet::vulnerabilities(SizeClass size_class) const {
  std::vector<std::string> out;
  for (const auto& m : models) {
    if (m.size_class == size_class) out.push_back(m.vulnerability);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ModelSet ModelSet::load_dir(const std::string& dir) {
  ModelSet set;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".dlva") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) set.models.push_back(load_model(p.string()));
  return set;
}

const TrainingIndex* IndexSet::find(const std::string& vulnerability, size_t dimension) const {
  for (const auto& idx : indices) {
    if (idx.vulnerability == vulnerability && idx.dimension == dimension) return &idx;
  }
  return nullptr;
}

IndexSet IndexSet::load_dir(const std::string& dir) {
  IndexSet set;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) set.indices.push_back(read_index(p.string()));
  return set;
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::SD: return "SD";
    case Provenance::CC: return "CC";
    case Provenance::Unsupported: return "unsupported";
    case Provenance::Error: return "error";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// node features per distinct encoder, computed lazily
struct NodeCache {
  const ControlFlowGraph& cfg;
  const DisassemblyListing& listing;
  std::map<std::string, Tensor> by_encoder;

  const Tensor& get(VulnerabilityModel& model) {
    auto it = by_encoder.find(model.encoder_ref);
    if (it == by_encoder.end()) {
      it = by_encoder
               .emplace(model.encoder_ref,
                        encode_contract_nodes(cfg, listing, model.vocab, model.encoder))
               .first;
    }
    return it->second;
  }
};

}  // namespace

AnalysisRow analyze(const ContractRecord& record, ModelSet& models, const IndexSet* indices,
                    const SiblingConfig& sibling_config) {
  AnalysisRow row;
  row.address = record.address;
  const auto row_start = Clock::now();
  try {
    DisassemblyListing listing = disassemble(record.bytecode);
    SizeRoute route = route_by_size(listing);
    row.size_class = route.size_class;
    row.oversize_warning = route.oversize_warning;
    ControlFlowGraph cfg = build_cfg(listing);
    row.cfg_nodes = cfg.nodes.size();
    row.cfg_edges = cfg.edges.size();
    NodeCache cache{cfg, listing, {}};

    // every vulnerability any loaded model knows, resolved per size class
    std::set<std::string> vulns;
    for (const auto& m : models.models) vulns.insert(m.vulnerability);

    for (const std::string& vuln : vulns) {
      VerdictCell cell;
      cell.vulnerability = vuln;
      const auto cell_start = Clock::now();
      try {
        VulnerabilityModel* model = models.find(vuln, route.size_class);
        if (!model) {
          cell.provenance = Provenance::Unsupported;
        } else {
          ContractEmbedding emb =
              embed_contract(cfg, cache.get(*model), model->sc2v, model->size_class);
          const TrainingIndex* index =
              (indices && route.size_class == SizeClass::Large)
                  ? indices->find(vuln, emb.vector.size())
                  : nullptr;
          bool decided = false;
          if (index) {
            SiblingVerdict sv = sibling_lookup(emb.vector, *index, sibling_config);
            if (sv.outcome != SiblingOutcome::Unknown) {
              cell.provenance = Provenance::SD;
              cell.vulnerable = sv.outcome == SiblingOutcome::Vulnerable;
              cell.sibling = std::move(sv);
              decided = true;
            }
          }
          if (!decided) {
            const float p = cc_forward(emb.vector, model->cc);
            cell.provenance = Provenance::CC;
            cell.probability = p;
            cell.vulnerable = classify(p, model->threshold) == Verdict::Vulnerable;
          }
        }
      } catch (const std::exception& e) {
        cell.provenance = Provenance::Error;
        cell.error = e.what();
      }
      cell.millis = ms_since(cell_start);
      row.cells.push_back(std::move(cell));
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  row.total_millis = ms_since(row_start);
  return row;
}

std::vector<AnalysisRow> analyze_batch(const std::vector<ContractRecord>& records,
                                       ModelSet& models, const IndexSet* indices,
                                       const SiblingConfig& sibling_config) {
  std::vector<AnalysisRow> rows(records.size());
  parallel_for(records.size(), 2, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      rows[i] = analyze(records[i], models, indices, sibling_config);
    }
  });
  return rows;
}

std::string analysis_to_json(const std::vector<AnalysisRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const AnalysisRow& row : rows) {
    nlohmann::json r;
    r["address"] = row.address;
    r["size_class"] = size_class_name(row.size_class);
    if (row.oversize_warning) r["oversize_warning"] = true;
    r["cfg_nodes"] = row.cfg_nodes;
    r["cfg_edges"] = row.cfg_edges;
    r["millis"] = row.total_millis;
    if (!row.error.empty()) {
      r["error"] = row.error;
      out.push_back(std::move(r));
      continue;
    }
    nlohmann::json cells = nlohmann::json::array();
    for (const VerdictCell& c : row.cells) {
      nlohmann::json cj;
      cj["vulnerability"] = c.vulnerability;
      cj["provenance"] = provenance_name(c.provenance);
      if (c.provenance == Provenance::SD || c.provenance == Provenance::CC) {
        cj["vulnerable"] = c.vulnerable;
      }
      if (c.probability.has_value()) cj["probability"] = *c.probability;
      if (c.sibling.has_value()) {
        nlohmann::json sj;
        sj["outcome"] = sibling_outcome_name(c.sibling->outcome);
        if (c.sibling->band_threshold.has_value()) sj["band_threshold"] = *c.sibling->band_threshold;
        nlohmann::json voters = nlohmann::json::array();
        for (const Voter& v : c.sibling->voters) {
          voters.push_back({{"id", v.id}, {"distance", v.distance}, {"label", v.label}});
        }
        sj["voters"] = std::move(voters);
        cj["sibling"] = std::move(sj);
      }
      if (!c.error.empty()) cj["error"] = c.error;
      cj["millis"] = c.millis;
      cells.push_back(std::move(cj));
    }
    r["verdicts"] = std::move(cells);
    out.push_back(std::move(r));
  }
  return out.dump(2);
}

EvalMode eval_mode_from_name(const std::string& name) {
  if (name == "cc-only") return EvalMode::CcOnly;
  if (name == "sd-easy") return EvalMode::SdEasy;
  if (name == "cc-hard") return EvalMode::CcHard;
  if (name == "sd+cc") return EvalMode::SdCc;
  raise(ErrorKind::Internal, "unknown evaluation mode " + name);
}

const char* eval_mode_name(EvalMode m) {
  switch (m) {
    case EvalMode::CcOnly: return "cc-only";
    case EvalMode::SdEasy: return "sd-easy";
    case EvalMode::CcHard: return "cc-hard";
    case EvalMode::SdCc: return "sd+cc";
  }
  return "?";
}

std::vector<EvalRow> evaluate(const std::vector<ContractRecord>& records, ModelSet& models,
                              const IndexSet* indices, EvalMode mode,
                              const SiblingConfig& sibling_config) {
  struct Prepared {
    DisassemblyListing listing;
    ControlFlowGraph cfg;
    SizeRoute route;
    std::map<std::string, Tensor> nodes_by_encoder;
  };
  std::vector<Prepared> prep(records.size());
  parallel_for(records.size(), 2, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      prep[i].listing = disassemble(records[i].bytecode);
      prep[i].cfg = build_cfg(prep[i].listing);
      prep[i].route = route_by_size(prep[i].listing);
    }
  });

  std::set<std::string> vulns;
  for (const auto& m : models.models) vulns.insert(m.vulnerability);

  std::vector<EvalRow> rows;
  for (const std::string& vuln : vulns) {
    struct Cellwise {
      bool in_population = false;
      uint8_t pred = 0;
      uint8_t label = 0;
      bool has_score = false;
      double score = 0.0;
    };
    std::vector<Cellwise> cells(records.size());

    parallel_for(records.size(), 2, [&](size_t lo, size_t hi) {
      for (size_t i = lo; i < hi; ++i) {
        Prepared& p = prep[i];
        VulnerabilityModel* model = models.find(vuln, p.route.size_class);
        if (!model) continue;  // unsupported (vulnerability, size class) cell
        auto lit = records[i].labels.find(vuln);
        if (lit == records[i].labels.end()) {
          raise(ErrorKind::MissingLabels, records[i].address + " lacks label " + vuln);
        }
        auto nit = p.nodes_by_encoder.find(model->encoder_ref);
        if (nit == p.nodes_by_encoder.end()) {
          nit = p.nodes_by_encoder
                    .emplace(model->encoder_ref, encode_contract_nodes(p.cfg, p.listing,
                                                                       model->vocab, model->encoder))
                    .first;
        }
        ContractEmbedding emb = embed_contract(p.cfg, nit->second, model->sc2v, model->size_class);

        const TrainingIndex* index =
            (indices && p.route.size_class == SizeClass::Large)
                ? indices->find(vuln, emb.vector.size())
                : nullptr;
        std::optional<SiblingVerdict> sv;
        if (index && mode != EvalMode::CcOnly) {
          sv = sibling_lookup(emb.vector, *index, sibling_config);
        }
        const bool sd_judged = sv.has_value() && sv->outcome != SiblingOutcome::Unknown;

        Cellwise& cell = cells[i];
        cell.label = lit->second;
        switch (mode) {
          case EvalMode::CcOnly:
            cell.in_population = true;
            break;
          case EvalMode::SdEasy:
            cell.in_population = sd_judged;
            break;
          case EvalMode::CcHard:
            cell.in_population = !sd_judged;
            break;
          case EvalMode::SdCc:
            cell.in_population = true;
            break;
        }
        if (!cell.in_population) continue;
        if (sd_judged && mode != EvalMode::CcHard) {
          cell.pred = sv->outcome == SiblingOutcome::Vulnerable ? 1 : 0;
        } else {
          const float prob = cc_forward(emb.vector, model->cc);
          cell.pred = classify(prob, model->threshold) == Verdict::Vulnerable ? 1 : 0;
          cell.has_score = true;
          cell.score = prob;
        }
      }
    });

    EvalRow row;
    row.vulnerability = vuln;
    std::vector<double> scores;
    std::vector<uint8_t> score_truth;
    bool all_scored = true;
    for (const Cellwise& c : cells) {
      if (!c.in_population) continue;
      row.population++;
      if (c.label) {
        c.pred ? ++row.cm.tp : ++row.cm.fn;
      } else {
        c.pred ? ++row.cm.fp : ++row.cm.tn;
      }
      if (c.has_score) {
        scores.push_back(c.score);
        score_truth.push_back(c.label);
      } else {
        all_scored = false;
      }
    }
    if (row.population == 0) continue;  // no model for any routed class
    row.metrics.accuracy = accuracy(row.cm);
    const bool has_pos = row.cm.tp + row.cm.fn > 0;
    const bool has_neg = row.cm.tn + row.cm.fp > 0;
    if (has_pos) {
      row.metrics.tpr = tpr(row.cm);
      row.metrics.fnr = fnr(row.cm);
    }
    if (has_neg) {
      row.metrics.tnr = tnr(row.cm);
      row.metrics.fpr = fpr(row.cm);
    }
    if (has_pos && has_neg) {
      row.metrics.balanced_accuracy = balanced_accuracy(row.cm);
      if (all_scored && !scores.empty()) {
        row.metrics.auc = auc(scores, score_truth);
        row.has_auc = true;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_eval_table(const std::vector<EvalRow>& rows, bool balanced) {
  char line[512];
  std::string out;
  std::snprintf(line, sizeof line, "%-28s %9s %7s %7s %8s %6s %9s %7s %7s %7s %7s %7s\n",
                "Vulnerability", "Test size", "TP", "FP", "TN", "FN", "Accuracy", "TPR", "TNR",
                "FPR", "FNR", "AUC");
  out += line;
  for (const EvalRow& r : rows) {
    const double acc = balanced ? r.metrics.balanced_accuracy : r.metrics.accuracy;
    std::snprintf(line, sizeof line,
                  "%-28s %9zu %7llu %7llu %8llu %6llu %9s %7s %7s %7s %7s %7s\n",
                  r.vulnerability.c_str(), r.population,
                  static_cast<unsigned long long>(r.cm.tp),
                  static_cast<unsigned long long>(r.cm.fp),
                  static_cast<unsigned long long>(r.cm.tn),
                  static_cast<unsigned long long>(r.cm.fn), render_percent(acc).c_str(),
                  render_percent(r.metrics.tpr).c_str(), render_percent(r.metrics.tnr).c_str(),
                  render_percent(r.metrics.fpr).c_str(), render_percent(r.metrics.fnr).c_str(),
                  r.has_auc ? render_percent(*r.metrics.auc).c_str() : "-");
    out += line;
  }
  out += balanced ? "(Accuracy column: balanced, (TPR+TNR)/2)\n"
                  : "(Accuracy column: plain, (TP+TN)/total)\n";
  return out;
}

std::string eval_to_json(const std::vector<EvalRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const EvalRow& r : rows) {
    nlohmann::json j = nlohmann::json::parse(report_to_json(r.cm, r.metrics));
    j["vulnerability"] = r.vulnerability;
    j["test_size"] = r.population;
    out.push_back(std::move(j));
  }
  return out.dump(2);
}

}  // namespace dlva
