#include "dlva/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

#include "dlva/error.hpp"

namespace dlva {

ConfusionMatrix confusion(const std::vector<uint8_t>& predictions,
                          const std::vector<uint8_t>& truth) {
  if (predictions.size() != truth.size()) {
    raise(ErrorKind::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                         std::to_string(truth.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (truth[i]) {
      predictions[i] ? ++cm.tp : ++cm.fn;
    } else {
      predictions[i] ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) raise(ErrorKind::EmptyMatrix, "no outcomes counted");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

double tpr(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0) raise(ErrorKind::DegenerateClass, "no positives");
  return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
}

double tnr(const ConfusionMatrix& cm) {
  if (cm.tn + cm.fp == 0) raise(ErrorKind::DegenerateClass, "no negatives");
  return static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
}

double fpr(const ConfusionMatrix& cm) { return 1.0 - tnr(cm); }

double fnr(const ConfusionMatrix& cm) { return 1.0 - tpr(cm); }

double balanced_accuracy(const ConfusionMatrix& cm) { return (tpr(cm) + tnr(cm)) / 2.0; }

double auc(const std::vector<double>& scores, const std::vector<uint8_t>& truth) {
  if (scores.size() != truth.size()) {
    raise(ErrorKind::LengthMismatch, "scores vs labels");
  }
  uint64_t pos = 0, neg = 0;
  for (uint8_t t : truth) (t ? pos : neg)++;
  if (pos == 0 || neg == 0) raise(ErrorKind::DegenerateClass, "both classes required for AUC");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  // sweep thresholds from high to low, advancing over tied scores as a group
  double area = 0.0;
  uint64_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    uint64_t dp = 0, dn = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      truth[order[j]] ? ++dp : ++dn;
      ++j;
    }
    const double tpr0 = static_cast<double>(tp) / static_cast<double>(pos);
    tp += dp;
    fp += dn;
    const double tpr1 = static_cast<double>(tp) / static_cast<double>(pos);
    area += (static_cast<double>(dn) / static_cast<double>(neg)) * (tpr0 + tpr1) / 2.0;
    i = j;
  }
  return area;
}

MetricReport report(const ConfusionMatrix& cm, const std::vector<double>* scores,
                    const std::vector<uint8_t>* truth) {
  MetricReport r;
  r.accuracy = accuracy(cm);
  r.tpr = tpr(cm);
  r.tnr = tnr(cm);
  r.fpr = fpr(cm);
  r.fnr = fnr(cm);
  r.balanced_accuracy = (r.tpr + r.tnr) / 2.0;
  if (scores && truth) r.auc = auc(*scores, *truth);
  return r;
}

double round_percent(double fraction) {
  return std::floor(fraction * 1000.0 + 0.5) / 10.0;
}

std::string render_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", round_percent(fraction));
  return buf;
}

std::string report_to_json(const ConfusionMatrix& cm, const MetricReport& r) {
  nlohmann::json j;
  j["tp"] = cm.tp;
  j["fp"] = cm.fp;
  j["tn"] = cm.tn;
  j["fn"] = cm.fn;
  j["accuracy"] = r.accuracy;
  j["balanced_accuracy"] = r.balanced_accuracy;
  j["tpr"] = r.tpr;
  j["tnr"] = r.tnr;
  j["fpr"] = r.fpr;
  j["fnr"] = r.fnr;
  if (r.auc.has_value()) j["auc"] = *r.auc;
  // the two accuracy conventions disagree on imbalanced data; callers pick
  // the one matching their table family
  j["accuracy_note"] = "accuracy is (TP+TN)/total; balanced_accuracy is (TPR+TNR)/2";
  return j.dump();
}

}  // namespace dlva
