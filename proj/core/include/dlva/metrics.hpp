#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dlva {

struct ConfusionMatrix {
  uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  uint64_t total() const { return tp + fp + tn + fn; }
};

ConfusionMatrix confusion(const std::vector<uint8_t>& predictions,
                          const std::vector<uint8_t>& truth);

double accuracy(const ConfusionMatrix& cm);           // (TP+TN)/total
double balanced_accuracy(const ConfusionMatrix& cm);  // (TPR+TNR)/2
double tpr(const ConfusionMatrix& cm);
double tnr(const ConfusionMatrix& cm);
double fpr(const ConfusionMatrix& cm);
double fnr(const ConfusionMatrix& cm);

// Area under the ROC curve via the trapezoidal sweep; equals the
// Mann-Whitney pair statistic with half credit for ties.
double auc(const std::vector<double>& scores, const std::vector<uint8_t>& truth);

struct MetricReport {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double tpr = 0.0, tnr = 0.0, fpr = 0.0, fnr = 0.0;
  std::optional<double> auc;
};

MetricReport report(const ConfusionMatrix& cm, const std::vector<double>* scores = nullptr,
                    const std::vector<uint8_t>* truth = nullptr);

// One decimal, round half up: 0.80648 -> "80.6%".
std::string render_percent(double fraction);
double round_percent(double fraction);  // the numeric value behind render_percent

std::string report_to_json(const ConfusionMatrix& cm, const MetricReport& r);

}  // namespace dlva
