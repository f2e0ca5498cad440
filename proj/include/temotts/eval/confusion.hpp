#pragma once

// Speech-emotion-recognition bookkeeping: the SER model itself is external,
// this builds the confusion matrix from its label outputs.

#include <algorithm>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/core/common.hpp"

namespace temotts::eval {

inline const std::vector<std::string>& ser_classes() {
  static const std::vector<std::string> classes = {"anger", "happiness", "neutral", "sadness"};
  return classes;
}

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::size_t> counts;  // row-major, rows = true, cols = predicted

  std::size_t at(std::size_t t, std::size_t p) const { return counts[t * labels.size() + p]; }
  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
  double accuracy() const {
    const std::size_t n = total();
    if (n == 0) return 0.0;
    std::size_t diag = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) diag += at(i, i);
    return static_cast<double>(diag) / static_cast<double>(n);
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < labels.size(); ++j) row.push_back(at(i, j));
      rows.push_back(row);
    }
    return {{"labels", labels}, {"counts", rows}, {"accuracy", accuracy()}, {"total", total()}};
  }
};

inline ConfusionMatrix ser_confusion(const std::vector<std::string>& true_labels,
                                     const std::vector<std::string>& predicted_labels,
                                     const std::vector<std::string>& classes = ser_classes()) {
  if (true_labels.size() != predicted_labels.size())
    throw Error("ser_confusion: " + std::to_string(true_labels.size()) + " true vs " +
                std::to_string(predicted_labels.size()) + " predicted labels");
  ConfusionMatrix m;
  m.labels = classes;
  m.counts.assign(classes.size() * classes.size(), 0);
  auto index_of = [&](const std::string& label) {
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw Error("ser_confusion: unknown label '" + label + "'");
    return static_cast<std::size_t>(it - classes.begin());
  };
  for (std::size_t k = 0; k < true_labels.size(); ++k)
    m.counts[index_of(true_labels[k]) * classes.size() + index_of(predicted_labels[k])] += 1;
  return m;
}

}  // namespace temotts::eval
