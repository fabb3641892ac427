#pragma once

// Hamming loss, micro precision/recall/F1, and frequency-band micro-F1.
// Matrices are example-by-label indicators; column j corresponds to label
// id j, which is the frequency rank by construction.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "seq2label/common.hpp"

namespace seq2label {

struct BinaryLabelMatrix {
  Dim rows = 0;
  Dim cols = 0;
  std::vector<std::uint8_t> v;

  BinaryLabelMatrix() = default;
  BinaryLabelMatrix(Dim r, Dim c) : rows(r), cols(c), v(static_cast<std::size_t>(r * c), 0) {}

  std::uint8_t at(Dim i, Dim j) const { return v[static_cast<std::size_t>(i * cols + j)]; }
  void set(Dim i, Dim j, bool on) { v[static_cast<std::size_t>(i * cols + j)] = on ? 1 : 0; }
};

inline thread_local std::uint64_t g_metric_warnings = 0;

inline std::vector<std::uint8_t> to_binary(const std::vector<std::int32_t>& ids, Dim n_labels) {
  std::vector<std::uint8_t> row(static_cast<std::size_t>(n_labels), 0);
  for (std::int32_t id : ids) {
    if (id < 0 || id >= n_labels)
      throw std::invalid_argument("to_binary: label id " + std::to_string(id) +
                                  " outside " + std::to_string(n_labels) + " labels");
    row[static_cast<std::size_t>(id)] = 1;
  }
  return row;
}

inline void check_same_shape(const BinaryLabelMatrix& a, const BinaryLabelMatrix& b,
                             const char* op) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument(std::string(op) + ": prediction and gold shapes differ");
}

// mean over examples of (mismatching labels / L)
inline double hamming_loss(const BinaryLabelMatrix& pred, const BinaryLabelMatrix& gold) {
  check_same_shape(pred, gold, "hamming_loss");
  if (pred.rows == 0) return 0.0;
  double total = 0;
  for (Dim i = 0; i < pred.rows; ++i) {
    Dim mismatches = 0;
    for (Dim j = 0; j < pred.cols; ++j)
      if (pred.at(i, j) != gold.at(i, j)) ++mismatches;
    total += static_cast<double>(mismatches) / static_cast<double>(pred.cols);
  }
  return total / static_cast<double>(pred.rows);
}

struct Prf {
  double p = 0, r = 0, f1 = 0;
};

// tp/fp/fn pooled over label columns in [col_lo, cols)
inline Prf micro_prf_from(const BinaryLabelMatrix& pred, const BinaryLabelMatrix& gold,
                          Dim col_lo) {
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (Dim i = 0; i < pred.rows; ++i)
    for (Dim j = col_lo; j < pred.cols; ++j) {
      const bool p = pred.at(i, j), g = gold.at(i, j);
      tp += (p && g);
      fp += (p && !g);
      fn += (!p && g);
    }
  Prf out;
  if (tp + fp == 0) ++g_metric_warnings;
  else out.p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn == 0) ++g_metric_warnings;
  else out.r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (2 * tp + fp + fn > 0)
    out.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  return out;
}

inline Prf micro_prf(const BinaryLabelMatrix& pred, const BinaryLabelMatrix& gold) {
  check_same_shape(pred, gold, "micro_prf");
  return micro_prf_from(pred, gold, 0);
}

// micro-F1 over labels of frequency rank > k only
inline double band_micro_f1(const BinaryLabelMatrix& pred, const BinaryLabelMatrix& gold,
                            Dim k) {
  check_same_shape(pred, gold, "band_micro_f1");
  if (k < 0 || k >= pred.cols)
    throw std::invalid_argument("band_micro_f1: k=" + std::to_string(k) +
                                " must be in [0, " + std::to_string(pred.cols) + ")");
  return micro_prf_from(pred, gold, k).f1;
}

struct EvalReport {
  double hl = 0, p = 0, r = 0, f1 = 0;
  std::map<int, double> band_f1;  // keyed by excluded top-k

  std::string to_kv() const {
    char buf[64];
    std::string out;
    auto put = [&](const std::string& key, double v) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += key + " = " + buf + "\n";
    };
    put("hl", hl);
    put("p", p);
    put("r", r);
    put("f1", f1);
    for (const auto& [k, v] : band_f1) put("band_f1_k" + std::to_string(k), v);
    return out;
  }
};

inline EvalReport evaluate_matrices(const BinaryLabelMatrix& pred,
                                    const BinaryLabelMatrix& gold,
                                    const std::vector<int>& bands = {}) {
  EvalReport rep;
  rep.hl = hamming_loss(pred, gold);
  const Prf prf = micro_prf(pred, gold);
  rep.p = prf.p;
  rep.r = prf.r;
  rep.f1 = prf.f1;
  for (int k : bands) rep.band_f1[k] = band_micro_f1(pred, gold, k);
  return rep;
}

}  // namespace seq2label
