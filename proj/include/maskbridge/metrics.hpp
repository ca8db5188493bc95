#pragma once

#include <optional>
#include <string>

#include "maskbridge/data.hpp"

namespace maskbridge {

// Reconstruction metrics split by mask region. PSNR uses peak 2.0 (the data
// range). Fields are absent instead of NaN when their pixel set is empty or
// their denominator vanishes.
struct EvalReport {
  std::optional<double> unmasked_mse;
  std::optional<double> unmasked_psnr;
  std::optional<double> masked_mse;
  // 1 - masked_mse(output, target) / masked_mse(source, target)
  std::optional<double> removal_ratio;
  // mean |frame-difference(output) - frame-difference(target)| over pixels
  // unmasked in both adjacent frames; absent for single-frame clips
  std::optional<double> temporal_consistency;
};

constexpr double kPsnrPeak = 2.0;

EvalReport evaluate(const Tensor& output, const RemovalTriplet& triplet);

std::string eval_csv_header();
std::string eval_csv_row(const std::string& id, int steps, const EvalReport& r);

}  // namespace maskbridge
