#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satsplat/detections.hpp"
#include "satsplat/image.hpp"

namespace satsplat {

struct MatchResult {
  std::vector<bool> pred_tp;     // indexed like the input predictions
  std::vector<bool> gt_matched;  // indexed like the input ground truth
};

// Greedy one-to-one matching. Predictions are visited by descending
// confidence (input order on ties); each takes the unmatched ground truth of
// highest IoU (lowest index on ties) if that IoU >= iou_thresh.
MatchResult match_predictions(std::span<const Detection> preds, std::span<const Detection> gt,
                              double iou_thresh);

struct ScoredFlag {
  double confidence = 0.0;
  bool true_positive = false;
};

// All-point interpolated AP: precision is replaced by its running maximum
// from the right and integrated over recall steps. Ranking is by descending
// confidence, input order on ties. Returns nullopt when n_gt == 0 and there
// are no predictions (class excluded from the mean), 0 when n_gt == 0 and
// predictions exist.
std::optional<double> average_precision(std::span<const ScoredFlag> flags, std::size_t n_gt);

struct PRPoint {
  double precision = 0.0;
  double recall = 0.0;
  double confidence = 0.0;
};

// Precision/recall when keeping predictions with confidence >= c, for each
// distinct confidence c in descending order.
std::vector<PRPoint> pr_sweep(std::span<const ScoredFlag> flags, std::size_t n_gt);

// 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

struct EvalReport {
  std::vector<double> iou_thresholds;
  // ap[class][threshold]; nullopt when the class has neither ground truth
  // nor predictions.
  std::array<std::vector<std::optional<double>>, kNumClasses> ap;
  // Mean over classes at each threshold.
  std::vector<double> map_per_threshold;
  double map50 = 0.0;
  double map50_95 = 0.0;
  // Pooled over classes at IoU 0.5, at the confidence maximizing F1.
  PRPoint operating_point;
  std::size_t n_predictions = 0;
  std::size_t n_ground_truth = 0;
  // Pooled TP/FP counts per threshold over all confidences.
  std::vector<std::size_t> true_positives;
  std::vector<std::size_t> false_positives;

  std::string to_json() const;
};

// Views are paired by id. Every prediction view must have a ground-truth
// view (MismatchedViews otherwise); ground-truth views without predictions
// count as empty predictions. iou_thresholds must contain 0.5.
EvalReport evaluate(std::span<const ViewDetections> pred_views,
                    std::span<const ViewDetections> gt_views,
                    std::span<const double> iou_thresholds);
EvalReport evaluate(std::span<const ViewDetections> pred_views,
                    std::span<const ViewDetections> gt_views);

// One CSV row per report: label, precision, recall, mAP@0.5, mAP@0.5:0.95.
std::string eval_csv(const std::vector<std::pair<std::string, EvalReport>>& rows);

inline constexpr double kPsnrCap = 99.0;

// Mean local SSIM over valid 11x11 Gaussian windows (sigma 1.5), k1 0.01,
// k2 0.03, dynamic range 1, per channel and averaged over channels.
double ssim(const Image& a, const Image& b);
// 10 log10(1 / MSE) over all channels; kPsnrCap when MSE < 1e-12.
double psnr(const Image& a, const Image& b);

}  // namespace satsplat
