#include "satsplat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "satsplat/errors.hpp"

namespace satsplat {
namespace {

// Indices sorted by descending confidence, stable on ties.
template <typename GetConf>
std::vector<std::size_t> rank_by_confidence(std::size_t n, GetConf conf) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return conf(a) > conf(b); });
  return order;
}

std::vector<double> gaussian_window() {
  constexpr int kSize = 11;
  constexpr double kSigma = 1.5;
  std::vector<double> w(kSize);
  double sum = 0.0;
  for (int i = 0; i < kSize; ++i) {
    const double d = i - kSize / 2;
    w[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Valid-mode separable filtering of a single-channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int width, int height,
                                 const std::vector<double>& kernel) {
  const int k = static_cast<int>(kernel.size());
  const int ow = width - k + 1;
  const int oh = height - k + 1;
  std::vector<double> horiz(static_cast<std::size_t>(ow) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) {
        acc += kernel[static_cast<std::size_t>(i)] *
               plane[static_cast<std::size_t>(y) * width + x + i];
      }
      horiz[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) {
        acc += kernel[static_cast<std::size_t>(i)] *
               horiz[static_cast<std::size_t>(y + i) * ow + x];
      }
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

void require_same_size(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionMismatch("image sizes differ: " + std::to_string(a.width()) + "x" +
                            std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                            "x" + std::to_string(b.height()));
  }
}

}  // namespace

MatchResult match_predictions(std::span<const Detection> preds, std::span<const Detection> gt,
                              double iou_thresh) {
  MatchResult out{std::vector<bool>(preds.size(), false), std::vector<bool>(gt.size(), false)};
  const auto order =
      rank_by_confidence(preds.size(), [&](std::size_t i) { return preds[i].confidence; });
  for (std::size_t p : order) {
    double best = -1.0;
    std::size_t best_gt = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (out.gt_matched[g]) continue;
      const double overlap = iou(preds[p].bbox, gt[g].bbox);
      if (overlap > best) {
        best = overlap;
        best_gt = g;
      }
    }
    if (best_gt < gt.size() && best >= iou_thresh) {
      out.gt_matched[best_gt] = true;
      out.pred_tp[p] = true;
    }
  }
  return out;
}

std::optional<double> average_precision(std::span<const ScoredFlag> flags, std::size_t n_gt) {
  if (n_gt == 0) {
    if (flags.empty()) return std::nullopt;
    return 0.0;
  }
  if (flags.empty()) return 0.0;
  const auto order =
      rank_by_confidence(flags.size(), [&](std::size_t i) { return flags[i].confidence; });
  std::vector<long double> precision(flags.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (flags[order[k]].true_positive) ++tp;
    precision[k] = static_cast<long double>(tp) / static_cast<long double>(k + 1);
  }
  for (std::size_t k = precision.size() - 1; k > 0; --k) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  // Recall advances by 1 / n_gt at every true positive.
  long double sum = 0.0L;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (flags[order[k]].true_positive) sum += precision[k];
  }
  const double ap = static_cast<double>(sum / static_cast<long double>(n_gt));
  return ap;
}

std::vector<PRPoint> pr_sweep(std::span<const ScoredFlag> flags, std::size_t n_gt) {
  const auto order =
      rank_by_confidence(flags.size(), [&](std::size_t i) { return flags[i].confidence; });
  std::vector<PRPoint> points;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const ScoredFlag& f = flags[order[k]];
    if (f.true_positive) ++tp;
    const bool last_of_level =
        k + 1 == order.size() || flags[order[k + 1]].confidence != f.confidence;
    if (!last_of_level) continue;
    PRPoint p;
    p.confidence = f.confidence;
    p.precision = static_cast<double>(tp) / static_cast<double>(k + 1);
    p.recall = n_gt ? static_cast<double>(tp) / static_cast<double>(n_gt) : 0.0;
    points.push_back(p);
  }
  return points;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50.0 + 5.0 * i) / 100.0);
  return t;
}

EvalReport evaluate(std::span<const ViewDetections> pred_views,
                    std::span<const ViewDetections> gt_views,
                    std::span<const double> iou_thresholds) {
  const auto it50 = std::find_if(iou_thresholds.begin(), iou_thresholds.end(),
                                 [](double t) { return std::abs(t - 0.5) < 1e-12; });
  if (it50 == iou_thresholds.end()) throw ConfigError("IoU thresholds must include 0.5");
  const std::size_t idx50 = static_cast<std::size_t>(it50 - iou_thresholds.begin());

  std::map<std::string, std::size_t> gt_index;
  for (std::size_t i = 0; i < gt_views.size(); ++i) gt_index.emplace(gt_views[i].view_id, i);
  std::vector<std::vector<Detection>> preds_for_gt(gt_views.size());
  for (const ViewDetections& pv : pred_views) {
    const auto found = gt_index.find(pv.view_id);
    if (found == gt_index.end()) {
      throw MismatchedViews("prediction view '" + pv.view_id + "' has no ground truth");
    }
    auto& bucket = preds_for_gt[found->second];
    bucket.insert(bucket.end(), pv.detections.begin(), pv.detections.end());
  }

  const std::size_t nt = iou_thresholds.size();
  EvalReport report;
  report.iou_thresholds.assign(iou_thresholds.begin(), iou_thresholds.end());
  report.true_positives.assign(nt, 0);
  report.false_positives.assign(nt, 0);
  std::vector<ScoredFlag> pooled50;

  for (ClassId cls : kAllClasses) {
    auto& class_ap = report.ap[static_cast<std::size_t>(to_int(cls))];
    class_ap.assign(nt, std::nullopt);
    for (std::size_t ti = 0; ti < nt; ++ti) {
      std::vector<ScoredFlag> flags;
      std::size_t n_gt = 0;
      for (std::size_t v = 0; v < gt_views.size(); ++v) {
        std::vector<Detection> p, g;
        for (const Detection& d : preds_for_gt[v]) {
          if (d.class_id == cls) p.push_back(d);
        }
        for (const Detection& d : gt_views[v].detections) {
          if (d.class_id == cls) g.push_back(d);
        }
        n_gt += g.size();
        const MatchResult m = match_predictions(p, g, iou_thresholds[ti]);
        for (std::size_t k = 0; k < p.size(); ++k) {
          flags.push_back({p[k].confidence, m.pred_tp[k]});
        }
      }
      for (const ScoredFlag& f : flags) {
        ++(f.true_positive ? report.true_positives[ti] : report.false_positives[ti]);
      }
      class_ap[ti] = average_precision(flags, n_gt);
      if (ti == idx50) {
        pooled50.insert(pooled50.end(), flags.begin(), flags.end());
        report.n_ground_truth += n_gt;
        report.n_predictions += flags.size();
      }
    }
  }

  report.map_per_threshold.assign(nt, 0.0);
  double total = 0.0;
  std::size_t total_count = 0;
  for (std::size_t ti = 0; ti < nt; ++ti) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& class_ap : report.ap) {
      if (class_ap[ti]) {
        sum += *class_ap[ti];
        ++count;
      }
    }
    report.map_per_threshold[ti] = count ? sum / static_cast<double>(count) : 0.0;
    total += sum;
    total_count += count;
  }
  report.map50 = report.map_per_threshold[idx50];
  report.map50_95 = total_count ? total / static_cast<double>(total_count) : 0.0;

  double best_f1 = -1.0;
  for (const PRPoint& p : pr_sweep(pooled50, report.n_ground_truth)) {
    const double denom = p.precision + p.recall;
    const double f1 = denom > 0.0 ? 2.0 * p.precision * p.recall / denom : 0.0;
    if (f1 > best_f1) {
      best_f1 = f1;
      report.operating_point = p;
    }
  }
  return report;
}

EvalReport evaluate(std::span<const ViewDetections> pred_views,
                    std::span<const ViewDetections> gt_views) {
  const auto thresholds = coco_iou_thresholds();
  return evaluate(pred_views, gt_views, thresholds);
}

std::string EvalReport::to_json() const {
  using nlohmann::json;
  json classes = json::object();
  for (ClassId cls : kAllClasses) {
    json per = json::array();
    for (const auto& v : ap[static_cast<std::size_t>(to_int(cls))]) {
      per.push_back(v ? json(*v) : json(nullptr));
    }
    classes[class_name(cls)] = per;
  }
  json doc = {
      {"protocol",
       {{"ap_interpolation", "all-point (monotone precision envelope)"},
        {"matching", "greedy one-to-one by descending confidence, IoU >= threshold"},
        {"operating_point", "confidence maximizing F1 over all classes pooled at IoU 0.5"},
        {"empty_predictions", "precision reported as 0"},
        {"class_skipped_when", "no ground truth and no predictions"}}},
      {"iou_thresholds", iou_thresholds},
      {"ap", classes},
      {"map_per_threshold", map_per_threshold},
      {"map50", map50},
      {"map50_95", map50_95},
      {"precision", operating_point.precision},
      {"recall", operating_point.recall},
      {"operating_confidence", operating_point.confidence},
      {"n_predictions", n_predictions},
      {"n_ground_truth", n_ground_truth},
      {"true_positives", true_positives},
      {"false_positives", false_positives},
  };
  return doc.dump(1) + "\n";
}

std::string eval_csv(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "model,precision,recall,map50,map50_95\n";
  for (const auto& [label, r] : rows) {
    out << label << ',' << r.operating_point.precision << ',' << r.operating_point.recall << ','
        << r.map50 << ',' << r.map50_95 << '\n';
  }
  return out.str();
}

double ssim(const Image& a, const Image& b) {
  require_same_size(a, b);
  constexpr int kWindow = 11;
  if (a.width() < kWindow || a.height() < kWindow) {
    throw DimensionMismatch("SSIM needs images of at least 11x11 pixels");
  }
  constexpr double kC1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double kC2 = (0.03 * 1.0) * (0.03 * 1.0);
  const auto window = gaussian_window();
  const int w = a.width();
  const int h = a.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;

  double channel_sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> pa(n), pb(n), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = a.data()[i * 3 + static_cast<std::size_t>(c)];
      pb[i] = b.data()[i * 3 + static_cast<std::size_t>(c)];
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = filter_valid(pa, w, h, window);
    const auto mu_b = filter_valid(pb, w, h, window);
    const auto e_aa = filter_valid(aa, w, h, window);
    const auto e_bb = filter_valid(bb, w, h, window);
    const auto e_ab = filter_valid(ab, w, h, window);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double var_a = e_aa[i] - ma * ma;
      const double var_b = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      const double num = (2.0 * ma * mb + kC1) * (2.0 * cov + kC2);
      const double den = (ma * ma + mb * mb + kC1) * (var_a + var_b + kC2);
      sum += num / den;
    }
    channel_sum += sum / static_cast<double>(mu_a.size());
  }
  return channel_sum / 3.0;
}

double psnr(const Image& a, const Image& b) {
  require_same_size(a, b);
  if (a.data().empty()) throw DimensionMismatch("PSNR of empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.data().size());
  if (mse < 1e-12) return kPsnrCap;
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace satsplat
