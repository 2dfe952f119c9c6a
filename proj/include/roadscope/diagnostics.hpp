#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roadscope/dataset.hpp"
#include "roadscope/maskgen.hpp"
#include "roadscope/nn/model.hpp"
#include "roadscope/nn/train.hpp"

namespace roadscope {

struct ConfusionMatrix {
    // rows = true class, cols = predicted
    std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

    void add(int true_cls, int pred_cls) { counts[true_cls][pred_cls] += 1; }
    std::int64_t total() const;
    std::int64_t trace() const;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsRow {
    std::string scenario;
    std::int64_t n = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::array<ClassMetrics, kNumClasses> per_class{};
};

// accuracy = trace/total; per-class P/R/F1 with 0/0 defined as 0;
// macro F1 = unweighted mean.
MetricsRow compute_metrics(const ConfusionMatrix& cm, const std::string& scenario = "");

struct EvalOptions {
    int input_size = 128;
    int threads = 1;
    std::string base_dir = ".";  // manifest paths are relative to this
};

// Argmax evaluation over a manifest; tiles are masked on the fly per
// mask_mode before inference. Ties break toward the lower class index.
ConfusionMatrix evaluate(const nn::Model& model, const std::vector<ManifestEntry>& entries,
                         MaskMode mask_mode, const EvalOptions& opts);

struct ExperimentConfig {
    nn::ModelSpec spec;
    nn::TrainConfig train;
    int threads = 1;
    std::string base_dir = ".";
};

struct MaskingScenario {
    std::string label;   // "none" | "context_occluded" | "road_occluded"
    MaskMode kept_mode;  // what the model sees
    MetricsRow row;
    nn::Model model;
};

struct MaskingResult {
    std::array<MaskingScenario, 3> scenarios;
    std::string init_digest;  // identical across scenarios by construction
};

// Trains three models from the same seed/init, one per masking scenario,
// each evaluated on the matching-scenario test set.
MaskingResult run_masking_experiment(const std::vector<ManifestEntry>& train_entries,
                                     const std::vector<ManifestEntry>& test_entries,
                                     const ExperimentConfig& cfg);

struct TransferCell {
    std::string train_country;
    std::string test_country;
    MetricsRow row;
};

struct TransferResult {
    std::array<TransferCell, 4> cells;  // AA, AB, BB, BA
};

TransferResult run_transfer_experiment(const std::vector<ManifestEntry>& entries_a,
                                       const std::vector<ManifestEntry>& entries_b,
                                       const ExperimentConfig& cfg);

struct CamHeatmap {
    RoadClass cls = RoadClass::Major;
    int grid_size = 0;                // feature-map resolution (square)
    std::vector<float> grid;          // normalized to [0,1]; flat maps -> all zero
    int upsampled_size = 0;
    std::vector<float> upsampled;     // bilinear, tile resolution
};

// CAM_c(x,y) = sum_k w[c][k] * F_k(x,y) over the feature maps entering
// GlobalAvgPool; requires the GAP -> Dense(3) -> Softmax tail.
CamHeatmap cam(const nn::Model& model, const std::vector<float>& input_chw, int input_size,
               RoadClass cls, int upsample_to);

// Fraction of heatmap mass inside mask=1 pixels; 0 for an all-zero map.
double cam_locality(const std::vector<float>& heatmap, int heatmap_size, const Mask& mask);

enum class ReportFormat { csv, markdown };

struct ReportMeta {
    std::uint64_t seed = 0;
    std::string config_digest;
    // free-form annotation lines, e.g. paper reference values that are
    // reported for shape only
    std::vector<std::string> notes;
};

// Stable column order: scenario, n, accuracy, macro_f1, per-class P/R/F1.
// Markdown renders rates as percentages; CSV keeps raw decimals.
void emit_report(const std::vector<MetricsRow>& rows, ReportFormat format,
                 const std::string& path, const ReportMeta& meta);

// JSON form used by the `report` subcommand for re-rendering.
void write_report_json(const std::vector<MetricsRow>& rows, const std::string& path,
                       const ReportMeta& meta);
std::vector<MetricsRow> read_report_json(const std::string& path, ReportMeta* meta = nullptr);

}  // namespace roadscope
