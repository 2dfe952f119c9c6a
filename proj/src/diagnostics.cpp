#include "roadscope/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "roadscope/error.hpp"
#include "roadscope/fsutil.hpp"
#include "roadscope/nn/image.hpp"
#include "roadscope/parallel.hpp"
#include "roadscope/png_io.hpp"

namespace roadscope {

using nlohmann::json;
namespace fs = std::filesystem;

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
        for (auto v : row) t += v;
    return t;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t t = 0;
    for (int i = 0; i < kNumClasses; ++i) t += counts[i][i];
    return t;
}

MetricsRow compute_metrics(const ConfusionMatrix& cm, const std::string& scenario) {
    const std::int64_t total = cm.total();
    if (total == 0) fail(Errc::empty_matrix, "confusion matrix has no samples");

    MetricsRow row;
    row.scenario = scenario;
    row.n = total;
    row.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);

    double f1_sum = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        std::int64_t tp = cm.counts[c][c];
        std::int64_t fp = 0, fn = 0;
        for (int o = 0; o < kNumClasses; ++o) {
            if (o == c) continue;
            fp += cm.counts[o][c];
            fn += cm.counts[c][o];
        }
        // 0/0 ratios are defined as 0
        const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f1 =
            (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        row.per_class[c] = ClassMetrics{precision, recall, f1};
        f1_sum += f1;
    }
    row.macro_f1 = f1_sum / kNumClasses;
    return row;
}

namespace {

std::vector<float> load_entry_input(const ManifestEntry& e, MaskMode mask_mode,
                                    const std::string& base_dir, int input_size) {
    const std::string tile_path = (fs::path(base_dir) / e.tile_path).string();
    PngImage tile;
    try {
        tile = read_png(tile_path);
    } catch (const Error& err) {
        throw Error(err.code(),
                    "manifest line " + std::to_string(e.line_no) + ": " + err.what());
    }
    if (tile.channels != 3 || tile.width != tile.height)
        fail(Errc::schema_error, "manifest line " + std::to_string(e.line_no) +
                                     ": tile must be square RGB: " + tile_path);

    std::vector<std::uint8_t> rgb = std::move(tile.pixels);
    if (mask_mode != MaskMode::none) {
        if (!e.mask_path)
            fail(Errc::io_error, "manifest line " + std::to_string(e.line_no) +
                                     ": mask required for mode " + mask_mode_name(mask_mode));
        Mask mask;
        try {
            mask = read_mask_png((fs::path(base_dir) / *e.mask_path).string());
        } catch (const Error& err) {
            throw Error(err.code(),
                        "manifest line " + std::to_string(e.line_no) + ": " + err.what());
        }
        if (mask.size != tile.width)
            fail(Errc::size_mismatch, "manifest line " + std::to_string(e.line_no) +
                                          ": mask size does not match tile");
        rgb = apply_mask(rgb, mask, mask_mode);
    }
    return nn::tile_to_chw(rgb, tile.width, input_size);
}

nn::SampleSet build_sample_set(const std::vector<ManifestEntry>& entries, MaskMode mask_mode,
                               const std::string& base_dir, int input_size, int threads) {
    nn::SampleSet set;
    set.shape = nn::InputShape{true, 3, input_size, input_size, 0};
    set.xs.resize(entries.size());
    set.labels.resize(entries.size());
    parallel_for(entries.size(), threads, [&](std::size_t i) {
        set.xs[i] = load_entry_input(entries[i], mask_mode, base_dir, input_size);
        set.labels[i] = static_cast<int>(entries[i].cls);
    });
    return set;
}

MetricsRow train_and_eval(nn::Model& model, const std::vector<ManifestEntry>& train_entries,
                          const std::vector<ManifestEntry>& test_entries, MaskMode mask_mode,
                          const ExperimentConfig& cfg, const std::string& scenario) {
    const nn::SampleSet train_set = build_sample_set(train_entries, mask_mode, cfg.base_dir,
                                                     cfg.train.input_size, cfg.threads);
    nn::train(model, train_set, cfg.train);
    EvalOptions opts;
    opts.input_size = cfg.train.input_size;
    opts.threads = cfg.threads;
    opts.base_dir = cfg.base_dir;
    const ConfusionMatrix cm = evaluate(model, test_entries, mask_mode, opts);
    return compute_metrics(cm, scenario);
}

}  // namespace

ConfusionMatrix evaluate(const nn::Model& model, const std::vector<ManifestEntry>& entries,
                         MaskMode mask_mode, const EvalOptions& opts) {
    std::vector<int> preds(entries.size());
    parallel_for(entries.size(), opts.threads, [&](std::size_t i) {
        const std::vector<float> x =
            load_entry_input(entries[i], mask_mode, opts.base_dir, opts.input_size);
        nn::Tensor batch(model.spec.input.with_batch(1));
        std::copy(x.begin(), x.end(), batch.data.begin());
        const nn::Tensor probs = nn::forward(model, batch);
        preds[i] = nn::argmax_row(probs, 0);
    });
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < entries.size(); ++i)
        cm.add(static_cast<int>(entries[i].cls), preds[i]);
    return cm;
}

MaskingResult run_masking_experiment(const std::vector<ManifestEntry>& train_entries,
                                     const std::vector<ManifestEntry>& test_entries,
                                     const ExperimentConfig& cfg) {
    // scenario labels name what is occluded; kept_mode names what survives
    const std::array<std::pair<std::string, MaskMode>, 3> plan = {
        std::pair{std::string("none"), MaskMode::none},
        std::pair{std::string("context_occluded"), MaskMode::road_only},
        std::pair{std::string("road_occluded"), MaskMode::context_only},
    };
    for (const auto& e : train_entries)
        if (!e.mask_path)
            fail(Errc::io_error, "masking experiment needs masks for every entry (line " +
                                     std::to_string(e.line_no) + ")");

    MaskingResult result;
    std::string first_digest;
    for (std::size_t s = 0; s < plan.size(); ++s) {
        nn::Model model = nn::init_model(cfg.spec, cfg.train.seed);
        const std::string digest = nn::weights_digest(model);
        if (s == 0)
            first_digest = digest;
        else if (digest != first_digest)
            fail(Errc::internal, "scenario initializations diverged");
        MaskingScenario scenario;
        scenario.label = plan[s].first;
        scenario.kept_mode = plan[s].second;
        scenario.row = train_and_eval(model, train_entries, test_entries, plan[s].second, cfg,
                                      plan[s].first);
        scenario.model = std::move(model);
        result.scenarios[s] = std::move(scenario);
    }
    result.init_digest = first_digest;
    return result;
}

TransferResult run_transfer_experiment(const std::vector<ManifestEntry>& entries_a,
                                       const std::vector<ManifestEntry>& entries_b,
                                       const ExperimentConfig& cfg) {
    auto country_of = [](const std::vector<ManifestEntry>& v) -> std::string {
        if (v.empty()) fail(Errc::empty_result, "transfer experiment got an empty manifest");
        return v.front().country;
    };
    const std::string ca = country_of(entries_a);
    const std::string cb = country_of(entries_b);

    const auto train_a = filter_split(entries_a, Split::train);
    const auto test_a = filter_split(entries_a, Split::test);
    const auto train_b = filter_split(entries_b, Split::train);
    const auto test_b = filter_split(entries_b, Split::test);

    EvalOptions opts;
    opts.input_size = cfg.train.input_size;
    opts.threads = cfg.threads;
    opts.base_dir = cfg.base_dir;

    TransferResult result;
    {
        nn::Model model = nn::init_model(cfg.spec, cfg.train.seed);
        const nn::SampleSet set = build_sample_set(train_a, MaskMode::none, cfg.base_dir,
                                                   cfg.train.input_size, cfg.threads);
        nn::train(model, set, cfg.train);
        result.cells[0] = {ca, ca,
                           compute_metrics(evaluate(model, test_a, MaskMode::none, opts),
                                           "train_" + ca + "_test_" + ca)};
        result.cells[1] = {ca, cb,
                           compute_metrics(evaluate(model, test_b, MaskMode::none, opts),
                                           "train_" + ca + "_test_" + cb)};
    }
    {
        nn::Model model = nn::init_model(cfg.spec, cfg.train.seed);
        const nn::SampleSet set = build_sample_set(train_b, MaskMode::none, cfg.base_dir,
                                                   cfg.train.input_size, cfg.threads);
        nn::train(model, set, cfg.train);
        result.cells[2] = {cb, cb,
                           compute_metrics(evaluate(model, test_b, MaskMode::none, opts),
                                           "train_" + cb + "_test_" + cb)};
        result.cells[3] = {cb, ca,
                           compute_metrics(evaluate(model, test_a, MaskMode::none, opts),
                                           "train_" + cb + "_test_" + ca)};
    }
    return result;
}

CamHeatmap cam(const nn::Model& model, const std::vector<float>& input_chw, int input_size,
               RoadClass cls, int upsample_to) {
    const auto& layers = model.spec.layers;
    if (!model.spec.input.spatial || layers.size() < 3 ||
        layers[layers.size() - 3].kind != nn::LayerKind::global_avg_pool ||
        layers[layers.size() - 2].kind != nn::LayerKind::dense ||
        layers[layers.size() - 2].out != 3 ||
        layers[layers.size() - 1].kind != nn::LayerKind::softmax)
        fail(Errc::architecture_unsupported,
             "CAM needs a GlobalAvgPool -> Dense(3) -> Softmax tail");

    nn::Tensor batch(model.spec.input.with_batch(1));
    if (input_chw.size() != batch.data.size())
        fail(Errc::shape_mismatch, "CAM input does not match model input size");
    std::copy(input_chw.begin(), input_chw.end(), batch.data.begin());
    (void)input_size;

    nn::Trace trace;
    nn::forward(model, batch, &trace);
    const std::size_t gap_idx = layers.size() - 3;
    const nn::Tensor& fmaps = trace.inputs[gap_idx];  // [1, C, Hf, Wf]
    const int C = fmaps.shape[1], Hf = fmaps.shape[2], Wf = fmaps.shape[3];
    if (Hf != Wf) fail(Errc::architecture_unsupported, "CAM expects square feature maps");
    const nn::Tensor& w = model.params[layers.size() - 2][0];  // [3, C]

    CamHeatmap heat;
    heat.cls = cls;
    heat.grid_size = Hf;
    heat.grid.assign(static_cast<std::size_t>(Hf) * Wf, 0.0f);
    const int ci = static_cast<int>(cls);
    for (int k = 0; k < C; ++k) {
        const float wk = w.data[static_cast<std::size_t>(ci) * C + k];
        const float* fm = fmaps.data.data() + static_cast<std::size_t>(k) * Hf * Wf;
        for (int j = 0; j < Hf * Wf; ++j) heat.grid[j] += wk * fm[j];
    }

    // min-max normalize; flat maps normalize to all-zero
    float lo = heat.grid[0], hi = heat.grid[0];
    for (float v : heat.grid) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo > 1e-12f) {
        const float inv = 1.0f / (hi - lo);
        for (auto& v : heat.grid) v = (v - lo) * inv;
    } else {
        std::fill(heat.grid.begin(), heat.grid.end(), 0.0f);
    }

    // bilinear upsample, pixel centers aligned
    heat.upsampled_size = upsample_to;
    heat.upsampled.assign(static_cast<std::size_t>(upsample_to) * upsample_to, 0.0f);
    const double scale = static_cast<double>(Hf) / upsample_to;
    for (int y = 0; y < upsample_to; ++y) {
        const double sy = std::clamp((y + 0.5) * scale - 0.5, 0.0, static_cast<double>(Hf - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, Hf - 1);
        const double fy = sy - y0;
        for (int x = 0; x < upsample_to; ++x) {
            const double sx =
                std::clamp((x + 0.5) * scale - 0.5, 0.0, static_cast<double>(Wf - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, Wf - 1);
            const double fx = sx - x0;
            const double v =
                (1 - fy) * ((1 - fx) * heat.grid[y0 * Wf + x0] + fx * heat.grid[y0 * Wf + x1]) +
                fy * ((1 - fx) * heat.grid[y1 * Wf + x0] + fx * heat.grid[y1 * Wf + x1]);
            heat.upsampled[static_cast<std::size_t>(y) * upsample_to + x] =
                static_cast<float>(v);
        }
    }
    return heat;
}

double cam_locality(const std::vector<float>& heatmap, int heatmap_size, const Mask& mask) {
    if (mask.size != heatmap_size ||
        heatmap.size() != static_cast<std::size_t>(heatmap_size) * heatmap_size)
        fail(Errc::size_mismatch, "heatmap and mask sizes differ");
    double inside = 0.0, total = 0.0;
    for (std::size_t i = 0; i < heatmap.size(); ++i) {
        total += heatmap[i];
        if (mask.bits[i]) inside += heatmap[i];
    }
    if (total <= 0.0) return 0.0;
    return inside / total;
}

// ---------------------------------------------------------------------------
// reporting

namespace {

// shortest round-trip decimal form (what the JSON encoder produces)
std::string num_str(double v) { return json(v).dump(); }

std::string pct_str(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", v * 100.0);
    return buf;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::vector<std::string> header_columns() {
    std::vector<std::string> cols = {"scenario", "n", "accuracy", "macro_f1"};
    for (int c = 0; c < kNumClasses; ++c) {
        const std::string cls = road_class_name(static_cast<RoadClass>(c));
        cols.push_back(cls + "_precision");
        cols.push_back(cls + "_recall");
        cols.push_back(cls + "_f1");
    }
    return cols;
}

}  // namespace

void emit_report(const std::vector<MetricsRow>& rows, ReportFormat format,
                 const std::string& path, const ReportMeta& meta) {
    if (rows.empty()) fail(Errc::empty_result, "refusing to write an empty report");
    std::string out;
    const auto cols = header_columns();

    if (format == ReportFormat::csv) {
        out += "# roadscope seed=" + std::to_string(meta.seed) +
               " config_digest=" + meta.config_digest + " f1=macro\n";
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out += ",";
            out += cols[i];
        }
        out += "\n";
        for (const auto& r : rows) {
            out += csv_quote(r.scenario);
            out += "," + std::to_string(r.n);
            out += "," + num_str(r.accuracy);
            out += "," + num_str(r.macro_f1);
            for (int c = 0; c < kNumClasses; ++c) {
                out += "," + num_str(r.per_class[c].precision);
                out += "," + num_str(r.per_class[c].recall);
                out += "," + num_str(r.per_class[c].f1);
            }
            out += "\n";
        }
    } else {
        out += "# roadscope report\n\n";
        out += "|";
        for (const auto& c : cols) out += " " + c + " |";
        out += "\n|";
        for (std::size_t i = 0; i < cols.size(); ++i) out += " --- |";
        out += "\n";
        for (const auto& r : rows) {
            out += "| " + r.scenario + " | " + std::to_string(r.n) + " | " + pct_str(r.accuracy) +
                   " | " + pct_str(r.macro_f1) + " |";
            for (int c = 0; c < kNumClasses; ++c) {
                out += " " + pct_str(r.per_class[c].precision) + " |";
                out += " " + pct_str(r.per_class[c].recall) + " |";
                out += " " + pct_str(r.per_class[c].f1) + " |";
            }
            out += "\n";
        }
        out += "\n";
        out += "- F1 aggregation: macro (unweighted mean of per-class F1)\n";
        for (const auto& n : meta.notes) out += "- " + n + "\n";
        out += "- seed=" + std::to_string(meta.seed) + " config_digest=" + meta.config_digest +
               "\n";
    }
    write_text_file(path, out);
}

void write_report_json(const std::vector<MetricsRow>& rows, const std::string& path,
                       const ReportMeta& meta) {
    if (rows.empty()) fail(Errc::empty_result, "refusing to write an empty report");
    json j;
    j["_meta"] = {{"seed", meta.seed},
                  {"config_digest", meta.config_digest},
                  {"f1_aggregation", "macro"},
                  {"notes", meta.notes}};
    json jrows = json::array();
    for (const auto& r : rows) {
        json pc;
        for (int c = 0; c < kNumClasses; ++c) {
            pc[road_class_name(static_cast<RoadClass>(c))] = {
                {"precision", r.per_class[c].precision},
                {"recall", r.per_class[c].recall},
                {"f1", r.per_class[c].f1}};
        }
        jrows.push_back({{"scenario", r.scenario},
                         {"n", r.n},
                         {"accuracy", r.accuracy},
                         {"macro_f1", r.macro_f1},
                         {"per_class", pc}});
    }
    j["rows"] = jrows;
    write_text_file(path, j.dump(2) + "\n");
}

std::vector<MetricsRow> read_report_json(const std::string& path, ReportMeta* meta) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        fail(Errc::schema_error, path + ": " + e.what());
    }
    try {
        if (meta && j.contains("_meta")) {
            meta->seed = j["_meta"].value("seed", std::uint64_t{0});
            meta->config_digest = j["_meta"].value("config_digest", "");
            if (j["_meta"].contains("notes"))
                meta->notes = j["_meta"]["notes"].get<std::vector<std::string>>();
        }
        std::vector<MetricsRow> rows;
        for (const auto& r : j.at("rows")) {
            MetricsRow row;
            row.scenario = r.at("scenario").get<std::string>();
            row.n = r.at("n").get<std::int64_t>();
            row.accuracy = r.at("accuracy").get<double>();
            row.macro_f1 = r.at("macro_f1").get<double>();
            for (int c = 0; c < kNumClasses; ++c) {
                const auto& pc = r.at("per_class").at(road_class_name(static_cast<RoadClass>(c)));
                row.per_class[c] = ClassMetrics{pc.at("precision").get<double>(),
                                                pc.at("recall").get<double>(),
                                                pc.at("f1").get<double>()};
            }
            rows.push_back(row);
        }
        return rows;
    } catch (const json::exception& e) {
        fail(Errc::schema_error, path + ": " + e.what());
    }
}

}  // namespace roadscope
