// roadscope: crowd-sourced road-quality pipeline CLI.
// Subcommands cover the full flow: vector ingestion, sampling, dataset
// assembly, mask generation, training, evaluation, the masking and
// transfer experiment harnesses, CAM rendering, and synthetic corpora.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "roadscope/config.hpp"
#include "roadscope/diagnostics.hpp"
#include "roadscope/error.hpp"
#include "roadscope/fsutil.hpp"
#include "roadscope/nn/embed.hpp"
#include "roadscope/nn/image.hpp"
#include "roadscope/osm_ingest.hpp"
#include "roadscope/pipeline.hpp"
#include "roadscope/png_io.hpp"
#include "roadscope/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace roadscope;

namespace {

constexpr const char* kVersion = "1.0.0";

struct CommonArgs {
    std::string workspace;
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool workspace_required = true) {
    auto* ws = cmd->add_option("--workspace,-w", args.workspace, "workspace directory");
    if (workspace_required) ws->required();
    cmd->add_option("--config", args.config_path, "run config JSON (overrides workspace config)");
    cmd->add_option("--seed", args.seed, "override run seed");
    cmd->add_option("--threads", args.threads, "worker threads (1 = fully serial)");
}

// Precedence: --config file, else ws/config.resolved.json, else defaults;
// flags override file values.
RunConfig resolve_config(const CommonArgs& args, const RunConfig& defaults) {
    RunConfig cfg = defaults;
    if (args.config_path) {
        cfg = apply_config_json(defaults, json::parse(read_text_file(*args.config_path)),
                                *args.config_path);
    } else if (!args.workspace.empty()) {
        if (auto ws_cfg = load_workspace_config(Workspace(args.workspace))) cfg = *ws_cfg;
    }
    if (args.seed) {
        cfg.seed = *args.seed;
        cfg.train.seed = *args.seed;
    }
    if (args.threads) cfg.threads = *args.threads;
    return cfg;
}

void log_run(const std::string& workspace, const std::string& subcommand,
             const std::vector<std::string>& argv, const RunConfig& cfg,
             const std::string& status, const std::vector<std::string>& outputs,
             const std::string& error_msg = "") {
    if (workspace.empty()) return;
    json entry = {{"ts", utc_timestamp()},       {"subcommand", subcommand},
                  {"argv", argv},                {"seed", cfg.seed},
                  {"config_digest", cfg.digest()}, {"status", status},
                  {"outputs", outputs}};
    if (!error_msg.empty()) entry["error"] = error_msg;
    append_run_log(Workspace(workspace), entry);
}

ExperimentConfig experiment_config(const RunConfig& cfg, const std::string& base_dir) {
    ExperimentConfig ec;
    ec.spec = cfg.model_spec();
    ec.train = cfg.train;
    ec.threads = cfg.threads;
    ec.base_dir = base_dir;
    return ec;
}

std::vector<MetricsRow> masking_rows(const MaskingResult& result) {
    std::vector<MetricsRow> rows;
    for (const auto& s : result.scenarios) rows.push_back(s.row);
    return rows;
}

nn::SampleSet embed_sample_set(nn::EmbedBackend& backend,
                               const std::vector<ManifestEntry>& entries, MaskMode mode,
                               const std::string& base_dir) {
    nn::SampleSet set;
    set.shape = nn::InputShape{false, 0, 0, 0, backend.dim()};
    for (const auto& e : entries) {
        PngImage tile = read_png((fs::path(base_dir) / e.tile_path).string());
        std::vector<std::uint8_t> rgb = std::move(tile.pixels);
        if (mode != MaskMode::none) {
            if (!e.mask_path)
                fail(Errc::io_error,
                     "manifest line " + std::to_string(e.line_no) + ": mask required");
            const Mask mask = read_mask_png((fs::path(base_dir) / *e.mask_path).string());
            rgb = apply_mask(rgb, mask, mode);
        }
        set.xs.push_back(backend.embed(rgb.data(), tile.width));
        set.labels.push_back(static_cast<int>(e.cls));
    }
    return set;
}

ConfusionMatrix evaluate_embeddings(const nn::Model& model, nn::EmbedBackend& backend,
                                    const std::vector<ManifestEntry>& entries, MaskMode mode,
                                    const std::string& base_dir) {
    const nn::SampleSet set = embed_sample_set(backend, entries, mode, base_dir);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < set.size(); ++i) {
        nn::Tensor x(model.spec.input.with_batch(1));
        std::copy(set.xs[i].begin(), set.xs[i].end(), x.data.begin());
        const nn::Tensor probs = nn::forward(model, x);
        cm.add(set.labels[i], nn::argmax_row(probs, 0));
    }
    return cm;
}

void print_row(const MetricsRow& r) {
    std::printf("%-24s n=%-5lld accuracy=%.4f macro_f1=%.4f\n", r.scenario.c_str(),
                static_cast<long long>(r.n), r.accuracy, r.macro_f1);
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> raw_args(argv, argv + argc);
    CLI::App app{"roadscope: road-quality classification pipeline"};
    app.require_subcommand(0, 1);

    bool show_version = false;
    app.add_flag("--version", show_version, "print tool and file-format schema versions");

    // ---- ingest
    auto* ingest = app.add_subcommand("ingest", "parse GeoJSON roads into a road table");
    CommonArgs ingest_args;
    std::string ingest_in;
    add_common(ingest, ingest_args);
    ingest->add_option("--in", ingest_in, "GeoJSON FeatureCollection")->required();

    // ---- sample
    auto* sample = app.add_subcommand("sample", "sample tile centers along roads");
    CommonArgs sample_args;
    std::string sample_roads, sample_out;
    add_common(sample, sample_args);
    sample->add_option("--roads", sample_roads, "road table JSONL")->required();
    sample->add_option("--out", sample_out, "output points JSONL (default ws/roads/samples.jsonl)");

    // ---- build-dataset
    auto* build = app.add_subcommand("build-dataset", "extract tiles, balance, split, manifest");
    CommonArgs build_args;
    std::string build_roads, build_scenes, build_out;
    std::optional<std::size_t> build_per_class;
    add_common(build, build_args);
    build->add_option("--roads", build_roads, "road table JSONL")->required();
    build->add_option("--scenes", build_scenes, "directory of scene containers")->required();
    build->add_option("--per-class", build_per_class, "samples per class (0 = auto)");
    build->add_option("--out", build_out, "manifest path (default ws/manifests/dataset.jsonl)");

    // ---- mask
    auto* mask_cmd = app.add_subcommand("mask", "generate road masks for a manifest");
    CommonArgs mask_args;
    std::string mask_manifest, mask_roads, mask_scenes;
    add_common(mask_cmd, mask_args);
    mask_cmd->add_option("--manifest", mask_manifest, "manifest to mask")->required();
    mask_cmd->add_option("--roads", mask_roads, "road table JSONL")->required();
    mask_cmd->add_option("--scenes", mask_scenes, "directory of scene containers")->required();

    // ---- train
    auto* train_cmd = app.add_subcommand("train", "train a model on a manifest's train split");
    CommonArgs train_args;
    std::string train_manifest, train_out, train_mode = "none", train_backend;
    add_common(train_cmd, train_args);
    train_cmd->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train_cmd->add_option("--out", train_out, "model file (default ws/models/model.bin)");
    train_cmd->add_option("--mask-mode", train_mode, "none|road_only|context_only");
    train_cmd->add_option("--backend", train_backend,
                          "external embedding backend command (trains the FFN head)");

    // ---- eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a manifest's test split");
    CommonArgs eval_args;
    std::string eval_manifest, eval_model, eval_mode = "none", eval_backend, eval_report;
    add_common(eval_cmd, eval_args);
    eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest")->required();
    eval_cmd->add_option("--model", eval_model, "model file")->required();
    eval_cmd->add_option("--mask-mode", eval_mode, "none|road_only|context_only");
    eval_cmd->add_option("--backend", eval_backend, "external embedding backend command");
    eval_cmd->add_option("--report", eval_report, "also write reports/<name>.{json,md,csv}");

    // ---- mask-experiment
    auto* maskexp = app.add_subcommand("mask-experiment",
                                       "train/eval the three masking scenarios");
    CommonArgs maskexp_args;
    std::string maskexp_manifest;
    add_common(maskexp, maskexp_args);
    maskexp->add_option("--manifest", maskexp_manifest,
                        "manifest (default ws/manifests/dataset.jsonl)");

    // ---- transfer
    auto* transfer_cmd = app.add_subcommand("transfer", "out-of-country transfer experiment");
    CommonArgs transfer_args;
    std::string transfer_a, transfer_b;
    add_common(transfer_cmd, transfer_args);
    transfer_cmd->add_option("--manifest-a", transfer_a, "country A manifest");
    transfer_cmd->add_option("--manifest-b", transfer_b, "country B manifest");

    // ---- cam
    auto* cam_cmd = app.add_subcommand("cam", "class activation map for one tile");
    CommonArgs cam_args;
    std::string cam_model, cam_tile, cam_class, cam_out, cam_mask;
    add_common(cam_cmd, cam_args);
    cam_cmd->add_option("--model", cam_model, "model file")->required();
    cam_cmd->add_option("--tile", cam_tile, "tile PNG")->required();
    cam_cmd->add_option("--class", cam_class, "major|minor|two_track")->required();
    cam_cmd->add_option("--out", cam_out, "output heatmap PNG")->required();
    cam_cmd->add_option("--mask", cam_mask, "road mask PNG (enables locality in the sidecar)");

    // ---- synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
    CommonArgs synth_args;
    std::string synth_signal = "context", synth_out;
    bool synth_pair = false, synth_skip_masks = false;
    synth_cmd->add_option("--signal", synth_signal, "road|context|both")->required();
    synth_cmd->add_option("--out", synth_out, "workspace directory")->required();
    synth_cmd->add_flag("--pair", synth_pair, "generate both synthetic countries");
    synth_cmd->add_flag("--skip-masks", synth_skip_masks, "skip per-tile mask generation");
    synth_cmd->add_option("--config", synth_args.config_path, "run config JSON");
    synth_cmd->add_option("--seed", synth_args.seed, "override run seed");
    synth_cmd->add_option("--threads", synth_args.threads, "worker threads");

    // ---- report
    auto* report_cmd = app.add_subcommand("report", "re-render a rows JSON report");
    std::string report_rows, report_format = "markdown", report_out;
    report_cmd->add_option("--rows", report_rows, "rows JSON produced by an experiment")
        ->required();
    report_cmd->add_option("--format", report_format, "csv|markdown|md");
    report_cmd->add_option("--out", report_out, "output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << std::flush;
        return 1;
    }

    if (show_version) {
        std::cout << "roadscope " << kVersion << "\n"
                  << "config_schema=1 manifest_schema=1 scene_schema=1 model_schema=1 "
                     "embed_protocol=\"EMBED v1\"\n";
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return 0;
    }

    std::string active_ws;
    RunConfig active_cfg;
    std::string active_sub;
    try {
        if (*ingest) {
            active_sub = "ingest";
            active_ws = ingest_args.workspace;
            const RunConfig cfg = resolve_config(ingest_args, load_config(std::nullopt));
            active_cfg = cfg;
            Workspace ws(ingest_args.workspace);
            ws.ensure_dirs();
            ParseStats stats;
            const auto roads = parse_roads(read_text_file(ingest_in), default_tag_table(), &stats);
            const std::string out_path = (ws.roads_dir() / "roads.jsonl").string();
            write_road_table(out_path, roads, cfg.seed, cfg.digest());
            save_resolved_config(ws, cfg);
            std::printf("ingested %zu roads (%zu features, %zu skipped: %zu unknown tag, %zu bad "
                        "geometry) -> %s\n",
                        stats.records_out, stats.features_in, stats.skipped,
                        stats.skipped_unknown_tag, stats.skipped_bad_geometry, out_path.c_str());
            log_run(active_ws, active_sub, raw_args, cfg, "ok", {out_path});
        } else if (*sample) {
            active_sub = "sample";
            active_ws = sample_args.workspace;
            const RunConfig cfg = resolve_config(sample_args, load_config(std::nullopt));
            active_cfg = cfg;
            Workspace ws(sample_args.workspace);
            ws.ensure_dirs();
            const auto roads = read_road_table(sample_roads);
            const std::string out_path =
                sample_out.empty() ? (ws.roads_dir() / "samples.jsonl").string() : sample_out;
            std::string text = json{{"schema_version", 1},
                                    {"seed", cfg.seed},
                                    {"config_digest", cfg.digest()}}
                                   .dump() +
                               "\n";
            std::size_t count = 0;
            for (const auto& road : roads) {
                for (const auto& sp : sample_points(road, cfg.sampling_spacing_m)) {
                    text += json{{"road_id", sp.road_id},
                                 {"class", road_class_name(sp.cls)},
                                 {"chainage_m", sp.chainage_m},
                                 {"lon", sp.point.lon},
                                 {"lat", sp.point.lat}}
                                .dump() +
                            "\n";
                    ++count;
                }
            }
            write_text_file(out_path, text);
            save_resolved_config(ws, cfg);
            std::printf("sampled %zu points from %zu roads -> %s\n", count, roads.size(),
                        out_path.c_str());
            log_run(active_ws, active_sub, raw_args, cfg, "ok", {out_path});
        } else if (*build) {
            active_sub = "build-dataset";
            active_ws = build_args.workspace;
            RunConfig cfg = resolve_config(build_args, load_config(std::nullopt));
            if (build_per_class) cfg.per_class = *build_per_class;
            active_cfg = cfg;
            Workspace ws(build_args.workspace);
            ws.ensure_dirs();
            const std::string manifest_path =
                build_out.empty() ? (ws.manifests_dir() / "dataset.jsonl").string() : build_out;
            build_dataset(ws, cfg, build_roads, build_scenes, fs::path(manifest_path)
                                                                  .filename()
                                                                  .string());
            if (!build_out.empty())
                fs::copy_file(ws.manifests_dir() / fs::path(manifest_path).filename(),
                              manifest_path, fs::copy_options::overwrite_existing);
            save_resolved_config(ws, cfg);
            std::printf("manifest -> %s\n", manifest_path.c_str());
            log_run(active_ws, active_sub, raw_args, cfg, "ok", {manifest_path});
        } else if (*mask_cmd) {
            active_sub = "mask";
            active_ws = mask_args.workspace;
            const RunConfig cfg = resolve_config(mask_args, load_config(std::nullopt));
            active_cfg = cfg;
            Workspace ws(mask_args.workspace);
            ws.ensure_dirs();
            mask_dataset(ws, cfg, mask_manifest, mask_roads, mask_scenes);
            save_resolved_config(ws, cfg);
            std::printf("masks written; manifest updated: %s\n", mask_manifest.c_str());
            log_run(active_ws, active_sub, raw_args, cfg, "ok", {mask_manifest});
        } else if (*train_cmd) {
            active_sub = "train";
            active_ws = train_args.workspace;
            const RunConfig cfg = resolve_config(train_args, load_config(std::nullopt));
            active_cfg = cfg;
            Workspace ws(train_args.workspace);
            ws.ensure_dirs();
            const auto entries = read_manifest(train_manifest);
            const auto train_split = filter_split(entries, Split::train);
            if (train_split.empty()) fail(Errc::empty_result, "manifest has no train entries");
            validate_manifest_files(train_split, ws.root.string());
            const MaskMode mode = mask_mode_from_name(train_mode);
            const std::string out_path =
                train_out.empty() ? (ws.models_dir() / "model.bin").string() : train_out;
            const std::string log_path = out_path + ".trainlog.jsonl";

            std::string log_text = json{{"seed", cfg.seed}, {"config_digest", cfg.digest()}}.dump() + "\n";
            auto on_epoch = [&](const nn::EpochStats& st) {
                std::printf("epoch %3d  loss %.5f  acc %.4f\n", st.epoch, st.loss, st.accuracy);
                log_text += json{{"epoch", st.epoch},
                                 {"loss", st.loss},
                                 {"accuracy", st.accuracy},
                                 {"steps_done", st.steps_done}}
                                .dump() +
                            "\n";
            };

            nn::Model model;
            if (!train_backend.empty()) {
                nn::EmbedBackend backend(train_backend);
                const nn::SampleSet set =
                    embed_sample_set(backend, train_split, mode, ws.root.string());
                model = nn::init_model(nn::make_embedding_head_spec(backend.dim()), cfg.seed);
                model.config_digest = cfg.digest();
                nn::train(model, set, cfg.train, on_epoch);
            } else {
                model = nn::init_model(cfg.model_spec(), cfg.seed);
                model.config_digest = cfg.digest();
                nn::SampleSet set;
                set.shape = nn::InputShape{true, 3, cfg.train.input_size, cfg.train.input_size, 0};
                set.xs.resize(train_split.size());
                set.labels.resize(train_split.size());
                for (std::size_t i = 0; i < train_split.size(); ++i) {
                    PngImage tile = read_png((ws.root / train_split[i].tile_path).string());
                    std::vector<std::uint8_t> rgb = std::move(tile.pixels);
                    if (mode != MaskMode::none) {
                        if (!train_split[i].mask_path)
                            fail(Errc::io_error,
                                 "manifest line " + std::to_string(train_split[i].line_no) +
                                     ": mask required for mode " + train_mode);
                        const Mask m = read_mask_png(
                            (ws.root / train_split[i].mask_path.value()).string());
                        rgb = apply_mask(rgb, m, mode);
                    }
                    set.xs[i] = nn::tile_to_chw(rgb, tile.width, cfg.train.input_size);
                    set.labels[i] = static_cast<int>(train_split[i].cls);
                }
                nn::train(model, set, cfg.train, on_epoch);
            }
            save_model(model, out_path);
            write_text_file(log_path, log_text);
            save_resolved_config(ws, cfg);
            std::printf("model -> %s\n", out_path.c_str());
            log_run(active_ws, active_sub, raw_args, cfg, "ok", {out_path, log_path});
        } else if (*eval_cmd) {
            active_sub = "eval";
            active_ws = eval_args.workspace;
            const RunConfig cfg = resolve_config(eval_args, load_config(std::nullopt));
            active_cfg = cfg;
            Workspace ws(eval_args.workspace);
            ws.ensure_dirs();
            const auto entries = read_manifest(eval_manifest);
            const auto test_split = filter_split(entries, Split::test);
            if (test_split.empty()) fail(Errc::empty_result, "manifest has no test entries");
            validate_manifest_files(test_split, ws.root.string());
            const MaskMode mode = mask_mode_from_name(eval_mode);
            const nn::Model model = nn::load_model(eval_model);

            ConfusionMatrix cm;
            if (model.spec.input.spatial) {
                EvalOptions opts;
                opts.input_size = cfg.train.input_size;
                opts.threads = cfg.threads;
                opts.base_dir = ws.root.string();
                cm = evaluate(model, test_split, mode, opts);
            } else {
                if (eval_backend.empty())
                    fail(Errc::usage, "embedding-head models need --backend");
                nn::EmbedBackend backend(eval_backend);
                if (backend.dim() != model.spec.input.dim)
                    fail(Errc::dimension_mismatch,
                         "backend dim " + std::to_string(backend.dim()) + " != model dim " +
                             std::to_string(model.spec.input.dim));
                cm = evaluate_embeddings(model, backend, test_split, mode, ws.root.string());
            }
            const MetricsRow row = compute_metrics(cm, "eval_" + eval_mode);
            print_row(row);
            std::vector<std::string> outputs;
            if (!eval_report.empty()) {
                ReportMeta meta{cfg.seed, cfg.digest(), {}};
                const std::string base = (ws.reports_dir() / eval_report).string();
                write_report_json({row}, base + ".json", meta);
                emit_report({row}, ReportFormat::markdown, base + ".md", meta);
                emit_report({row}, ReportFormat::csv, base + ".csv", meta);
                outputs = {base + ".json", base + ".md", base + ".csv"};
            }
            log_run(active_ws, active_sub, raw_args, cfg, "ok", outputs);
        } else if (*maskexp) {
            active_sub = "mask-experiment";
            active_ws = maskexp_args.workspace;
            const RunConfig cfg = resolve_config(maskexp_args, load_config(std::nullopt));
            active_cfg = cfg;
            Workspace ws(maskexp_args.workspace);
            ws.ensure_dirs();
            const std::string manifest = maskexp_manifest.empty()
                                             ? (ws.manifests_dir() / "dataset.jsonl").string()
                                             : maskexp_manifest;
            const auto entries = read_manifest(manifest);
            const auto train_split = filter_split(entries, Split::train);
            const auto test_split = filter_split(entries, Split::test);
            const MaskingResult result =
                run_masking_experiment(train_split, test_split, experiment_config(cfg, ws.root.string()));
            for (const auto& s : result.scenarios) {
                print_row(s.row);
                save_model(s.model, (ws.models_dir() / ("masking_" + s.label + ".bin")).string());
            }
            ReportMeta meta{cfg.seed, cfg.digest(),
                            {"scenario mapping: context_occluded keeps road pixels (road_only); "
                             "road_occluded keeps context pixels (context_only)",
                             "paper reference, not reproduced: Kenya full-scale accuracy "
                             "80% (no mask) / 77% (context occluded) / 79% (road occluded)"}};
            const std::string base = (ws.reports_dir() / "masking").string();
            write_report_json(masking_rows(result), base + ".json", meta);
            emit_report(masking_rows(result), ReportFormat::markdown, base + ".md", meta);
            emit_report(masking_rows(result), ReportFormat::csv, base + ".csv", meta);
            save_resolved_config(ws, cfg);
            log_run(active_ws, active_sub, raw_args, cfg, "ok",
                    {base + ".json", base + ".md", base + ".csv"});
        } else if (*transfer_cmd) {
            active_sub = "transfer";
            active_ws = transfer_args.workspace;
            const RunConfig cfg = resolve_config(transfer_args, load_config(std::nullopt));
            active_cfg = cfg;
            Workspace ws(transfer_args.workspace);
            ws.ensure_dirs();
            const std::string path_a =
                transfer_a.empty()
                    ? (ws.manifests_dir() / ("dataset_" + cfg.synth_a.country_code + ".jsonl"))
                          .string()
                    : transfer_a;
            const std::string path_b =
                transfer_b.empty()
                    ? (ws.manifests_dir() / ("dataset_" + cfg.synth_b.country_code + ".jsonl"))
                          .string()
                    : transfer_b;
            const auto entries_a = read_manifest(path_a);
            const auto entries_b = read_manifest(path_b);
            const TransferResult result = run_transfer_experiment(
                entries_a, entries_b, experiment_config(cfg, ws.root.string()));
            std::vector<MetricsRow> rows;
            for (const auto& c : result.cells) {
                print_row(c.row);
                rows.push_back(c.row);
            }
            ReportMeta meta{cfg.seed, cfg.digest(),
                            {"paper reference, not reproduced: Kenya->Peru 46%, Peru->Kenya 60%"}};
            const std::string base = (ws.reports_dir() / "transfer").string();
            write_report_json(rows, base + ".json", meta);
            emit_report(rows, ReportFormat::markdown, base + ".md", meta);
            emit_report(rows, ReportFormat::csv, base + ".csv", meta);
            save_resolved_config(ws, cfg);
            log_run(active_ws, active_sub, raw_args, cfg, "ok",
                    {base + ".json", base + ".md", base + ".csv"});
        } else if (*cam_cmd) {
            active_sub = "cam";
            active_ws = cam_args.workspace;
            const RunConfig cfg = resolve_config(cam_args, load_config(std::nullopt));
            active_cfg = cfg;
            Workspace ws(cam_args.workspace);
            ws.ensure_dirs();
            const nn::Model model = nn::load_model(cam_model);
            const auto cls = road_class_from_name(cam_class);
            if (!cls) fail(Errc::usage, "unknown class \"" + cam_class + "\"");
            PngImage tile = read_png(cam_tile);
            if (tile.channels != 3 || tile.width != tile.height)
                fail(Errc::schema_error, "tile must be square RGB: " + cam_tile);
            const auto input =
                nn::tile_to_chw(tile.pixels, tile.width, cfg.train.input_size);
            const CamHeatmap heat = cam(model, input, cfg.train.input_size, *cls, tile.width);

            nn::Tensor x(model.spec.input.with_batch(1));
            std::copy(input.begin(), input.end(), x.data.begin());
            const int predicted = nn::argmax_row(nn::forward(model, x), 0);

            std::vector<std::uint8_t> gray(heat.upsampled.size());
            for (std::size_t i = 0; i < gray.size(); ++i)
                gray[i] = static_cast<std::uint8_t>(
                    std::lround(std::clamp(heat.upsampled[i], 0.0f, 1.0f) * 255.0f));
            write_png(cam_out, heat.upsampled_size, heat.upsampled_size, 1, gray,
                      {{"roadscope_seed", std::to_string(cfg.seed)},
                       {"roadscope_config", cfg.digest()}});

            json sidecar = {{"class", road_class_name(*cls)},
                            {"predicted_class",
                             road_class_name(static_cast<RoadClass>(predicted))},
                            {"seed", cfg.seed},
                            {"config_digest", cfg.digest()}};
            if (!cam_mask.empty()) {
                const Mask m = read_mask_png(cam_mask);
                sidecar["locality"] = cam_locality(heat.upsampled, heat.upsampled_size, m);
            } else {
                sidecar["locality"] = nullptr;
            }
            write_text_file(cam_out + ".json", sidecar.dump(2) + "\n");
            std::printf("cam -> %s (predicted %s)\n", cam_out.c_str(),
                        road_class_name(static_cast<RoadClass>(predicted)));
            log_run(active_ws, active_sub, raw_args, cfg, "ok", {cam_out, cam_out + ".json"});
        } else if (*synth_cmd) {
            active_sub = "synth";
            active_ws = synth_out;
            CommonArgs args = synth_args;
            args.workspace = synth_out;
            RunConfig cfg = resolve_config(args, make_synth_defaults());
            const SignalLocation signal = signal_location_from_name(synth_signal);
            cfg.synth_a.signal = signal;
            cfg.synth_b.signal = signal;
            active_cfg = cfg;
            Workspace ws(synth_out);
            ws.ensure_dirs();
            save_resolved_config(ws, cfg);
            std::vector<std::string> outputs;
            if (synth_pair) {
                SynthConfig a = cfg.synth_a;
                SynthConfig b = cfg.synth_b;
                a.seed = Rng(cfg.seed).fork("synth/" + a.country_code).seed();
                b.seed = Rng(cfg.seed).fork("synth/" + b.country_code).seed();
                outputs.push_back(synth_corpus(ws, cfg, a, synth_skip_masks,
                                               "dataset_" + a.country_code + ".jsonl"));
                outputs.push_back(synth_corpus(ws, cfg, b, synth_skip_masks,
                                               "dataset_" + b.country_code + ".jsonl"));
            } else {
                SynthConfig a = cfg.synth_a;
                a.seed = Rng(cfg.seed).fork("synth/" + a.country_code).seed();
                outputs.push_back(synth_corpus(ws, cfg, a, synth_skip_masks, "dataset.jsonl"));
            }
            for (const auto& o : outputs) std::printf("manifest -> %s\n", o.c_str());
            log_run(active_ws, active_sub, raw_args, cfg, "ok", outputs);
        } else if (*report_cmd) {
            active_sub = "report";
            ReportMeta meta;
            const auto rows = read_report_json(report_rows, &meta);
            ReportFormat fmt;
            if (report_format == "csv")
                fmt = ReportFormat::csv;
            else if (report_format == "markdown" || report_format == "md")
                fmt = ReportFormat::markdown;
            else
                fail(Errc::usage, "unknown format \"" + report_format + "\"");
            emit_report(rows, fmt, report_out, meta);
            std::printf("report -> %s\n", report_out.c_str());
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        try {
            log_run(active_ws, active_sub, raw_args, active_cfg, "error", {}, e.what());
        } catch (...) {
        }
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        try {
            log_run(active_ws, active_sub, raw_args, active_cfg, "error", {}, e.what());
        } catch (...) {
        }
        return 3;
    }
    return 0;
}
