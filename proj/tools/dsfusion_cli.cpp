// Command-line front end: single fusions from score/evidence CSVs, the full
// benchmark protocol on a dataset, the built-in reference trace, and a
// synthetic dataset generator.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsfusion/dsfusion.hpp"
#include "dsfusion/report_json.hpp"

namespace fs = std::filesystem;
using namespace dsfusion;

namespace {

struct PipelineFlags {
    double deng_base = 10.0;
    double bjs_base = 2.0;
    double sigma = 2.0;
    std::string distance = "identity";

    void attach(CLI::App& cmd) {
        cmd.add_option("--deng-base", deng_base, "Log base for the Deng entropy");
        cmd.add_option("--bjs-base", bjs_base, "Log base for the divergence");
        cmd.add_option("--sigma", sigma, "Disagreement sensitivity");
        cmd.add_option("--distance-weighting", distance,
                       "Evidence distance weighting: identity or jaccard")
            ->check(CLI::IsMember({"identity", "jaccard"}));
    }

    PipelineConfig config() const {
        PipelineConfig cfg;
        cfg.deng_log_base = deng_base;
        cfg.bjs_log_base = bjs_base;
        cfg.sigma = sigma;
        cfg.distance_weighting =
            distance == "jaccard" ? DistanceWeighting::jaccard : DistanceWeighting::identity;
        cfg.validate();
        return cfg;
    }
};

int cmd_fuse(const std::vector<std::string>& score_paths,
             const std::vector<std::string>& confusion_paths, const std::string& scheme_name,
             bool mass_rows, const PipelineConfig& cfg, const std::string& out_dir) {
    const WeightScheme scheme = weight_scheme_from_string(scheme_name);
    if (score_paths.empty()) throw ValidationError("at least one score file is required");
    if (scheme != WeightScheme::w0 && confusion_paths.size() != score_paths.size())
        throw ValidationError("scheme " + scheme_name + " needs one confusion matrix per score file");
    if (!confusion_paths.empty() && confusion_paths.size() != score_paths.size())
        throw ValidationError("confusion file count does not match score file count");

    std::vector<io::ScoreFile> files;
    for (const auto& path : score_paths) files.push_back(io::load_score_csv(path));
    const std::size_t columns = files[0].class_names.size();
    for (const auto& f : files) {
        if (f.class_names.size() != columns)
            throw ValidationError(f.scores.classifier_id() + ": expected " +
                                  std::to_string(columns) + " score columns, found " +
                                  std::to_string(f.class_names.size()));
        if (f.raw_rows.size() != files[0].raw_rows.size())
            throw ValidationError(f.scores.classifier_id() + ": expected " +
                                  std::to_string(files[0].raw_rows.size()) +
                                  " samples, found " + std::to_string(f.raw_rows.size()));
    }

    const std::size_t n_classes = mass_rows ? columns - 1 : columns;
    if (mass_rows && columns < 3)
        throw ValidationError("evidence rows need n_classes + 1 >= 3 columns");
    std::vector<std::string> class_labels(files[0].class_names.begin(),
                                          files[0].class_names.begin() +
                                              static_cast<std::ptrdiff_t>(n_classes));
    const FramePtr frame = std::make_shared<Frame>(class_labels);

    std::vector<BodyOfEvidence> boes;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < files.size(); ++i) {
        WeightVector w{WeightScheme::w0, std::vector<double>(n_classes, 1.0)};
        if (scheme != WeightScheme::w0)
            w = build_weight(scheme, io::load_confusion_csv(confusion_paths[i]));
        if (mass_rows)
            boes.push_back(build_boe_from_masses(files[i].scores.classifier_id(),
                                                 files[i].raw_rows, w, frame));
        else
            boes.push_back(build_boe(files[i].scores, w, frame));
        ids.push_back(files[i].scores.classifier_id());
    }

    const FusionResult result = fuse_dataset(boes, cfg);
    fs::create_directories(out_dir);
    io::write_file((fs::path(out_dir) / "fused.csv").string(), io::fused_csv(result));
    io::write_file((fs::path(out_dir) / "diagnostics.csv").string(),
                   io::diagnostics_csv(result, ids));
    std::cout << "fused " << boes.size() << " classifier(s) over "
              << result.samples.size() << " sample(s) -> " << out_dir << "/fused.csv\n";
    return 0;
}

int cmd_selftest(const PipelineConfig& cfg) {
    const SelfTestReport report = run_selftest(cfg);
    std::printf("%-8s %-22s %12s %12s %10s  %s\n", "step", "quantity", "expected", "actual",
                "tolerance", "status");
    for (const auto& c : report.checks)
        std::printf("%-8s %-22s %12.4f %12.4f %10.3f  %s\n", c.step.c_str(),
                    c.quantity.c_str(), c.expected, c.actual, c.tolerance,
                    c.passed ? "ok" : "FAIL");
    if (!report.passed) {
        std::printf("FAIL: first divergent quantity: %s\n", report.first_failure.c_str());
        return 2;
    }
    std::printf("PASS: all %zu checks within tolerance\n", report.checks.size());
    return 0;
}

int cmd_benchmark(const std::string& dataset_path, const std::vector<std::string>& spec_names,
                  std::uint64_t seed, std::size_t repetitions, std::size_t max_size,
                  const std::vector<double>& noise_levels, double train_frac, double valid_frac,
                  double test_frac, std::optional<int> defect_class, bool rescore_only,
                  std::size_t threads, const PipelineConfig& pipeline,
                  const std::string& out_dir) {
    const Dataset data = io::load_dataset_csv(dataset_path);

    StatConfig cfg;
    for (const auto& name : spec_names) cfg.pool.push_back(ClassifierSpec::parse(name));
    cfg.repetitions = repetitions;
    cfg.max_ensemble_size = max_size;
    cfg.noise_levels = noise_levels;
    cfg.root_seed = seed;
    cfg.split = SplitSpec{train_frac, valid_frac, test_frac, 0};
    cfg.pipeline = pipeline;
    cfg.defect_class = defect_class;
    cfg.retrain_on_noise = !rescore_only;
    cfg.threads = threads;

    const ExperimentReport report = run_statistical(data, cfg);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    io::write_file((dir / "cells.csv").string(), io::report_cells_csv(report));
    io::write_file((dir / "summary.csv").string(), io::report_summary_csv(report));
    io::write_file((dir / "size_stats.csv").string(), io::report_size_stats_csv(report));
    io::write_file((dir / "overall.csv").string(), io::report_overall_csv(report));

    nlohmann::ordered_json root = io::report_json(report);
    nlohmann::ordered_json config;
    config["dataset"] = dataset_path;
    config["seed"] = seed;
    config["repetitions"] = repetitions;
    config["max_ensemble_size"] = max_size;
    config["noise_levels"] = noise_levels;
    config["classifiers"] = spec_names;
    config["split"] = {{"train", train_frac}, {"valid", valid_frac}, {"test", test_frac}};
    config["retrain_on_noise"] = !rescore_only;
    root["config"] = std::move(config);
    io::write_file((dir / "report.json").string(), root.dump(2) + "\n");

    std::cout << "evaluated " << report.ensembles.size() << " ensembles x "
              << ExperimentReport::scheme_count << " schemes, " << repetitions
              << " repetition(s), " << noise_levels.size() << " noise level(s) -> " << out_dir
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dempster-Shafer multi-classifier fusion toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value file");

    // fuse
    auto* fuse_cmd = app.add_subcommand("fuse", "Fuse per-classifier score matrices");
    std::vector<std::string> score_paths, confusion_paths;
    std::string scheme_name = "w0";
    bool mass_rows = false;
    std::string fuse_out = "fusion_out";
    PipelineFlags fuse_flags;
    fuse_cmd->add_option("--scores", score_paths, "Score CSVs, one per classifier")
        ->required()
        ->check(CLI::ExistingFile);
    fuse_cmd->add_option("--confusion", confusion_paths,
                         "Confusion CSVs (one per classifier, needed for schemes w1..w5)")
        ->check(CLI::ExistingFile);
    fuse_cmd->add_option("--scheme", scheme_name, "Weighting scheme w0..w5")
        ->check(CLI::IsMember({"w0", "w1", "w2", "w3", "w4", "w5"}));
    fuse_cmd->add_flag("--mass-rows", mass_rows,
                       "Treat rows as evidence masses (last column = ignorance)");
    fuse_cmd->add_option("--out-dir", fuse_out, "Output directory");
    fuse_flags.attach(*fuse_cmd);

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "Run the ensemble-enumeration protocol");
    std::string dataset_path;
    std::vector<std::string> spec_names = {"knn:5", "knn:9", "centroid", "logistic"};
    std::uint64_t seed = 0;
    std::size_t repetitions = 1, max_size = 0, threads = 1;
    std::vector<double> noise_levels = {0.0};
    double train_frac = 0.50, valid_frac = 0.15, test_frac = 0.35;
    int defect_class = -1;
    bool rescore_only = false;
    std::string bench_out = "benchmark_out";
    PipelineFlags bench_flags;
    bench_cmd->add_option("--dataset", dataset_path, "Dataset CSV (features then label)")
        ->required()
        ->check(CLI::ExistingFile);
    bench_cmd->add_option("--classifiers", spec_names,
                          "Pool specs: knn:<k>, centroid, logistic:<ridge>");
    bench_cmd->add_option("--seed", seed, "Root seed; everything derives from it");
    bench_cmd->add_option("--repetitions", repetitions, "Resampling repetitions");
    bench_cmd->add_option("--max-size", max_size, "Cap on ensemble size (0 = none)");
    bench_cmd->add_option("--noise", noise_levels, "RMS noise fractions");
    bench_cmd->add_option("--train-frac", train_frac, "Training fraction");
    bench_cmd->add_option("--valid-frac", valid_frac, "Validation fraction");
    bench_cmd->add_option("--test-frac", test_frac, "Test fraction");
    bench_cmd->add_option("--defect-class", defect_class,
                          "Class index for specificity (-1 = minority class)");
    bench_cmd->add_flag("--rescore-only", rescore_only,
                        "Train on clean features, score noisy ones");
    bench_cmd->add_option("--threads", threads, "Worker threads for ensemble evaluation");
    bench_cmd->add_option("--out-dir", bench_out, "Output directory");
    bench_flags.attach(*bench_cmd);

    // selftest
    auto* self_cmd = app.add_subcommand("selftest", "Run the built-in reference fusion trace");
    PipelineFlags self_flags;
    self_flags.attach(*self_cmd);

    // gen-synthetic
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "Emit a two-blob dataset CSV");
    SyntheticSpec synth;
    std::string gen_out = "synthetic.csv";
    gen_cmd->add_option("--out", gen_out, "Output CSV path");
    gen_cmd->add_option("--samples", synth.samples, "Total sample count");
    gen_cmd->add_option("--features", synth.features, "Feature count");
    gen_cmd->add_option("--separation", synth.separation, "Distance between blob centers");
    gen_cmd->add_option("--stddev", synth.stddev, "Per-axis standard deviation");
    gen_cmd->add_option("--imbalance", synth.imbalance_ratio, "Majority/minority ratio");
    gen_cmd->add_option("--seed", synth.seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (fuse_cmd->parsed())
            return cmd_fuse(score_paths, confusion_paths, scheme_name, mass_rows,
                            fuse_flags.config(), fuse_out);
        if (bench_cmd->parsed())
            return cmd_benchmark(dataset_path, spec_names, seed, repetitions, max_size,
                                 noise_levels, train_frac, valid_frac, test_frac,
                                 defect_class < 0 ? std::nullopt
                                                  : std::optional<int>(defect_class),
                                 rescore_only, threads, bench_flags.config(), bench_out);
        if (self_cmd->parsed()) return cmd_selftest(self_flags.config());
        if (gen_cmd->parsed()) {
            const Dataset data = make_two_blob(synth);
            io::save_dataset_csv(data, gen_out);
            std::cout << "wrote " << data.samples() << " samples ("
                      << io::format_double(data.imbalance_ratio()) << " imbalance) to "
                      << gen_out << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
