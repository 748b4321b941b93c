#include <iostream>

#include "CLI11.hpp"
#include "wdp/commands.hpp"

int main(int argc, char** argv) {
    using namespace wdp::cli;
    CLI::App app{"Ensemble weapon-detection pipeline"};
    app.require_subcommand(1);

    std::string config, out_dir;
    auto* synth = app.add_subcommand("synth", "Render a seeded synthetic dataset (PNG + manifest.csv)");
    synth->add_option("--config", config, "Run configuration (JSON)")->required();
    synth->add_option("--out", out_dir, "Output directory")->required();

    TrainOptions train_opts;
    std::string data_dir, log_out, plan_out;
    auto* train = app.add_subcommand("train", "Split, partition and train the ensemble");
    train->add_option("--config", config, "Run configuration (JSON)")->required();
    train->add_option("--data", data_dir, "Directory with manifest.csv (default: synthesize from config)");
    train->add_option("--model", train_opts.model_out, "Model file to write")->required();
    train->add_option("--log", log_out, "Training log (default <model>.log.json)");
    train->add_option("--plan", plan_out, "Write the partition plan as JSON");

    EvaluateOptions eval_opts;
    std::string eval_config;
    auto* evaluate = app.add_subcommand("evaluate", "Accuracy, precision and sensitivity per base model and ensemble");
    evaluate->add_option("--model", eval_opts.model, "Model file")->required();
    evaluate->add_option("--data", eval_opts.data_dir, "Directory with manifest.csv")->required();
    evaluate->add_option("--config", eval_config, "Run configuration, to reproduce the split");
    evaluate->add_option("--split", eval_opts.split, "all | train | test")->default_val("all");
    evaluate->add_flag("--table", eval_opts.table, "Print the metrics table instead of JSON");

    std::string model, image, predict_config, profile_config;
    auto* predict = app.add_subcommand("predict", "Classify one PNG frame");
    predict->add_option("--config", predict_config, "Run configuration, checked against the model");
    predict->add_option("--model", model, "Model file")->required();
    predict->add_option("--image", image, "PNG image")->required();

    ProfileOptions prof_opts;
    auto* profile = app.add_subcommand("profile", "Per-stage inference timing");
    profile->add_option("--config", profile_config, "Run configuration, checked against the model");
    profile->add_option("--model", prof_opts.model, "Model file")->required();
    profile->add_option("--data", prof_opts.data_dir, "Directory with manifest.csv")->required();
    profile->add_option("--reps", prof_opts.repetitions, "Repetitions per frame")->default_val(1);
    profile->add_option("--frames", prof_opts.max_frames, "Use at most this many frames (0 = all)")->default_val(0);
    profile->add_flag("--json", prof_opts.json, "Emit JSON instead of CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    if (*synth) return cmd_synth(config, out_dir, std::cout, std::cerr);
    if (*train) {
        train_opts.config = config;
        if (!data_dir.empty()) train_opts.data_dir = data_dir;
        if (!log_out.empty()) train_opts.log_out = log_out;
        if (!plan_out.empty()) train_opts.plan_out = plan_out;
        return cmd_train(train_opts, std::cout, std::cerr);
    }
    if (*evaluate) {
        if (!eval_config.empty()) eval_opts.config = eval_config;
        return cmd_evaluate(eval_opts, std::cout, std::cerr);
    }
    if (*predict) {
        std::optional<std::filesystem::path> cfg;
        if (!predict_config.empty()) cfg = predict_config;
        return cmd_predict(model, image, std::cout, std::cerr, cfg);
    }
    if (*profile) {
        if (!profile_config.empty()) prof_opts.config = profile_config;
        return cmd_profile(prof_opts, std::cout, std::cerr);
    }
    return kConfig;
}
