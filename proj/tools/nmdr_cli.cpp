// Command-line entry point: train / eval / gradcheck / plan-debug.
// Exit codes: 0 success, 1 usage error, 2 numeric failure.
#include <CLI11.hpp>
#include <cstdio>

#include "nmdr/gradcheck.hpp"
#include "nmdr/trainer.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale safe model-based RL trainer"};
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "Train from a config file");
    std::string config_path, out_dir, resume_path;
    int64_t seed_override = -1;
    train->add_option("--config", config_path, "Config file path");
    train->add_option("--seed", seed_override, "Override the config seed");
    train->add_option("--out", out_dir, "Override the output directory");
    train->add_option("--resume", resume_path, "Resume from a checkpoint");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string ckpt_path, dump_csv;
    int episodes = 10;
    uint64_t eval_seed = 1234;
    bool ablate = false;
    eval->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
    eval->add_option("--episodes", episodes, "Number of evaluation episodes");
    eval->add_option("--seed", eval_seed, "Evaluation seed base");
    eval->add_flag("--ablate-planner", ablate, "Always use the control actor");
    eval->add_option("--dump", dump_csv, "Write a trajectory CSV with planner diagnostics");

    auto* gc = app.add_subcommand("gradcheck", "Run all finite-difference suites");
    int instances = 100;
    uint64_t gc_seed = 2024;
    gc->add_option("--instances", instances, "Random instances per module");
    gc->add_option("--seed", gc_seed, "Suite seed");

    auto* pd = app.add_subcommand("plan-debug", "Print plan diagnostics for a few steps");
    std::string pd_ckpt;
    int pd_steps = 20;
    uint64_t pd_seed = 7;
    pd->add_option("--checkpoint", pd_ckpt, "Checkpoint file")->required();
    pd->add_option("--steps", pd_steps, "Environment steps to trace");
    pd->add_option("--seed", pd_seed, "Environment seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*train) {
            std::unique_ptr<nmdr::Trainer> trainer;
            if (!resume_path.empty()) {
                trainer = nmdr::Trainer::load_checkpoint(resume_path, out_dir);
            } else {
                if (config_path.empty()) {
                    std::fprintf(stderr, "train: --config is required (or --resume)\n");
                    return 1;
                }
                nmdr::TrainConfig cfg = nmdr::TrainConfig::load(config_path);
                if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
                if (!out_dir.empty()) cfg.output_dir = out_dir;
                cfg.finalize();
                trainer = std::make_unique<nmdr::Trainer>(cfg);
            }
            trainer->run();
            const std::string final_ckpt = trainer->config().output_dir + "/final.nmdr";
            trainer->save_checkpoint(final_ckpt);
            std::printf("done: %lld env steps, %lld gradient steps\n",
                        static_cast<long long>(trainer->env_steps()),
                        static_cast<long long>(trainer->grad_steps()));
            std::printf("checkpoint: %s\nmetrics: %s\n", final_ckpt.c_str(),
                        trainer->metrics_path().c_str());
        } else if (*eval) {
            auto trainer = nmdr::Trainer::load_checkpoint(ckpt_path, "/tmp/nmdr_eval");
            auto summary = trainer->evaluate(episodes, eval_seed, ablate, dump_csv);
            std::printf(
                "episodes: %d\nmean_return: %.4f\nmean_cost: %.4f\n"
                "chose_safe_rate: %.4f\nbudget: %.1f\nviolation: %s\n",
                summary.episodes, summary.mean_return, summary.mean_cost,
                summary.chose_safe_rate, static_cast<double>(trainer->config().lagrange.budget),
                summary.violation ? "yes" : "no");
        } else if (*gc) {
            bool all_ok = true;
            for (const auto& r : nmdr::gradcheck::run_all(instances, gc_seed)) {
                std::string status = r.ok ? "OK" : ("FAIL: " + r.detail);
                std::printf("%-14s %4d instances  %8lld gradients  max_rel_err %.2e  %s\n",
                            r.name.c_str(), r.instances,
                            static_cast<long long>(r.checked_scalars), r.max_rel_err,
                            status.c_str());
                all_ok = all_ok && r.ok;
            }
            if (!all_ok) return 2;
        } else if (*pd) {
            auto trainer = nmdr::Trainer::load_checkpoint(pd_ckpt, "/tmp/nmdr_plandebug");
            auto diags = trainer->plan_debug(pd_steps, pd_seed);
            std::printf("budget b_s = %.4f\n",
                        static_cast<double>(trainer->planner_budget_value()));
            std::printf("%-5s %-10s %-10s %s\n", "step", "c_obs", "c_sum", "chose_safe");
            for (size_t i = 0; i < diags.size(); ++i)
                std::printf("%-5zu %-10.4f %-10.4f %d\n", i,
                            static_cast<double>(diags[i].c_obs),
                            static_cast<double>(diags[i].c_sum), diags[i].chose_safe ? 1 : 0);
        }
    } catch (const nmdr::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
