// Command-line entry point: train, eval, ortho-check, grad-check.
//
// Exit codes: 0 success, 1 numeric or verification failure, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ocfer/checkpoint.hpp"
#include "ocfer/data.hpp"
#include "ocfer/eval.hpp"
#include "ocfer/model.hpp"
#include "ocfer/train.hpp"
#include "ocfer/verify.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

const std::vector<std::string> kModels{"tiny_cnn", "resnet18_fer"};
const std::vector<std::string> kPolicies{"all-conv", "stride1-3x3", "none"};

struct TrainFlags {
    std::string data;
    std::string checkpoint = "ocfer.ckpt";
    std::string out = "metrics.tsv";
    std::size_t subset = 0;
    std::size_t threads = 1;
    std::size_t checkpoint_every = 0;
    ocfer::TrainConfig config;
};

struct EvalFlags {
    std::string data;
    std::string checkpoint;
    std::string out;
    std::string split = "both";
    std::size_t subset = 0;
    std::size_t threads = 1;
};

struct GradFlags {
    ocfer::ModelGradCheckOptions options;
};

std::vector<ocfer::Sample> maybe_subset(std::vector<ocfer::Sample> split, std::size_t per_class) {
    if (per_class == 0) return split;
    return ocfer::first_n_per_class(split, per_class);
}

int run_train(const TrainFlags& f) {
    const ocfer::Dataset ds = ocfer::load_fer_csv(f.data);
    const auto splits = ocfer::partition_by_usage(ds);
    const auto train_split = maybe_subset(splits.train, f.subset);
    if (train_split.empty()) {
        std::cerr << "error: no Training rows in " << f.data << "\n";
        return kExitFailure;
    }
    ocfer::Model model = ocfer::build_model(f.config.model, f.config.seed);

    std::ofstream metrics(f.out);
    if (!metrics) {
        std::cerr << "error: cannot write metrics log " << f.out << "\n";
        return kExitFailure;
    }
    ocfer::TrainOptions options;
    options.threads = f.threads;
    options.metrics = &metrics;
    options.checkpoint_path = f.checkpoint;
    options.checkpoint_every = f.checkpoint_every;

    std::cout << "training " << f.config.model << " on " << train_split.size() << " samples, "
              << f.config.describe() << "\n";
    const auto result = ocfer::train(f.config, train_split, model, options);
    const auto& last = result.log.back();
    std::printf("done: %zu iterations, final task %.6f orth %.6f total %.6f\n", result.log.size(), last.loss.task,
                last.loss.orth, last.loss.total);
    std::cout << "checkpoint: " << f.checkpoint << "\nmetrics: " << f.out << "\n";
    return 0;
}

int run_eval(const EvalFlags& f) {
    ocfer::Checkpoint ck;
    try {
        ck = ocfer::load_checkpoint(f.checkpoint);
    } catch (const ocfer::CheckpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    const ocfer::Model model = ocfer::model_from_checkpoint(ck);
    const auto splits = ocfer::partition_by_usage(ocfer::load_fer_csv(f.data));

    std::vector<ocfer::EvalResult> results;
    auto run = [&](const std::vector<ocfer::Sample>& split, const std::string& name, const char* label) {
        const auto subset = maybe_subset(split, f.subset);
        if (subset.empty()) {
            std::cerr << "warning: split " << name << " is empty, skipped\n";
            return;
        }
        auto r = ocfer::evaluate(model, subset, name, f.threads);
        r.config_hash = ck.config.hash();
        std::printf("%s: %.3f  (%zu samples)\n", label, r.accuracy, r.sample_count);
        std::cout << ocfer::format_confusion(r.matrix);
        results.push_back(std::move(r));
    };
    if (f.split == "public" || f.split == "both") run(splits.public_test, "PublicTest", "Public test(%)");
    if (f.split == "private" || f.split == "both") run(splits.private_test, "PrivateTest", "Private test(%)");
    if (results.empty()) {
        std::cerr << "error: nothing to evaluate\n";
        return kExitFailure;
    }
    if (!f.out.empty()) ocfer::emit_report(results, f.out);
    return 0;
}

int run_ortho_check(const ocfer::OrthoSweepOptions& options) {
    const auto report = ocfer::run_ortho_sweep(options);
    std::printf("toeplitz oracle: %zu kernels, max discrepancy %.3e (tol %.0e)\n", options.toeplitz_cases,
                report.toeplitz_max, options.toeplitz_tol);
    std::printf("ortho gradient:  %zu kernels, max relative error %.3e (tol %.0e)\n", options.grad_cases,
                report.grad_max, options.grad_tol);
    for (const auto& f : report.toeplitz_failures)
        std::printf("FAIL toeplitz %s discrepancy %.3e\n", f.kernel.describe().c_str(), f.error);
    for (const auto& f : report.grad_failures)
        std::printf("FAIL gradient %s rel error %.3e\n", f.kernel.describe().c_str(), f.error);
    return report.passed() ? 0 : kExitFailure;
}

int run_grad_check(const GradFlags& f, double tol) {
    const auto report = ocfer::model_grad_check(f.options);
    std::printf("%s lambda=%g: %zu coordinates (%zu skipped at kinks), max relative error %.3e (worst in %s, tol %.0e)\n",
                f.options.model.c_str(), f.options.lambda, report.checked, report.skipped, report.max_rel_error,
                report.worst_parameter.c_str(), tol);
    return report.max_rel_error <= tol ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orthogonal-convolution regularized facial expression training"};
    app.require_subcommand(1);

    TrainFlags tf;
    auto* train = app.add_subcommand("train", "Train a model with cross-entropy + lambda * orthogonality loss");
    train->add_option("--data", tf.data, "FER2013 CSV (emotion,pixels,Usage)")->required()->check(CLI::ExistingFile);
    train->add_option("--model", tf.config.model, "Model: tiny_cnn | resnet18_fer")
        ->check(CLI::IsMember(kModels))
        ->capture_default_str();
    train->add_option("--epochs", tf.config.epochs, "Epochs (published recipe: 250)")->capture_default_str();
    train->add_option("--batch", tf.config.batch_size, "Batch size (published recipe: 8)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--lr", tf.config.lr0, "Initial learning rate (published recipe: 0.01)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--decay-every", tf.config.decay_every, "Iterations per learning-rate decay (published recipe: 10000)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--decay-factor", tf.config.decay_factor, "Learning-rate divisor per decay (published recipe: 10)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--lambda", tf.config.lambda, "Orthogonality loss weight (published recipe: 0.5)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    train->add_option("--ortho-policy", tf.config.ortho_policy, "Regularized layers: all-conv | stride1-3x3 | none")
        ->check(CLI::IsMember(kPolicies))
        ->capture_default_str();
    train->add_option("--seed", tf.config.seed, "Seed for initialization and shuffling")->capture_default_str();
    train->add_option("--subset", tf.subset, "Use the first N training samples per class (0 = all)")
        ->capture_default_str();
    train->add_option("--checkpoint", tf.checkpoint, "Checkpoint output path")->capture_default_str();
    train->add_option("--checkpoint-every", tf.checkpoint_every, "Also checkpoint every N iterations (0 = end only)")
        ->capture_default_str();
    train->add_option("--out", tf.out, "Metrics log path (iteration, lr, task, orth, total)")->capture_default_str();
    train->add_option("--threads", tf.threads, "Worker threads per batch (1 = bit-exact reference)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    EvalFlags ef;
    auto* eval = app.add_subcommand("eval", "Accuracy and confusion matrix on the test splits");
    eval->add_option("--checkpoint", ef.checkpoint, "Checkpoint to evaluate")->required();
    eval->add_option("--data", ef.data, "FER2013 CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--split", ef.split, "public | private | both")
        ->check(CLI::IsMember({"public", "private", "both"}))
        ->capture_default_str();
    eval->add_option("--subset", ef.subset, "Use the first N samples per class (0 = all)")->capture_default_str();
    eval->add_option("--out", ef.out, "Write a JSON report to this path");
    eval->add_option("--threads", ef.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    ocfer::OrthoSweepOptions of;
    auto* ortho = app.add_subcommand("ortho-check", "Verify self-convolution and its gradient against oracles");
    ortho->add_option("--seed", of.seed, "Sweep seed")->capture_default_str();
    ortho->add_option("--cases", of.toeplitz_cases, "Kernels in the Toeplitz sweep")->capture_default_str();
    ortho->add_option("--grad-cases", of.grad_cases, "Kernels in the gradient sweep")->capture_default_str();
    ortho->add_flag("--inject-fault", of.inject_fault, "Test hook: perturb results so the check must fail");

    GradFlags gf;
    double grad_tol = 1e-6;
    auto* grad = app.add_subcommand("grad-check", "Finite-difference check of the full training objective");
    grad->add_option("--model", gf.options.model, "Model: tiny_cnn | resnet18_fer")
        ->check(CLI::IsMember(kModels))
        ->capture_default_str();
    grad->add_option("--lambda", gf.options.lambda, "Orthogonality loss weight (published recipe: 0.5)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    grad->add_option("--ortho-policy", gf.options.ortho_policy, "Regularized layers")
        ->check(CLI::IsMember(kPolicies))
        ->capture_default_str();
    grad->add_option("--seed", gf.options.seed, "Seed for weights and sample")->capture_default_str();
    grad->add_option("--coords", gf.options.coords, "Sampled coordinates")->capture_default_str();
    grad->add_option("--tol", grad_tol, "Maximum relative error")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train) return run_train(tf);
        if (*eval) return run_eval(ef);
        if (*ortho) return run_ortho_check(of);
        if (*grad) return run_grad_check(gf, grad_tol);
    } catch (const ocfer::NonFiniteError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
