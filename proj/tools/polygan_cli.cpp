// polygan: verify / train / sample / report.
#include "polygan/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Polynomial generators as coupled CP decompositions"};
    app.set_version_flag("--version", polygan::kVersion);
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    double tol = 1e-9;
    auto* verify = app.add_subcommand("verify", "Check the algebraic identities on random instances");
    verify->add_option("--seed", seed, "RNG seed");
    verify->add_option("--tol", tol, "Relative error tolerance")->check(CLI::NonNegativeNumber);

    std::string config, out_dir = "run";
    auto* train = app.add_subcommand("train", "Train a generator from a JSON config");
    train->add_option("--config", config, "Config file")->required();
    train->add_option("--out", out_dir, "Output directory");

    std::string ckpt, samples_out;
    std::int64_t n = 2000;
    std::uint64_t sample_seed = 0;
    auto* sample = app.add_subcommand("sample", "Draw samples from a checkpoint");
    sample->add_option("--ckpt", ckpt, "Checkpoint file")->required();
    sample->add_option("--n", n, "Number of samples")->required();
    sample->add_option("--seed", sample_seed, "Latent seed")->required();
    sample->add_option("--out", samples_out, "Output CSV")->required();

    std::string csv_in, manifold_id;
    std::size_t bins = 16;
    auto* report = app.add_subcommand("report", "Residual and coverage of a sample CSV");
    report->add_option("--in", csv_in, "Samples CSV")->required();
    report->add_option("--manifold", manifold_id, "Target manifold")->required();
    report->add_option("--bins", bins, "Coverage bins");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return polygan::kExitInputError;
    }

    try {
        if (*verify) return polygan::cmd_verify(seed, tol, std::cout);
        if (*train) return polygan::cmd_train(config, out_dir, std::cout, std::cerr);
        if (*sample) return polygan::cmd_sample(ckpt, n, sample_seed, samples_out, std::cerr);
        const auto id = polygan::parse_manifold(manifold_id);
        if (!id) {
            std::cerr << "unknown manifold '" << manifold_id << "'\n";
            return polygan::kExitInputError;
        }
        return polygan::cmd_report(csv_in, polygan::ManifoldSpec{*id}, bins, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return polygan::kExitInputError;
    }
}
