// sbo command line: runs sweeps from a YAML config and dumps the site basis.
// Talks to the library only through the C interface.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sbo/sbo.h"

namespace {

int report(sbo_status s, const char* what) {
    std::cerr << "sbo: " << what << ": " << sbo_status_string(s);
    const std::string msg = sbo_last_error();
    if (!msg.empty()) std::cerr << ": " << msg;
    std::cerr << "\n";
    return s == SBO_ERR_CONFIG || s == SBO_ERR_INVALID_ARGUMENT ? 2 : 1;
}

struct RunArgs {
    std::string config;
    std::string output_dir = ".";
    std::string method;
    int workers = -1;
    long long seed = -1;
    bool quiet = false;
};

int cmd_run(const RunArgs& a) {
    sbo_config* cfg = nullptr;
    sbo_status s = sbo_config_load(a.config.c_str(), &cfg);
    if (s != SBO_OK) return report(s, "loading config");
    if (!a.method.empty() && (s = sbo_config_set_method(cfg, a.method.c_str())) != SBO_OK) {
        sbo_config_free(cfg);
        return report(s, "--method");
    }
    if (a.workers >= 0) sbo_config_set_workers(cfg, a.workers);
    if (a.seed >= 0) sbo_config_set_seed(cfg, static_cast<uint64_t>(a.seed));
    if ((s = sbo_config_validate(cfg)) != SBO_OK) {
        sbo_config_free(cfg);
        return report(s, "config");
    }

    sbo_result* res = nullptr;
    s = sbo_run(cfg, &res);
    if (s != SBO_OK) {
        sbo_config_free(cfg);
        return report(s, "run");
    }
    s = sbo_result_write(cfg, res, a.output_dir.c_str());
    const std::size_t rows = sbo_result_rows(res);
    const int failed = sbo_result_failures(res);
    sbo_result_free(res);
    sbo_config_free(cfg);
    if (s != SBO_OK) return report(s, "writing results");
    if (!a.quiet) {
        std::cout << rows << " rows written to " << a.output_dir << "\n";
        if (failed) std::cout << failed << " point(s) failed, see metadata\n";
    }
    return failed ? 3 : 0;
}

int cmd_basis(int n_max) {
    sbo_basis* b = nullptr;
    sbo_status s = sbo_basis_create(n_max, &b);
    if (s != SBO_OK) return report(s, "basis");
    char* text = nullptr;
    s = sbo_basis_dump(b, &text);
    if (s == SBO_OK) std::fputs(text, stdout);
    sbo_string_free(text);
    sbo_basis_free(b);
    return s == SBO_OK ? 0 : report(s, "basis-dump");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spin-1 Bose-Hubbard phase diagrams"};
    app.set_version_flag("--version", std::string(sbo_version()));
    app.require_subcommand(1);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "Run the sweep described by a config file");
    run->add_option("config", ra.config, "YAML config")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--output-dir", ra.output_dir, "Directory for results (created if missing)");
    run->add_option("-m,--method", ra.method, "Override run.method")
        ->check(CLI::IsMember({"analytic", "self-consistent"}));
    run->add_option("-w,--workers", ra.workers, "Override run.workers (0: all cores)")->check(CLI::NonNegativeNumber);
    run->add_option("--seed", ra.seed, "Override run.seed")->check(CLI::NonNegativeNumber);
    run->add_flag("-q,--quiet", ra.quiet, "No summary line");

    int n_max = 4;
    auto* basis = app.add_subcommand("basis-dump", "Print the nonzero <mu|a_sigma|mu'> elements");
    basis->add_option("-n,--n-max", n_max, "Largest site occupation")->check(CLI::Range(1, 12));

    CLI11_PARSE(app, argc, argv);
    if (*run) return cmd_run(ra);
    return cmd_basis(n_max);
}
