#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qcvisc/qcvisc.hpp"

namespace {

std::string default_out_dir() {
    const char* env = std::getenv("QCVISC_OUT_DIR");
    return env && *env ? std::string(env) : std::string(".");
}

int cmd_run(const std::string& config_path, const qcvisc::RunOptions& opt, const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    const qcvisc::SceneConfig cfg = qcvisc::parse_config(config_path);
    const qcvisc::RunReport rep = qcvisc::run(cfg, opt);

    std::filesystem::create_directories(out_dir);
    const std::string stem = std::filesystem::path(config_path).stem().string();
    const auto json_path = std::filesystem::path(out_dir) / (stem + ".report.json");
    const auto csv_path = std::filesystem::path(out_dir) / (stem + ".csv");
    qcvisc::emit_json(rep, json_path.string());
    qcvisc::emit_csv(rep, csv_path.string());

    for (const auto& c : rep.document["checks"]) {
        std::cout << "[" << c["index"].get<std::size_t>() << "] " << c["type"].get<std::string>();
        if (!c["label"].get<std::string>().empty()) std::cout << " '" << c["label"].get<std::string>() << "'";
        std::cout << ": " << c["status"].get<std::string>();
        if (!c["message"].get<std::string>().empty()) std::cout << " (" << c["message"].get<std::string>() << ")";
        std::cout << "\n";
    }
    std::cout << "report: " << json_path.string() << "\ntable:  " << csv_path.string() << "\n";
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "wall time: " << secs << " s\n";
    return rep.exit_code;
}

int cmd_catalog() {
    for (const auto& e : qcvisc::catalog_entries()) {
        std::cout << e.name << "\n  " << e.formula << "\n";
        if (!e.params.empty()) std::cout << "  params: " << e.params << "\n";
        std::cout << "  constant coefficient: " << (e.flags.constant_coefficient ? "yes" : "no")
                  << ", pure second order: " << (e.flags.pure_second_order ? "yes" : "no")
                  << ", negativity: " << (e.flags.negativity ? "yes" : "no") << "\n";
    }
    return 0;
}

int cmd_audit(const qcvisc::CatalogSpec& spec, std::size_t dim, std::size_t samples, std::uint64_t seed,
              double tol, unsigned threads) {
    const auto F = qcvisc::make_subequation(spec, dim);
    const auto rep = qcvisc::check_positivity(F, samples, seed, tol, threads);
    std::cout << spec.name << " (n = " << dim << "): " << rep.n_violations << " violations in " << rep.n_samples
              << " samples, worst drop " << qcvisc::format_double(rep.worst_drop) << "\n";
    if (!rep.passed()) {
        const auto& v = rep.violations.front();
        std::cout << "first violation at sample " << v.sample << ", drop " << qcvisc::format_double(v.drop) << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-convex viscosity checks"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid;
    std::optional<double> tol;
    unsigned threads = 0;
    std::string out_dir = default_out_dir();

    auto* run = app.add_subcommand("run", "Run the checks in a scene config");
    std::string config_path;
    run->add_option("config", config_path, "Scene config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override the scene seed");
    run->add_option("--grid", grid, "Points per axis for scans")->check(CLI::Range(2, 100000));
    run->add_option("--tol", tol, "Membership tolerance")->check(CLI::PositiveNumber);
    run->add_option("--threads", threads, "Worker threads (0 = all cores)");
    run->add_option("--out", out_dir, "Output directory (default $QCVISC_OUT_DIR or .)");

    app.add_subcommand("catalog", "List the catalog subequations");

    auto* audit = app.add_subcommand("audit-positivity", "Statistical audit of positivity for a catalog entry");
    qcvisc::CatalogSpec spec;
    std::size_t dim = 2, samples = 100000;
    std::uint64_t audit_seed = 1;
    double audit_tol = 1e-9;
    audit->add_option("name", spec.name, "Catalog name")->required();
    audit->add_option("--dim", dim, "Dimension")->check(CLI::PositiveNumber);
    audit->add_option("--c", spec.c, "Constant c");
    audit->add_option("--k", spec.k, "Eigenvalue index (1-based)");
    audit->add_option("--samples", samples, "Number of samples");
    audit->add_option("--seed", audit_seed, "Seed");
    audit->add_option("--tol", audit_tol, "Tolerance");
    audit->add_option("--threads", threads, "Worker threads (0 = all cores)");

    app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 3;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, {seed, grid, tol, threads}, out_dir);
        if (app.got_subcommand("catalog")) return cmd_catalog();
        if (audit->parsed()) return cmd_audit(spec, dim, samples, audit_seed, audit_tol, threads);
        if (app.got_subcommand("version")) {
            std::cout << "qcvisc " << qcvisc::kVersion << "\n";
            return 0;
        }
    } catch (const qcvisc::ConfigError& e) {
        for (const auto& m : e.errors()) std::cerr << "config error: " << m << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
