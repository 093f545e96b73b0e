#include "sdvec/kernel.hpp"
#include "sdvec/report_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <thread>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int fail(const nlohmann::json& err, int code)
{
    std::cout << err.dump() << std::endl;
    return code;
}

template <typename Fn>
int guarded(Fn&& fn)
{
    try {
        return fn();
    } catch (const sdvec::ValidationFailure& e) {
        return fail(sdvec::error_json(sdvec::to_string(e.status()), e.what(), e.errors()), kExitValidation);
    } catch (const sdvec::SimulationError& e) {
        auto err = sdvec::error_json("runtime", e.what());
        err["slot"] = e.slot();
        err["phase"] = e.phase();
        return fail(err, kExitRuntime);
    } catch (const std::invalid_argument& e) {
        return fail(sdvec::error_json("invalid", e.what()), kExitValidation);
    } catch (const std::exception& e) {
        return fail(sdvec::error_json("runtime", e.what()), kExitRuntime);
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"sdvec: slotted vehicular edge network simulator"};
    app.require_subcommand(1);

    std::string scenario;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::vector<std::string> overrides;
    auto* run = app.add_subcommand("run", "run one scenario and write packets.csv, summary.json, decisions.csv");
    run->add_option("scenario", scenario, "scenario JSON")->required();
    auto* seed_opt = run->add_option("--seed", seed, "seed override");
    run->add_option("--out", out_dir, "output directory (default $SDVEC_OUT or ./sdvec-out)");
    run->add_option("--override", overrides, "dotted.path=value")->expected(1, -1);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("scenario", validate_path, "scenario JSON")->required();

    std::string sweep_path;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    auto* sweep = app.add_subcommand("sweep", "run a seed/parameter sweep");
    sweep->add_option("spec", sweep_path, "sweep spec JSON")->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--threads", threads, "parallel runs");

    std::string base_path;
    std::string treat_path;
    auto* compare = app.add_subcommand("compare", "paired per-seed deltas between two run requests");
    compare->add_option("base", base_path, "baseline request JSON")->required();
    compare->add_option("treat", treat_path, "treatment request JSON")->required();
    compare->add_option("--out", out_dir, "also write compare.json here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(sdvec::error_json("usage", e.what()), kExitValidation);
    }

    const std::filesystem::path out = out_dir.empty() ? sdvec::default_out_dir() : std::filesystem::path(out_dir);

    if (*validate) {
        return guarded([&] {
            const sdvec::ValidationResult r = sdvec::validate_file(validate_path);
            if (!r.ok()) {
                return fail(sdvec::error_json(sdvec::to_string(r.status), "scenario validation failed", r.errors),
                            kExitValidation);
            }
            std::cout << nlohmann::json{{"schema_version", sdvec::kOutputSchemaVersion}, {"status", "ok"}}.dump()
                      << std::endl;
            return kExitOk;
        });
    }
    if (*run) {
        return guarded([&] {
            sdvec::RunRequest req{scenario, std::nullopt, out, {}};
            if (*seed_opt) {
                req.seed = seed;
            }
            for (const auto& o : overrides) {
                req.overrides.push_back(sdvec::parse_override(o));
            }
            sdvec::run_and_report(req);
            std::cout << nlohmann::json{{"schema_version", sdvec::kOutputSchemaVersion},
                                        {"status", "ok"},
                                        {"out", out.generic_string()}}
                             .dump()
                      << std::endl;
            return kExitOk;
        });
    }
    if (*sweep) {
        return guarded([&] {
            const auto spec = sdvec::load_sweep_spec(sweep_path);
            sdvec::run_sweep(spec, out, threads);
            std::cout << nlohmann::json{{"schema_version", sdvec::kOutputSchemaVersion},
                                        {"status", "ok"},
                                        {"out", out.generic_string()}}
                             .dump()
                      << std::endl;
            return kExitOk;
        });
    }
    return guarded([&] {
        const auto result =
            sdvec::compare_runs(sdvec::load_compare_request(base_path), sdvec::load_compare_request(treat_path));
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out);
            std::ofstream(out / "compare.json") << result.dump(2) << "\n";
        }
        std::cout << result.dump(2) << std::endl;
        return kExitOk;
    });
}
