#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace qnmf;

namespace {

const std::map<std::string, ConstraintSet> kModes{{"stokes", ConstraintSet::Stokes},
                                                  {"rgb", ConstraintSet::PureNonneg}};
const std::map<std::string, InitStrategy> kInits{{"spa", InitStrategy::SpaStacked}, {"random", InitStrategy::Random}};

std::vector<Method> resolve_methods(const std::vector<std::string>& names, const std::string& flag) {
    std::vector<Method> out;
    for (const auto& n : names) {
        if (n.empty()) continue;
        if (n == "all") {
            out.insert(out.end(), kAllMethods.begin(), kAllMethods.end());
            continue;
        }
        auto m = parse_method(n);
        if (!m) throw CLI::ValidationError(flag, "unknown method '" + n + "'");
        out.push_back(*m);
    }
    if (out.empty()) throw CLI::ValidationError(flag, "empty method list");
    return out;
}

// Flags shared by factorize and sweep; every one maps onto a single SolverConfig field.
void add_solver_flags(CLI::App* cmd, SolverConfig& cfg) {
    cmd->add_option("--max-iter", cfg.max_outer, "maximum outer iterations")->capture_default_str();
    cmd->add_option("--tol", cfg.outer_tol, "relative decrease threshold for the outer loop")->capture_default_str();
    cmd->add_option("--inner-iter", cfg.inner_iter, "maximum sweeps per hierarchical update")->capture_default_str();
    cmd->add_option("--inner-tol", cfg.inner_tol, "relative change threshold for the sweeps")->capture_default_str();
    cmd->add_option("--xi", cfg.xi, "positive floor for H and RGB sources")->capture_default_str();
    cmd->add_option("--div-eps", cfg.div_eps, "singularity threshold for Gram diagonals")->capture_default_str();
    cmd->add_option("--time-budget", cfg.time_budget_secs, "wall-clock budget in seconds")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "seed for random initialization")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quaternion nonnegative matrix factorization for Stokes and RGB images"};
    app.require_subcommand(1);

    // synth
    cli::SynthOptions synth;
    std::string synth_mode = "stokes";
    auto* s = app.add_subcommand("synth", "generate an exact-rank synthetic data matrix");
    s->add_option("--mode", synth_mode, "stokes or rgb")->check(CLI::IsMember({"stokes", "rgb"}))->capture_default_str();
    s->add_option("--m", synth.spec.m, "rows")->capture_default_str();
    s->add_option("--n", synth.spec.n, "columns")->capture_default_str();
    s->add_option("--rank", synth.spec.r, "rank of the ground truth")->capture_default_str();
    s->add_option("--noise", synth.spec.noise, "noise norm relative to the data norm (0.1 ~ 20 dB)")
        ->capture_default_str();
    s->add_option("--sparsity", synth.spec.sparsity, "fraction of zero activations")->capture_default_str();
    s->add_option("--seed", synth.spec.seed, "random seed")->capture_default_str();
    s->add_option("--out", synth.out, "output prefix")->required();

    // factorize
    cli::FactorizeOptions fac;
    std::string fac_mode = "stokes", fac_init = "spa";
    std::vector<std::string> fac_methods{"qhals"};
    auto* f = app.add_subcommand("factorize", "factorize one data set with one or all methods");
    f->add_option("--input", fac.inputs, "data file(s): one .qstk, one .ppm, or several .ppm")->required();
    f->add_option("--mode", fac_mode, "stokes or rgb")->check(CLI::IsMember({"stokes", "rgb"}))->capture_default_str();
    f->add_option("--rank", fac.cfg.rank, "number of sources r")->required();
    f->add_option("--method", fac_methods, "qhals|qals-rhals|qhals-rals|qals|all")->delimiter(',')
        ->capture_default_str();
    f->add_option("--init", fac_init, "spa or random")->check(CLI::IsMember({"spa", "random"}))->capture_default_str();
    f->add_option("--block", fac.block, "tile size for a single image; 0 uses the image as the matrix")
        ->capture_default_str();
    f->add_flag("--timing", fac.timing, "fill the report's time_s column with wall time");
    f->add_option("--out", fac.out, "output prefix")->required();
    add_solver_flags(f, fac.cfg);

    // sweep
    cli::SweepOptions sw;
    std::string sw_mode = "stokes", sw_init = "spa";
    std::vector<std::string> sw_methods{"all"};
    auto* w = app.add_subcommand("sweep", "run a ranks x methods grid into one CSV");
    w->add_option("--input", sw.inputs, "data file(s)")->required();
    w->add_option("--mode", sw_mode, "stokes or rgb")->check(CLI::IsMember({"stokes", "rgb"}))->capture_default_str();
    w->add_option("--ranks", sw.ranks, "comma-separated ranks")->delimiter(',')->required();
    w->add_option("--methods", sw_methods, "comma-separated methods, or all")->delimiter(',')->capture_default_str();
    w->add_option("--init", sw_init, "spa or random")->check(CLI::IsMember({"spa", "random"}))->capture_default_str();
    w->add_option("--block", sw.block, "tile size; 0 uses the image as the matrix")->capture_default_str();
    w->add_option("--jobs", sw.jobs, "concurrent cells")->capture_default_str();
    w->add_flag("--timing", sw.timing, "fill the time_s column with wall time");
    w->add_option("--out", sw.out, "report CSV path")->required();
    add_solver_flags(w, sw.cfg);

    // metrics
    cli::MetricsOptions met;
    std::string met_mode = "stokes";
    auto* mt = app.add_subcommand("metrics", "recompute quality metrics from stored factors");
    mt->add_option("--input", met.inputs, "data file(s)")->required();
    mt->add_option("--mode", met_mode, "stokes or rgb")->check(CLI::IsMember({"stokes", "rgb"}))->capture_default_str();
    mt->add_option("--block", met.block, "tile size; 0 uses the image as the matrix")->capture_default_str();
    mt->add_option("--W", met.w_path, "W factor (.qstk)")->required();
    mt->add_option("--H", met.h_path, "H factor (.csv)")->required();
    mt->add_option("--out", met.out, "optional report CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*s) {
            synth.spec.set = kModes.at(synth_mode);
            return cli::cmd_synth(synth);
        }
        if (*f) {
            fac.mode = kModes.at(fac_mode);
            fac.init = kInits.at(fac_init);
            fac.methods = resolve_methods(fac_methods, "--method");
            return cli::cmd_factorize(fac);
        }
        if (*w) {
            sw.mode = kModes.at(sw_mode);
            sw.init = kInits.at(sw_init);
            sw.methods = resolve_methods(sw_methods, "--methods");
            return cli::cmd_sweep(sw);
        }
        if (*mt) {
            met.mode = kModes.at(met_mode);
            cli::cmd_metrics(met);
            return cli::kExitOk;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitFailure;
    }
    return cli::kExitFailure;
}
