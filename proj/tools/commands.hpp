#pragma once

// Subcommands of the qnmf command-line tool. Kept header-only so the test
// suites can drive them without spawning processes.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "qnmf/qnmf.hpp"

namespace qnmf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      // I/O, usage, malformed input
inline constexpr int kExitSolverStop = 2;   // Degenerate or TimeBudget

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::string out;
    for (unsigned int k = 0; k < len; ++k) out += fmt::format("{:02x}", md[k]);
    return out;
}

inline bool has_extension(const std::string& path, std::string_view ext) {
    return std::filesystem::path(path).extension() == ext;
}

// Data loading -----------------------------------------------------------------

enum class Layout {
    Raw,      // image planes are the data matrix
    Tiled,    // one column per block
    Columns,  // one column per input image
};

struct LoadedData {
    QuatMatrix M;
    Layout layout{Layout::Raw};
    std::optional<TilingSpec> tiling;
    bool from_ppm{false};
    Index image_h{0};
    Index image_w{0};
    std::size_t repaired{0};
    std::string digest;  // sha256 over all input files, in order
};

/**
 * Reads the data matrix. One .qstk file (Stokes or RGB), one .ppm file (RGB),
 * or several .ppm files of equal size (RGB, one column per image). block > 0
 * tiles a single image into block×block patches; block = 0 uses the image as
 * the matrix.
 */
inline LoadedData load_data(const std::vector<std::string>& inputs, ConstraintSet mode, Index block) {
    if (inputs.empty()) throw std::invalid_argument("no input file given");
    LoadedData d;
    std::string all_bytes;
    QuatMatrix img;
    if (inputs.size() > 1) {
        if (mode != ConstraintSet::PureNonneg) throw std::invalid_argument("several inputs are only supported in rgb mode");
        std::vector<RgbImage> imgs;
        for (const auto& path : inputs) {
            if (!has_extension(path, ".ppm")) throw std::invalid_argument("multi-image input must be .ppm files: " + path);
            const std::string bytes = read_file(path);
            all_bytes += sha256_hex(bytes);
            imgs.push_back(decode_ppm(bytes));
        }
        d.M = rgb_images_to_columns(imgs);
        d.layout = Layout::Columns;
        d.from_ppm = true;
        d.image_h = imgs.front().height();
        d.image_w = imgs.front().width();
        d.digest = sha256_hex(all_bytes);
        return d;
    }

    const std::string& path = inputs.front();
    const std::string bytes = read_file(path);
    d.digest = sha256_hex(bytes);
    if (has_extension(path, ".ppm")) {
        if (mode != ConstraintSet::PureNonneg) throw std::invalid_argument("a .ppm input requires --mode rgb");
        img = rgb_to_qmat(decode_ppm(bytes));
        d.from_ppm = true;
    } else {
        img = decode_qstk(bytes);
        d.repaired = mode == ConstraintSet::Stokes ? repair_stokes(img) : repair_rgb(img);
    }
    d.image_h = img.rows();
    d.image_w = img.cols();
    if (block > 0) {
        d.tiling = TilingSpec::for_image(img.rows(), img.cols(), block, block);
        d.M = tile(img, *d.tiling);
        d.layout = Layout::Tiled;
    } else {
        d.M = std::move(img);
    }
    return d;
}

/// Reconstruction W·H mapped back to image layout (untiled when the data was tiled).
inline QuatMatrix reconstruction_image(const LoadedData& d, const QuatMatrix& wh) {
    return d.layout == Layout::Tiled ? untile(wh, *d.tiling) : wh;
}

// Manifest -------------------------------------------------------------------

class Manifest {
public:
    template <typename T>
    void add(std::string_view key, const T& value) {
        text_ += fmt::format("{}={}\n", key, value);
    }
    const std::string& str() const { return text_; }

private:
    std::string text_;
};

inline void add_config(Manifest& mf, const SolverConfig& cfg) {
    mf.add("rank", cfg.rank);
    mf.add("max_iter", cfg.max_outer);
    mf.add("tol", cfg.outer_tol);
    mf.add("inner_iter", cfg.inner_iter);
    mf.add("inner_tol", cfg.inner_tol);
    mf.add("xi", cfg.xi);
    mf.add("div_eps", cfg.div_eps);
    mf.add("time_budget", cfg.time_budget_secs);
    mf.add("seed", cfg.seed);
}

inline std::string join_methods(const std::vector<Method>& ms) {
    std::string s;
    for (Method m : ms) s += (s.empty() ? "" : ",") + std::string(method_flag(m));
    return s;
}

inline bool ok_termination(Termination t) { return t == Termination::Tol || t == Termination::MaxIter; }

// synth ----------------------------------------------------------------------

struct SynthOptions {
    SynthSpec spec;
    std::string out;  // prefix
};

/// Writes <out>.M.qstk, <out>.W.qstk, <out>.H.csv and <out>.manifest.txt.
/// M is stored unblocked: factorize it with --block 0.
inline int cmd_synth(const SynthOptions& o, std::ostream& log = std::cout) {
    const SynthData d = synthesize(o.spec);
    write_file(o.out + ".M.qstk", encode_qstk(d.M));
    write_file(o.out + ".W.qstk", encode_qstk(d.W));
    write_file(o.out + ".H.csv", format_matrix_csv(d.H));
    Manifest mf;
    mf.add("command", "synth");
    mf.add("mode", o.spec.set == ConstraintSet::Stokes ? "stokes" : "rgb");
    mf.add("m", o.spec.m);
    mf.add("n", o.spec.n);
    mf.add("rank", o.spec.r);
    mf.add("noise", o.spec.noise);
    mf.add("sparsity", o.spec.sparsity);
    mf.add("seed", o.spec.seed);
    write_file(o.out + ".manifest.txt", mf.str());
    log << fmt::format("wrote {}.M.qstk ({}x{}, rank {})\n", o.out, o.spec.m, o.spec.n, o.spec.r);
    return kExitOk;
}

// factorize ------------------------------------------------------------------

struct FactorizeOptions {
    std::vector<std::string> inputs;
    ConstraintSet mode{ConstraintSet::Stokes};
    std::vector<Method> methods{Method::QHALS};
    SolverConfig cfg;
    InitStrategy init{InitStrategy::SpaStacked};
    Index block{8};
    bool timing{false};  // wall time in the report's time_s column
    std::string out;     // prefix
};

struct CellResult {
    ReportRow row;
    std::optional<SolveResult> solution;
    std::string error;
};

inline CellResult run_cell(const QuatMatrix& m, ConstraintSet mode, const FactorPair& init, SolverConfig cfg,
                           Method method, bool timing) {
    cfg.method = method;
    CellResult c;
    c.row.method = method_name(method);
    c.row.rank = cfg.rank;
    try {
        SolveResult res = qnmf_solve(m, mode, cfg, init);
        c.row.metrics = res.report.final_metrics;
        if (timing) c.row.time_s = res.report.final_metrics.elapsed;
        c.row.iterations = static_cast<int>(res.report.wall_times.size());
        c.row.terminated_by = to_string(res.report.terminated_by);
        c.solution = std::move(res);
    } catch (const std::exception& e) {
        c.row.terminated_by = "Error";
        c.error = e.what();
    }
    return c;
}

inline std::string init_name(InitStrategy s) { return s == InitStrategy::SpaStacked ? "spa" : "random"; }

inline std::string method_prefix(const std::string& out, Method m) { return out + "." + method_flag(m); }

/**
 * Runs the initializer once, then every requested method from the same start.
 * Per method writes <out>.<method>.{W.qstk,H.csv,trace.csv,recon.qstk|recon.ppm};
 * once per run <out>.report.csv, <out>.timing.csv and <out>.manifest.txt.
 */
inline int cmd_factorize(const FactorizeOptions& o, std::ostream& log = std::cout) {
    if (o.methods.empty()) throw std::invalid_argument("no method given");
    o.cfg.validate();
    const LoadedData d = load_data(o.inputs, o.mode, o.block);
    if (d.repaired) log << fmt::format("warning: repaired {} infeasible input pixels\n", d.repaired);

    const InitPlan plan{o.init, o.cfg.rank, o.cfg.seed};
    const FactorPair init = init_factors(d.M, o.mode, plan, o.cfg);

    std::vector<ReportRow> rows;
    std::string timing = "method,iter,seconds\n";
    int exit_code = kExitOk;
    for (Method method : o.methods) {
        CellResult c = run_cell(d.M, o.mode, init, o.cfg, method, o.timing);
        rows.push_back(c.row);
        if (!c.solution) {
            log << fmt::format("{}: {}\n", method_name(method), c.error);
            exit_code = std::max(exit_code, kExitFailure);
            continue;
        }
        const SolveResult& res = *c.solution;
        const std::string pre = method_prefix(o.out, method);
        write_file(pre + ".W.qstk", encode_qstk(res.factors.W));
        write_file(pre + ".H.csv", format_matrix_csv(res.factors.H));
        write_file(pre + ".trace.csv", format_trace(res.report.errors));
        const QuatMatrix wh = mul_real(res.factors.W, res.factors.H);
        if (d.from_ppm && d.layout != Layout::Columns) {
            const QuatMatrix recon = reconstruction_image(d, wh);
            if (real_plane_warning(recon)) log << "warning: reconstruction has a non-negligible real plane\n";
            write_ppm(pre + ".recon.ppm", qmat_to_rgb(recon));
        } else {
            write_file(pre + ".recon.qstk", encode_qstk(reconstruction_image(d, wh)));
        }
        for (std::size_t k = 0; k < res.report.wall_times.size(); ++k)
            timing += fmt::format("{},{},{}\n", method_flag(method), k + 1, res.report.wall_times[k]);
        if (!res.report.diagnostic.empty()) log << fmt::format("{}: {}\n", method_name(method), res.report.diagnostic);
        log << fmt::format("{}: Upsilon={:.2f}% after {} iterations ({})\n", method_name(method),
                           100.0 * res.report.final_metrics.upsilon, res.report.wall_times.size(),
                           to_string(res.report.terminated_by));
        if (!ok_termination(res.report.terminated_by)) exit_code = std::max(exit_code, kExitSolverStop);
    }
    write_report_csv(o.out + ".report.csv", rows);
    write_file(o.out + ".timing.csv", timing);

    Manifest mf;
    mf.add("command", "factorize");
    for (const auto& in : o.inputs) mf.add("input", in);
    mf.add("input_sha256", d.digest);
    mf.add("mode", o.mode == ConstraintSet::Stokes ? "stokes" : "rgb");
    mf.add("methods", join_methods(o.methods));
    add_config(mf, o.cfg);
    mf.add("init", init_name(o.init));
    mf.add("block", o.block);
    mf.add("repaired_pixels", d.repaired);
    write_file(o.out + ".manifest.txt", mf.str());
    return exit_code;
}

// sweep ----------------------------------------------------------------------

struct SweepOptions {
    std::vector<std::string> inputs;
    ConstraintSet mode{ConstraintSet::Stokes};
    std::vector<Index> ranks;
    std::vector<Method> methods;
    SolverConfig cfg;
    InitStrategy init{InitStrategy::SpaStacked};
    Index block{8};
    bool timing{false};
    int jobs{1};
    std::string out;  // CSV path; the manifest goes to <out>.manifest.txt
};

/// Full ranks × methods grid in one CSV, rank-major. Cells run on up to `jobs`
/// threads; a failing cell becomes an "Error" row and the sweep continues.
inline int cmd_sweep(const SweepOptions& o, std::ostream& log = std::cout) {
    if (o.methods.empty()) throw std::invalid_argument("sweep: empty method list");
    if (o.ranks.empty()) throw std::invalid_argument("sweep: empty rank list");
    const LoadedData d = load_data(o.inputs, o.mode, o.block);
    if (d.repaired) log << fmt::format("warning: repaired {} infeasible input pixels\n", d.repaired);

    // One initialization per rank, shared by every method at that rank.
    std::vector<std::optional<FactorPair>> inits(o.ranks.size());
    std::vector<std::string> init_errors(o.ranks.size());
    for (std::size_t k = 0; k < o.ranks.size(); ++k) {
        SolverConfig cfg = o.cfg;
        cfg.rank = o.ranks[k];
        try {
            cfg.validate();
            inits[k] = init_factors(d.M, o.mode, InitPlan{o.init, cfg.rank, cfg.seed}, cfg);
        } catch (const std::exception& e) {
            init_errors[k] = e.what();
        }
    }

    const std::size_t cells = o.ranks.size() * o.methods.size();
    std::vector<CellResult> results(cells);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t c = next++; c < cells; c = next++) {
            const std::size_t rk = c / o.methods.size();
            const Method method = o.methods[c % o.methods.size()];
            if (!inits[rk]) {
                results[c].row = {method_name(method), o.ranks[rk], std::nullopt, std::nullopt, 0, "Error"};
                results[c].error = init_errors[rk];
                continue;
            }
            SolverConfig cfg = o.cfg;
            cfg.rank = o.ranks[rk];
            results[c] = run_cell(d.M, o.mode, *inits[rk], cfg, method, o.timing);
            results[c].solution.reset();
        }
    };
    const int threads = std::clamp(o.jobs, 1, static_cast<int>(std::max<std::size_t>(1, cells)));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<ReportRow> rows;
    int exit_code = kExitOk;
    for (const auto& c : results) {
        rows.push_back(c.row);
        if (!c.error.empty()) {
            log << fmt::format("{} r={}: {}\n", c.row.method, c.row.rank, c.error);
            exit_code = std::max(exit_code, kExitFailure);
        } else if (c.row.terminated_by != "Tol" && c.row.terminated_by != "MaxIter") {
            exit_code = std::max(exit_code, kExitSolverStop);
        }
    }
    write_report_csv(o.out, rows);

    Manifest mf;
    mf.add("command", "sweep");
    for (const auto& in : o.inputs) mf.add("input", in);
    mf.add("input_sha256", d.digest);
    mf.add("mode", o.mode == ConstraintSet::Stokes ? "stokes" : "rgb");
    mf.add("methods", join_methods(o.methods));
    std::string ranks;
    for (Index r : o.ranks) ranks += (ranks.empty() ? "" : ",") + std::to_string(r);
    mf.add("ranks", ranks);
    SolverConfig shown = o.cfg;
    shown.rank = o.ranks.front();
    add_config(mf, shown);
    mf.add("init", init_name(o.init));
    mf.add("block", o.block);
    mf.add("repaired_pixels", d.repaired);
    write_file(o.out + ".manifest.txt", mf.str());
    log << fmt::format("wrote {} ({} cells)\n", o.out, cells);
    return exit_code;
}

// metrics --------------------------------------------------------------------

struct MetricsOptions {
    std::vector<std::string> inputs;
    ConstraintSet mode{ConstraintSet::Stokes};
    Index block{8};
    std::string w_path;
    std::string h_path;
    std::string out;  // optional CSV
};

/// Recomputes every metric from the data and stored factors.
inline MetricRecord cmd_metrics(const MetricsOptions& o, std::ostream& log = std::cout) {
    const LoadedData d = load_data(o.inputs, o.mode, o.block);
    const QuatMatrix w = decode_qstk(read_file(o.w_path));
    const RealMatrix h = parse_matrix_csv(read_file(o.h_path));
    if (w.rows() != d.M.rows() || h.cols() != d.M.cols() || w.cols() != h.rows())
        throw DimensionError(fmt::format("metrics: W is {}x{}, H is {}x{}, data is {}x{}", w.rows(), w.cols(),
                                         h.rows(), h.cols(), d.M.rows(), d.M.cols()));
    const MetricRecord rec = compute_metrics(d.M, w, h);
    const std::vector<ReportRow> rows{{"metrics", w.cols(), rec, std::nullopt, 0, ""}};
    const std::string csv = format_report(rows);
    if (!o.out.empty()) write_file(o.out, csv);
    log << csv;
    return rec;
}

}  // namespace qnmf::cli
