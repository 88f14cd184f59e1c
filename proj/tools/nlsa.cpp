// Command-line front end: builds segment tables, runs single simulations and
// sweeps, and writes the CSV reports.
//
// Exit codes: 0 success, 1 invariant/oracle failure, 2 usage/config error.

#include <CLI11.hpp>

#include <atomic>
#include <iostream>
#include <thread>

#include "nlsa/accuracy.hpp"
#include "nlsa/fabric.hpp"
#include "nlsa/io.hpp"
#include "nlsa/verify.hpp"
#include "nlsa/version.hpp"

namespace {

using namespace nlsa;

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitUsage = 2;

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 1;
};

SystolicConfig load_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) return SystolicConfig{};
    return read_config_file(opts.config_path);
}

std::string meta_line(const SystolicConfig& cfg, std::uint64_t seed) {
    return std::string("nlsa ") + kToolVersion + " config=" + config_hash(cfg) +
           " seed=" + std::to_string(seed) +
           " calibration.output_bus_width=" + std::to_string(cfg.output_bus_width);
}

const std::vector<std::string> kReportHeader = {"config_id", "mode",  "M",       "N",
                                                "K",         "fill",  "compute", "drain",
                                                "ipf",       "total", "mac_ops", "utilization",
                                                "gops",      "gnfs"};

std::vector<std::string> report_row(const std::string& config_id, const std::string& mode,
                                    std::int64_t m, std::int64_t n, std::int64_t k,
                                    const CycleReport& rep) {
    return {config_id,
            mode,
            std::to_string(m),
            std::to_string(n),
            std::to_string(k),
            std::to_string(rep.fill_cycles),
            std::to_string(rep.compute_cycles),
            std::to_string(rep.drain_cycles),
            std::to_string(rep.ipf_cycles),
            std::to_string(rep.total_cycles),
            std::to_string(rep.mac_ops),
            format_fixed(rep.utilization),
            format_fixed(rep.gops),
            format_fixed(rep.gnfs)};
}

void emit(const CsvWriter& csv, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        csv.write(out_path);
    }
}

QuantizedMatrix random_activations(std::uint64_t seed, std::uint64_t stream, Eigen::Index rows,
                                   Eigen::Index cols, double lo, double hi) {
    CounterRng rng(seed, stream);
    QuantizedMatrix m{Int16Matrix(rows, cols), FixedPointFormat{8}};
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m.values(i, j) = quantize(rng.uniform(lo, hi), m.format);
        }
    }
    return m;
}

/// Runs fn(i) for i in [0, n) on a small worker pool; results are collected
/// in index order regardless of completion order.
template <typename Fn>
auto ordered_parallel(std::size_t n, int jobs, Fn fn) {
    using Result = decltype(fn(std::size_t{0}));
    std::vector<Result> results(n);
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            results[i] = fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    pool.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return results;
}

int cmd_table(const CommonOpts& common, const std::string& fn_name, double granularity,
              double x_min, double x_max, const std::string& fk_name, const std::string& fb_name,
              bool use_defaults) {
    const Nonlinearity fn = parse_nonlinearity(fn_name);
    const SegmentTable table =
        use_defaults ? make_table(fn, granularity)
                     : build_segment_table(fn, granularity, x_min, x_max, parse_format(fk_name),
                                           parse_format(fb_name));
    if (common.out_path.empty()) throw CLI::ValidationError("--out is required for table");
    write_table_file(common.out_path, table);
    const ApproximationError err = approximation_error_report(table, 20001);
    std::cout << "table " << nonlinearity_name(table.function) << " g=" << format_double(table.granularity)
              << " segments=" << table.num_segments << " format_k=" << table.format_k.name()
              << " format_b=" << table.format_b.name()
              << " max_chord_err=" << format_double(err.max_abs_err) << "\n";
    return kExitOk;
}

int cmd_approx_err(const CommonOpts& common, const std::string& table_path, int samples) {
    const SegmentTable table = read_table_file(table_path);
    const ApproximationError err = approximation_error_report(table, samples);
    CsvWriter csv(meta_line(SystolicConfig{}, common.seed),
                  {"function", "granularity", "samples", "max_abs_err", "mean_abs_err", "argmax_x"});
    csv.add_row({nonlinearity_name(table.function), format_double(table.granularity),
                 std::to_string(samples), format_double(err.max_abs_err),
                 format_double(err.mean_abs_err), format_double(err.argmax_x)});
    emit(csv, common.out_path);
    return kExitOk;
}

int cmd_gemm(const CommonOpts& common, int m, int n, int k, bool baseline) {
    const SystolicConfig cfg = load_config(common);
    const QuantizedMatrix a = random_activations(common.seed, 0xa, m, k, -4.0, 4.0);
    const QuantizedMatrix w = random_activations(common.seed, 0xb, k, n, -4.0, 4.0);
    const GemmResult r = sim_gemm(a, w, cfg, {.baseline_model = baseline, .out_format = {}});
    CsvWriter csv(meta_line(cfg, common.seed), kReportHeader);
    csv.add_row(report_row(config_hash(cfg), baseline ? "gemm-baseline" : "gemm", m, n, k, r.report));
    emit(csv, common.out_path);
    return kExitOk;
}

int cmd_mhp(const CommonOpts& common, int m, int n, const std::string& fn_name, double granularity) {
    const SystolicConfig cfg = load_config(common);
    const SegmentTable table = make_table(parse_nonlinearity(fn_name), granularity);
    const QuantizedMatrix x = random_activations(common.seed, 0xc, m, n, -6.0, 6.0);
    const NonlinearLayerResult r = run_cpwl_layer(x, table, cfg);

    // The fabric result must agree with the functional semantics bit for bit.
    const IpfResult f = ipf(x, table);
    if (r.y.values != mhp(x, f.k, f.b).values) {
        std::cerr << "oracle failure: fabric MHP differs from functional MHP\n";
        return kExitInvariant;
    }
    CsvWriter csv(meta_line(cfg, common.seed), kReportHeader);
    csv.add_row(report_row(config_hash(cfg), "mhp", m, n, 0, r.report));
    emit(csv, common.out_path);
    return kExitOk;
}

EvalSet obtain_eval_set(const CommonOpts& common, const std::string& eval_path, int gen_blobs) {
    if (!eval_path.empty()) return read_eval_set(eval_path);
    if (gen_blobs > 0) return make_blob_eval_set(common.seed, gen_blobs);
    throw CLI::ValidationError("provide --eval FILE or --gen-blobs N");
}

/// "builtin:blobs" resolves to the seeded synthetic-task network; anything
/// else is a manifest path.
NetworkSpec obtain_network(const CommonOpts& common, const std::string& net_path) {
    if (net_path == "builtin:blobs") return build_blob_network(common.seed);
    return read_network(net_path);
}

int cmd_run_net(const CommonOpts& common, const std::string& net_path, const std::string& eval_path,
                int gen_blobs, bool functional) {
    const SystolicConfig cfg = load_config(common);
    const NetworkSpec net = obtain_network(common, net_path);
    const EvalSet eval = obtain_eval_set(common, eval_path, gen_blobs);
    const QuantizedMatrix inputs = quantize(eval.features, net.activation_format);
    const NetworkRunResult run = run_network(net, inputs, cfg, {.functional = functional});

    CsvWriter csv(meta_line(cfg, common.seed), kReportHeader);
    for (std::size_t i = 0; i < run.per_layer.size(); ++i) {
        csv.add_row(report_row(config_hash(cfg), "layer." + std::to_string(i) + "." +
                                                     layer_kind_name(net.layers[i].kind),
                               inputs.rows(), 0, 0, run.per_layer[i]));
    }
    csv.add_row(report_row(config_hash(cfg), "net-total", inputs.rows(), 0, 0, run.report));
    emit(csv, common.out_path);

    if (!eval.labels.empty()) {
        std::cout << "accuracy " << format_fixed(classification_accuracy(run.outputs, eval.labels))
                  << " linear_mac_ops " << run.linear_mac_ops << " nonlinear_mac_ops "
                  << run.nonlinear_mac_ops << "\n";
    }
    return kExitOk;
}

int cmd_sweep(const CommonOpts& common, const std::string& net_path, const std::string& eval_path,
              int gen_blobs, std::vector<double> granularities, bool functional) {
    const SystolicConfig cfg = load_config(common);
    const NetworkSpec net = obtain_network(common, net_path);
    if (granularities.empty()) throw CLI::ValidationError("--granularity list is empty");
    if (!functional) {
        for (double g : granularities) {
            if (!power_of_two_exponent(g)) {
                std::cerr << "granularity " << format_double(g)
                          << " is not a power of two; the fabric shift path requires powers of "
                             "two (pass --functional for division-based indexing)\n";
                return kExitUsage;
            }
        }
    }
    const EvalSet eval = obtain_eval_set(common, eval_path, gen_blobs);
    const AccuracyReport rep =
        accuracy_sweep(net, eval, granularities, cfg, {.functional = functional});

    std::vector<std::string> header = {"task", "baseline"};
    for (double g : granularities) header.push_back("delta_" + format_double(g));
    CsvWriter csv(meta_line(cfg, common.seed) + " float64_baseline=" +
                      format_fixed(rep.float64_accuracy),
                  header);
    std::vector<std::string> row = {rep.task_id, format_fixed(rep.int16_accuracy)};
    for (const GranularityResult& r : rep.per_granularity) row.push_back(format_fixed(r.delta));
    csv.add_row(std::move(row));
    emit(csv, common.out_path);

    // Embedded invariant: when the network ends in softmax, every CPWL output
    // row must stay on the simplex within a loose gate.
    bool ok = true;
    if (!net.layers.empty() && net.layers.back().kind == LayerKind::kSoftmax) {
        const QuantizedMatrix inputs = quantize(eval.features, net.activation_format);
        NetworkSpec probe = net;
        probe.granularity = granularities.front();
        const NetworkRunResult run = run_network(probe, inputs, cfg, {.functional = functional});
        for (Eigen::Index i = 0; i < run.outputs.rows() && ok; ++i) {
            double sum = 0.0;
            for (Eigen::Index j = 0; j < run.outputs.cols(); ++j) sum += run.outputs.real_at(i, j);
            if (std::abs(sum - 1.0) > 0.1) {
                std::cerr << "invariant failure: softmax row " << i << " sums to "
                          << format_fixed(sum) << "\n";
                ok = false;
            }
        }
    }
    return ok ? kExitOk : kExitInvariant;
}

int cmd_cliff(const CommonOpts& common, std::vector<int> dims, std::vector<int> macs,
              std::vector<int> sizes, int jobs) {
    if (dims.empty() || macs.empty() || sizes.empty()) {
        throw CLI::ValidationError("--dims, --macs, and --sizes must be nonempty");
    }
    const SystolicConfig base = load_config(common);

    struct Point {
        SystolicConfig cfg;
        int size;
    };
    std::vector<Point> grid;
    for (int d : dims) {
        for (int m : macs) {
            SystolicConfig cfg = base;
            cfg.pe_rows = d;
            cfg.pe_cols = d;
            cfg.macs_per_pe = m;
            cfg.validate();
            for (int s : sizes) grid.push_back({cfg, s});
        }
    }

    std::vector<std::string> header = kReportHeader;
    header.push_back("drain_frac");
    CsvWriter csv(meta_line(base, common.seed), header);

    auto run_point = [&grid](std::size_t i) {
        const auto& [cfg, size] = grid[i];
        const std::string id = std::to_string(cfg.pe_rows) + "x" + std::to_string(cfg.pe_cols) +
                               "m" + std::to_string(cfg.macs_per_pe);
        const CycleReport gemm = gemm_cycle_model(size, size, size, cfg);
        const CycleReport had = mhp_cycle_model(size, size, cfg);
        std::vector<std::vector<std::string>> rows;
        auto with_frac = [](std::vector<std::string> row, const CycleReport& rep) {
            row.push_back(format_fixed(static_cast<double>(rep.drain_cycles) /
                                       static_cast<double>(rep.total_cycles)));
            return row;
        };
        rows.push_back(with_frac(report_row(id, "gemm", size, size, size, gemm), gemm));
        rows.push_back(with_frac(report_row(id, "mhp", size, size, 0, had), had));
        return rows;
    };
    const auto all_rows = ordered_parallel(grid.size(), jobs, run_point);
    for (const auto& rows : all_rows) {
        for (const auto& row : rows) csv.add_row(row);
    }
    emit(csv, common.out_path);
    return kExitOk;
}

int cmd_verify(const CommonOpts& common, const std::string& scope_name, bool inject_fault) {
    const SystolicConfig cfg = load_config(common);
    VerifyOptions opts;
    opts.seed = common.seed;
    opts.inject_mode_fault = inject_fault;
    return run_verify(parse_verify_scope(scope_name), opts, cfg, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cycle-level systolic array simulator with on-array nonlinear operations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    CommonOpts common;

    auto add_common = [&common](CLI::App* sub, bool with_config = true) {
        if (with_config) sub->add_option("--config", common.config_path, "fabric config file");
        sub->add_option("--out", common.out_path, "output file (stdout when omitted)");
        sub->add_option("--seed", common.seed, "experiment seed");
    };

    // table
    auto* table = app.add_subcommand("table", "precompute a segment table file");
    std::string fn_name = "gelu", fk_name, fb_name;
    double granularity = 0.25, x_min = 0.0, x_max = 0.0;
    table->add_option("--function", fn_name, "nonlinearity")->required();
    table->add_option("--granularity", granularity, "segment length")->required();
    auto* xmin_opt = table->add_option("--x-min", x_min, "lower cap bound");
    auto* xmax_opt = table->add_option("--x-max", x_max, "upper cap bound");
    auto* fk_opt = table->add_option("--format-k", fk_name, "slope format, e.g. Q2.13");
    auto* fb_opt = table->add_option("--format-b", fb_name, "intercept format, e.g. Q8.8");
    add_common(table, false);

    // approx-err
    auto* approx = app.add_subcommand("approx-err", "measure approximation error of a table file");
    std::string table_path;
    int samples = 100000;
    approx->add_option("--table", table_path, "segment table file")->required();
    approx->add_option("--samples", samples, "sample count");
    add_common(approx, false);

    // gemm
    auto* gemm = app.add_subcommand("gemm", "simulate one GEMM on seeded random operands");
    int m = 32, n = 32, k = 32;
    bool baseline = false;
    gemm->add_option("--m", m);
    gemm->add_option("--n", n);
    gemm->add_option("--k", k);
    gemm->add_flag("--baseline-model", baseline, "classic array without nonlinear-mode control");
    add_common(gemm);

    // mhp
    auto* hadamard = app.add_subcommand("mhp", "simulate one CPWL nonlinear operation");
    std::string mhp_fn = "gelu";
    double mhp_g = 0.25;
    hadamard->add_option("--m", m);
    hadamard->add_option("--n", n);
    hadamard->add_option("--function", mhp_fn);
    hadamard->add_option("--granularity", mhp_g);
    add_common(hadamard);

    // run-net
    auto* run_net = app.add_subcommand("run-net", "run a network manifest on the fabric");
    std::string net_path, eval_path;
    int gen_blobs = 0;
    bool functional = false;
    run_net->add_option("--net", net_path, "network manifest, or builtin:blobs")->required();
    run_net->add_option("--eval", eval_path, "eval set file");
    run_net->add_option("--gen-blobs", gen_blobs, "generate a synthetic blob eval set of N samples");
    run_net->add_flag("--functional", functional, "division-based segment indexing");
    add_common(run_net);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "accuracy sweep across granularities");
    std::vector<double> grains;
    sweep->add_option("--net", net_path, "network manifest, or builtin:blobs")->required();
    sweep->add_option("--granularity", grains, "granularity list")->required()->delimiter(',');
    sweep->add_option("--eval", eval_path, "eval set file");
    sweep->add_option("--gen-blobs", gen_blobs, "generate a synthetic blob eval set of N samples");
    sweep->add_flag("--functional", functional, "division-based segment indexing");
    add_common(sweep);

    // cliff
    auto* cliff = app.add_subcommand("cliff", "throughput sweep over array sizes and matrix sizes");
    std::vector<int> dims = {4, 8, 16};
    std::vector<int> mac_grid = {8, 16, 32};
    std::vector<int> size_grid = {32, 64, 128, 256, 512};
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    cliff->add_option("--dims", dims, "square PE grid sizes")->delimiter(',');
    cliff->add_option("--macs", mac_grid, "MACs per PE")->delimiter(',');
    cliff->add_option("--sizes", size_grid, "square matrix sizes")->delimiter(',');
    cliff->add_option("--jobs", jobs, "worker pool size");
    add_common(cliff);

    // verify
    auto* verify = app.add_subcommand("verify", "run oracle-equivalence and invariant suites");
    std::string scope = "all";
    bool inject_fault = false;
    verify->add_option("scope", scope, "all|cpwl|fabric|nn");
    verify->add_flag("--inject-mode-fault", inject_fault, "corrupt one PE's control flags");
    add_common(verify);

    try {
        app.parse(argc, argv);

        if (table->parsed()) {
            const bool defaults = !(*xmin_opt) && !(*xmax_opt) && !(*fk_opt) && !(*fb_opt);
            if (!defaults && (!(*xmin_opt) || !(*xmax_opt) || !(*fk_opt) || !(*fb_opt))) {
                throw CLI::ValidationError(
                    "give all of --x-min/--x-max/--format-k/--format-b, or none for defaults");
            }
            return cmd_table(common, fn_name, granularity, x_min, x_max, fk_name, fb_name, defaults);
        }
        if (approx->parsed()) return cmd_approx_err(common, table_path, samples);
        if (gemm->parsed()) return cmd_gemm(common, m, n, k, baseline);
        if (hadamard->parsed()) return cmd_mhp(common, m, n, mhp_fn, mhp_g);
        if (run_net->parsed()) return cmd_run_net(common, net_path, eval_path, gen_blobs, functional);
        if (sweep->parsed()) return cmd_sweep(common, net_path, eval_path, gen_blobs, grains, functional);
        if (cliff->parsed()) return cmd_cliff(common, dims, mac_grid, size_grid, jobs);
        if (verify->parsed()) return cmd_verify(common, scope, inject_fault);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant failure: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
