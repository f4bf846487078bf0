// SPDX-License-Identifier: Apache-2.0
//
// fdsic: generate datasets, fit cancellers, sweep bit-widths, count
// operations and run the cycle-accurate pipeline models.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdsic/fdsic.hpp"

using namespace fdsic;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
};

RunConfig run_config(const Common& c) {
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
    if (c.seed) {
        cfg.ofdm.seed = *c.seed;
        cfg.train.seed = *c.seed;
    }
    return cfg;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    return os;
}

struct Split {
    SignalBuffer x_fit, y_fit;
    std::size_t split;
};

Split split_dataset(const Dataset& d, double fraction) {
    const std::size_t s = split_index(d.x.size(), fraction);
    if (s == 0 || s >= d.x.size()) throw ConfigError("dataset too short for a fit/held-out split");
    return {head(d.x, s), head(d.y, s), s};
}

double held_out_db(const Dataset& d, const SignalBuffer& yhat, std::size_t split) {
    return cancellation_db(d.y, cancel(d.y, yhat), split);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// "8..28" or "17".
std::pair<int, int> parse_q_range(const std::string& s) {
    const auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            const int q = std::stoi(s);
            return {q, q};
        }
        return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
    } catch (const std::exception&) {
        throw ConfigError("Q range '" + s + "' must look like 8..28");
    }
}

struct FxChoice {
    std::string fmt; // "Q17.12"
    int q = 0;       // calibrate F when > 0 and fmt empty
};

FxOptions fx_options(const FxChoice& c, int& total_bits) {
    FxOptions o;
    if (!c.fmt.empty()) {
        const auto f = parse_format(c.fmt);
        total_bits = f.total_bits;
        o.frac_bits = f.frac_bits;
    } else {
        total_bits = c.q;
    }
    return o;
}

void print_report(std::ostream& os, const CycleReport& r) {
    os << "latency_cycles " << r.latency_cycles << '\n'
       << "first_output_cycles " << r.first_output_cycles << '\n'
       << "cycles_per_sample " << r.cycles_per_sample << '\n'
       << "stall_cycles " << r.stall_cycles << '\n'
       << "total_cycles " << r.total_cycles << '\n';
    for (const auto& s : r.stages)
        os << "stage " << s.name << " active=" << s.active_cycles << " starvation=" << s.starvation_cycles
           << " backpressure=" << s.backpressure_cycles << " samples=" << s.samples << '\n';
}

void write_report_csv(std::ostream& os, const CycleReport& r, std::size_t samples, std::size_t mismatches) {
    os << "metric,value\n";
    os << "samples," << samples << '\n';
    os << "latency_cycles," << r.latency_cycles << '\n';
    os << "first_output_cycles," << r.first_output_cycles << '\n';
    os << "cycles_per_sample," << r.cycles_per_sample << '\n';
    os << "stall_cycles," << r.stall_cycles << '\n';
    os << "total_cycles," << r.total_cycles << '\n';
    os << "mismatches," << mismatches << '\n';
    for (const auto& s : r.stages) {
        os << s.name << ".active_cycles," << s.active_cycles << '\n';
        os << s.name << ".starvation_cycles," << s.starvation_cycles << '\n';
        os << s.name << ".backpressure_cycles," << s.backpressure_cycles << '\n';
    }
}

// --- subcommands ---------------------------------------------------------------------

int cmd_gen(const Common& common, const std::string& out) {
    const RunConfig cfg = run_config(common);
    const auto x = generate_tx(cfg.ofdm);
    const auto y = apply_si_chain(cfg.chain, x, cfg.noise_seed);
    save_dataset(x, y, out);
    std::cout << "wrote " << x.size() << " samples to " << out << '\n';
    return 0;
}

AnyModel fit_model(const std::string& kind, const Split& s, int memory, int order, int hidden, const RunConfig& cfg) {
    if (kind == "linear") return ls_estimate_linear(s.x_fit, s.y_fit, memory, cfg.lambda);
    if (kind == "poly") return ls_estimate_poly(s.x_fit, s.y_fit, memory, order, cfg.lambda);
    if (kind == "nn") return nn_train(s.x_fit, s.y_fit, memory, hidden, cfg.train);
    throw ConfigError("unknown canceller '" + kind + "' (expected linear, poly or nn)");
}

int cmd_fit(const Common& common, const std::string& kind, const std::string& dataset, int memory, int order, int hidden,
            std::optional<int> epochs, const std::string& out) {
    RunConfig cfg = run_config(common);
    if (epochs) cfg.train.epochs = *epochs;
    const Dataset d = load_dataset(dataset);
    const Split s = split_dataset(d, cfg.train_fraction);
    const auto t0 = std::chrono::steady_clock::now();
    const AnyModel m = fit_model(kind, s, memory, order, hidden, cfg);
    const double fit_s = seconds_since(t0);
    const auto yhat = predict(m, d.x);
    std::printf("canceller %s\nfit_seconds %.2f\nfit_cancellation_db %.3f\nheld_out_cancellation_db %.3f\n", canceller_name(m),
                fit_s, cancellation_db(d.y, cancel(d.y, yhat), std::size_t(model_memory(m)), s.split),
                held_out_db(d, yhat, s.split));
    if (const auto* nn = std::get_if<NNModel>(&m)) std::printf("denorm_shift %d\n", nn->denorm_shift);
    save_model(out, m);
    return 0;
}

int cmd_eval(const Common& common, const std::string& dataset, const std::string& model_path, const FxChoice& fx,
             bool prescale) {
    const RunConfig cfg = run_config(common);
    const Dataset d = load_dataset(dataset);
    const Split s = split_dataset(d, cfg.train_fraction);
    const AnyModel m = load_model(model_path);
    std::printf("canceller %s\n", canceller_name(m));
    std::printf("float_cancellation_db %.3f\n", held_out_db(d, predict(m, d.x), s.split));
    if (!fx.fmt.empty() || fx.q > 0) {
        int q = 0;
        FxOptions o = fx_options(fx, q);
        o.poly_prescale = prescale;
        const auto ev = fx_evaluate(m, q, s.x_fit, d.x, o);
        std::printf("format %s\ninput_shift %d\nsaturated_parameters %zu\nfx_cancellation_db %.3f\n", to_string(ev.fmt).c_str(),
                    ev.input_shift, ev.quantization.saturated, held_out_db(d, ev.prediction, s.split));
    }
    return 0;
}

int cmd_sweep(const Common& common, const std::string& dataset, const std::vector<std::string>& model_paths,
              const std::string& q_range, bool prescale, const std::string& out) {
    const RunConfig cfg = run_config(common);
    const Dataset d = load_dataset(dataset);
    std::vector<AnyModel> models;
    for (const auto& p : model_paths) models.push_back(load_model(p));
    SweepSpec spec;
    std::tie(spec.q_min, spec.q_max) = parse_q_range(q_range);
    spec.split = split_index(d.x.size(), cfg.train_fraction);
    spec.options.poly_prescale = prescale;
    const auto rows = sweep_q(d.x, d.y, models, spec);
    if (out.empty()) {
        write_sweep_csv(std::cout, rows);
    } else {
        auto os = open_out(out);
        write_sweep_csv(os, rows);
        std::cout << "wrote " << rows.size() << " rows to " << out << '\n';
    }
    return 0;
}

int cmd_complexity(int memory, int order, int hidden, bool empirical, std::uint64_t seed) {
    write_complexity_table(std::cout, memory, order, hidden);
    if (!empirical) return 0;
    // Instrumented run on random models; counts do not depend on values.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    SignalBuffer x;
    for (int n = 0; n < 4 * memory; ++n) x.samples.emplace_back(g(rng), g(rng));
    PolyModel pm{memory, order, std::vector<Complex>(PolyModel::coefficient_count(memory, order), Complex{0.1, 0.1})};
    NNModel nm = nn_init(memory, hidden, seed);
    nm.linear.taps.assign(std::size_t(memory), Complex{0.1, 0.0});
    const auto pe = empirical_count(pm, x);
    const auto ne = empirical_count(nm, x);
    std::printf("instrumented poly mults=%lld adds=%lld params=%lld (basis: mults=%lld adds=%lld)\n",
                (long long)pe.core.real_mults, (long long)pe.core.real_adds, (long long)pe.core.real_params,
                (long long)pe.auxiliary.real_mults, (long long)pe.auxiliary.real_adds);
    std::printf("instrumented nn mults=%lld adds=%lld params=%lld (combine: adds=%lld)\n", (long long)ne.core.real_mults,
                (long long)ne.core.real_adds, (long long)ne.core.real_params, (long long)ne.auxiliary.real_adds);
    const bool ok = pe.core == poly_counts(memory, order) && ne.core == nn_counts(memory, hidden);
    std::printf("formula_match %s\n", ok ? "yes" : "no");
    return ok ? 0 : int(ErrorKind::numeric);
}

struct SimArgs {
    std::string kind, model, dataset, out, trace;
    int npe_h = 0, npe_o = 0, lin_pe = 0, pe = 0;
    FxChoice fx;
    long samples = 0;
    bool prescale = false;
};

int cmd_simulate(const Common& common, const SimArgs& a) {
    const RunConfig cfg = run_config(common);
    const Dataset d = load_dataset(a.dataset);
    const AnyModel any = load_model(a.model);
    const Split s = split_dataset(d, cfg.train_fraction);
    std::size_t count = d.x.size();
    if (a.samples > 0) count = std::min(count, std::size_t(a.samples));
    const SignalBuffer xs = head(d.x, count);

    int q = 0;
    FxChoice fx = a.fx;
    if (fx.fmt.empty() && fx.q == 0) fx.q = a.kind == "nn" ? 17 : 23;
    FxOptions opt = fx_options(fx, q);
    opt.poly_prescale = a.prescale;

    Trace trace;
    SimOptions so;
    if (!a.trace.empty()) so.trace = &trace;

    CycleReport report;
    std::size_t mismatches = 0;
    FxFormat fmt;
    if (a.kind == "nn") {
        const auto* m = std::get_if<NNModel>(&any);
        if (!m) throw ConfigError("simulate nn needs an NN model file");
        HardwareConfig hw = default_nn_hardware(m->memory, m->hidden);
        if (a.npe_h > 0) hw.npe_hidden = a.npe_h;
        if (a.npe_o > 0) hw.npe_output = a.npe_o;
        if (a.lin_pe > 0) hw.linear_pe = a.lin_pe;
        const NnLanes lanes = nn_lanes(m->memory, m->hidden, hw);
        const int f = opt.frac_bits >= 0 ? opt.frac_bits : calibrate_frac_bits(q, nn_dynamic_range(*m, lanes, s.x_fit));
        fmt = {q, f};
        const auto qm = quantize_model(*m, fmt).first;
        const auto xq = quantize_signal(xs, fmt);
        const auto run = simulate_nn_canceller(pipeline_config(qm, hw), qm, xq, so);
        report = run.report;
        for (std::size_t n = 0; n < run.outputs.size(); ++n) {
            const auto r = fx_nn_sample(qm, delay_window(xq, n, qm.memory), lanes);
            mismatches += r.re != run.outputs[n].re || r.im != run.outputs[n].im;
        }
        mismatches += xq.size() - run.outputs.size();
    } else if (a.kind == "poly") {
        const auto* m = std::get_if<PolyModel>(&any);
        if (!m) throw ConfigError("simulate poly needs a polynomial model file");
        const int pe = a.pe > 0 ? a.pe : default_poly_pe(m->memory, m->order);
        const int lanes = poly_lanes(m->memory, m->order, pe);
        const int shift = opt.poly_prescale ? poly_input_shift(s.x_fit) : 0;
        const int f = opt.frac_bits >= 0 ? opt.frac_bits : calibrate_frac_bits(q, poly_dynamic_range(*m, shift, lanes, s.x_fit));
        fmt = {q, f};
        const auto qm = quantize_model(*m, fmt, shift).first;
        const auto xq = quantize_signal(xs, fmt, shift);
        const auto run = simulate_poly_canceller(qm, pe, xq, so);
        report = run.report;
        const auto ref = fx_poly_predict(qm, xs, lanes);
        for (std::size_t n = 0; n < run.outputs.size(); ++n) {
            const auto r = dequantize(run.outputs[n], fmt);
            mismatches += r != ref[n];
        }
        mismatches += xq.size() - run.outputs.size();
    } else {
        throw ConfigError("simulate expects nn or poly");
    }

    std::cout << "format " << to_string(fmt) << "\nsamples " << count << '\n';
    print_report(std::cout, report);
    std::cout << "mismatches " << mismatches << '\n';
    if (!a.out.empty()) {
        auto os = open_out(a.out);
        write_report_csv(os, report, count, mismatches);
    }
    if (!a.trace.empty()) {
        auto os = open_out(a.trace);
        write_trace_csv(os, trace);
    }
    if (mismatches != 0) throw NumericError(std::to_string(mismatches) + " samples differ from the fixed-point reference");
    return 0;
}

int cmd_compare(const Common& common, const std::string& dataset, int memory, int order, int hidden) {
    const RunConfig cfg = run_config(common);
    Dataset d;
    if (dataset.empty()) {
        d.x = generate_tx(cfg.ofdm);
        d.y = apply_si_chain(cfg.chain, d.x, cfg.noise_seed);
    } else {
        d = load_dataset(dataset);
    }
    const Split s = split_dataset(d, cfg.train_fraction);
    std::printf("samples %zu (fit %zu, held-out %zu)\n\n", d.x.size(), s.split, d.x.size() - s.split);

    auto t0 = std::chrono::steady_clock::now();
    const AnyModel lin = ls_estimate_linear(s.x_fit, s.y_fit, memory, cfg.lambda);
    const AnyModel poly = ls_estimate_poly(s.x_fit, s.y_fit, memory, order, cfg.lambda);
    const double t_ls = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const AnyModel nn = nn_train(s.x_fit, s.y_fit, memory, hidden, cfg.train);
    const double t_nn = seconds_since(t0);

    const double c_lin = held_out_db(d, predict(lin, d.x), s.split);
    const double c_poly = held_out_db(d, predict(poly, d.x), s.split);
    const double c_nn = held_out_db(d, predict(nn, d.x), s.split);
    const auto fx_poly = fx_evaluate(poly, 23, s.x_fit, d.x);
    const auto fx_nn = fx_evaluate(nn, 17, s.x_fit, d.x);

    write_complexity_table(std::cout, memory, order, hidden);
    std::printf("%-24s%-22.2f%.2f\n", "Cancellation (dB)", c_poly, c_nn);
    std::printf("%-24s%-22s%s\n", "Fixed-point format", to_string(fx_poly.fmt).c_str(), to_string(fx_nn.fmt).c_str());
    std::printf("%-24s%-22.2f%.2f\n", "Fixed-point canc. (dB)", held_out_db(d, fx_poly.prediction, s.split),
                held_out_db(d, fx_nn.prediction, s.split));

    const auto& pm = std::get<PolyModel>(poly);
    const auto& nm = std::get<NNModel>(nn);
    const HardwareConfig hw = default_nn_hardware(memory, hidden);
    const int poly_pe = default_poly_pe(memory, order);
    const std::size_t sim_n = std::min<std::size_t>(d.x.size(), 64);
    const auto qn = quantize_model(nm, fx_nn.fmt).first;
    const auto nrun = simulate_nn_canceller(pipeline_config(qn, hw), qn, quantize_signal(head(d.x, sim_n), fx_nn.fmt));
    const auto qp = quantize_model(pm, fx_poly.fmt, 0).first;
    const auto prun = simulate_poly_canceller(qp, poly_pe, quantize_signal(head(d.x, sim_n), fx_poly.fmt));
    std::printf("%-24s%-22ld%ld\n", "Cycles per sample", prun.report.cycles_per_sample, nrun.report.cycles_per_sample);
    std::printf("%-24s%-22ld%ld\n", "Latency (cycles)", prun.report.latency_cycles, nrun.report.latency_cycles);
    std::printf("%-24s%-22s%s\n", "PEs", (std::to_string(poly_pe) + " complex").c_str(),
                (std::to_string(hw.npe_hidden) + "+" + std::to_string(hw.npe_output) + " real, " +
                 std::to_string(hw.linear_pe) + " complex")
                    .c_str());
    std::printf("\nlinear-only cancellation %.2f dB\nfit time %.1f s (LS), %.1f s (NN)\n", c_lin, t_ls, t_nn);
    return 0;
}

void error_line(int code, const char* kind, const std::string& msg) {
    std::string m = msg;
    for (auto& c : m)
        if (c == '\n') c = ' ';
    std::cerr << "error: code=" << code << " kind=" << kind << " msg=" << m << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Full-duplex self-interference cancellation toolkit"};
    app.require_subcommand(0, 1);
    Common common;
    bool print_config = false;
    app.add_flag("--print-config", print_config, "Print every configuration key with its default value");
    app.add_option("--config", common.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", common.seed, "Override the signal and training seeds");

    std::string out, dataset, model, q_range = "8..28";
    int memory = 13, order = 7, hidden = 18;
    std::optional<int> epochs;
    bool prescale = false, empirical = false;
    FxChoice fx;

    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    gen->add_option("--out", out, "Dataset file")->required();

    std::string kind;
    auto* fit = app.add_subcommand("fit", "Fit a canceller and save the model");
    fit->add_option("kind", kind, "linear, poly or nn")->required()->check(CLI::IsMember({"linear", "poly", "nn"}));
    fit->add_option("--dataset", dataset, "Dataset file")->required();
    fit->add_option("--L", memory, "Memory length")->check(CLI::PositiveNumber);
    fit->add_option("--P", order, "Polynomial order (odd)");
    fit->add_option("--Nh", hidden, "Hidden neurons")->check(CLI::PositiveNumber);
    fit->add_option("--epochs", epochs, "Training epochs (nn)");
    fit->add_option("--out", out, "Model file")->required();

    auto* eval = app.add_subcommand("eval", "Report held-out cancellation of a model");
    eval->add_option("--dataset", dataset, "Dataset file")->required();
    eval->add_option("--model", model, "Model file")->required();
    eval->add_option("--fx", fx.fmt, "Fixed-point format, e.g. Q17.12");
    eval->add_option("--q", fx.q, "Total bits; fraction bits calibrated")->check(CLI::Range(2, 32));
    eval->add_flag("--poly-prescale", prescale, "Scale the polynomial input into [-1, 1]");

    std::vector<std::string> models;
    auto* sweep = app.add_subcommand("sweep-q", "Cancellation versus bit-width");
    sweep->add_option("--dataset", dataset, "Dataset file")->required();
    sweep->add_option("--models", models, "Model files")->required();
    sweep->add_option("--q", q_range, "Range such as 8..28");
    sweep->add_option("--out", out, "CSV file (stdout if omitted)");
    sweep->add_flag("--poly-prescale", prescale, "Scale the polynomial input into [-1, 1]");

    auto* cx = app.add_subcommand("complexity", "Operation and parameter counts");
    cx->add_option("--L", memory, "Memory length");
    cx->add_option("--P", order, "Polynomial order (odd)");
    cx->add_option("--Nh", hidden, "Hidden neurons");
    cx->add_flag("--empirical", empirical, "Also count operations on instrumented models");

    SimArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Cycle-accurate pipeline simulation");
    simulate->add_option("kind", sim.kind, "nn or poly")->required()->check(CLI::IsMember({"nn", "poly"}));
    simulate->add_option("--model", sim.model, "Model file")->required();
    simulate->add_option("--dataset", sim.dataset, "Dataset file")->required();
    simulate->add_option("--npe-h", sim.npe_h, "Hidden stage PEs");
    simulate->add_option("--npe-o", sim.npe_o, "Output stage PEs");
    simulate->add_option("--lin-pe", sim.lin_pe, "Complex PEs of the linear FIR");
    simulate->add_option("--pe", sim.pe, "Complex PEs of the polynomial canceller");
    simulate->add_option("--fx", sim.fx.fmt, "Fixed-point format, e.g. Q17.13");
    simulate->add_option("--q", sim.fx.q, "Total bits; fraction bits calibrated")->check(CLI::Range(2, 32));
    simulate->add_option("--samples", sim.samples, "Simulate only the first N samples");
    simulate->add_option("--out", sim.out, "Report CSV");
    simulate->add_option("--trace", sim.trace, "Per-cycle trace CSV");
    simulate->add_flag("--poly-prescale", sim.prescale, "Scale the polynomial input into [-1, 1]");

    auto* compare = app.add_subcommand("compare", "Side-by-side comparison of both cancellers");
    compare->add_option("--dataset", dataset, "Dataset file (generated from the configuration if omitted)");
    compare->add_option("--L", memory, "Memory length");
    compare->add_option("--P", order, "Polynomial order (odd)");
    compare->add_option("--Nh", hidden, "Hidden neurons");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_line(2, "config", e.what());
        return 2;
    }

    try {
        if (print_config) {
            write_config(std::cout, run_config(common));
            return 0;
        }
        if (*gen) return cmd_gen(common, out);
        if (*fit) return cmd_fit(common, kind, dataset, memory, order, hidden, epochs, out);
        if (*eval) return cmd_eval(common, dataset, model, fx, prescale);
        if (*sweep) return cmd_sweep(common, dataset, models, q_range, prescale, out);
        if (*cx) return cmd_complexity(memory, order, hidden, empirical, common.seed.value_or(1));
        if (*simulate) return cmd_simulate(common, sim);
        if (*compare) return cmd_compare(common, dataset, memory, order, hidden);
        std::cout << app.help();
        return 2;
    } catch (const Error& e) {
        error_line(e.exit_code(), kind_name(e.kind()), e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        error_line(3, "numeric", e.what());
        return 3;
    }
}
