// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0
//
// paro: calibrate, reorder, sparsify and quantize blocked attention on the
// CPU. Subcommands cover the full pipeline: gen -> analyze -> maskgen -> run,
// plus a self-contained sweep harness.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "paro/attention.hpp"
#include "paro/error.hpp"
#include "paro/kernels.hpp"
#include "paro/mask.hpp"
#include "paro/metrics.hpp"
#include "paro/quant.hpp"
#include "paro/reorder.hpp"
#include "paro/report.hpp"
#include "paro/synth.hpp"
#include "paro/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace paro;

namespace {

struct CommonOpts {
    std::string grid_str;
    std::size_t block = 64;
    float eps = 1e-3f;
    float sigma = 0.9f;
    float alpha = 0.5f;
    std::size_t dense_prefix = 0;

    TokenGrid grid() const { return parse_grid(grid_str); }
    MetricConfig metric_cfg() const { return MetricConfig{block, eps, sigma, alpha}; }
};

struct GenOpts {
    std::string weights_str = "F:1";
    float bandwidth = 1.0f;
    float noise = 0.0f;
    std::uint64_t seed = 0;
    std::uint32_t timesteps = 1;
    double drift = 0.5;
    std::size_t head_dim = 16;
};

// The pattern comes either from a key-value config file or from the flags;
// the config's grid and dense_prefix then drive the rest of the run.
AggregationSpec make_spec(CommonOpts& c, const GenOpts& g, const std::string& config_path) {
    if (!config_path.empty()) {
        AggregationSpec spec = load_aggregation_spec(config_path);
        c.grid_str = [&] {
            std::string s;
            for (const GridAxis& ax : spec.grid.axes)
                s += (s.empty() ? "" : ",") + std::string(1, ax.label) + ":" + std::to_string(ax.extent);
            return s;
        }();
        c.dense_prefix = spec.dense_prefix;
        return spec;
    }
    if (c.grid_str.empty())
        throw ConfigError("either --grid or --config is required");
    AggregationSpec spec;
    spec.grid = c.grid();
    spec.axis_weights = parse_axis_weights(spec.grid, g.weights_str);
    spec.bandwidth = g.bandwidth;
    spec.noise = g.noise;
    spec.seed = g.seed;
    spec.dense_prefix = c.dense_prefix;
    spec.validate();
    return spec;
}

void echo(const char* key, const std::string& value) {
    std::printf("# %s = %s\n", key, value.c_str());
}

void echo_common(const CommonOpts& c) {
    echo("kernels", kernels::active().name);
    echo("grid", c.grid_str);
    echo("block", std::to_string(c.block));
    echo("eps", std::to_string(c.eps));
    echo("sigma", std::to_string(c.sigma));
    echo("alpha", std::to_string(c.alpha));
    echo("dense_prefix", std::to_string(c.dense_prefix));
}

void echo_spec(const AggregationSpec& spec, const GenOpts& g) {
    std::string weights;
    for (std::size_t a = 0; a < spec.grid.ndim(); ++a)
        weights += (weights.empty() ? "" : ",") + std::string(1, spec.grid.axes[a].label) + ":" +
                   std::to_string(spec.axis_weights[a]);
    echo("weights", weights);
    echo("bandwidth", std::to_string(spec.bandwidth));
    echo("noise", std::to_string(spec.noise));
    echo("seed", std::to_string(spec.seed));
    echo("timesteps", std::to_string(g.timesteps));
    echo("drift", std::to_string(g.drift));
    echo("head_dim", std::to_string(g.head_dim));
}

std::string density_tag(double d) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", d);
    return buf;
}

PermPlan plan_for_head(const std::string& plan_path, const TokenGrid& grid, std::uint32_t head) {
    if (plan_path.empty())
        return make_perm(grid, grid.label_string()); // identity
    auto entries = load_plan_file(plan_path);
    for (const auto& [h, order] : entries)
        if (h == head)
            return make_perm(grid, order);
    throw InputError(plan_path + ": no plan entry for head " + std::to_string(head));
}

AttnInputs load_inputs(const std::string& qp, const std::string& kp, const std::string& vp, float scale,
                       std::size_t dense_prefix) {
    AttnInputs in;
    in.q = load_matrix(qp);
    in.k = load_matrix(kp);
    in.v = load_matrix(vp);
    in.scale = scale;
    in.dense_prefix = dense_prefix;
    in.validate();
    return in;
}

AttnInputs permuted_inputs(const AttnInputs& in, const PermPlan& full_plan) {
    AttnInputs p;
    p.q = apply_perm_rows(in.q, full_plan);
    p.k = apply_perm_rows(in.k, full_plan);
    p.v = apply_perm_rows(in.v, full_plan);
    p.scale = in.scale;
    p.dense_prefix = in.dense_prefix;
    return p;
}

int cmd_gen(CommonOpts& c, const GenOpts& g, const std::string& config_path, const std::string& out_dir,
            double stability_floor) {
    AggregationSpec spec = make_spec(c, g, config_path);
    echo_common(c);
    echo_spec(spec, g);
    fs::create_directories(out_dir);

    std::vector<Matrix> maps = gen_calibration_set(spec, g.timesteps, g.drift, stability_floor);
    for (std::size_t t = 0; t < maps.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "calib_t%03zu.pat", t);
        save_matrix(maps[t], (fs::path(out_dir) / name).string());
    }
    AttnInputs in = gen_attention_inputs(spec, g.head_dim);
    save_matrix(in.q, (fs::path(out_dir) / "q.pat").string());
    save_matrix(in.k, (fs::path(out_dir) / "k.pat").string());
    save_matrix(in.v, (fs::path(out_dir) / "v.pat").string());
    std::printf("wrote %zu calibration maps and q/k/v to %s\n", maps.size(), out_dir.c_str());
    return 0;
}

int cmd_analyze(const CommonOpts& c, const std::vector<std::string>& calib_files, const std::string& out_path,
                const std::string& scores_path, bool joint, std::uint32_t head_id) {
    echo_common(c);
    TokenGrid grid = c.grid();
    MetricConfig cfg = c.metric_cfg();

    std::vector<std::pair<std::uint32_t, std::string>> plan_entries;
    std::string scores_csv = "head,order,m_sparse,m_quant,sparse_share,quant_share,combined,chosen\n";

    auto analyze_head = [&](std::uint32_t head, const std::vector<Matrix>& maps) {
        SelectionResult sel = select_permutation(maps, grid, cfg, c.dense_prefix);
        plan_entries.emplace_back(head, sel.plan().order);
        for (std::size_t p = 0; p < sel.scores.size(); ++p) {
            const PermScore& s = sel.scores[p];
            std::printf("head %" PRIu32 " %s: m_sparse=%.6g m_quant=%.6g shares=(%.6g,%.6g) M=%.6g%s\n", head,
                        s.order.c_str(), s.sparse_mean, s.quant_mean, s.sparse_share, s.quant_share, s.combined,
                        p == sel.chosen ? "  <- chosen" : "");
            char line[256];
            std::snprintf(line, sizeof(line), "%" PRIu32 ",%s,%.6g,%.6g,%.6g,%.6g,%.6g,%d\n", head, s.order.c_str(),
                          s.sparse_mean, s.quant_mean, s.sparse_share, s.quant_share, s.combined,
                          p == sel.chosen ? 1 : 0);
            scores_csv += line;
        }
    };

    if (joint) {
        std::vector<Matrix> maps;
        for (const std::string& f : calib_files)
            maps.push_back(load_matrix(f));
        analyze_head(head_id, maps);
    } else {
        for (std::size_t i = 0; i < calib_files.size(); ++i) {
            std::vector<Matrix> maps;
            maps.push_back(load_matrix(calib_files[i]));
            analyze_head(static_cast<std::uint32_t>(i), maps);
        }
    }

    save_plan_file(plan_entries, out_path);
    std::printf("wrote plan for %zu head(s) to %s\n", plan_entries.size(), out_path.c_str());
    if (!scores_path.empty()) {
        std::ofstream f(scores_path, std::ios::trunc | std::ios::binary);
        if (!f)
            throw IoError("cannot open '" + scores_path + "' for writing");
        f << scores_csv;
    }
    return 0;
}

int cmd_maskgen(const CommonOpts& c, const std::vector<std::string>& calib_files, const std::vector<double>& densities,
                std::uint32_t timesteps, const std::string& plan_path, std::uint32_t head, const std::string& out_dir) {
    echo_common(c);
    echo("timesteps", std::to_string(timesteps));
    if (calib_files.size() != timesteps)
        throw InputError("maskgen needs one calibration map per timestep: got " + std::to_string(calib_files.size()) +
                         " files for " + std::to_string(timesteps) + " timesteps");
    TokenGrid grid = c.grid();
    PermPlan plan = plan_for_head(plan_path, grid, head).with_prefix(c.dense_prefix);
    const std::size_t guard = (c.dense_prefix + c.block - 1) / c.block;

    std::vector<BlockGrid> sums;
    for (const std::string& f : calib_files) {
        Matrix m = load_matrix(f);
        if (m.rows != grid.token_count() + c.dense_prefix)
            throw ShapeError(f + ": map has " + std::to_string(m.rows) + " tokens, grid + prefix has " +
                             std::to_string(grid.token_count() + c.dense_prefix));
        AttnMap map(apply_perm_map(m, plan), c.block, /*relaxed=*/true);
        sums.push_back(block_sums(map));
    }

    fs::create_directories(out_dir);
    for (double density : densities) {
        MaskSchedule sched = build_schedule(sums, density, timesteps, c.block, guard);
        const std::string name = "schedule_d" + density_tag(density) + ".psch";
        save_schedule(sched, (fs::path(out_dir) / name).string());
        std::printf("density %s: %zu distinct + shared mask, %zu repaired row(s) -> %s\n",
                    density_tag(density).c_str(), sched.distinct.size(), sched.repaired_rows, name.c_str());
    }
    return 0;
}

int cmd_run(const CommonOpts& c, const std::string& qp, const std::string& kp, const std::string& vp,
            const std::string& plan_path, std::uint32_t head, const std::string& schedule_path,
            std::uint32_t timestep, unsigned bits, const std::string& mode, float scale, const std::string& out_path,
            const std::string& metrics_path, const std::string& label) {
    echo_common(c);
    echo("mode", mode);
    echo("bits", std::to_string(bits));
    echo("timestep", std::to_string(timestep));

    const bool want_sparse = mode == "sparse" || mode == "both";
    const bool want_quant = mode == "quant" || mode == "both";
    if (!want_sparse && !want_quant)
        throw ConfigError("mode must be sparse, quant or both, got '" + mode + "'");
    if (want_quant && bits == 0)
        throw ConfigError("mode '" + mode + "' needs --bits 4 or 8");
    if (want_sparse && schedule_path.empty())
        throw ConfigError("mode '" + mode + "' needs --schedule");

    TokenGrid grid = c.grid();
    AttnInputs in = load_inputs(qp, kp, vp, scale, c.dense_prefix);
    if (in.tokens() != grid.token_count() + c.dense_prefix)
        throw ShapeError("inputs have " + std::to_string(in.tokens()) + " tokens, grid + prefix has " +
                         std::to_string(grid.token_count() + c.dense_prefix));

    PermPlan plan = plan_for_head(plan_path, grid, head).with_prefix(c.dense_prefix);
    AttnInputs pin = permuted_inputs(in, plan);

    std::optional<BlockMask> mask;
    if (want_sparse) {
        MaskSchedule sched = load_schedule(schedule_path);
        const BlockMask& m = sched.at(timestep);
        const std::size_t kblocks = (pin.tokens() + c.block - 1) / c.block;
        if (m.block != c.block || m.k_rows != kblocks)
            throw FormatError(schedule_path + ": mask is " + std::to_string(m.k_rows) + "x" +
                              std::to_string(m.k_cols) + " blocks of " + std::to_string(m.block) +
                              ", run needs " + std::to_string(kblocks) + "x" + std::to_string(kblocks) +
                              " blocks of " + std::to_string(c.block));
        mask = m;
    }

    AttnResult res;
    if (want_quant) {
        QuantConfig qcfg{bits, QuantMode::Unsigned, QuantGrouping::PerBlock, c.block};
        res = quantized_blocked_attention(pin, mask ? &*mask : nullptr, qcfg);
    } else if (mask) {
        res = masked_blocked_attention(pin, *mask);
    } else {
        res = blocked_attention_stream(pin, c.block);
    }
    if (!res.zeroed_rows.empty())
        std::fprintf(stderr, "warning: %zu fully skipped row(s) produced zero output\n", res.zeroed_rows.size());

    PermPlan undo = plan.inverted();
    Matrix output = apply_perm_rows(res.output, undo);
    save_matrix(output, out_path);

    AttnResult ref = blocked_attention_stream(pin, c.block);
    Matrix ref_out = apply_perm_rows(ref.output, undo);
    double retained = 1.0;
    if (mask) {
        AttnResult exact = dense_attention(pin, /*want_map=*/true);
        retained = mask_quality(AttnMap(*exact.attn_map, c.block, true), *mask).retained_mass;
    }
    SweepResult metrics;
    const double knob = want_quant ? static_cast<double>(bits) : (mask ? mask->density() : 1.0);
    metrics.rows.push_back(compare_row(label, knob, ref_out, output, retained, 0));
    std::printf("%s", to_csv(metrics).c_str());
    if (!metrics_path.empty())
        emit_csv(metrics, metrics_path);
    return 0;
}

int cmd_sweep(CommonOpts& c, const GenOpts& g, const std::string& config_path, const std::vector<double>& densities,
              const std::vector<unsigned>& bits_list, bool compare_reorder, double stability_floor,
              const std::string& out_path) {
    AggregationSpec spec = make_spec(c, g, config_path);
    echo_common(c);
    echo_spec(spec, g);
    MetricConfig cfg = c.metric_cfg();
    std::vector<Matrix> calib = gen_calibration_set(spec, g.timesteps, g.drift, stability_floor);
    AttnInputs in = gen_attention_inputs(spec, g.head_dim);

    SweepResult all;
    auto run_variant = [&](bool reorder) {
        PermPlan plan = make_perm(spec.grid, spec.grid.label_string());
        if (reorder) {
            SelectionResult sel = select_permutation(calib, spec.grid, cfg, c.dense_prefix);
            plan = sel.plan();
            std::printf("# chosen permutation = %s\n", plan.order.c_str());
        }
        PermPlan full = plan.with_prefix(c.dense_prefix);
        AttnInputs pin = permuted_inputs(in, full);
        std::vector<Matrix> pcalib;
        for (const Matrix& m : calib)
            pcalib.push_back(apply_perm_map(m, full));

        const std::string suffix = reorder ? "+reorder" : "";
        SweepResult sparse = density_sweep(pin, pcalib, densities, cfg, "sparse" + suffix);
        all.rows.insert(all.rows.end(), sparse.rows.begin(), sparse.rows.end());

        const AttnResult reference = blocked_attention_stream(pin, cfg.block);
        for (unsigned bits : bits_list) {
            if (bits == 0)
                continue;
            QuantConfig qcfg{bits, QuantMode::Unsigned, QuantGrouping::PerBlock, cfg.block};
            AttnResult qres = quantized_blocked_attention(pin, nullptr, qcfg);
            all.rows.push_back(compare_row("quant" + suffix, bits, reference.output, qres.output, 1.0, 0));
        }
    };

    run_variant(true);
    if (compare_reorder)
        run_variant(false);

    emit_csv(all, out_path);
    std::printf("wrote %zu sweep rows to %s\n", all.rows.size(), out_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"blocked sparse + quantized attention laboratory"};
    app.require_subcommand(1);

    std::string kernels_choice; // empty keeps the PARO_KERNELS/auto default
    app.add_option("--kernels", kernels_choice, "kernel implementation: auto|scalar|avx2");

    CommonOpts c;
    GenOpts g;
    std::string spec_config;
    auto add_common = [&](CLI::App* sub, bool with_metrics, bool grid_required = true) {
        auto* grid_opt = sub->add_option("--grid", c.grid_str, "token grid, e.g. F:13,H:30,W:45");
        if (grid_required)
            grid_opt->required();
        sub->add_option("--block", c.block, "tile edge for sparsity/quant grouping");
        sub->add_option("--dense-prefix", c.dense_prefix, "leading tokens kept dense");
        if (with_metrics) {
            sub->add_option("--eps", c.eps, "small-entry threshold");
            sub->add_option("--sigma", c.sigma, "sparse-block share threshold");
            sub->add_option("--alpha", c.alpha, "sparsity weight in the combined score");
        }
        return grid_opt;
    };
    auto add_gen = [&](CLI::App* sub, CLI::Option* grid_opt) {
        auto* w = sub->add_option("--weights", g.weights_str, "aggregation axis weights, e.g. F:1");
        auto* bw = sub->add_option("--bandwidth", g.bandwidth, "locality scale");
        auto* nz = sub->add_option("--noise", g.noise, "background logit noise amplitude");
        auto* sd = sub->add_option("--seed", g.seed, "generator seed");
        sub->add_option("--timesteps", g.timesteps, "calibration timesteps");
        sub->add_option("--drift", g.drift, "early-timestep drift amplitude");
        sub->add_option("--head-dim", g.head_dim, "head dim of generated q/k/v");
        sub->add_option("--config", spec_config, "pattern spec as a key-value file (replaces the flags above)")
            ->excludes(w, bw, nz, sd, grid_opt);
    };

    // gen
    auto* gen = app.add_subcommand("gen", "generate synthetic calibration maps and q/k/v");
    std::string gen_out;
    double stability_floor = 0.0;
    add_gen(gen, add_common(gen, false, /*grid_required=*/false));
    gen->add_option("--stability-floor", stability_floor, "later-half pairwise cosine floor (0 = off)");
    gen->add_option("--out", gen_out, "output directory")->required();

    // analyze
    auto* analyze = app.add_subcommand("analyze", "select a permutation per head from calibration maps");
    std::vector<std::string> analyze_files;
    std::string plan_out, scores_out;
    bool joint = false;
    std::uint32_t head_id = 0;
    add_common(analyze, true);
    analyze->add_option("--out", plan_out, "plan file to write")->required();
    analyze->add_option("--scores", scores_out, "optional per-permutation score CSV");
    analyze->add_flag("--joint", joint, "treat all files as one head's calibration set");
    analyze->add_option("--head-id", head_id, "head id for --joint");
    analyze->add_option("files", analyze_files, "calibration maps (one head per file)")->required();

    // maskgen
    auto* maskgen = app.add_subcommand("maskgen", "build mask schedules from per-timestep calibration maps");
    std::vector<std::string> maskgen_files;
    std::vector<double> densities{0.5};
    std::uint32_t timesteps = 1;
    std::uint32_t head = 0;
    std::string plan_in, mask_out;
    add_common(maskgen, false);
    maskgen->add_option("--density", densities, "densities to generate")->delimiter(',');
    maskgen->add_option("--timesteps", timesteps, "modeled timesteps");
    maskgen->add_option("--plan", plan_in, "plan file from analyze");
    maskgen->add_option("--head", head, "head id in the plan file");
    maskgen->add_option("--out", mask_out, "output directory")->required();
    maskgen->add_option("files", maskgen_files, "calibration maps in timestep order")->required();

    // run
    auto* run = app.add_subcommand("run", "execute the compressed attention path");
    std::string run_q, run_k, run_v, run_out, run_metrics, run_label = "run", run_mode = "sparse", run_schedule,
                run_plan;
    std::uint32_t run_timestep = 0;
    unsigned run_bits = 0;
    float run_scale = 0.0f;
    add_common(run, false);
    run->add_option("--q", run_q, "query matrix (PAT1)")->required();
    run->add_option("--k", run_k, "key matrix (PAT1)")->required();
    run->add_option("--v", run_v, "value matrix (PAT1)")->required();
    run->add_option("--plan", run_plan, "plan file from analyze");
    run->add_option("--head", head, "head id in the plan file");
    run->add_option("--schedule", run_schedule, "mask schedule (PSCH)");
    run->add_option("--timestep", run_timestep, "timestep to resolve in the schedule");
    run->add_option("--bits", run_bits, "quantization bitwidth (0 = off)");
    run->add_option("--mode", run_mode, "sparse|quant|both");
    run->add_option("--scale", run_scale, "attention scale (0 = 1/sqrt(d))");
    run->add_option("--label", run_label, "label for the metrics row");
    run->add_option("--out", run_out, "output matrix path")->required();
    run->add_option("--metrics", run_metrics, "metrics CSV path");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "self-contained density/bitwidth trade-off sweep");
    std::vector<unsigned> bits_list{8, 4};
    bool no_compare_reorder = false;
    std::string sweep_out;
    add_gen(sweep, add_common(sweep, true, /*grid_required=*/false));
    sweep->add_option("--density", densities, "density list")->delimiter(',');
    sweep->add_option("--bits", bits_list, "bitwidth list")->delimiter(',');
    sweep->add_flag("--no-compare-reorder", no_compare_reorder, "skip the identity-order baseline rows");
    sweep->add_option("--stability-floor", stability_floor, "later-half pairwise cosine floor (0 = off)");
    sweep->add_option("--out", sweep_out, "sweep CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!kernels_choice.empty())
            kernels::select(kernels::parse_impl(kernels_choice));
        if (gen->parsed())
            return cmd_gen(c, g, spec_config, gen_out, stability_floor);
        if (analyze->parsed())
            return cmd_analyze(c, analyze_files, plan_out, scores_out, joint, head_id);
        if (maskgen->parsed())
            return cmd_maskgen(c, maskgen_files, densities, timesteps, plan_in, head, mask_out);
        if (run->parsed())
            return cmd_run(c, run_q, run_k, run_v, run_plan, head, run_schedule, run_timestep, run_bits, run_mode,
                           run_scale, run_out, run_metrics, run_label);
        if (sweep->parsed())
            return cmd_sweep(c, g, spec_config, densities, bits_list, !no_compare_reorder, stability_floor, sweep_out);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
