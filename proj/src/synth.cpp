// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "paro/error.hpp"
#include "paro/metrics.hpp"

namespace paro {

namespace {

constexpr float kPinFactor = 32.0f;

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// per-axis penalty coefficients: positive weights as given, zero-weight axes
// pinned at a fixed strength (still scaled by 1/bandwidth^2, so the flat-logit
// limit at large bandwidth is preserved)
std::vector<double> penalty_coeffs(const AggregationSpec& spec) {
    std::vector<double> c(spec.axis_weights.size());
    for (std::size_t a = 0; a < c.size(); ++a)
        c[a] = spec.axis_weights[a] > 0.0f ? static_cast<double>(spec.axis_weights[a])
                                           : static_cast<double>(kPinFactor);
    return c;
}

std::vector<std::vector<std::uint32_t>> token_coords(const TokenGrid& grid) {
    const std::size_t n = grid.token_count();
    std::vector<std::vector<std::uint32_t>> coords(n);
    for (std::size_t i = 0; i < n; ++i)
        coords[i] = grid_coords(grid, i);
    return coords;
}

Matrix gen_map_at_bandwidth(const AggregationSpec& spec, double bandwidth) {
    const std::size_t ng = spec.grid.token_count();
    const std::size_t dp = spec.dense_prefix;
    const std::size_t n = ng + dp;
    const std::vector<double> c = penalty_coeffs(spec);
    const auto coords = token_coords(spec.grid);
    const double inv2bw2 = 1.0 / (2.0 * bandwidth * bandwidth);

    std::mt19937_64 rng(spec.seed);
    Matrix out(n, n);
    std::vector<double> logits(n);
    for (std::size_t i = 0; i < n; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            double base = 0.0;
            if (i >= dp && j >= dp) {
                double pen = 0.0;
                for (std::size_t a = 0; a < c.size(); ++a) {
                    const double dist = static_cast<double>(coords[i - dp][a]) - static_cast<double>(coords[j - dp][a]);
                    pen += c[a] * dist * dist;
                }
                base = -pen * inv2bw2;
            }
            logits[j] = base + static_cast<double>(spec.noise) * unit_uniform(rng);
            m = std::max(m, logits[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            logits[j] = std::exp(logits[j] - m);
            sum += logits[j];
        }
        float* row = out.row(i);
        for (std::size_t j = 0; j < n; ++j)
            row[j] = static_cast<float>(logits[j] / sum);
    }
    return out;
}

} // namespace

void AggregationSpec::validate() const {
    if (axis_weights.size() != grid.ndim())
        throw ConfigError("axis_weights must match the grid's dimensionality");
    bool any = false;
    for (float w : axis_weights) {
        if (w < 0.0f)
            throw ConfigError("axis weights must be >= 0");
        any = any || w > 0.0f;
    }
    if (!any)
        throw ConfigError("at least one axis weight must be positive");
    if (!(bandwidth > 0.0f))
        throw ConfigError("bandwidth must be > 0");
    if (noise < 0.0f)
        throw ConfigError("noise must be >= 0");
}

Matrix gen_attention_map(const AggregationSpec& spec) {
    spec.validate();
    return gen_map_at_bandwidth(spec, static_cast<double>(spec.bandwidth));
}

std::vector<Matrix> gen_calibration_set(const AggregationSpec& spec, std::uint32_t timesteps, double drift,
                                        double stability_floor) {
    spec.validate();
    if (timesteps < 1)
        throw ConfigError("calibration needs at least one timestep");
    if (drift < 0.0)
        throw ConfigError("drift must be >= 0");

    std::vector<Matrix> maps;
    maps.reserve(timesteps);
    for (std::uint32_t t = 0; t < timesteps; ++t) {
        const double progress = timesteps > 1 ? static_cast<double>(t) / static_cast<double>(timesteps - 1) : 1.0;
        const double bw = static_cast<double>(spec.bandwidth) * (1.0 + drift * std::exp(-6.0 * progress));
        maps.push_back(gen_map_at_bandwidth(spec, bw));
    }

    if (stability_floor > 0.0 && timesteps >= 2) {
        const std::uint32_t half = timesteps / 2;
        for (std::uint32_t a = half; a < timesteps; ++a) {
            for (std::uint32_t b = a + 1; b < timesteps; ++b) {
                const double cos = map_similarity(maps[a], maps[b]).cosine;
                if (cos < stability_floor)
                    throw InvariantError("later-half maps " + std::to_string(a) + " and " + std::to_string(b) +
                                         " have cosine " + std::to_string(cos) + ", below the stability floor " +
                                         std::to_string(stability_floor));
            }
        }
    }
    return maps;
}

AttnInputs gen_attention_inputs(const AggregationSpec& spec, std::size_t head_dim) {
    spec.validate();
    const std::size_t ndim = spec.grid.ndim();
    if (head_dim < ndim + 1)
        throw ConfigError("head_dim must be at least ndim+1 to carry the pattern");

    const std::size_t ng = spec.grid.token_count();
    const std::size_t dp = spec.dense_prefix;
    const std::size_t n = ng + dp;
    const std::vector<double> c = penalty_coeffs(spec);
    const auto coords = token_coords(spec.grid);
    const double bw = static_cast<double>(spec.bandwidth);
    const double inv2bw2 = 1.0 / (2.0 * bw * bw);

    AttnInputs in;
    in.q = Matrix(n, head_dim);
    in.k = Matrix(n, head_dim);
    in.v = Matrix(n, head_dim);
    in.dense_prefix = dp;
    in.scale = 0.0f; // engine default 1/sqrt(d), compensated below

    const double comp = std::sqrt(static_cast<double>(head_dim));
    for (std::size_t i = dp; i < n; ++i) {
        float* qr = in.q.row(i);
        float* kr = in.k.row(i);
        double bias = 0.0;
        for (std::size_t a = 0; a < ndim; ++a) {
            const double x = static_cast<double>(coords[i - dp][a]);
            const double f = std::sqrt(c[a]) * x / bw;
            qr[a] = static_cast<float>(f * comp);
            kr[a] = static_cast<float>(f);
            bias += c[a] * x * x;
        }
        qr[ndim] = static_cast<float>(comp);
        kr[ndim] = static_cast<float>(-bias * inv2bw2);
    }

    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    for (std::size_t i = 0; i < n; ++i) {
        float* vr = in.v.row(i);
        for (std::size_t d = 0; d < head_dim; ++d) {
            // Box-Muller on the documented uniform stream
            const double u1 = 1.0 - unit_uniform(rng); // (0, 1]
            const double u2 = unit_uniform(rng);
            vr[d] = static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2));
        }
    }
    return in;
}

std::vector<float> parse_axis_weights(const TokenGrid& grid, const std::string& text) {
    std::vector<float> w(grid.ndim(), 0.0f);
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.size() < 3 || part[1] != ':')
            throw ConfigError("bad weight '" + part + "', expected LABEL:VALUE (e.g. F:1)");
        try {
            w[grid.axis_index(part[0])] = std::stof(part.substr(2));
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("bad weight value in '" + part + "'");
        }
    }
    return w;
}

AggregationSpec parse_aggregation_spec(const std::string& text) {
    std::string grid_text, weights_text;
    AggregationSpec spec;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError("spec line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "grid")
                grid_text = value;
            else if (key == "weights")
                weights_text = value;
            else if (key == "bandwidth")
                spec.bandwidth = std::stof(value);
            else if (key == "noise")
                spec.noise = std::stof(value);
            else if (key == "seed")
                spec.seed = std::stoull(value);
            else if (key == "dense_prefix")
                spec.dense_prefix = std::stoul(value);
            else
                throw ConfigError("spec line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("spec line " + std::to_string(lineno) + ": bad value '" + value + "'");
        }
    }
    if (grid_text.empty() || weights_text.empty())
        throw ConfigError("spec needs both grid and weights");
    spec.grid = parse_grid(grid_text);
    spec.axis_weights = parse_axis_weights(spec.grid, weights_text);
    spec.validate();
    return spec;
}

AggregationSpec load_aggregation_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open '" + path + "' for reading");
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_aggregation_spec(text);
}

} // namespace paro
