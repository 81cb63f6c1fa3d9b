// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/reorder.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "paro/error.hpp"

namespace paro {

bool PermPlan::is_identity() const {
    for (std::size_t i = 0; i < forward.size(); ++i)
        if (forward[i] != i)
            return false;
    return true;
}

PermPlan PermPlan::inverted() const {
    PermPlan p;
    p.order = order + "'";
    p.forward = inverse;
    p.inverse = forward;
    return p;
}

PermPlan PermPlan::with_prefix(std::size_t prefix) const {
    if (prefix == 0)
        return *this;
    PermPlan p;
    p.order = order;
    const std::size_t n = forward.size();
    p.forward.resize(prefix + n);
    p.inverse.resize(prefix + n);
    for (std::size_t i = 0; i < prefix; ++i) {
        p.forward[i] = static_cast<std::uint32_t>(i);
        p.inverse[i] = static_cast<std::uint32_t>(i);
    }
    for (std::size_t i = 0; i < n; ++i) {
        p.forward[prefix + i] = static_cast<std::uint32_t>(prefix + forward[i]);
        p.inverse[prefix + i] = static_cast<std::uint32_t>(prefix + inverse[i]);
    }
    return p;
}

PermPlan make_perm(const TokenGrid& grid, const std::string& order) {
    if (order.size() != grid.ndim())
        throw ConfigError("permutation order '" + order + "' does not cover the grid axes");
    std::vector<GridAxis> permuted_axes;
    for (char label : order)
        permuted_axes.push_back(grid.axes[grid.axis_index(label)]); // throws on unknown label
    TokenGrid permuted(permuted_axes);

    const std::size_t n = grid.token_count();
    PermPlan plan;
    plan.order = order;
    plan.forward.resize(n);
    plan.inverse.resize(n);
    std::vector<std::uint32_t> new_coords(grid.ndim());
    for (std::size_t old = 0; old < n; ++old) {
        std::vector<std::uint32_t> coords = grid_coords(grid, old);
        for (std::size_t a = 0; a < order.size(); ++a)
            new_coords[a] = coords[grid.axis_index(order[a])];
        std::size_t nw = flat_index(permuted, new_coords);
        plan.forward[old] = static_cast<std::uint32_t>(nw);
        plan.inverse[nw] = static_cast<std::uint32_t>(old);
    }
    return plan;
}

std::vector<PermPlan> enumerate_perms(const TokenGrid& grid) {
    std::string labels = grid.label_string();
    std::string sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::string> orders;
    orders.push_back(labels); // identity first
    std::string perm = sorted;
    do {
        if (perm != labels)
            orders.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::vector<PermPlan> plans;
    plans.reserve(orders.size());
    for (const std::string& o : orders)
        plans.push_back(make_perm(grid, o));
    return plans;
}

Matrix apply_perm_rows(const Matrix& m, const PermPlan& plan) {
    if (m.rows != plan.forward.size())
        throw ShapeError("apply_perm_rows: matrix has " + std::to_string(m.rows) + " rows, plan covers " +
                         std::to_string(plan.forward.size()));
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        std::memcpy(out.row(i), m.row(plan.inverse[i]), m.cols * sizeof(float));
    return out;
}

Matrix apply_perm_map(const Matrix& m, const PermPlan& plan) {
    if (m.rows != m.cols || m.rows != plan.forward.size())
        throw ShapeError("apply_perm_map: map/plan size mismatch");
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const float* src = m.row(plan.inverse[i]);
        float* dst = out.row(i);
        for (std::size_t j = 0; j < m.cols; ++j)
            dst[j] = src[plan.inverse[j]];
    }
    return out;
}

namespace {

// the image-token submap (prefix rows/cols dropped)
Matrix strip_prefix(const Matrix& m, std::size_t prefix) {
    if (prefix == 0)
        return m;
    Matrix out(m.rows - prefix, m.cols - prefix);
    for (std::size_t i = 0; i < out.rows; ++i)
        std::memcpy(out.row(i), m.row(prefix + i) + prefix, out.cols * sizeof(float));
    return out;
}

} // namespace

SelectionResult select_permutation(const std::vector<Matrix>& calib, const TokenGrid& grid, const MetricConfig& cfg,
                                   std::size_t dense_prefix) {
    cfg.validate();
    if (calib.empty())
        throw InputError("select_permutation: empty calibration set");
    const std::size_t n = grid.token_count() + dense_prefix;
    for (const Matrix& m : calib)
        if (m.rows != n || m.cols != n)
            throw ShapeError("calibration map is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                             ", expected " + std::to_string(n) + " (grid tokens + dense prefix)");

    SelectionResult res;
    res.plans = enumerate_perms(grid);
    const std::size_t nperm = res.plans.size();
    res.scores.resize(nperm);

    std::vector<double> nonsparse(nperm, 0.0);
    std::vector<double> quant(nperm, 0.0);
    for (std::size_t p = 0; p < nperm; ++p) {
        double s_acc = 0.0, q_acc = 0.0;
        for (const Matrix& m : calib) {
            Matrix image = strip_prefix(m, dense_prefix);
            AttnMap permuted(apply_perm_map(image, res.plans[p]), cfg.block, /*relaxed=*/true);
            s_acc += m_sparse(permuted, cfg);
            q_acc += m_quant(permuted, cfg);
        }
        const double cnt = static_cast<double>(calib.size());
        res.scores[p].order = res.plans[p].order;
        res.scores[p].sparse_mean = s_acc / cnt;
        res.scores[p].quant_mean = q_acc / cnt;
        nonsparse[p] = 1.0 - res.scores[p].sparse_mean;
        quant[p] = res.scores[p].quant_mean;
    }

    double s_total = 0.0, q_total = 0.0;
    for (std::size_t p = 0; p < nperm; ++p) {
        s_total += nonsparse[p];
        q_total += quant[p];
    }
    const double equal_share = 1.0 / static_cast<double>(nperm);
    res.chosen = 0;
    for (std::size_t p = 0; p < nperm; ++p) {
        PermScore& sc = res.scores[p];
        sc.sparse_share = s_total > 0.0 ? nonsparse[p] / s_total : equal_share;
        sc.quant_share = q_total > 0.0 ? quant[p] / q_total : equal_share;
        sc.combined = static_cast<double>(cfg.alpha) * sc.sparse_share +
                      (1.0 - static_cast<double>(cfg.alpha)) * sc.quant_share;
        if (sc.combined < res.scores[res.chosen].combined)
            res.chosen = p;
    }
    return res;
}

void save_plan_file(const std::vector<std::pair<std::uint32_t, std::string>>& entries, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    for (const auto& [head, order] : entries)
        f << head << "," << order << "\n";
    if (!f)
        throw IoError("short write to '" + path + "'");
}

std::vector<std::pair<std::uint32_t, std::string>> load_plan_file(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open '" + path + "' for reading");
    std::vector<std::pair<std::uint32_t, std::string>> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty())
            continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected head_id,order");
        std::uint32_t head = 0;
        try {
            head = static_cast<std::uint32_t>(std::stoul(line.substr(0, comma)));
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": bad head id");
        }
        entries.emplace_back(head, line.substr(comma + 1));
    }
    return entries;
}

} // namespace paro
