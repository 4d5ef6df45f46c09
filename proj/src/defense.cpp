#include "wefsim/defense.hpp"

#include <algorithm>
#include <cmath>

#include "wefsim/errors.hpp"

namespace wefsim {

namespace {

void require_uniform_shapes(const std::vector<WefMatrix>& matrices, const char* op) {
    for (std::size_t i = 1; i < matrices.size(); ++i) {
        if (!matrices[i].same_shape(matrices[0])) {
            throw precondition_error(std::string(op) + ": matrices differ in shape");
        }
    }
}

double frobenius_norm(const WefMatrix& m) {
    double sum = 0.0;
    for (int v : m.counts) sum += static_cast<double>(v) * v;
    return std::sqrt(sum);
}

}  // namespace

std::vector<double> dis_scores(const std::vector<WefMatrix>& matrices) {
    const std::size_t k = matrices.size();
    if (k < 2) throw precondition_error("dis_scores: need at least 2 clients");
    require_uniform_shapes(matrices, "dis_scores");

    std::vector<double> dis(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            for (std::size_t e = 0; e < matrices[i].counts.size(); ++e) {
                const double d = static_cast<double>(matrices[i].counts[e]) - matrices[j].counts[e];
                sum += d * d;
            }
        }
        dis[i] = std::sqrt(sum);
    }
    return dis;
}

std::vector<double> cos_scores(const std::vector<WefMatrix>& matrices) {
    const std::size_t k = matrices.size();
    if (k < 2) throw precondition_error("cos_scores: need at least 2 clients");
    require_uniform_shapes(matrices, "cos_scores");

    std::vector<double> norms(k);
    for (std::size_t i = 0; i < k; ++i) norms[i] = frobenius_norm(matrices[i]);

    std::vector<double> cos(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            if (norms[i] == 0.0 || norms[j] == 0.0) continue;  // zero-norm convention
            double dot = 0.0;
            for (std::size_t e = 0; e < matrices[i].counts.size(); ++e) {
                dot += static_cast<double>(matrices[i].counts[e]) * matrices[j].counts[e];
            }
            sum += dot / (norms[i] * norms[j]);
        }
        cos[i] = sum / static_cast<double>(k - 1);
    }
    return cos;
}

std::vector<double> avg_scores(const std::vector<WefMatrix>& matrices) {
    if (matrices.empty()) throw precondition_error("avg_scores: need at least 1 client");
    require_uniform_shapes(matrices, "avg_scores");
    std::vector<double> avg;
    avg.reserve(matrices.size());
    for (const auto& m : matrices) {
        avg.push_back(static_cast<double>(m.total()) / static_cast<double>(m.counts.size()));
    }
    return avg;
}

namespace {

// One metric's two clusters: sorted values split at the widest adjacent gap.
struct MetricSplit {
    bool informative = false;          // false when the metric has no spread
    std::vector<std::size_t> lower;    // client ids, values below the gap
    std::vector<std::size_t> upper;
    double lower_var = 0.0;
    double upper_var = 0.0;
    double vote = 0.0;                 // squared normalized gap between cluster means
};

MetricSplit split_metric(const std::vector<double>& x) {
    MetricSplit out;
    const std::size_t k = x.size();
    double scale = 0.0;
    double mean = 0.0;
    for (double v : x) {
        scale += std::fabs(v);
        mean += v;
    }
    scale /= static_cast<double>(k);
    mean /= static_cast<double>(k);
    double total_sse = 0.0;
    for (double v : x) total_sse += (v - mean) * (v - mean);
    const double floor = 1e-12 * scale;
    if (scale == 0.0 || total_sse <= static_cast<double>(k) * floor * floor) {
        return out;  // homogeneous metric
    }

    std::vector<std::pair<double, std::size_t>> sorted(k);
    for (std::size_t i = 0; i < k; ++i) sorted[i] = {x[i], i};
    std::sort(sorted.begin(), sorted.end());

    std::size_t split = 1;
    double widest = sorted[1].first - sorted[0].first;
    for (std::size_t p = 2; p < k; ++p) {
        const double gap = sorted[p].first - sorted[p - 1].first;
        if (gap > widest) {
            widest = gap;
            split = p;
        }
    }

    const auto cluster_stats = [&](std::size_t begin, std::size_t end, double& mean_out) {
        double m = 0.0;
        for (std::size_t i = begin; i < end; ++i) m += sorted[i].first;
        m /= static_cast<double>(end - begin);
        double sse = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            sse += (sorted[i].first - m) * (sorted[i].first - m);
        }
        mean_out = m;
        return sse / static_cast<double>(end - begin);
    };
    double lower_mean = 0.0;
    double upper_mean = 0.0;
    out.lower_var = cluster_stats(0, split, lower_mean);
    out.upper_var = cluster_stats(split, k, upper_mean);
    for (std::size_t i = 0; i < split; ++i) out.lower.push_back(sorted[i].second);
    for (std::size_t i = split; i < k; ++i) out.upper.push_back(sorted[i].second);
    const double gap = (upper_mean - lower_mean) / scale;
    out.vote = gap * gap;
    out.informative = true;
    return out;
}

// Crafted uploads concentrate while honest training spreads, so the
// higher-variance cluster is the consensus and the other cluster is
// charged the metric's vote. Metrics whose cluster variances tie exactly
// (identical uploads on one side, symmetric pairs on the other) follow the
// orientation the unambiguous metrics established; with no unambiguous
// metric at all, the larger and then the higher-valued cluster is the
// consensus.
void charge(const MetricSplit& split, bool charge_upper, std::vector<double>& evidence) {
    for (std::size_t id : charge_upper ? split.upper : split.lower) {
        evidence[id] += split.vote;
    }
}

}  // namespace

std::vector<double> dev_scores(const std::vector<double>& dis, const std::vector<double>& cos,
                               const std::vector<double>& avg) {
    const std::size_t k = dis.size();
    if (k < 2) throw precondition_error("dev_scores: need at least 2 clients");
    if (cos.size() != k || avg.size() != k) {
        throw precondition_error("dev_scores: score vectors differ in length");
    }
    std::vector<double> evidence(k, 0.0);
    const MetricSplit splits[3] = {split_metric(dis), split_metric(cos), split_metric(avg)};

    for (const auto& s : splits) {
        if (s.informative && s.upper_var != s.lower_var) {
            charge(s, s.upper_var > s.lower_var ? false : true, evidence);
        }
    }
    for (const auto& s : splits) {
        if (!s.informative || s.upper_var != s.lower_var) continue;
        double lower_load = 0.0;
        double upper_load = 0.0;
        for (std::size_t id : s.lower) lower_load += evidence[id];
        for (std::size_t id : s.upper) upper_load += evidence[id];
        lower_load /= static_cast<double>(s.lower.size());
        upper_load /= static_cast<double>(s.upper.size());
        bool charge_upper;
        if (upper_load != lower_load) {
            charge_upper = upper_load > lower_load;
        } else if (s.upper.size() != s.lower.size()) {
            charge_upper = s.upper.size() < s.lower.size();
        } else {
            charge_upper = false;
        }
        charge(s, charge_upper, evidence);
    }

    double total = 0.0;
    for (double e : evidence) total += e;
    std::vector<double> dev(k);
    if (total == 0.0) {
        std::fill(dev.begin(), dev.end(), 3.0 / static_cast<double>(k));
    } else {
        for (std::size_t i = 0; i < k; ++i) dev[i] = 3.0 * evidence[i] / total;
    }
    return dev;
}

SeparationReport separate(const std::vector<WefMatrix>& matrices, double epsilon) {
    if (matrices.size() < 2) throw precondition_error("separate: need at least 2 clients");

    SeparationReport report;
    report.dis = dis_scores(matrices);
    report.cos = cos_scores(matrices);
    report.avg = avg_scores(matrices);
    report.dev = dev_scores(report.dis, report.cos, report.avg);
    report.xi = *std::max_element(report.dev.begin(), report.dev.end()) - epsilon;
    for (std::size_t i = 0; i < report.dev.size(); ++i) {
        if (report.dev[i] >= report.xi) {
            report.flagged.push_back(static_cast<int>(i));
        } else {
            report.clean.push_back(static_cast<int>(i));
        }
    }
    return report;
}

ModelWeights fedavg(const std::vector<ModelWeights>& updates) {
    if (updates.empty()) throw precondition_error("fedavg: no updates");
    ModelWeights sum = updates.front();
    for (std::size_t i = 1; i < updates.size(); ++i) {
        if (!sum.same_shape(updates[i])) throw precondition_error("fedavg: shape mismatch");
        for (std::size_t l = 0; l < sum.layers.size(); ++l) {
            auto& acc = sum.layers[l];
            const auto& u = updates[i].layers[l];
            for (std::size_t j = 0; j < acc.weights.data.size(); ++j) {
                acc.weights.data[j] += u.weights.data[j];
            }
            for (std::size_t j = 0; j < acc.bias.size(); ++j) acc.bias[j] += u.bias[j];
        }
    }
    const double n = static_cast<double>(updates.size());
    for_each_param(sum, [n](double& v) { v /= n; });
    return sum;
}

ModelWeights aggregate_group(const ModelWeights& base, const std::vector<ModelWeights>& updates) {
    if (updates.empty()) return base;  // carried forward unchanged
    if (!base.same_shape(updates.front())) {
        throw precondition_error("aggregate_group: update shape differs from base");
    }
    return fedavg(updates);
}

}  // namespace wefsim
