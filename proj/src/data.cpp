#include "wefsim/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "wefsim/errors.hpp"
#include "wefsim/rng.hpp"

namespace wefsim {

bool operator==(const Dataset& a, const Dataset& b) {
    return a.class_count == b.class_count && a.labels == b.labels && a.features == b.features;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& cell, const std::string& path, int line_no) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    // allow surrounding whitespace only
    while (end && *end != '\0' && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
    const char* p = begin;
    while (*p == ' ' || *p == '\t') ++p;
    if (end == begin || *p == '\0' || (end && *end != '\0')) {
        throw parse_error(path + ":" + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
    }
    return v;
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error(path + ": cannot open file");

    std::string line;
    if (!std::getline(in, line)) throw parse_error(path + ": empty file");

    Dataset out;
    std::vector<double> values;
    std::size_t cols = 0;
    int line_no = 1;
    int max_label = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cols == 0) {
            if (cells.size() < 2) {
                throw parse_error(path + ":" + std::to_string(line_no) +
                                  ": need at least one feature column and a label column");
            }
            cols = cells.size();
        } else if (cells.size() != cols) {
            throw parse_error(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(cols) + " cells, got " + std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
            const double v = parse_number(cells[c], path, line_no);
            if (!std::isfinite(v)) {
                throw parse_error(path + ":" + std::to_string(line_no) + ": non-finite feature value");
            }
            values.push_back(v);
        }
        const double raw_label = parse_number(cells.back(), path, line_no);
        double int_part = 0.0;
        if (std::modf(raw_label, &int_part) != 0.0 || raw_label < 0.0) {
            throw parse_error(path + ":" + std::to_string(line_no) +
                              ": label must be a non-negative integer, got '" + cells.back() + "'");
        }
        const int label = static_cast<int>(int_part);
        out.labels.push_back(label);
        max_label = std::max(max_label, label);
    }

    if (out.labels.empty()) throw parse_error(path + ": no data rows");

    const int n = static_cast<int>(out.labels.size());
    const int d = static_cast<int>(cols) - 1;
    out.features = Matrix(n, d);
    out.features.data = std::move(values);
    out.class_count = max_label + 1;
    return out;
}

Dataset normalize_minmax(const Dataset& d) {
    Dataset out = d;
    for (int c = 0; c < d.feature_dim(); ++c) {
        double lo = d.features(0, c);
        double hi = lo;
        for (int r = 1; r < d.size(); ++r) {
            lo = std::min(lo, d.features(r, c));
            hi = std::max(hi, d.features(r, c));
        }
        const double range = hi - lo;
        for (int r = 0; r < d.size(); ++r) {
            out.features(r, c) = range == 0.0 ? 0.0 : (d.features(r, c) - lo) / range;
        }
    }
    return out;
}

Dataset take_rows(const Dataset& d, const std::vector<int>& rows) {
    Dataset out;
    out.class_count = d.class_count;
    out.features = Matrix(static_cast<int>(rows.size()), d.feature_dim());
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (int c = 0; c < d.feature_dim(); ++c) {
            out.features(static_cast<int>(r), c) = d.features(rows[r], c);
        }
        out.labels.push_back(d.labels[static_cast<std::size_t>(rows[r])]);
    }
    return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw precondition_error("train_test_split: test_fraction must be in (0, 1)");
    }
    const int n = d.size();
    const int test_n = static_cast<int>(std::llround(n * test_fraction));
    if (test_n < 1 || test_n >= n) {
        throw precondition_error("train_test_split: split leaves an empty side");
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    const std::vector<int> train_idx(order.begin(), order.end() - test_n);
    const std::vector<int> test_idx(order.end() - test_n, order.end());
    return {take_rows(d, train_idx), take_rows(d, test_idx)};
}

Partition partition_iid(const Dataset& train, int clients, std::uint64_t seed) {
    if (clients < 1) throw precondition_error("partition_iid: clients must be >= 1");
    if (train.size() < clients) {
        throw precondition_error("partition_iid: fewer samples than clients");
    }
    std::vector<int> order(static_cast<std::size_t>(train.size()));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    Partition p;
    p.kind = DistributionKind::iid;
    p.assignments.resize(static_cast<std::size_t>(clients));
    const int base = train.size() / clients;
    const int extra = train.size() % clients;
    std::size_t pos = 0;
    for (int i = 0; i < clients; ++i) {
        const int take = base + (i < extra ? 1 : 0);
        auto& list = p.assignments[static_cast<std::size_t>(i)];
        list.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos) + take);
        std::sort(list.begin(), list.end());
        pos += static_cast<std::size_t>(take);
    }
    return p;
}

Partition partition_dirichlet(const Dataset& train, int clients, double beta,
                              std::uint64_t seed) {
    if (clients < 1) throw precondition_error("partition_dirichlet: clients must be >= 1");
    if (beta <= 0.0) throw precondition_error("partition_dirichlet: beta must be positive");
    if (train.size() < clients) {
        throw precondition_error("partition_dirichlet: fewer samples than clients");
    }

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(train.class_count));
    for (int r = 0; r < train.size(); ++r) {
        by_class[static_cast<std::size_t>(train.labels[static_cast<std::size_t>(r)])].push_back(r);
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].empty()) {
            throw precondition_error("partition_dirichlet: class " + std::to_string(c) +
                                     " has no samples");
        }
    }

    Rng rng(seed);
    Partition p;
    p.kind = DistributionKind::dirichlet;
    p.beta = beta;
    p.assignments.resize(static_cast<std::size_t>(clients));

    for (auto& class_idx : by_class) {
        rng.shuffle(class_idx);
        const int n = static_cast<int>(class_idx.size());

        std::vector<double> weights(static_cast<std::size_t>(clients));
        double total = 0.0;
        for (auto& w : weights) {
            w = rng.gamma(beta);
            total += w;
        }
        if (total <= 0.0) {
            weights.assign(static_cast<std::size_t>(clients), 1.0);
            total = static_cast<double>(clients);
        }

        // largest-remainder rounding of n * weight/total
        std::vector<int> counts(static_cast<std::size_t>(clients));
        std::vector<std::pair<double, int>> remainders;
        int assigned = 0;
        for (int i = 0; i < clients; ++i) {
            const double quota = n * weights[static_cast<std::size_t>(i)] / total;
            counts[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(quota));
            assigned += counts[static_cast<std::size_t>(i)];
            remainders.emplace_back(quota - std::floor(quota), i);
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (int i = 0; i < n - assigned; ++i) {
            ++counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(i)].second)];
        }

        std::size_t pos = 0;
        for (int i = 0; i < clients; ++i) {
            auto& list = p.assignments[static_cast<std::size_t>(i)];
            list.insert(list.end(), class_idx.begin() + static_cast<std::ptrdiff_t>(pos),
                        class_idx.begin() + static_cast<std::ptrdiff_t>(pos) +
                            counts[static_cast<std::size_t>(i)]);
            pos += static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
        }
    }

    // no client may end up empty: take one sample from the largest client
    for (;;) {
        int empty = -1;
        for (int i = 0; i < clients; ++i) {
            if (p.assignments[static_cast<std::size_t>(i)].empty()) {
                empty = i;
                break;
            }
        }
        if (empty < 0) break;
        int largest = 0;
        for (int i = 1; i < clients; ++i) {
            if (p.assignments[static_cast<std::size_t>(i)].size() >
                p.assignments[static_cast<std::size_t>(largest)].size()) {
                largest = i;
            }
        }
        p.assignments[static_cast<std::size_t>(empty)].push_back(
            p.assignments[static_cast<std::size_t>(largest)].back());
        p.assignments[static_cast<std::size_t>(largest)].pop_back();
    }

    for (auto& list : p.assignments) std::sort(list.begin(), list.end());
    return p;
}

}  // namespace wefsim
