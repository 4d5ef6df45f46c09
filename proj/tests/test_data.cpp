#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "wefsim/data.hpp"
#include "wefsim/errors.hpp"
#include "wefsim/output.hpp"
#include "wefsim/rng.hpp"

using namespace wefsim;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path((fs::temp_directory_path() / name).string()) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

Dataset random_labeled(int n, int d, int classes, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data;
    data.class_count = classes;
    data.features = Matrix(n, d);
    for (auto& v : data.features.data) v = rng.normal();
    data.labels.resize(n);
    for (int i = 0; i < n; ++i) data.labels[i] = i % classes;
    return data;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    double tv = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) tv += std::fabs(a[i] - b[i]);
    return 0.5 * tv;
}

// mean per-client TV distance between shard class distribution and global
double heterogeneity(const Dataset& train, const Partition& p) {
    std::vector<double> global(train.class_count, 0.0);
    for (int label : train.labels) global[label] += 1.0;
    for (auto& g : global) g /= train.size();
    double sum = 0.0;
    for (const auto& idx : p.assignments) {
        std::vector<double> local(train.class_count, 0.0);
        for (int i : idx) local[train.labels[i]] += 1.0;
        for (auto& l : local) l /= static_cast<double>(idx.size());
        sum += total_variation(local, global);
    }
    return sum / static_cast<double>(p.assignments.size());
}

void check_partition_invariants(const Partition& p, int n) {
    std::set<int> seen;
    for (const auto& idx : p.assignments) {
        CHECK(!idx.empty());
        for (int i : idx) {
            CHECK(i >= 0);
            CHECK(i < n);
            CHECK(seen.insert(i).second);  // disjoint
        }
    }
    CHECK(static_cast<int>(seen.size()) == n);  // covering
}

}  // namespace

TEST_CASE("load_csv reads a small labeled table") {
    TempFile f("wefsim_small.csv", "a,b,label\n1.0,2.0,0\n3.5,-1,1\n0,0,1\n");
    const Dataset d = load_csv(f.path);
    CHECK(d.size() == 3);
    CHECK(d.feature_dim() == 2);
    CHECK(d.class_count == 2);
    CHECK(d.features(1, 0) == 3.5);
    CHECK(d.labels == std::vector<int>{0, 1, 1});
}

TEST_CASE("load_csv rejects header-only files") {
    TempFile f("wefsim_empty.csv", "a,b,label\n");
    CHECK_THROWS_WITH_AS(load_csv(f.path), doctest::Contains("no data rows"), parse_error);
}

TEST_CASE("load_csv reports the offending line for bad cells") {
    TempFile f("wefsim_bad.csv", "a,b,label\n1,2,0\n1,zzz,1\n");
    CHECK_THROWS_WITH_AS(load_csv(f.path), doctest::Contains(":3"), parse_error);

    TempFile g("wefsim_ragged.csv", "a,b,label\n1,2,0\n1,2\n");
    CHECK_THROWS_WITH_AS(load_csv(g.path), doctest::Contains(":3"), parse_error);

    TempFile h("wefsim_lbl.csv", "a,b,label\n1,2,0.5\n");
    CHECK_THROWS_AS(load_csv(h.path), parse_error);
}

TEST_CASE("dataset round-trips through the csv exporter") {
    const Dataset d = random_labeled(25, 4, 3, 17);
    const std::string path = (fs::temp_directory_path() / "wefsim_roundtrip.csv").string();
    write_dataset_csv(path, d);
    const Dataset back = load_csv(path);
    std::remove(path.c_str());
    CHECK(back == d);
}

TEST_CASE("normalize_minmax maps columns onto [0,1]") {
    Dataset d;
    d.class_count = 2;
    d.features = Matrix(3, 2);
    d.features(0, 0) = 2.0;
    d.features(1, 0) = 4.0;
    d.features(2, 0) = 6.0;
    d.features(0, 1) = 5.0;
    d.features(1, 1) = 5.0;
    d.features(2, 1) = 5.0;
    d.labels = {0, 1, 0};

    const Dataset n = normalize_minmax(d);
    CHECK(n.features(0, 0) == 0.0);
    CHECK(n.features(1, 0) == 0.5);
    CHECK(n.features(2, 0) == 1.0);
    // constant column maps to 0
    CHECK(n.features(0, 1) == 0.0);
    CHECK(n.features(2, 1) == 0.0);
    // idempotent
    CHECK(normalize_minmax(n) == n);
}

TEST_CASE("train_test_split honors the 80-20 rule") {
    const Dataset d = random_labeled(100, 3, 2, 5);
    const auto [train, test] = train_test_split(d, 0.2, 9);
    CHECK(train.size() == 80);
    CHECK(test.size() == 20);

    const auto [train2, test2] = train_test_split(d, 0.2, 9);
    CHECK(train2 == train);
    CHECK(test2 == test);

    CHECK_THROWS_AS(train_test_split(d, 0.0, 1), precondition_error);
    CHECK_THROWS_AS(train_test_split(d, 1.0, 1), precondition_error);
}

TEST_CASE("train_test_split partitions the rows exactly") {
    Dataset d = random_labeled(50, 1, 2, 6);
    for (int i = 0; i < 50; ++i) d.features(i, 0) = i;  // row identity marker
    const auto [train, test] = train_test_split(d, 0.3, 2);
    std::set<int> seen;
    for (int i = 0; i < train.size(); ++i) seen.insert(static_cast<int>(train.features(i, 0)));
    for (int i = 0; i < test.size(); ++i) seen.insert(static_cast<int>(test.features(i, 0)));
    CHECK(seen.size() == 50);
}

TEST_CASE("partition_iid deals equal shards") {
    const Dataset d = random_labeled(100, 2, 2, 7);
    const Partition p = partition_iid(d, 10, 3);
    for (const auto& idx : p.assignments) CHECK(idx.size() == 10);
    check_partition_invariants(p, 100);

    const Dataset d2 = random_labeled(101, 2, 2, 7);
    const Partition p2 = partition_iid(d2, 10, 3);
    int of_eleven = 0;
    for (const auto& idx : p2.assignments) {
        CHECK(idx.size() >= 10);
        CHECK(idx.size() <= 11);
        if (idx.size() == 11) ++of_eleven;
    }
    CHECK(of_eleven == 1);
    check_partition_invariants(p2, 101);

    CHECK_THROWS_AS(partition_iid(random_labeled(5, 2, 2, 1), 6, 0), precondition_error);
}

TEST_CASE("partition_dirichlet with huge beta approaches uniform class ratios") {
    const Dataset d = random_labeled(400, 2, 2, 8);  // balanced labels
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Partition p = partition_dirichlet(d, 2, 1e6, seed);
        check_partition_invariants(p, 400);
        for (const auto& idx : p.assignments) {
            int ones = 0;
            for (int i : idx) ones += d.labels[i];
            const double ratio = static_cast<double>(ones) / static_cast<double>(idx.size());
            CHECK(std::fabs(ratio - 0.5) < 0.05);
        }
    }
}

TEST_CASE("partition_dirichlet repairs empty clients and stays deterministic") {
    const Dataset d = random_labeled(200, 2, 2, 9);
    const Partition a = partition_dirichlet(d, 10, 0.5, 4);
    const Partition b = partition_dirichlet(d, 10, 0.5, 4);
    check_partition_invariants(a, 200);
    for (const auto& idx : a.assignments) CHECK(!idx.empty());
    CHECK(a.assignments == b.assignments);

    // skew hard enough that the repair path actually runs sometimes
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Partition p = partition_dirichlet(d, 10, 0.05, seed);
        check_partition_invariants(p, 200);
    }
}

TEST_CASE("dirichlet heterogeneity shrinks as beta grows") {
    const Dataset d = random_labeled(600, 2, 3, 10);
    double low_beta = 0.0, high_beta = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        low_beta += heterogeneity(d, partition_dirichlet(d, 8, 0.1, seed));
        high_beta += heterogeneity(d, partition_dirichlet(d, 8, 10.0, seed));
    }
    CHECK(low_beta / 20.0 > high_beta / 20.0);
}

TEST_CASE("take_rows picks the requested subset") {
    const Dataset d = random_labeled(10, 2, 2, 11);
    const Dataset s = take_rows(d, {1, 3, 5});
    CHECK(s.size() == 3);
    CHECK(s.labels[0] == d.labels[1]);
    CHECK(s.features(2, 1) == d.features(5, 1));
    CHECK(s.class_count == d.class_count);
}
