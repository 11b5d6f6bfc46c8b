#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <numeric>

#include "plastlab/task_stream.hpp"
#include "support/builders.hpp"

using namespace plastlab;

TEST_CASE("task permutations are deterministic bijections, distinct across tasks") {
    const auto p1 = permutation_for_task(42, 0);
    const auto p2 = permutation_for_task(42, 0);
    REQUIRE(p1 == p2);

    auto sorted = p1;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::uint32_t> iota(784);
    std::iota(iota.begin(), iota.end(), 0u);
    REQUIRE(sorted == iota);

    REQUIRE(permutation_for_task(42, 0) != permutation_for_task(42, 1));
    REQUIRE(permutation_for_task(42, 0) != permutation_for_task(43, 0));
}

TEST_CASE("updates_per_task matches the single-pass arithmetic") {
    Dataset d;
    d.images.resize(60000, 1);
    d.labels.assign(60000, 0);
    TaskStream stream(d, 0, 1000, 30);
    REQUIRE(stream.updates_per_task() == 2000);

    Dataset small;
    small.images.resize(7, 1);
    small.labels.assign(7, 0);
    TaskStream tail(small, 0, 1, 3);
    REQUIRE(tail.updates_per_task() == 3);
}

TEST_CASE("a task visits every sample exactly once") {
    Dataset d = builders::tiny_dataset(101, 8, 4, 1);
    TaskStream stream(d, 9, 3, 10);
    const auto order = stream.sample_order(0);
    REQUIRE(order.size() == 101);
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) REQUIRE(sorted[i] == i);
    REQUIRE(stream.sample_order(0) == order);
    REQUIRE(stream.sample_order(1) != order);

    // Batches tile the order, with a short tail.
    Matrix x;
    std::vector<std::uint8_t> y;
    const auto perm = stream.permutation(0);
    std::size_t seen = 0;
    for (std::size_t b = 0; b < stream.updates_per_task(); ++b) {
        stream.fill_batch(order, perm, b, x, y);
        seen += x.rows();
        REQUIRE(x.rows() == y.size());
    }
    REQUIRE(seen == 101);
}

TEST_CASE("fill_batch gathers permuted pixels") {
    Dataset d;
    d.images.resize(2, 5);
    for (std::size_t j = 0; j < 5; ++j) {
        d.images(0, j) = static_cast<double>(j);
        d.images(1, j) = static_cast<double>(10 + j);
    }
    d.labels = {1, 2};
    TaskStream stream(d, 0, 1, 2);
    const std::vector<std::uint32_t> order = {1, 0};
    const std::vector<std::uint32_t> perm = {4, 3, 2, 1, 0};
    Matrix x;
    std::vector<std::uint8_t> y;
    stream.fill_batch(order, perm, 0, x, y);
    REQUIRE(y == std::vector<std::uint8_t>{2, 1});
    for (std::size_t j = 0; j < 5; ++j) {
        REQUIRE(x(0, j) == d.images(1, perm[j]));
        REQUIRE(x(1, j) == d.images(0, perm[j]));
    }
}

TEST_CASE("permute_columns applies the bijection rowwise") {
    Matrix in(2, 3);
    in(0, 0) = 1;
    in(0, 1) = 2;
    in(0, 2) = 3;
    in(1, 0) = 4;
    in(1, 1) = 5;
    in(1, 2) = 6;
    Matrix out;
    permute_columns(in, {2, 0, 1}, out);
    REQUIRE(out(0, 0) == 3);
    REQUIRE(out(0, 1) == 1);
    REQUIRE(out(0, 2) == 2);
    REQUIRE(out(1, 0) == 6);
    REQUIRE_THROWS_AS(permute_columns(in, {0, 1}, out), ShapeError);
}
