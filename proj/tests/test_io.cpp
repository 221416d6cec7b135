#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>

#include "abf/errors.hpp"
#include "abf/io.hpp"
#include "abf/rng.hpp"

using namespace abf;

namespace {

std::string temp_dir() {
    static int counter = 0;
    std::string path =
        (std::filesystem::temp_directory_path() / ("abf_io_test_" + std::to_string(counter++)))
            .string();
    std::filesystem::remove_all(path);
    io::ensure_directory(path);
    return path;
}

} // namespace

TEST_CASE("format_double round-trips exactly") {
    CounterRng rng(7, CounterRng::kSampling);
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto [u, v] = rng.uniforms(i, 0, 0);
        double x = (u - 0.5) * std::pow(10.0, std::floor(40.0 * v) - 20.0);
        const std::string s = io::format_double(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
    CHECK(io::format_double(0.0) == "0");
    CHECK(std::strtod(io::format_double(0.1).c_str(), nullptr) == 0.1);
    const double tiny = std::numeric_limits<double>::denorm_min();
    CHECK(std::strtod(io::format_double(tiny).c_str(), nullptr) == tiny);
}

TEST_CASE("csv writer quotes per RFC 4180") {
    const std::string dir = temp_dir();
    const std::string path = dir + "/table.csv";
    {
        io::CsvWriter w(path);
        w.raw_line("# comment");
        w.row({"plain", "with,comma", "with\"quote", "with\nnewline"});
        w.close();
    }
    const std::string text = io::read_file(path);
    CHECK(text ==
          "# comment\n"
          "plain,\"with,comma\",\"with\"\"quote\",\"with\nnewline\"\n");
    std::filesystem::remove_all(dir);
}

TEST_CASE("scalar field binary round-trip is exact") {
    const std::string dir = temp_dir();
    TorusGrid grid({8, 4, 2}, 2);
    ScalarField f(grid);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(0.37 * double(i)) * 1e3;
    const std::string path = dir + "/scalar.abft";
    io::write_field_binary(path, f);

    io::LoadedField raw = io::read_field_binary(path);
    CHECK(raw.components == 1);
    CHECK(raw.grid == grid);
    ScalarField g = io::read_scalar_binary(path);
    CHECK(g.grid() == grid);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(g[i] == f[i]);
    std::filesystem::remove_all(dir);
}

TEST_CASE("vector field binary round-trip is exact") {
    const std::string dir = temp_dir();
    TorusGrid grid({6, 5}, 1);
    VectorField v(grid, 2);
    for (int a = 0; a < 2; ++a) {
        auto c = v.component(a);
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = a + 1 + 0.001 * double(i);
    }
    const std::string path = dir + "/vector.abft";
    io::write_field_binary(path, v);
    VectorField w = io::read_vector_binary(path);
    CHECK(w.grid() == grid);
    CHECK(w.dim() == 2);
    for (int a = 0; a < 2; ++a)
        for (std::size_t i = 0; i < grid.size(); ++i) CHECK(w.value(a, i) == v.value(a, i));

    io::LoadedField raw = io::read_field_binary(path);
    CHECK(raw.components == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("binary reader rejects wrong payloads") {
    const std::string dir = temp_dir();
    TorusGrid grid({4, 4}, 1);
    VectorField v(grid, 2);
    const std::string vec_path = dir + "/vec.abft";
    io::write_field_binary(vec_path, v);
    CHECK_THROWS_AS(io::read_scalar_binary(vec_path), IoError);

    CHECK_THROWS_AS(io::read_field_binary(dir + "/missing.abft"), IoError);

    const std::string junk = dir + "/junk.abft";
    {
        std::ofstream out(junk, std::ios::binary);
        out << "not a field";
    }
    CHECK_THROWS_AS(io::read_field_binary(junk), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("field csv lists one point per row") {
    const std::string dir = temp_dir();
    TorusGrid grid({2, 2}, 1);
    ScalarField f(grid);
    f[0] = 1.0;
    f[1] = 2.0;
    f[2] = 3.0;
    f[3] = 4.0;
    const std::string path = dir + "/field.csv";
    io::write_field_csv(path, f);
    const std::string text = io::read_file(path);
    // Header plus one row per grid point.
    std::size_t rows = 0;
    for (char c : text)
        if (c == '\n') ++rows;
    CHECK(rows == 1 + grid.size());
    CHECK(text.find("value") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("read_file reports missing paths") {
    CHECK_THROWS_AS(io::read_file("/nonexistent/abf/file.txt"), IoError);
}

TEST_CASE("ensure_directory creates nested paths and tolerates existing ones") {
    const std::string dir = temp_dir();
    const std::string nested = dir + "/a/b/c";
    io::ensure_directory(nested);
    CHECK(std::filesystem::is_directory(nested));
    io::ensure_directory(nested); // idempotent
    CHECK(std::filesystem::is_directory(nested));
    std::filesystem::remove_all(dir);
}
