#include "abf/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "abf/errors.hpp"

namespace abf::io {

namespace {

constexpr char kMagic[4] = {'A', 'B', 'F', 'T'};
constexpr std::uint32_t kVersion = 1;

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\r\n") != std::string::npos;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void put_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw IoError("binary field: truncated header in " + path);
    return v;
}

void write_binary_raw(const std::string& path, const TorusGrid& g,
                      const std::vector<double>& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(g.n()));
    put_u32(out, static_cast<std::uint32_t>(g.m()));
    for (int r : g.resolution()) put_u32(out, static_cast<std::uint32_t>(r));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path);
}

} // namespace

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::trunc), path_(path) {
    if (!out_) throw IoError("cannot open for write: " + path);
}

void CsvWriter::raw_line(const std::string& line) { out_ << line << "\n"; }

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << (needs_quoting(cells[i]) ? quote(cells[i]) : cells[i]);
    }
    out_ << "\n";
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) throw IoError("write failed: " + path_);
}

void write_field_binary(const std::string& path, const ScalarField& f) {
    write_binary_raw(path, f.grid(), f.values());
}

void write_field_binary(const std::string& path, const VectorField& f) {
    write_binary_raw(path, f.grid(), f.components());
}

LoadedField read_field_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for read: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("binary field: bad magic in " + path);
    std::uint32_t version = get_u32(in, path);
    if (version != kVersion) throw IoError("binary field: unsupported version in " + path);
    std::uint32_t n = get_u32(in, path);
    std::uint32_t m = get_u32(in, path);
    if (n == 0 || n > 16 || m == 0 || m > n) throw IoError("binary field: bad dimensions in " + path);
    std::vector<int> res(n);
    for (std::uint32_t a = 0; a < n; ++a) res[a] = static_cast<int>(get_u32(in, path));
    TorusGrid grid(res, static_cast<int>(m));
    std::vector<double> payload;
    double v;
    while (in.read(reinterpret_cast<char*>(&v), sizeof(v))) payload.push_back(v);
    if (payload.empty() || payload.size() % grid.size() != 0)
        throw IoError("binary field: payload size is not a multiple of the grid size in " + path);
    return LoadedField{grid, static_cast<int>(payload.size() / grid.size()), std::move(payload)};
}

ScalarField read_scalar_binary(const std::string& path) {
    LoadedField lf = read_field_binary(path);
    if (lf.components != 1) throw IoError("binary field: expected scalar payload in " + path);
    return ScalarField(lf.grid, std::move(lf.payload));
}

VectorField read_vector_binary(const std::string& path) {
    LoadedField lf = read_field_binary(path);
    return VectorField(lf.grid, lf.components, std::move(lf.payload));
}

namespace {

void write_field_csv_impl(const std::string& path, const TorusGrid& g,
                          const std::vector<const std::vector<double>*>& columns,
                          const std::vector<std::string>& value_names) {
    CsvWriter csv(path);
    std::vector<std::string> header;
    for (int a = 0; a < g.n(); ++a) header.push_back("i" + std::to_string(a));
    for (int a = 0; a < g.n(); ++a) header.push_back("x" + std::to_string(a));
    for (const auto& name : value_names) header.push_back(name);
    csv.row(header);
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::vector<int> idx = g.unflatten(i);
        std::vector<std::string> cells;
        for (int a = 0; a < g.n(); ++a) cells.push_back(std::to_string(idx[a]));
        for (int a = 0; a < g.n(); ++a) cells.push_back(format_double(g.coordinate(a, idx[a])));
        for (const auto* col : columns) cells.push_back(format_double((*col)[i]));
        csv.row(cells);
    }
    csv.close();
}

} // namespace

void write_field_csv(const std::string& path, const ScalarField& f) {
    write_field_csv_impl(path, f.grid(), {&f.values()}, {"value"});
}

void write_field_csv(const std::string& path, const VectorField& f) {
    std::vector<std::vector<double>> comps(f.dim());
    std::vector<const std::vector<double>*> cols;
    std::vector<std::string> names;
    for (int a = 0; a < f.dim(); ++a) {
        auto span = f.component(a);
        comps[a].assign(span.begin(), span.end());
        cols.push_back(&comps[a]);
        names.push_back("v" + std::to_string(a));
    }
    write_field_csv_impl(path, f.grid(), cols, names);
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for read: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace abf::io
