#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "abf/field.hpp"

namespace abf::io {

/** Shortest round-trippable decimal rendering of a double (%.17g). */
std::string format_double(double x);

/** RFC 4180 CSV writer: quotes fields containing commas, quotes, or newlines. */
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);
    /** Raw line escape hatch (manifest header comment line). */
    void raw_line(const std::string& line);
    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::ofstream out_;
    std::string path_;
};

/**
 * Binary field container. Layout, all little-endian:
 *   magic "ABFT" | version u32 | n u32 | m u32 | res[n] u32 | payload f64[]
 * Payload is row-major; vector fields append their components in axis order,
 * so the component count is payload size over grid size.
 */
void write_field_binary(const std::string& path, const ScalarField& f);
void write_field_binary(const std::string& path, const VectorField& f);

struct LoadedField {
    TorusGrid grid;
    int components; // 1 for scalar payloads
    std::vector<double> payload;
};

LoadedField read_field_binary(const std::string& path);
ScalarField read_scalar_binary(const std::string& path);
VectorField read_vector_binary(const std::string& path);

/** Point-per-row CSV: index columns, coordinate columns, then value column(s). */
void write_field_csv(const std::string& path, const ScalarField& f);
void write_field_csv(const std::string& path, const VectorField& f);

/** Create a directory (and parents); errors wrap into IoError. */
void ensure_directory(const std::string& path);

/** Whole-file read (byte comparison helper); throws IoError when missing. */
std::string read_file(const std::string& path);

} // namespace abf::io
