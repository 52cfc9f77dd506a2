#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "p4d/assembly.hpp"
#include "p4d/block.hpp"
#include "p4d/mesh.hpp"
#include "p4d/timestep.hpp"

namespace p4d {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that is still exact: printf %.17g.
std::string format_double(double v);

extern const char* const kTimeseriesHeader;

void write_timeseries(const std::filesystem::path& path, const std::vector<StepReport>& steps);
void write_stats(const std::filesystem::path& path, const std::vector<StepReport>& steps);
/// JSON object for one step, as written to stats.jsonl.
std::string stats_line(const StepReport& r);

/// Legacy ASCII VTK unstructured grid: potentials and c_e as point data,
/// surface c_s and label as cell data. `u` may be null for a bare mesh.
void write_vtk(const std::filesystem::path& path, const StructuredMesh& mesh, const State* u = nullptr,
               std::size_t n_c = 0);

/// One coordinate file per nonempty block, named A_<row>_<col>.txt:
/// a header "rows cols nnz" then "row col value" lines, 0-based.
void write_block_patterns(const std::filesystem::path& dir, const BlockMatrix& J);

void write_text(const std::filesystem::path& path, const std::string& text);
void ensure_directory(const std::filesystem::path& dir);

}  // namespace p4d
