#pragma once

#include <filesystem>
#include <iosfwd>

#include "mldem/search.hpp"

namespace mldem {

// Text format:
//   MLDEM1 <R> <beta> <rho0> <r1> <metric-kind> <delta> <nK>
//   R lines of R matrix entries
//   the indexed models in descriptor file format (starting with HGD1)
// The perm-sort table is not stored; rebuild it from the matrix after loading.

void write_index(std::ostream& out, const SearchIndex& index);
SearchIndex read_index(std::istream& in);

void save_index(const std::filesystem::path& path, const SearchIndex& index);
SearchIndex load_index(const std::filesystem::path& path);

}  // namespace mldem
