#pragma once

#include <iosfwd>
#include <string>

#include "flexagg/lp.hpp"

namespace flexagg::lp {

/// Fixed-format MPS.
///
/// Writer layout, one entry per line, fields at the classic columns:
///
///   col  2-3   row type or bound type
///   col  5-12  column / bound-set name
///   col 15-22  row / column name
///   col 25-36  value
///
/// Rows are named R0000001.., columns C0000001.. (1-based), the objective
/// row is OBJ, and the RHS/RANGES/BOUNDS sets are RHS, RNG, BND. Values are
/// printed with the most significant digits that fit in 12 characters.
/// Binary columns are wrapped in INTORG/INTEND markers with explicit 0/1
/// bounds. The objective is always a minimization.
void write_mps(std::ostream& out, const MilpProblem& problem, const std::string& name = "FLEXAGG");

/// Reads fixed or free MPS (fields are split on whitespace, so names must not
/// contain blanks). Integer columns whose bounds lie in [0, 1] become
/// binaries; other integer columns raise ParseError. Throws ParseError with
/// the offending line number on malformed input.
MilpProblem read_mps(std::istream& in);

/// The 12-character value formatting used by write_mps.
std::string mps_number(double v);

}  // namespace flexagg::lp
