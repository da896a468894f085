#include "flexagg/mps.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "flexagg/error.hpp"

namespace flexagg::lp {

namespace {

std::string row_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "R%07d", i + 1);
  return buf;
}

std::string col_name(int j) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "C%07d", j + 1);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

// " T1 NAME....  NAME....  VALUE......."
void line(std::ostream& out, const std::string& type, const std::string& f2,
          const std::string& f3 = {}, const std::string& f4 = {}) {
  std::string s = " " + pad(type, 2) + " " + pad(f2, 8);
  if (!f3.empty() || !f4.empty()) s += "  " + pad(f3, 8);
  if (!f4.empty()) s += "  " + f4;
  while (!s.empty() && s.back() == ' ') s.pop_back();
  out << s << '\n';
}

}  // namespace

std::string mps_number(double v) {
  char buf[64];
  for (int prec = 12; prec >= 1; --prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::string(buf).size() <= 12) return buf;
  }
  throw Error(ErrorCode::ParseError, "value does not fit an MPS field");
}

void write_mps(std::ostream& out, const MilpProblem& problem, const std::string& name) {
  const LpProblem& lp = problem.lp;
  lp.validate();
  const int n = lp.num_cols();
  const int m = lp.num_rows();
  std::vector<char> is_bin(n, 0);
  for (int j : problem.binaries) is_bin[j] = 1;

  out << "NAME          " << name << '\n';
  out << "ROWS\n";
  line(out, "N", "OBJ");
  std::vector<char> kind(m);
  for (int i = 0; i < m; ++i) {
    const double lo = lp.row_lo()[i];
    const double hi = lp.row_hi()[i];
    if (lo == hi) {
      kind[i] = 'E';
    } else if (std::isfinite(hi)) {
      kind[i] = 'L';
    } else if (std::isfinite(lo)) {
      kind[i] = 'G';
    } else {
      kind[i] = 'N';
    }
    line(out, std::string(1, kind[i]), row_name(i));
  }

  // Column-wise entries.
  std::vector<std::vector<std::pair<int, double>>> cols(n);
  for (int i = 0; i < m; ++i) {
    for (int k = lp.row_start()[i]; k < lp.row_start()[i + 1]; ++k) {
      cols[lp.entry_col()[k]].emplace_back(i, lp.entry_val()[k]);
    }
  }
  out << "COLUMNS\n";
  bool in_marker = false;
  int marker = 0;
  auto toggle = [&](bool want) {
    if (want == in_marker) return;
    char buf[16];
    std::snprintf(buf, sizeof buf, "M%07d", ++marker);
    out << "    " << pad(buf, 8) << "  'MARKER'                 "
        << (want ? "'INTORG'" : "'INTEND'") << '\n';
    in_marker = want;
  };
  for (int j = 0; j < n; ++j) {
    toggle(is_bin[j] != 0);
    const std::string cname = col_name(j);
    bool wrote = false;
    if (lp.cost()[j] != 0.0) {
      line(out, "", cname, "OBJ", mps_number(lp.cost()[j]));
      wrote = true;
    }
    for (const auto& [i, v] : cols[j]) {
      line(out, "", cname, row_name(i), mps_number(v));
      wrote = true;
    }
    // Keep empty columns visible to readers.
    if (!wrote) line(out, "", cname, "OBJ", "0");
  }
  toggle(false);

  out << "RHS\n";
  for (int i = 0; i < m; ++i) {
    double rhs = 0.0;
    switch (kind[i]) {
      case 'E':
      case 'L': rhs = lp.row_hi()[i]; break;
      case 'G': rhs = lp.row_lo()[i]; break;
      default: continue;
    }
    if (rhs != 0.0) line(out, "", "RHS", row_name(i), mps_number(rhs));
  }

  bool any_range = false;
  for (int i = 0; i < m; ++i) {
    if (kind[i] != 'L' || !std::isfinite(lp.row_lo()[i])) continue;
    if (!any_range) out << "RANGES\n";
    any_range = true;
    line(out, "", "RNG", row_name(i), mps_number(lp.row_hi()[i] - lp.row_lo()[i]));
  }

  bool any_bound = false;
  auto bound = [&](const char* type, int j, const std::string& value) {
    if (!any_bound) out << "BOUNDS\n";
    any_bound = true;
    line(out, type, "BND", col_name(j), value);
  };
  for (int j = 0; j < n; ++j) {
    const double lo = lp.col_lo()[j];
    const double hi = lp.col_hi()[j];
    if (is_bin[j]) {
      bound("LO", j, mps_number(std::max(lo, 0.0)));
      bound("UP", j, mps_number(std::min(hi, 1.0)));
      continue;
    }
    if (lo == hi) {
      bound("FX", j, mps_number(lo));
      continue;
    }
    if (!std::isfinite(lo) && !std::isfinite(hi)) {
      bound("FR", j, "");
      continue;
    }
    if (!std::isfinite(lo)) {
      bound("MI", j, "");
    } else if (lo != 0.0) {
      bound("LO", j, mps_number(lo));
    }
    if (std::isfinite(hi)) bound("UP", j, mps_number(hi));
  }
  out << "ENDATA\n";
}

MilpProblem read_mps(std::istream& in) {
  enum class Section { None, Name, Rows, Columns, Rhs, Ranges, Bounds, End };
  Section section = Section::None;
  std::string objective;
  std::map<std::string, int> row_index;
  std::map<std::string, int> col_index;
  std::vector<char> row_kind;
  std::vector<std::string> row_names;
  std::vector<double> rhs, range;
  std::vector<char> has_range;
  std::vector<std::vector<std::pair<int, double>>> col_entries;
  std::vector<double> cost, lo, hi;
  std::vector<char> integer, lo_set;
  std::vector<std::string> col_names;
  bool in_int = false;

  std::string raw;
  int lineno = 0;
  auto fail = [&](const std::string& what) -> void {
    throw Error(ErrorCode::ParseError, "MPS line " + std::to_string(lineno) + ": " + what);
  };
  auto number = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') fail("bad number '" + s + "'");
    return v;
  };
  auto find_row = [&](const std::string& nm) {
    auto it = row_index.find(nm);
    if (it == row_index.end()) fail("unknown row " + nm);
    return it->second;
  };
  auto find_col = [&](const std::string& nm) {
    auto it = col_index.find(nm);
    if (it == col_index.end()) fail("unknown column " + nm);
    return it->second;
  };

  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '*') continue;
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (raw[0] != ' ' && raw[0] != '\t') {
      const std::string& h = tok[0];
      if (h == "NAME") section = Section::Name;
      else if (h == "ROWS") section = Section::Rows;
      else if (h == "COLUMNS") section = Section::Columns;
      else if (h == "RHS") section = Section::Rhs;
      else if (h == "RANGES") section = Section::Ranges;
      else if (h == "BOUNDS") section = Section::Bounds;
      else if (h == "ENDATA") { section = Section::End; break; }
      else if (h == "OBJSENSE") fail("OBJSENSE is not supported");
      else fail("unknown section " + h);
      continue;
    }
    switch (section) {
      case Section::Rows: {
        if (tok.size() != 2) fail("ROWS entry needs type and name");
        const char k = static_cast<char>(std::toupper(tok[0][0]));
        if (k == 'N' && objective.empty()) {
          objective = tok[1];
          break;
        }
        if (k != 'N' && k != 'L' && k != 'G' && k != 'E') fail("bad row type " + tok[0]);
        row_index[tok[1]] = static_cast<int>(row_kind.size());
        row_kind.push_back(k);
        row_names.push_back(tok[1]);
        rhs.push_back(0.0);
        range.push_back(0.0);
        has_range.push_back(0);
        break;
      }
      case Section::Columns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") {
          if (tok[2] == "'INTORG'") in_int = true;
          else if (tok[2] == "'INTEND'") in_int = false;
          else fail("bad marker");
          break;
        }
        if (tok.size() != 3 && tok.size() != 5) fail("COLUMNS entry needs 3 or 5 fields");
        auto it = col_index.find(tok[0]);
        int j;
        if (it == col_index.end()) {
          j = static_cast<int>(cost.size());
          col_index[tok[0]] = j;
          col_names.push_back(tok[0]);
          cost.push_back(0.0);
          lo.push_back(0.0);
          hi.push_back(kInf);
          integer.push_back(in_int ? 1 : 0);
          lo_set.push_back(0);
          col_entries.emplace_back();
        } else {
          j = it->second;
        }
        for (std::size_t f = 1; f + 1 < tok.size(); f += 2) {
          const double v = number(tok[f + 1]);
          if (tok[f] == objective) {
            cost[j] += v;
          } else {
            const int i = find_row(tok[f]);
            if (row_kind[i] != 'N' && v != 0.0) col_entries[j].emplace_back(i, v);
          }
        }
        break;
      }
      case Section::Rhs:
      case Section::Ranges: {
        const std::size_t start = tok.size() % 2 == 1 ? 1 : 0;
        if (tok.size() < start + 2) fail("entry too short");
        for (std::size_t f = start; f + 1 < tok.size(); f += 2) {
          const double v = number(tok[f + 1]);
          if (tok[f] == objective) continue;
          const int i = find_row(tok[f]);
          if (section == Section::Rhs) {
            rhs[i] = v;
          } else {
            range[i] = v;
            has_range[i] = 1;
          }
        }
        break;
      }
      case Section::Bounds: {
        if (tok.size() < 2) fail("BOUNDS entry too short");
        std::string type = tok[0];
        for (auto& ch : type) ch = static_cast<char>(std::toupper(ch));
        const bool needs_value = type == "LO" || type == "UP" || type == "FX" || type == "LI" ||
                                 type == "UI";
        // Either "TYPE SET COL [VAL]" or "TYPE COL [VAL]".
        std::string cname;
        std::string sval;
        if (needs_value) {
          if (tok.size() == 4) { cname = tok[2]; sval = tok[3]; }
          else if (tok.size() == 3) { cname = tok[1]; sval = tok[2]; }
          else fail("bound needs a value");
        } else {
          cname = tok.size() >= 3 ? tok[2] : tok[1];
        }
        const int j = find_col(cname);
        const double v = needs_value ? number(sval) : 0.0;
        if (type == "LO" || type == "LI") { lo[j] = v; lo_set[j] = 1; }
        else if (type == "UP" || type == "UI") {
          hi[j] = v;
          if (v < 0.0 && !lo_set[j]) lo[j] = -kInf;
        }
        else if (type == "FX") { lo[j] = hi[j] = v; }
        else if (type == "FR") { lo[j] = -kInf; hi[j] = kInf; }
        else if (type == "MI") { lo[j] = -kInf; }
        else if (type == "PL") { hi[j] = kInf; }
        else if (type == "BV") { lo[j] = 0.0; hi[j] = 1.0; integer[j] = 1; }
        else fail("unknown bound type " + type);
        if (type == "LI" || type == "UI") integer[j] = 1;
        break;
      }
      case Section::Name:
      case Section::None:
      case Section::End: fail("data outside of a section");
    }
  }
  if (section != Section::End) throw Error(ErrorCode::ParseError, "MPS input lacks ENDATA");

  MilpProblem out;
  const int n = static_cast<int>(cost.size());
  for (int j = 0; j < n; ++j) {
    out.lp.add_variable(cost[j], lo[j], hi[j], col_names[j]);
    if (integer[j]) {
      if (lo[j] < 0.0 || hi[j] > 1.0) {
        throw Error(ErrorCode::ParseError, "integer column " + col_names[j] + " is not binary");
      }
      out.binaries.push_back(j);
    }
  }
  const int m = static_cast<int>(row_kind.size());
  std::vector<std::vector<int>> ridx(m);
  std::vector<std::vector<double>> rval(m);
  for (int j = 0; j < n; ++j) {
    for (const auto& [i, v] : col_entries[j]) {
      ridx[i].push_back(j);
      rval[i].push_back(v);
    }
  }
  for (int i = 0; i < m; ++i) {
    double rlo = -kInf;
    double rhi = kInf;
    const double r = std::abs(range[i]);
    switch (row_kind[i]) {
      case 'E':
        rlo = rhi = rhs[i];
        if (has_range[i]) (range[i] >= 0 ? rhi : rlo) = rhs[i] + range[i];
        break;
      case 'L':
        rhi = rhs[i];
        if (has_range[i]) rlo = rhs[i] - r;
        break;
      case 'G':
        rlo = rhs[i];
        if (has_range[i]) rhi = rhs[i] + r;
        break;
      default: break;
    }
    out.lp.add_row(ridx[i], rval[i], rlo, rhi, row_names[i]);
  }
  return out;
}

}  // namespace flexagg::lp
