#pragma once

#include <string>
#include <utility>
#include <vector>

namespace flexagg {

/// Per-period value. A single entry is broadcast over the horizon; a longer
/// profile is read from its start.
struct Series {
  std::vector<double> values;

  Series() = default;
  Series(double v) : values{v} {}
  Series(std::vector<double> v) : values(std::move(v)) {}
  double at(int t) const { return values.size() == 1 ? values[0] : values.at(t); }
  bool fits(int horizon) const {
    return values.size() == 1 || static_cast<int>(values.size()) >= horizon;
  }
};

enum class Connection { Wye, Delta };

/// Phase index 0,1,2 means a,b,c for wye and ab,bc,ca for delta.
struct Terminal {
  std::string bus;
  Connection kind = Connection::Wye;
  int phase = 0;
};

enum class VarRole { P, Q, PDis, PCha };

const char* to_string(VarRole r);

/// One controllable scalar of x_t. Its contribution to the complex power
/// injected at `terminal` is (p_inj + j q_inj) * value, in MW / MVar.
struct LayoutVar {
  int device = 0;
  int terminal = 0;
  VarRole role = VarRole::P;
  double p_inj = 0.0;
  double q_inj = 0.0;
};

/// Index map for x = [x_1; ...; x_T]. Every period uses the same per-period
/// layout, so column (t, k) lives at t * nx() + k.
struct VariableLayout {
  int horizon = 1;
  std::vector<Terminal> terminals;
  std::vector<LayoutVar> vars;
  /// First per-period variable of each device and the count.
  std::vector<int> device_first;
  std::vector<int> device_count;
  std::vector<std::string> device_ids;

  int nx() const { return static_cast<int>(vars.size()); }
  int dim() const { return nx() * horizon; }
  int index(int t, int k) const { return t * nx() + k; }
  /// Per-period variable of `device`'s `slot`-th terminal with the given role,
  /// or -1 when the device has no such variable.
  int find(int device, int slot, VarRole role) const;
};

}  // namespace flexagg
