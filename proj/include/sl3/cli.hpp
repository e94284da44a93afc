#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sl3/family.hpp"
#include "sl3/types.hpp"

namespace sl3::cli {

enum class Command { Classify, Map, Propagate, Loop, Fock, Holonomy, FindEp };
enum class Format { Csv, Json };

std::string to_string(Command c);
Command command_from_string(const std::string& s);

/// Complete description of one run. Every field has a default, so a config
/// file only needs the fields it changes.
struct RunConfig {
  Command command = Command::Classify;
  FamilyKind family = FamilyKind::PTCyclic;
  double gamma = 1.0;
  /// For chiral_2 kappa1 is the single coupling kappa.
  double kappa1 = 1.5;
  double kappa2 = 3.5;
  double z_max = 10.0;
  int samples = 501;
  int n = 1;
  /// "a,b,c" (classical field or occupation triple), "noon:a,b,c;d,e,f", or
  /// "eigen:k" for the k-th right eigenmode at z = 0 (loop runs).
  std::string state = "1,0,0";
  /// propagate and fock follow the EP3 loop instead of constant parameters.
  bool on_loop = false;
  double loop_r = 0.4253;
  int loop_turns = 1;
  /// Loop centre in the (kappa1/gamma, kappa2/gamma) plane for `holonomy`.
  double loop_cx = 1.5;
  double loop_cy = 3.5;
  double tol = 1e-10;
  double eps_ep = 1e-9;
  int holonomy_steps = 2048;
  double x_min = 0.0, x_max = 4.0, y_min = 0.0, y_max = 4.0;
  int nx = 400, ny = 400;
  double bracket_lo = 0.01, bracket_hi = 3.0;
  std::string out;
  Format format = Format::Csv;
  int jobs = 1;
  bool plot_script = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses a JSON config document. Unknown keys, wrong types and non-finite
/// numbers raise ConfigError naming the field.
RunConfig config_from_json(const std::string& text, RunConfig base = {});
std::string config_to_json(const RunConfig& config);
/// Range and consistency checks; throws ConfigError.
void validate(const RunConfig& config);

CouplerFamily make_family(const RunConfig& config);

/// Parsed initial state.
struct StateSpec {
  enum class Kind { Vector, Noon, Eigen };
  Kind kind = Kind::Vector;
  int eigen_index = 0;
  std::array<int, 3> a{};
  std::array<int, 3> b{};
  Vec3 field = Vec3::Zero();
};
StateSpec parse_state(const std::string& text);

/// I_j = |E_j|^2 and the renormalized I_j / sum I; the latter is absent
/// when the total intensity is zero.
struct Intensities {
  std::array<double, 3> I{};
  std::optional<std::array<double, 3>> I_tilde;
};
Intensities emit_intensities(const Vec3& e);

/// Runs one configuration and writes its outputs. Returns the process exit
/// status (0, 2 for configuration errors, 3 for numerical failures); error
/// messages go to `diag` and partially written files are removed.
int run(const RunConfig& config, std::ostream& diag);

/// Full command-line entry point.
int main(int argc, char** argv);

}  // namespace sl3::cli
