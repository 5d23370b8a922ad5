#pragma once

#include <span>
#include <vector>

namespace forge::rl {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

/// Generalized advantage estimation for one sequence. dones[t] marks step t
/// as the last of its episode: nothing is bootstrapped across it.
/// `bootstrap` is the value of the state after the final step.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const bool> dones,
                      double bootstrap, double gamma, double lambda);

/// Rescales in place to zero mean, unit (population) std.
void normalize_advantages(std::span<double> adv);

}  // namespace forge::rl
