#pragma once

// Benchmark MDPs and a seeded trajectory sampler.

#include "explore/mdp.hpp"
#include "explore/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace explore {

/// Cell geometry of a gridworld, used for heatmap rendering.
struct GridLayout {
  int rows = 0;
  int cols = 0;
  /// (row, col) of each state.
  std::vector<std::pair<int, int>> cells;
};

struct EnvSpec {
  std::string name;
  TabularMdp mdp;
  std::map<std::string, std::string> metadata;
  std::optional<GridLayout> grid;
};

/// Actions: 0 = UP, 1 = RESET. Slip swaps the two outcomes.
EnvSpec single_chain(int n = 10, double p_slip = 0.1);

/// Two chains of length n_side meeting at the center. Action 0 climbs the left
/// arm (toward state 0), action 1 the right arm. On an arm, the action pointing
/// the other way falls back to the center. With `split_center` the center is
/// duplicated into two linked base states (2*n_side states in total).
EnvSpec double_chain(int n_side = 10, double p_slip = 0.1, bool split_center = false);

/// Actions: 0 = LEFT (downstream, deterministic), 1 = RIGHT (upstream).
EnvSpec river_swim(int n = 6);

/// Four rooms on a side x side grid including the outer walls. Actions are
/// N, E, S, W; with probability `slip` one of the other three is taken.
EnvSpec four_rooms(int side = 11, double slip = 0.0);

/// Each (s,a) row is Dirichlet(1) over `branching` distinct random successors.
EnvSpec random_mdp(int n_states, int n_actions, int branching, std::uint64_t seed);

/// Deterministic ring; action 0 steps to s-1, action 1 to s+1 (mod n).
EnvSpec ring(int n);

/// True when every state is reachable from the support of d0 under some policy.
bool all_reachable(const TabularMdp& mdp);

/// Build an environment by name; `params` holds optional overrides such as
/// "n", "p_slip", "side", "slip", "split_center", "states", "actions",
/// "branching", "seed". Names: single-chain, double-chain, river-swim,
/// four-rooms, random, ring.
EnvSpec make_env(const std::string& name, const std::map<std::string, std::string>& params = {});

/// Header line "S A", then S*A rows of S probabilities.
void write_mdp_text(std::ostream& os, const TabularMdp& mdp);
/// Inverse of write_mdp_text. The format carries no initial distribution, so
/// d0 is uniform unless given.
TabularMdp read_mdp_text(std::istream& is, const std::optional<Vector>& initial_dist = std::nullopt);

/// Single-owner trajectory sampler. Keeps a reference to the MDP, which must
/// outlive it.
class Sampler {
 public:
  Sampler(const TabularMdp& mdp, std::uint64_t seed);

  int state() const { return state_; }
  /// Draw s' ~ P(.|state, action) and move there.
  int step(int action);
  int sample_action(const PolicyTable& policy);
  /// Redraw the current state from d0.
  void reset();
  Rng& rng() { return rng_; }

 private:
  const TabularMdp* mdp_;
  Rng rng_;
  int state_ = 0;
};

}  // namespace explore
