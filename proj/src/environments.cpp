#include "explore/environments.hpp"

#include "explore/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace explore {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

void check_slip(double p, double max, const char* who) {
  if (!(p >= 0.0 && p <= max)) {
    std::ostringstream os;
    os << who << ": slip probability " << p << " outside [0, " << max << "]";
    throw ParameterError(os.str());
  }
}

Vector point_mass(int n, int s) {
  Vector d = Vector::Zero(n);
  d[s] = 1.0;
  return d;
}

}  // namespace

EnvSpec single_chain(int n, double p_slip) {
  if (n < 2) throw ParameterError("single_chain: n must be at least 2");
  check_slip(p_slip, 0.5, "single_chain");
  Matrix p = Matrix::Zero(2 * n, n);
  for (int s = 0; s < n; ++s) {
    const int up = std::min(s + 1, n - 1);
    p(2 * s + 0, up) += 1.0 - p_slip;
    p(2 * s + 0, 0) += p_slip;
    p(2 * s + 1, 0) += 1.0 - p_slip;
    p(2 * s + 1, up) += p_slip;
  }
  EnvSpec env{"single-chain", TabularMdp(n, 2, std::move(p), point_mass(n, 0)), {}, std::nullopt};
  env.metadata = {{"n", std::to_string(n)}, {"p_slip", num(p_slip)}, {"actions", "up,reset"}};
  return env;
}

EnvSpec double_chain(int n_side, double p_slip, bool split_center) {
  if (n_side < 2) throw ParameterError("double_chain: n_side must be at least 2");
  check_slip(p_slip, 0.5, "double_chain");

  // Left arm occupies the low indices and ends at `left_base`; the right arm
  // starts at `right_base`. Without a split both bases are the shared center.
  const int n = split_center ? 2 * n_side : 2 * n_side - 1;
  const int left_base = n_side - 1;
  const int right_base = split_center ? n_side : n_side - 1;

  auto target = [&](int s, int action) {
    if (s <= left_base && s < right_base) {
      // Strictly on the left arm (or its split base).
      if (action == 0) return std::max(s - 1, 0);
      return s == left_base ? right_base : left_base;
    }
    if (s >= right_base && s > left_base) {
      if (action == 1) return std::min(s + 1, n - 1);
      return s == right_base ? left_base : right_base;
    }
    // Shared center.
    return action == 0 ? s - 1 : s + 1;
  };

  Matrix p = Matrix::Zero(2 * n, n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < 2; ++a) {
      p(2 * s + a, target(s, a)) += 1.0 - p_slip;
      p(2 * s + a, target(s, 1 - a)) += p_slip;
    }
  }
  Vector d0 = split_center ? Vector(0.5 * (point_mass(n, left_base) + point_mass(n, right_base)))
                           : point_mass(n, left_base);
  EnvSpec env{"double-chain", TabularMdp(n, 2, std::move(p), std::move(d0)), {}, std::nullopt};
  env.metadata = {{"n_side", std::to_string(n_side)},
                  {"p_slip", num(p_slip)},
                  {"split_center", split_center ? "1" : "0"},
                  {"actions", "left,right"}};
  return env;
}

EnvSpec river_swim(int n) {
  if (n < 2) throw ParameterError("river_swim: n must be at least 2");
  Matrix p = Matrix::Zero(2 * n, n);
  for (int s = 0; s < n; ++s) {
    p(2 * s, std::max(s - 1, 0)) = 1.0;
    if (s == 0) {
      p(1, 1) += 0.3;
      p(1, 0) += 0.7;
    } else if (s == n - 1) {
      p(2 * s + 1, s) += 0.3;
      p(2 * s + 1, s - 1) += 0.7;
    } else {
      p(2 * s + 1, s + 1) += 0.3;
      p(2 * s + 1, s) += 0.6;
      p(2 * s + 1, s - 1) += 0.1;
    }
  }
  EnvSpec env{"river-swim", TabularMdp(n, 2, std::move(p), point_mass(n, 0)), {}, std::nullopt};
  env.metadata = {{"n", std::to_string(n)},
                  {"actions", "left,right"},
                  {"right_interior", "0.3 forward, 0.6 stay, 0.1 back"},
                  {"right_bottom", "0.3 forward, 0.7 stay"},
                  {"right_top", "0.3 stay, 0.7 back"}};
  return env;
}

EnvSpec four_rooms(int side, double slip) {
  if (side < 5 || side % 2 == 0) throw ParameterError("four_rooms: side must be odd and at least 5");
  check_slip(slip, 1.0, "four_rooms");
  const int mid = side / 2;
  std::vector<std::vector<bool>> open(side, std::vector<bool>(side, true));
  for (int i = 0; i < side; ++i) {
    open[0][i] = open[side - 1][i] = open[i][0] = open[i][side - 1] = false;
    open[mid][i] = open[i][mid] = false;
  }
  // One doorway in the middle of each of the four inner wall segments.
  const int low = (1 + mid - 1) / 2;
  const int high = (mid + 1 + side - 2) / 2;
  open[low][mid] = open[high][mid] = open[mid][low] = open[mid][high] = true;

  GridLayout grid;
  grid.rows = side;
  grid.cols = side;
  std::vector<std::vector<int>> index(side, std::vector<int>(side, -1));
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (!open[r][c]) continue;
      index[r][c] = static_cast<int>(grid.cells.size());
      grid.cells.emplace_back(r, c);
    }
  }
  const int n = static_cast<int>(grid.cells.size());
  const int dr[4] = {-1, 0, 1, 0};
  const int dc[4] = {0, 1, 0, -1};
  Matrix p = Matrix::Zero(4 * n, n);
  for (int s = 0; s < n; ++s) {
    const auto [r, c] = grid.cells[s];
    int dest[4];
    for (int m = 0; m < 4; ++m) {
      const int rr = r + dr[m];
      const int cc = c + dc[m];
      dest[m] = open[rr][cc] ? index[rr][cc] : s;
    }
    for (int a = 0; a < 4; ++a) {
      for (int m = 0; m < 4; ++m) p(4 * s + a, dest[m]) += m == a ? 1.0 - slip : slip / 3.0;
    }
  }
  EnvSpec env{"four-rooms", TabularMdp(n, 4, std::move(p), point_mass(n, 0)), {}, std::move(grid)};
  env.metadata = {{"side", std::to_string(side)}, {"slip", num(slip)}, {"actions", "north,east,south,west"}};
  return env;
}

EnvSpec random_mdp(int n_states, int n_actions, int branching, std::uint64_t seed) {
  if (n_states < 1 || n_actions < 1) throw ParameterError("random_mdp: empty state or action set");
  if (branching < 1 || branching > n_states) throw ParameterError("random_mdp: branching must lie in [1, |S|]");
  Rng rng(seed);
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(n_states) * n_actions, n_states);
  std::vector<int> perm(n_states);
  for (int row = 0; row < n_states * n_actions; ++row) {
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    std::vector<double> w(branching);
    for (int k = 0; k < branching; ++k) {
      const int j = k + rng.uniform_int(n_states - k);
      std::swap(perm[k], perm[j]);
      // Gamma(1) draws normalized to a Dirichlet(1) sample.
      w[k] = -std::log1p(-rng.uniform01());
      total += w[k];
    }
    for (int k = 0; k < branching; ++k) p(row, perm[k]) = w[k] / total;
  }
  EnvSpec env{"random", TabularMdp(n_states, n_actions, std::move(p), Vector::Constant(n_states, 1.0 / n_states)),
              {}, std::nullopt};
  env.metadata = {{"states", std::to_string(n_states)},
                  {"actions", std::to_string(n_actions)},
                  {"branching", std::to_string(branching)},
                  {"seed", std::to_string(seed)}};
  return env;
}

EnvSpec ring(int n) {
  if (n < 1) throw ParameterError("ring: n must be positive");
  Matrix p = Matrix::Zero(2 * n, n);
  for (int s = 0; s < n; ++s) {
    p(2 * s, (s + n - 1) % n) = 1.0;
    p(2 * s + 1, (s + 1) % n) = 1.0;
  }
  EnvSpec env{"ring", TabularMdp(n, 2, std::move(p), point_mass(n, 0)), {}, std::nullopt};
  env.metadata = {{"n", std::to_string(n)}, {"actions", "left,right"}};
  return env;
}

bool all_reachable(const TabularMdp& mdp) {
  const int n = mdp.n_states();
  std::vector<bool> seen(n, false);
  std::deque<int> queue;
  for (int s = 0; s < n; ++s) {
    if (mdp.initial_dist()[s] > 0.0) {
      seen[s] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    for (int a = 0; a < mdp.n_actions(); ++a) {
      for (int t = 0; t < n; ++t) {
        if (!seen[t] && mdp.p(s, a, t) > 0.0) {
          seen[t] = true;
          queue.push_back(t);
        }
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

namespace {

class Params {
 public:
  Params(const std::map<std::string, std::string>& m, std::string env) : m_(m), env_(std::move(env)) {}

  int integer(const std::string& key, int fallback) const {
    auto it = m_.find(key);
    if (it == m_.end()) return fallback;
    try {
      std::size_t used = 0;
      const int v = std::stoi(it->second, &used);
      if (used == it->second.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParameterError(env_ + ": parameter '" + key + "' is not an integer: " + it->second);
  }

  double real(const std::string& key, double fallback) const {
    auto it = m_.find(key);
    if (it == m_.end()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used == it->second.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParameterError(env_ + ": parameter '" + key + "' is not a number: " + it->second);
  }

  bool flag(const std::string& key, bool fallback) const {
    auto it = m_.find(key);
    if (it == m_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ParameterError(env_ + ": parameter '" + key + "' is not a boolean: " + v);
  }

 private:
  const std::map<std::string, std::string>& m_;
  std::string env_;
};

}  // namespace

EnvSpec make_env(const std::string& name, const std::map<std::string, std::string>& params) {
  static const std::map<std::string, std::vector<std::string>> known{
      {"single-chain", {"n", "p_slip"}},
      {"double-chain", {"n_side", "p_slip", "split_center"}},
      {"river-swim", {"n"}},
      {"four-rooms", {"side", "slip"}},
      {"random", {"states", "actions", "branching", "seed"}},
      {"ring", {"n"}}};
  const auto it = known.find(name);
  if (it == known.end()) throw ParameterError("unknown environment '" + name + "'");
  for (const auto& [key, value] : params) {
    if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
      throw ParameterError(name + ": unknown parameter '" + key + "'");
    }
  }
  const Params p(params, name);
  if (name == "single-chain") return single_chain(p.integer("n", 10), p.real("p_slip", 0.1));
  if (name == "double-chain") {
    return double_chain(p.integer("n_side", 10), p.real("p_slip", 0.1), p.flag("split_center", false));
  }
  if (name == "river-swim") return river_swim(p.integer("n", 6));
  if (name == "four-rooms") return four_rooms(p.integer("side", 11), p.real("slip", 0.0));
  if (name == "random") {
    const int states = p.integer("states", 20);
    return random_mdp(states, p.integer("actions", 2), p.integer("branching", std::min(states, 5)),
                      static_cast<std::uint64_t>(p.integer("seed", 0)));
  }
  if (name == "ring") return ring(p.integer("n", 10));
  throw ParameterError("unknown environment '" + name + "'");
}

void write_mdp_text(std::ostream& os, const TabularMdp& mdp) {
  os << mdp.n_states() << ' ' << mdp.n_actions() << '\n';
  os << std::setprecision(17);
  const Matrix& p = mdp.transition();
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) os << (c ? " " : "") << p(r, c);
    os << '\n';
  }
}

TabularMdp read_mdp_text(std::istream& is, const std::optional<Vector>& initial_dist) {
  int n_states = 0;
  int n_actions = 0;
  if (!(is >> n_states >> n_actions) || n_states <= 0 || n_actions <= 0) {
    throw ShapeError("read_mdp_text: bad header");
  }
  Matrix p(static_cast<Eigen::Index>(n_states) * n_actions, n_states);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      if (!(is >> p(r, c))) throw ShapeError("read_mdp_text: truncated transition rows");
    }
  }
  Vector d0 = initial_dist ? *initial_dist : Vector::Constant(n_states, 1.0 / n_states);
  return TabularMdp(n_states, n_actions, std::move(p), std::move(d0));
}

Sampler::Sampler(const TabularMdp& mdp, std::uint64_t seed) : mdp_(&mdp), rng_(seed) { reset(); }

void Sampler::reset() { state_ = rng_.categorical(mdp_->initial_dist()); }

int Sampler::step(int action) {
  if (action < 0 || action >= mdp_->n_actions()) throw ShapeError("Sampler::step: action out of range");
  state_ = rng_.categorical(mdp_->row(state_, action));
  return state_;
}

int Sampler::sample_action(const PolicyTable& policy) { return rng_.categorical(policy.probs().row(state_)); }

}  // namespace explore
