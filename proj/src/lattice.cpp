#include "crossdiff/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace crossdiff {

std::vector<std::size_t> LatticeState::counts() const {
  std::vector<std::size_t> c(species + 1, 0);
  for (auto s : sites) ++c[s];
  return c;
}

LatticeState sample_lattice(std::size_t sites, std::size_t species, double length,
                            const std::function<std::vector<double>(double)>& profile, std::uint64_t seed) {
  if (sites < 2) throw std::invalid_argument("lattice needs at least two sites");
  if (species == 0 || species > 254) throw std::invalid_argument("lattice supports 1 to 254 species");
  LatticeState st;
  st.sites.resize(sites);
  st.species = species;
  st.length = length;
  st.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double h = length / static_cast<double>(sites);
  for (std::size_t s = 0; s < sites; ++s) {
    const auto u = profile((static_cast<double>(s) + 0.5) * h);
    if (u.size() != species) throw std::invalid_argument("profile returned the wrong number of species");
    const double r = uni(rng);
    double acc = 0.0;
    std::uint8_t label = 0;
    for (std::size_t i = 0; i < species; ++i) {
      acc += u[i];
      if (r < acc) {
        label = static_cast<std::uint8_t>(i + 1);
        break;
      }
    }
    st.sites[s] = label;
  }
  return st;
}

namespace {

__extension__ using u128 = unsigned __int128;

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  // (0, 1]
  double open_left() { return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53; }
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>((static_cast<u128>(rng_()) * n) >> 64);
  }

 private:
  std::mt19937_64 rng_;
};

// Bonds grouped by the unordered label pair of their two sites. Only pairs
// with a positive rate are tracked.
class BondClasses {
 public:
  BondClasses(const LatticeState& st, const CoefficientMatrix& k, double scale)
      : labels_(st.species + 1),
        class_of_(st.sites.size() - 1, kNone),
        slot_(st.sites.size() - 1, 0),
        id_(labels_ * labels_, kNone) {
    for (std::size_t a = 0; a < labels_; ++a)
      for (std::size_t b = a + 1; b < labels_; ++b)
        if (k(a, b) > 0.0) {
          id_[a * labels_ + b] = static_cast<int>(rate_.size());
          rate_.push_back(k(a, b) * scale);
          members_.emplace_back();
        }
    for (std::size_t bond = 0; bond + 1 < st.sites.size(); ++bond) refresh(st, bond);
  }

  double total_rate() const {
    double r = 0.0;
    for (std::size_t c = 0; c < rate_.size(); ++c) r += rate_[c] * static_cast<double>(members_[c].size());
    return r;
  }

  std::size_t pick(double target, Uniform& uni) const {
    std::size_t c = 0;
    for (; c + 1 < rate_.size(); ++c) {
      const double w = rate_[c] * static_cast<double>(members_[c].size());
      if (target < w) break;
      target -= w;
    }
    while (members_[c].empty()) --c;  // guards rounding at the upper end
    return members_[c][uni.index(members_[c].size())];
  }

  void refresh(const LatticeState& st, std::size_t bond) {
    const int next = class_for(st.sites[bond], st.sites[bond + 1]);
    const int prev = class_of_[bond];
    if (next == prev) return;
    if (prev != kNone) {
      auto& m = members_[static_cast<std::size_t>(prev)];
      const std::uint32_t moved = m.back();
      m[slot_[bond]] = moved;
      slot_[moved] = slot_[bond];
      m.pop_back();
    }
    if (next != kNone) {
      auto& m = members_[static_cast<std::size_t>(next)];
      slot_[bond] = static_cast<std::uint32_t>(m.size());
      m.push_back(static_cast<std::uint32_t>(bond));
    }
    class_of_[bond] = next;
  }

 private:
  static constexpr int kNone = -1;

  int class_for(std::uint8_t a, std::uint8_t b) const {
    if (a == b) return kNone;
    const auto lo = std::min(a, b), hi = std::max(a, b);
    return id_[lo * labels_ + hi];
  }

  std::size_t labels_;
  std::vector<int> class_of_;
  std::vector<std::uint32_t> slot_;
  std::vector<double> rate_;
  std::vector<std::vector<std::uint32_t>> members_;
  std::vector<int> id_;  // label pair (a * labels + b, a < b) -> class
};

void validate(const LatticeState& st, const CoefficientMatrix& k) {
  if (st.species != k.species()) throw std::invalid_argument("lattice and K disagree on species count");
  if (st.sites.size() < 2) throw std::invalid_argument("lattice needs at least two sites");
  for (auto s : st.sites)
    if (s > st.species) throw std::invalid_argument("lattice label out of range");
}

// Advances to each time in `times` and calls `snapshot(index)` there.
template <class Snapshot>
std::uint64_t simulate(LatticeState& st, const CoefficientMatrix& k, const std::vector<double>& times,
                       std::uint64_t seed, Snapshot&& snapshot) {
  const double per_length = static_cast<double>(st.sites.size()) / st.length;
  BondClasses bonds(st, k, per_length * per_length);
  Uniform uni(seed);
  std::uint64_t events = 0;
  double t = 0.0;
  for (std::size_t out = 0; out < times.size(); ++out) {
    const double stop = times[out];
    for (;;) {
      const double total = bonds.total_rate();
      if (!(total > 0.0)) break;
      const double wait = -std::log(uni.open_left()) / total;
      // Memorylessness lets the clock restart at `stop` when the next event lies beyond it.
      if (t + wait > stop) break;
      t += wait;
      const std::size_t b = bonds.pick((1.0 - uni.open_left()) * total, uni);
      std::swap(st.sites[b], st.sites[b + 1]);
      if (b > 0) bonds.refresh(st, b - 1);
      if (b + 2 < st.sites.size()) bonds.refresh(st, b + 1);
      ++events;
    }
    t = stop;
    snapshot(out);
  }
  return events;
}

void check_times(const std::vector<double>& times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i])) throw std::invalid_argument("output times must be >= 0");
    if (i > 0 && times[i] < times[i - 1]) throw std::invalid_argument("output times must be nondecreasing");
  }
}

}  // namespace

std::uint64_t kmc_evolve(LatticeState& state, const CoefficientMatrix& k, double t_end, std::uint64_t seed) {
  validate(state, k);
  check_times({t_end});
  return simulate(state, k, {t_end}, seed, [](std::size_t) {});
}

std::vector<std::vector<double>> bin_densities(const LatticeState& state, std::size_t bins) {
  if (bins == 0 || state.sites.size() % bins != 0)
    throw std::invalid_argument("site count must be a multiple of the bin count");
  const std::size_t per_bin = state.sites.size() / bins;
  std::vector<std::vector<double>> d(bins, std::vector<double>(state.species + 1, 0.0));
  for (std::size_t s = 0; s < state.sites.size(); ++s) d[s / per_bin][state.sites[s]] += 1.0;
  for (auto& row : d)
    for (auto& v : row) v /= static_cast<double>(per_bin);
  return d;
}

DensityProfiles kmc_run(const std::function<LatticeState(std::uint64_t)>& make_initial, const CoefficientMatrix& k,
                        const KmcOptions& options) {
  check_times(options.times);
  if (options.replicas == 0) throw std::invalid_argument("need at least one replica");
  const std::size_t labels = k.species() + 1;
  using Snapshots = std::vector<std::vector<std::vector<double>>>;
  std::vector<Snapshots> per_replica(options.replicas);

  auto run_replica = [&](std::size_t r) {
    LatticeState st = make_initial(mix_seed(options.seed ^ 0x243f6a8885a308d3ULL, r));
    validate(st, k);
    if (st.sites.size() % options.bins != 0)
      throw std::invalid_argument("site count must be a multiple of the bin count");
    Snapshots snaps(options.times.size());
    simulate(st, k, options.times, mix_seed(options.seed, r),
             [&](std::size_t i) { snaps[i] = bin_densities(st, options.bins); });
    per_replica[r] = std::move(snaps);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, options.replicas));
  if (workers == 1) {
    for (std::size_t r = 0; r < options.replicas; ++r) run_replica(r);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            for (std::size_t r = w; r < options.replicas; r += workers) run_replica(r);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  DensityProfiles out;
  out.times = options.times;
  out.bins = options.bins;
  out.labels = labels;
  const auto zeros = std::vector<std::vector<double>>(options.bins, std::vector<double>(labels, 0.0));
  out.mean.assign(options.times.size(), zeros);
  out.replica_std.assign(options.times.size(), zeros);
  const double count = static_cast<double>(options.replicas);
  for (std::size_t i = 0; i < options.times.size(); ++i)
    for (std::size_t b = 0; b < options.bins; ++b)
      for (std::size_t a = 0; a < labels; ++a) {
        double s = 0.0;
        for (const auto& rep : per_replica) s += rep[i][b][a];
        const double mean = s / count;
        double ss = 0.0;
        for (const auto& rep : per_replica) ss += (rep[i][b][a] - mean) * (rep[i][b][a] - mean);
        out.mean[i][b][a] = mean;
        out.replica_std[i][b][a] = options.replicas > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
      }
  return out;
}

DensityProfiles kmc_run(const LatticeState& initial, const CoefficientMatrix& k, const KmcOptions& options) {
  return kmc_run([&initial](std::uint64_t) { return initial; }, k, options);
}

}  // namespace crossdiff
