#include "resmix/mcsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "resmix/errors.hpp"

namespace resmix {

bool CoupledState::coupling_holds() const {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int expected = z[i] ? y[i] : xstar[i];
    if (x[i] != expected) return false;
  }
  return true;
}

std::size_t CoupledState::z_count() const { return static_cast<std::size_t>(std::count(z.begin(), z.end(), 1)); }

EventStream::EventStream(const Network& net) {
  for (std::size_t i = 0; i < net.n; ++i)
    for (std::size_t j = i + 1; j < net.n; ++j)
      if (net.c(i, j) > 0.0) {
        total_ += net.c(i, j);
        events_.push_back({true, i, j});
        cumulative_.push_back(total_);
      }
  for (std::size_t i = 0; i < net.n; ++i)
    if (net.kappa[i] > 0.0) {
      total_ += net.kappa[i];
      events_.push_back({false, i, i});
      cumulative_.push_back(total_);
    }
  if (events_.empty()) throw Error(Errc::InvalidArgument, "network has no event clocks");
}

const EventStream::Event& EventStream::pick(double u) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u * total_);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), events_.size() - 1);
  return events_[k];
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32), 0x5eedU};
  return std::mt19937_64(seq);
}

unsigned resolve_threads(const SimOptions& opts) {
  if (opts.threads > 0) return opts.threads;
  if (const char* env = std::getenv("RESMIX_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

using Uniform = std::uniform_real_distribution<double>;

/// Splits trials into contiguous blocks, one accumulator per worker. Callers
/// keep accumulators integer-valued or trial-indexed so the merge is exact.
template <class Acc, class Fn>
std::vector<Acc> run_blocks(std::size_t trials, const SimOptions& opts, const Acc& init, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(resolve_threads(opts), trials));
  std::vector<Acc> accs(workers, init);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = trials * w / workers;
      const std::size_t end = trials * (w + 1) / workers;
      pool.emplace_back([&, w, begin, end] {
        try {
          fn(begin, end, accs[w]);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return accs;
}

Estimate binomial(std::uint64_t hits, std::size_t trials) {
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

/// One trajectory of the coupled processes.
class CoupledRun {
 public:
  CoupledRun(const Network& net, const EventStream& stream, std::span<const std::uint8_t> x0,
             std::mt19937_64& rng, const SimOptions& opts)
      : stream_(stream), rng_(rng), opts_(opts), resample_(net.rho) {
    const std::size_t n = net.n;
    if (x0.size() != n) throw Error(Errc::InvalidArgument, "initial state must have one entry per site");
    std::bernoulli_distribution zeta(net.rho);
    state_.xstar.resize(n);
    for (auto& v : state_.xstar) v = zeta(rng_) ? 1 : 0;
    state_.x.assign(x0.begin(), x0.end());
    for (auto& v : state_.x) v = v ? 1 : 0;
    state_.y = state_.x;
    state_.z.assign(n, 1);
    next_ = clock();
  }

  void advance_to(double t) {
    while (next_ <= t) {
      apply(stream_.pick(Uniform(0.0, 1.0)(rng_)));
      if (++events_ > opts_.max_events) throw Error(Errc::RuntimeCap, "event cap exceeded in one trial");
      if (opts_.check_every_event && !state_.coupling_holds())
        throw Error(Errc::NumericalBreakdown, "coupling identity violated after an event");
      next_ += clock();
    }
    state_.time = t;
  }

  const CoupledState& state() const { return state_; }

 private:
  double clock() { return std::exponential_distribution<double>(stream_.total_rate())(rng_); }

  void apply(const EventStream::Event& e) {
    if (e.exchange) {
      std::swap(state_.xstar[e.i], state_.xstar[e.j]);
      std::swap(state_.x[e.i], state_.x[e.j]);
      std::swap(state_.y[e.i], state_.y[e.j]);
      std::swap(state_.z[e.i], state_.z[e.j]);
    } else {
      // The k-th resampling consumes the k-th shared draw xi_k.
      const std::uint8_t xi = resample_(rng_) ? 1 : 0;
      state_.xstar[e.i] = xi;
      state_.x[e.i] = xi;
      state_.y[e.i] = 0;
      state_.z[e.i] = 0;
    }
  }

  const EventStream& stream_;
  std::mt19937_64& rng_;
  const SimOptions& opts_;
  std::bernoulli_distribution resample_;
  CoupledState state_;
  double next_ = 0.0;
  std::uint64_t events_ = 0;
};

/// The density-0 process Z from all ones, on its own.
class ZRun {
 public:
  ZRun(const Network& net, const EventStream& stream, std::mt19937_64& rng, const SimOptions& opts)
      : stream_(stream), rng_(rng), opts_(opts), z_(net.n, 1), count_(net.n) {}

  void advance_to(double t) {
    while (true) {
      const double next = now_ + clock();
      if (next > t) {
        // Memorylessness lets the pending clock be discarded at t.
        now_ = t;
        return;
      }
      now_ = next;
      step();
    }
  }

  /// Runs until Z is empty and returns that time.
  double run_to_extinction() {
    while (count_ > 0) {
      now_ += clock();
      step();
    }
    return now_;
  }

  const Bits& z() const { return z_; }

 private:
  double clock() { return std::exponential_distribution<double>(stream_.total_rate())(rng_); }

  void step() {
    const auto& e = stream_.pick(Uniform(0.0, 1.0)(rng_));
    if (e.exchange) {
      std::swap(z_[e.i], z_[e.j]);
    } else if (z_[e.i]) {
      z_[e.i] = 0;
      --count_;
    }
    if (++events_ > opts_.max_events) throw Error(Errc::RuntimeCap, "event cap exceeded in one trial");
  }

  const EventStream& stream_;
  std::mt19937_64& rng_;
  const SimOptions& opts_;
  Bits z_;
  std::size_t count_;
  double now_ = 0.0;
  std::uint64_t events_ = 0;
};

void check_times(std::span<const double> times) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0)) throw Error(Errc::InvalidArgument, "sample times must be >= 0");
    if (k > 0 && times[k] < times[k - 1]) throw Error(Errc::InvalidArgument, "sample times must be ascending");
  }
}

void check_trials(std::size_t trials) {
  if (trials == 0) throw Error(Errc::InvalidArgument, "trials must be >= 1");
}

}  // namespace

std::vector<CoupledState> run_coupled(const Network& net, std::span<const std::uint8_t> x0,
                                      std::span<const double> times, std::uint64_t seed, std::uint64_t trial,
                                      const SimOptions& opts) {
  check_times(times);
  const EventStream stream(net);
  auto rng = trial_rng(seed, trial);
  CoupledRun run(net, stream, x0, rng, opts);
  std::vector<CoupledState> out;
  out.reserve(times.size());
  for (double t : times) {
    run.advance_to(t);
    out.push_back(run.state());
  }
  return out;
}

CoupledStatistics coupled_statistics(const Network& net, std::span<const std::uint8_t> x0,
                                     std::span<const double> times, std::size_t trials, std::uint64_t seed,
                                     const SimOptions& opts) {
  check_times(times);
  check_trials(trials);
  const EventStream stream(net);
  const std::size_t n = net.n;
  const std::size_t m = times.size();
  const bool from_ones = std::all_of(x0.begin(), x0.end(), [](auto v) { return v != 0; });
  const bool from_zeros = std::all_of(x0.begin(), x0.end(), [](auto v) { return v == 0; });

  struct Counts {
    std::vector<std::uint64_t> xstar, x, z;
    std::vector<std::uint64_t> zc, zc2;
    bool coupling = true;
    bool y_ok = true;
  };
  Counts init{std::vector<std::uint64_t>(m * n), std::vector<std::uint64_t>(m * n),
              std::vector<std::uint64_t>(m * n), std::vector<std::uint64_t>(m), std::vector<std::uint64_t>(m)};

  auto accs = run_blocks(trials, opts, init, [&](std::size_t begin, std::size_t end, Counts& acc) {
    for (std::size_t trial = begin; trial < end; ++trial) {
      auto rng = trial_rng(seed, trial);
      CoupledRun run(net, stream, x0, rng, opts);
      for (std::size_t k = 0; k < m; ++k) {
        run.advance_to(times[k]);
        const auto& s = run.state();
        std::uint64_t zc = 0;
        for (std::size_t i = 0; i < n; ++i) {
          acc.xstar[k * n + i] += s.xstar[i];
          acc.x[k * n + i] += s.x[i];
          acc.z[k * n + i] += s.z[i];
          zc += s.z[i];
        }
        acc.zc[k] += zc;
        acc.zc2[k] += zc * zc;
        acc.coupling = acc.coupling && s.coupling_holds();
        if (from_ones) acc.y_ok = acc.y_ok && s.y == s.z;
        if (from_zeros) acc.y_ok = acc.y_ok && std::all_of(s.y.begin(), s.y.end(), [](auto v) { return v == 0; });
      }
    }
  });

  Counts total = init;
  for (const auto& a : accs) {
    for (std::size_t k = 0; k < m * n; ++k) {
      total.xstar[k] += a.xstar[k];
      total.x[k] += a.x[k];
      total.z[k] += a.z[k];
    }
    for (std::size_t k = 0; k < m; ++k) {
      total.zc[k] += a.zc[k];
      total.zc2[k] += a.zc2[k];
    }
    total.coupling = total.coupling && a.coupling;
    total.y_ok = total.y_ok && a.y_ok;
  }

  CoupledStatistics out;
  out.trials = trials;
  out.times.assign(times.begin(), times.end());
  out.coupling_always_held = total.coupling;
  out.y_matches_expected = total.y_ok;
  const auto nt = static_cast<double>(trials);
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<Estimate> xs, xx, zz;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(binomial(total.xstar[k * n + i], trials));
      xx.push_back(binomial(total.x[k * n + i], trials));
      zz.push_back(binomial(total.z[k * n + i], trials));
    }
    out.xstar.push_back(std::move(xs));
    out.x.push_back(std::move(xx));
    out.z.push_back(std::move(zz));
    const double mean = static_cast<double>(total.zc[k]) / nt;
    const double var = std::max(0.0, static_cast<double>(total.zc2[k]) / nt - mean * mean);
    out.z_count.push_back({mean, std::sqrt(var / nt)});
  }
  return out;
}

Estimate SstSample::survival(double t) const {
  const auto hits = static_cast<std::uint64_t>(std::count_if(values.begin(), values.end(), [t](double v) { return v > t; }));
  return binomial(hits, values.size());
}

Estimate SstSample::mean() const {
  const auto nt = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / nt;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / nt / nt)};
}

SstSample sample_sst(const Network& net, std::size_t trials, std::uint64_t seed, const SimOptions& opts) {
  check_trials(trials);
  const EventStream stream(net);
  SstSample out;
  out.trials = trials;
  out.values.assign(trials, 0.0);
  run_blocks(trials, opts, 0, [&](std::size_t begin, std::size_t end, int&) {
    for (std::size_t trial = begin; trial < end; ++trial) {
      auto rng = trial_rng(seed, trial);
      ZRun run(net, stream, rng, opts);
      out.values[trial] = run.run_to_extinction();
    }
  });
  return out;
}

Estimate killed_walk_survival(const Network& net, std::size_t start, double t, std::size_t trials,
                              std::uint64_t seed, const SimOptions& opts) {
  check_trials(trials);
  if (start >= net.n) throw Error(Errc::InvalidArgument, "start vertex out of range");
  if (!(t >= 0.0)) throw Error(Errc::InvalidArgument, "time must be >= 0");

  // Per vertex: total exit rate, and cumulative rates over [neighbors..., kill].
  struct Site {
    double rate = 0.0;
    std::vector<std::size_t> targets;
    std::vector<double> cumulative;
  };
  std::vector<Site> sites(net.n);
  for (std::size_t i = 0; i < net.n; ++i) {
    auto& s = sites[i];
    for (std::size_t j = 0; j < net.n; ++j)
      if (j != i && net.c(i, j) > 0.0) {
        s.rate += net.c(i, j);
        s.targets.push_back(j);
        s.cumulative.push_back(s.rate);
      }
    s.rate += net.kappa[i];
  }

  auto accs = run_blocks(trials, opts, std::uint64_t{0}, [&](std::size_t begin, std::size_t end, std::uint64_t& alive) {
    for (std::size_t trial = begin; trial < end; ++trial) {
      auto rng = trial_rng(seed, trial);
      std::size_t at = start;
      double now = 0.0;
      std::uint64_t steps = 0;
      while (true) {
        const auto& s = sites[at];
        if (s.rate <= 0.0) {
          ++alive;
          break;
        }
        now += std::exponential_distribution<double>(s.rate)(rng);
        if (now > t) {
          ++alive;
          break;
        }
        const double u = Uniform(0.0, s.rate)(rng);
        const auto it = std::upper_bound(s.cumulative.begin(), s.cumulative.end(), u);
        if (it == s.cumulative.end()) break;  // killed
        at = s.targets[static_cast<std::size_t>(it - s.cumulative.begin())];
        if (++steps > opts.max_events) throw Error(Errc::RuntimeCap, "event cap exceeded in one trial");
      }
    }
  });
  return binomial(std::accumulate(accs.begin(), accs.end(), std::uint64_t{0}), trials);
}

std::vector<CovarianceEstimate> nd_check_mc(const Network& net, double t,
                                            std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                            std::size_t trials, std::uint64_t seed, const SimOptions& opts) {
  check_trials(trials);
  if (!(t >= 0.0)) throw Error(Errc::InvalidArgument, "time must be >= 0");
  for (const auto& [i, j] : pairs)
    if (i == j || i >= net.n || j >= net.n) throw Error(Errc::InvalidArgument, "pairs must be distinct valid vertices");
  if (pairs.empty()) return {};

  const EventStream stream(net);
  // Per pair: counts of (Z_i, Z_j) = (1,1), (1,0), (0,1).
  const std::vector<std::uint64_t> init(3 * pairs.size(), 0);
  auto accs = run_blocks(trials, opts, init, [&](std::size_t begin, std::size_t end, std::vector<std::uint64_t>& acc) {
    for (std::size_t trial = begin; trial < end; ++trial) {
      auto rng = trial_rng(seed, trial);
      ZRun run(net, stream, rng, opts);
      run.advance_to(t);
      const auto& z = run.z();
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const bool a = z[pairs[p].first];
        const bool b = z[pairs[p].second];
        if (a && b) ++acc[3 * p];
        else if (a) ++acc[3 * p + 1];
        else if (b) ++acc[3 * p + 2];
      }
    }
  });

  std::vector<CovarianceEstimate> out;
  const auto nt = static_cast<double>(trials);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    std::uint64_t c11 = 0, c10 = 0, c01 = 0;
    for (const auto& a : accs) {
      c11 += a[3 * p];
      c10 += a[3 * p + 1];
      c01 += a[3 * p + 2];
    }
    const double p11 = static_cast<double>(c11) / nt;
    const double p10 = static_cast<double>(c10) / nt;
    const double p01 = static_cast<double>(c01) / nt;
    const double p00 = 1.0 - p11 - p10 - p01;
    const double mi = p11 + p10;
    const double mj = p11 + p01;
    const double cov = p11 - mi * mj;
    // Influence-function variance of the plug-in covariance.
    auto sq = [](double v) { return v * v; };
    const double second = p11 * sq((1 - mi) * (1 - mj)) + p10 * sq((1 - mi) * (0 - mj)) +
                          p01 * sq((0 - mi) * (1 - mj)) + p00 * sq(mi * mj);
    const double se = std::sqrt(std::max(0.0, second - cov * cov) / nt);
    CovarianceEstimate e{pairs[p].first, pairs[p].second, cov, 4.0 * se, false};
    e.flag = e.cov - e.radius > 0.0;
    out.push_back(e);
  }
  return out;
}

}  // namespace resmix
