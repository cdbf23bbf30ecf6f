#include "symdisc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <boost/numeric/odeint.hpp>

#include "symdisc/spectral.hpp"

namespace symdisc {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;
using cplx = std::complex<double>;

namespace {

void check_finite(const State& s, double limit, double t, const char* system) {
  for (double v : s)
    if (!std::isfinite(v) || std::abs(v) > limit)
      throw SimulationError(std::string(system) + ": solution blew up at t=" + std::to_string(t), t);
}

int store_count(double t_final, double dt_store) {
  if (t_final < 0 || dt_store <= 0) throw std::invalid_argument("t_final must be >= 0 and dt_store > 0");
  const double r = t_final / dt_store;
  if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument("t_final must be a multiple of dt_store");
  return static_cast<int>(std::round(r));
}

std::vector<double> store_times(double t0, int count, double dt_store) {
  std::vector<double> ts(count + 1);
  for (int k = 0; k <= count; ++k) ts[k] = t0 + k * dt_store;
  return ts;
}

GridAxis time_axis(double t0, int count, double dt_store) {
  return GridAxis{"t", count + 1, t0, t0 + count * dt_store, false};
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T def) {
  return j.contains(key) ? j.at(key).get<T>() : def;
}

// ---- Boussinesq: u_tt = -(u^2/2)_xx - u_xxxx ----

struct BoussinesqRhs {
  int n;
  RealFFT fft;
  std::vector<double> k2, k4, mask;
  std::vector<cplx> uh, wh;
  std::vector<double> w;

  BoussinesqRhs(int n_, double length, bool dealias) : n(n_), fft({n_}) {
    auto k = wavenumbers(n, length, true);
    k2.resize(k.size());
    k4.resize(k.size());
    mask.assign(k.size(), 1.0);
    const double kmax = M_PI * n / length;
    for (std::size_t i = 0; i < k.size(); ++i) {
      k2[i] = k[i] * k[i];
      k4[i] = k2[i] * k2[i];
      if (dealias && std::abs(k[i]) > 2.0 / 3.0 * kmax) mask[i] = 0.0;
    }
    uh.resize(k.size());
    wh.resize(k.size());
    w.resize(n);
  }

  void operator()(const State& s, State& ds, double) {
    const double* u = s.data();
    const double* v = s.data() + n;
    std::copy(v, v + n, ds.begin());
    for (int i = 0; i < n; ++i) w[i] = 0.5 * u[i] * u[i];
    fft.forward(u, uh.data());
    fft.forward(w.data(), wh.data());
    for (std::size_t i = 0; i < uh.size(); ++i) wh[i] = mask[i] * (k2[i] * wh[i] - k4[i] * uh[i]);
    fft.inverse(wh.data(), ds.data() + n);
  }
};

FieldData boussinesq_run(const BoussinesqConfig& cfg, State& state, double t0, bool keep_velocity) {
  const int count = store_count(cfg.t_final, cfg.dt_store);
  const double ratio = cfg.dt_store / cfg.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) throw std::invalid_argument("dt_store must be a multiple of dt");
  const int substeps = static_cast<int>(std::round(ratio));
  const int n = cfg.n;
  BoussinesqRhs rhs(n, cfg.xmax - cfg.xmin, cfg.dealias);
  odeint::runge_kutta4<State> stepper;

  FieldData fd;
  fd.grid.axes = {time_axis(t0, count, cfg.dt_store), GridAxis{"x", n, cfg.xmin, cfg.xmax, true}};
  auto& u = fd.fields["u"];
  u.resize(static_cast<std::size_t>(count + 1) * n);
  std::vector<double>* ut = keep_velocity ? &fd.fields["u_t"] : nullptr;
  if (ut) ut->resize(u.size());
  auto record = [&](int k) {
    std::copy(state.begin(), state.begin() + n, u.begin() + static_cast<std::size_t>(k) * n);
    if (ut) std::copy(state.begin() + n, state.end(), ut->begin() + static_cast<std::size_t>(k) * n);
  };
  record(0);
  double t = t0;
  for (int k = 1; k <= count; ++k) {
    for (int s = 0; s < substeps; ++s) {
      stepper.do_step(std::ref(rhs), state, t, cfg.dt);
      t = t0 + ((k - 1) * substeps + s + 1) * cfg.dt;
    }
    check_finite(state, cfg.blowup, t, "boussinesq");
    record(k);
  }
  fd.config = cfg.to_json();
  fd.config["system"] = "boussinesq";
  return fd;
}

// ---- reaction-diffusion, periodic spectral Laplacian ----

struct Rd2Rhs {
  const ReactionDiffusion2DConfig& cfg;
  std::size_t npts;
  RealFFT fft;
  SpectralBox box;
  std::vector<cplx> h;
  std::vector<double> lap;

  explicit Rd2Rhs(const ReactionDiffusion2DConfig& c)
      : cfg(c),
        npts(static_cast<std::size_t>(c.n) * c.n),
        fft({c.n, c.n}),
        box({c.n, c.n}, {c.xmax - c.xmin, c.xmax - c.xmin}),
        h(box.complex_size()),
        lap(npts) {}

  void laplacian(const double* f) {
    fft.forward(f, h.data());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] *= -box.k2[i];
    fft.inverse(h.data(), lap.data());
  }

  void operator()(const State& s, State& ds, double) {
    const double* u = s.data();
    const double* v = s.data() + npts;
    double* du = ds.data();
    double* dv = ds.data() + npts;
    laplacian(u);
    for (std::size_t i = 0; i < npts; ++i) du[i] = cfg.d1 * lap[i];
    laplacian(v);
    for (std::size_t i = 0; i < npts; ++i) dv[i] = cfg.d2 * lap[i];
    for (std::size_t i = 0; i < npts; ++i) {
      const double a = u[i] * u[i] + v[i] * v[i];
      du[i] += (1.0 - a) * u[i] + a * v[i] - cfg.forcing * v[i];
      dv[i] += -a * u[i] + (1.0 - a) * v[i] - cfg.forcing * u[i];
    }
  }
};

struct Rd3Rhs {
  const ReactionDiffusion3DConfig& cfg;
  std::size_t npts;
  RealFFT fft;
  SpectralBox box;
  std::vector<cplx> h;

  explicit Rd3Rhs(const ReactionDiffusion3DConfig& c)
      : cfg(c),
        npts(static_cast<std::size_t>(c.n) * c.n * c.n),
        fft({c.n, c.n, c.n}),
        box({c.n, c.n, c.n}, std::vector<double>(3, c.xmax - c.xmin)),
        h(box.complex_size()) {}

  void operator()(const State& s, State& ds, double) {
    fft.forward(s.data(), h.data());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] *= -cfg.d * box.k2[i];
    fft.inverse(h.data(), ds.data());
    for (std::size_t i = 0; i < npts; ++i) ds[i] += s[i] - s[i] * s[i] * s[i];
  }
};

// Integrates with dense-output DOPRI5 and records every stored time into the named fields.
template <class Rhs>
FieldData adaptive_run(Rhs& rhs, State& state, const std::vector<std::string>& names, std::vector<GridAxis> space,
                       double t0, int count, double dt_store, double rtol, double atol, double blowup,
                       const char* system) {
  FieldData fd;
  fd.grid.axes = {time_axis(t0, count, dt_store)};
  fd.grid.axes.insert(fd.grid.axes.end(), space.begin(), space.end());
  const std::size_t per_field = state.size() / names.size();
  for (const auto& nm : names) fd.fields[nm].resize(per_field * (count + 1));
  auto times = store_times(t0, count, dt_store);
  int k = 0;
  auto observe = [&](const State& s, double t) {
    check_finite(s, blowup, t, system);
    for (std::size_t f = 0; f < names.size(); ++f)
      std::copy(s.begin() + f * per_field, s.begin() + (f + 1) * per_field,
                fd.fields[names[f]].begin() + static_cast<std::size_t>(k) * per_field);
    ++k;
  };
  if (count == 0) {
    observe(state, t0);
    return fd;
  }
  auto stepper = odeint::make_dense_output(atol, rtol, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_times(stepper, std::ref(rhs), state, times.begin(), times.end(), 0.01 * dt_store, observe);
  return fd;
}

}  // namespace

// ---- configs ----

BoussinesqConfig BoussinesqConfig::from_json(const nlohmann::json& j) {
  BoussinesqConfig c;
  c.n = get_or(j, "n", c.n);
  c.xmin = get_or(j, "xmin", c.xmin);
  c.xmax = get_or(j, "xmax", c.xmax);
  c.dt = get_or(j, "dt", c.dt);
  c.t_final = get_or(j, "t_final", c.t_final);
  c.dt_store = get_or(j, "dt_store", c.dt_store);
  c.amplitude = get_or(j, "amplitude", c.amplitude);
  c.dealias = get_or(j, "dealias", c.dealias);
  c.with_test = get_or(j, "with_test", c.with_test);
  c.blowup = get_or(j, "blowup", c.blowup);
  return c;
}

nlohmann::json BoussinesqConfig::to_json() const {
  return {{"n", n},           {"xmin", xmin},       {"xmax", xmax},           {"dt", dt},
          {"t_final", t_final}, {"dt_store", dt_store}, {"amplitude", amplitude}, {"dealias", dealias},
          {"with_test", with_test}, {"blowup", blowup}};
}

DarcyConfig DarcyConfig::from_json(const nlohmann::json& j) {
  DarcyConfig c;
  c.n = get_or(j, "n", c.n);
  c.xmin = get_or(j, "xmin", c.xmin);
  c.xmax = get_or(j, "xmax", c.xmax);
  c.t_final = get_or(j, "t_final", c.t_final);
  c.cfl = get_or(j, "cfl", c.cfl);
  c.decay = get_or(j, "decay", c.decay);
  c.forcing = get_or(j, "forcing", c.forcing);
  const std::string b = get_or<std::string>(j, "boundary", "dirichlet");
  if (b == "dirichlet") c.boundary = DarcyBoundary::Dirichlet;
  else if (b == "neumann") c.boundary = DarcyBoundary::Neumann;
  else throw std::invalid_argument("darcy boundary must be dirichlet or neumann");
  const std::string ic = get_or<std::string>(j, "init", "random");
  if (ic == "random") c.init = DarcyInit::Random;
  else if (ic == "constant") c.init = DarcyInit::Constant;
  else throw std::invalid_argument("darcy init must be random or constant");
  c.init_value = get_or(j, "init_value", c.init_value);
  c.seed = get_or(j, "seed", c.seed);
  c.residual_tol = get_or(j, "residual_tol", c.residual_tol);
  c.strict = get_or(j, "strict", c.strict);
  return c;
}

nlohmann::json DarcyConfig::to_json() const {
  return {{"n", n},
          {"xmin", xmin},
          {"xmax", xmax},
          {"t_final", t_final},
          {"cfl", cfl},
          {"decay", decay},
          {"forcing", forcing},
          {"boundary", boundary == DarcyBoundary::Dirichlet ? "dirichlet" : "neumann"},
          {"init", init == DarcyInit::Random ? "random" : "constant"},
          {"init_value", init_value},
          {"seed", seed},
          {"residual_tol", residual_tol},
          {"strict", strict}};
}

ReactionDiffusion2DConfig ReactionDiffusion2DConfig::from_json(const nlohmann::json& j) {
  ReactionDiffusion2DConfig c;
  c.n = get_or(j, "n", c.n);
  c.xmin = get_or(j, "xmin", c.xmin);
  c.xmax = get_or(j, "xmax", c.xmax);
  c.d1 = get_or(j, "d1", c.d1);
  c.d2 = get_or(j, "d2", c.d2);
  c.forcing = get_or(j, "forcing", c.forcing);
  c.t_final = get_or(j, "t_final", c.t_final);
  c.dt_store = get_or(j, "dt_store", c.dt_store);
  c.rtol = get_or(j, "rtol", c.rtol);
  c.atol = get_or(j, "atol", c.atol);
  const std::string ic = get_or<std::string>(j, "init", "spiral");
  if (ic == "spiral") c.init = RdInit::Spiral;
  else if (ic == "zero") c.init = RdInit::Zero;
  else throw std::invalid_argument("rd-2d init must be spiral or zero");
  c.with_test = get_or(j, "with_test", c.with_test);
  c.blowup = get_or(j, "blowup", c.blowup);
  return c;
}

nlohmann::json ReactionDiffusion2DConfig::to_json() const {
  return {{"n", n},           {"xmin", xmin},       {"xmax", xmax}, {"d1", d1},     {"d2", d2},
          {"forcing", forcing}, {"t_final", t_final}, {"dt_store", dt_store}, {"rtol", rtol}, {"atol", atol},
          {"init", init == RdInit::Spiral ? "spiral" : "zero"}, {"with_test", with_test}, {"blowup", blowup}};
}

ReactionDiffusion3DConfig ReactionDiffusion3DConfig::from_json(const nlohmann::json& j) {
  ReactionDiffusion3DConfig c;
  c.n = get_or(j, "n", c.n);
  c.xmin = get_or(j, "xmin", c.xmin);
  c.xmax = get_or(j, "xmax", c.xmax);
  c.d = get_or(j, "d", c.d);
  c.t_final = get_or(j, "t_final", c.t_final);
  c.dt_store = get_or(j, "dt_store", c.dt_store);
  c.rtol = get_or(j, "rtol", c.rtol);
  c.atol = get_or(j, "atol", c.atol);
  const std::string ic = get_or<std::string>(j, "init", "random");
  if (ic == "random") c.init = Rd3Init::Random;
  else if (ic == "zero") c.init = Rd3Init::Zero;
  else if (ic == "one") c.init = Rd3Init::One;
  else throw std::invalid_argument("rd-3d init must be random, zero or one");
  c.init_amplitude = get_or(j, "init_amplitude", c.init_amplitude);
  c.seed = get_or(j, "seed", c.seed);
  c.with_test = get_or(j, "with_test", c.with_test);
  c.blowup = get_or(j, "blowup", c.blowup);
  return c;
}

nlohmann::json ReactionDiffusion3DConfig::to_json() const {
  const char* ic = init == Rd3Init::Random ? "random" : init == Rd3Init::Zero ? "zero" : "one";
  return {{"n", n},       {"xmin", xmin},           {"xmax", xmax}, {"d", d},       {"t_final", t_final},
          {"dt_store", dt_store}, {"rtol", rtol},       {"atol", atol}, {"init", ic}, {"init_amplitude", init_amplitude},
          {"seed", seed}, {"with_test", with_test}, {"blowup", blowup}};
}

// ---- solvers ----

SimulationResult simulate_boussinesq(const BoussinesqConfig& cfg) {
  if (cfg.n < 4) throw std::invalid_argument("boussinesq: need at least 4 grid points");
  GridAxis xa{"x", cfg.n, cfg.xmin, cfg.xmax, true};
  State state(2 * cfg.n, 0.0);
  for (int i = 0; i < cfg.n; ++i) {
    const double x = xa.coord(i);
    state[i] = cfg.amplitude * std::exp(-x * x);
  }
  SimulationResult res;
  res.train = boussinesq_run(cfg, state, 0.0, false);
  if (cfg.with_test) res.test = boussinesq_run(cfg, state, cfg.t_final, true);
  return res;
}

namespace {

struct DarcyOperator {
  int n;
  double h;
  bool neumann;
  // face coefficients: ax[i][j] between nodes (i,j),(i+1,j); ay[i][j] between (i,j),(i,j+1)
  std::vector<double> ax, ay;
  double amax = 0.0;

  explicit DarcyOperator(const DarcyConfig& cfg)
      : n(cfg.n), h((cfg.xmax - cfg.xmin) / (cfg.n - 1)), neumann(cfg.boundary == DarcyBoundary::Neumann) {
    ax.assign(static_cast<std::size_t>(n) * n, 0.0);
    ay.assign(static_cast<std::size_t>(n) * n, 0.0);
    auto a = [&](double x, double y) { return std::exp(-cfg.decay * (x * x + y * y)); };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = cfg.xmin + i * h, y = cfg.xmin + j * h;
        ax[idx(i, j)] = a(x + 0.5 * h, y);
        ay[idx(i, j)] = a(x, y + 0.5 * h);
        amax = std::max({amax, ax[idx(i, j)], ay[idx(i, j)]});
      }
  }

  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n + j; }

  // div(a grad u) at node (i, j); Neumann boundaries mirror the adjacent interior flux
  double apply(const std::vector<double>& u, int i, int j) const {
    auto flux_x = [&](int i0, int jj) { return ax[idx(i0, jj)] * (u[idx(i0 + 1, jj)] - u[idx(i0, jj)]); };
    auto flux_y = [&](int ii, int j0) { return ay[idx(ii, j0)] * (u[idx(ii, j0 + 1)] - u[idx(ii, j0)]); };
    double fe = i + 1 < n ? flux_x(i, j) : -flux_x(i - 1, j);
    double fw = i > 0 ? flux_x(i - 1, j) : -flux_x(i, j);
    double fn = j + 1 < n ? flux_y(i, j) : -flux_y(i, j - 1);
    double fs = j > 0 ? flux_y(i, j - 1) : -flux_y(i, j);
    return (fe - fw + fn - fs) / (h * h);
  }

  bool boundary(int i, int j) const { return i == 0 || j == 0 || i == n - 1 || j == n - 1; }
};

}  // namespace

SimulationResult simulate_darcy(const DarcyConfig& cfg) {
  if (cfg.n < 4) throw std::invalid_argument("darcy: need at least 4 grid points");
  DarcyOperator op(cfg);
  const int n = cfg.n;
  const bool dirichlet = cfg.boundary == DarcyBoundary::Dirichlet;
  std::vector<double> u(static_cast<std::size_t>(n) * n, cfg.init_value);
  if (cfg.init == DarcyInit::Random) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> amp(0.0, 1.0), phase(0.0, 2.0 * M_PI);
    std::uniform_int_distribution<int> wave(1, 4);
    const double L = cfg.xmax - cfg.xmin;
    for (int m = 0; m < 5; ++m) {
      const double A = amp(rng), ph = phase(rng);
      const int kx = wave(rng), ky = wave(rng);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double x = (i * op.h) / L, y = (j * op.h) / L;
          u[op.idx(i, j)] += A * std::sin(2.0 * M_PI * (kx * x + ky * y) + ph);
        }
    }
  }
  if (dirichlet)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (op.boundary(i, j)) u[op.idx(i, j)] = 0.0;

  const double dt_max = cfg.cfl * op.h * op.h / op.amax;
  const long steps = cfg.t_final > 0 ? static_cast<long>(std::ceil(cfg.t_final / dt_max)) : 0;
  const double dt = steps > 0 ? cfg.t_final / steps : 0.0;
  std::vector<double> k1(u.size(), 0.0), k2(u.size(), 0.0), us(u.size());
  auto rhs = [&](const std::vector<double>& w, std::vector<double>& out) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (dirichlet && op.boundary(i, j)) {
          out[op.idx(i, j)] = 0.0;
          continue;
        }
        out[op.idx(i, j)] = op.apply(w, i, j) + cfg.forcing;
      }
  };
  for (long s = 0; s < steps; ++s) {
    rhs(u, k1);
    for (std::size_t p = 0; p < u.size(); ++p) us[p] = u[p] + dt * k1[p];
    rhs(us, k2);
    for (std::size_t p = 0; p < u.size(); ++p) u[p] += 0.5 * dt * (k1[p] + k2[p]);
    if (s % 1000 == 0) check_finite(u, 1e6, (s + 1) * dt, "darcy");
  }
  check_finite(u, 1e6, cfg.t_final, "darcy");

  SimulationResult res;
  res.train.grid.axes = {GridAxis{"x", n, cfg.xmin, cfg.xmax, false}, GridAxis{"y", n, cfg.xmin, cfg.xmax, false}};
  res.train.fields["u"] = std::move(u);
  res.train.config = cfg.to_json();
  res.train.config["system"] = "darcy";
  res.train.config["dt"] = dt;
  res.train.config["steps"] = steps;
  const double r = darcy_residual(res.train, cfg);
  res.train.config["residual_rms"] = r;
  if (cfg.strict && !(r < cfg.residual_tol))
    throw SimulationError("darcy: steady-state residual " + std::to_string(r) + " above tolerance", cfg.t_final);
  return res;
}

double darcy_residual(const FieldData& fd, const DarcyConfig& cfg) {
  DarcyOperator op(cfg);
  const auto& u = fd.field("u");
  if (u.size() != static_cast<std::size_t>(cfg.n) * cfg.n) throw std::invalid_argument("darcy_residual: grid mismatch");
  const bool dirichlet = cfg.boundary == DarcyBoundary::Dirichlet;
  double sum = 0.0;
  std::size_t count = 0;
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.n; ++j) {
      if (dirichlet && op.boundary(i, j)) continue;
      const double r = op.apply(u, i, j) + cfg.forcing;
      sum += r * r;
      ++count;
    }
  return count ? std::sqrt(sum / count) : 0.0;
}

SimulationResult simulate_reaction_diffusion_2d(const ReactionDiffusion2DConfig& cfg) {
  if (cfg.n < 4) throw std::invalid_argument("rd-2d: need at least 4 grid points");
  const int n = cfg.n;
  const std::size_t npts = static_cast<std::size_t>(n) * n;
  GridAxis xa{"x", n, cfg.xmin, cfg.xmax, true}, ya{"y", n, cfg.xmin, cfg.xmax, true};
  State state(2 * npts, 0.0);
  if (cfg.init == RdInit::Spiral) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = xa.coord(i), y = ya.coord(j);
        const double r = std::hypot(x, y), th = std::atan2(y, x);
        state[i * n + j] = std::tanh(r) * std::cos(th - r);
        state[npts + i * n + j] = std::tanh(r) * std::sin(th - r);
      }
  }
  const int count = store_count(cfg.t_final, cfg.dt_store);
  Rd2Rhs rhs(cfg);
  SimulationResult res;
  res.train = adaptive_run(rhs, state, {"u", "v"}, {xa, ya}, 0.0, count, cfg.dt_store, cfg.rtol, cfg.atol,
                           cfg.blowup, "rd-2d");
  res.train.config = cfg.to_json();
  res.train.config["system"] = "rd-2d";
  if (cfg.with_test) {
    res.test = adaptive_run(rhs, state, {"u", "v"}, {xa, ya}, cfg.t_final, count, cfg.dt_store, cfg.rtol,
                            cfg.atol, cfg.blowup, "rd-2d");
    res.test->config = res.train.config;
  }
  return res;
}

SimulationResult simulate_reaction_diffusion_3d(const ReactionDiffusion3DConfig& cfg) {
  if (cfg.n < 4) throw std::invalid_argument("rd-3d: need at least 4 grid points");
  const std::size_t npts = static_cast<std::size_t>(cfg.n) * cfg.n * cfg.n;
  State state(npts, cfg.init == Rd3Init::One ? 1.0 : 0.0);
  if (cfg.init == Rd3Init::Random) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> N(0.0, 1.0);
    for (auto& s : state) s = cfg.init_amplitude * N(rng);
  }
  std::vector<GridAxis> space;
  for (const char* nm : {"x", "y", "z"}) space.push_back(GridAxis{nm, cfg.n, cfg.xmin, cfg.xmax, true});
  const int count = store_count(cfg.t_final, cfg.dt_store);
  Rd3Rhs rhs(cfg);
  SimulationResult res;
  res.train = adaptive_run(rhs, state, {"u"}, space, 0.0, count, cfg.dt_store, cfg.rtol, cfg.atol, cfg.blowup,
                           "rd-3d");
  res.train.config = cfg.to_json();
  res.train.config["system"] = "rd-3d";
  res.train.seed = cfg.seed;
  if (cfg.with_test) {
    res.test = adaptive_run(rhs, state, {"u"}, space, cfg.t_final, count, cfg.dt_store, cfg.rtol, cfg.atol,
                            cfg.blowup, "rd-3d");
    res.test->config = res.train.config;
  }
  return res;
}

SimulationResult simulate_system(const std::string& name, const nlohmann::json& cfg) {
  if (name == "boussinesq") return simulate_boussinesq(BoussinesqConfig::from_json(cfg));
  if (name == "darcy") return simulate_darcy(DarcyConfig::from_json(cfg));
  if (name == "rd-2d") return simulate_reaction_diffusion_2d(ReactionDiffusion2DConfig::from_json(cfg));
  if (name == "rd-3d") return simulate_reaction_diffusion_3d(ReactionDiffusion3DConfig::from_json(cfg));
  throw std::invalid_argument("unknown system '" + name + "' (boussinesq, darcy, rd-2d, rd-3d)");
}

FieldData add_noise(const FieldData& fd, double level, std::uint64_t seed) {
  if (level < 0) throw std::invalid_argument("noise level must be >= 0");
  FieldData out = fd;
  out.noise_level = level;
  out.seed = seed;
  if (level == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  for (auto& [name, values] : out.fields) {
    double ss = 0.0;
    for (double v : values) ss += v * v;
    const double rms = values.empty() ? 0.0 : std::sqrt(ss / values.size());
    for (auto& v : values) v += level * rms * N(rng);
  }
  return out;
}

}  // namespace symdisc
