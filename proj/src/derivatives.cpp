#include <algorithm>
#include <cmath>

#include "symdisc/simulate.hpp"
#include "symdisc/spectral.hpp"

namespace symdisc {

std::vector<double> fd_weights(double x0, const std::vector<double>& nodes, int m) {
  const int n = static_cast<int>(nodes.size());
  if (m < 0 || n <= m) throw std::invalid_argument("fd_weights: need more nodes than the derivative order");
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

namespace {

struct Stencil {
  std::vector<int> offsets;  // relative to the target point
  std::vector<double> weights;
};

Stencil make_stencil(int first, int count, int target, int m, double h) {
  Stencil s;
  std::vector<double> nodes;
  for (int k = 0; k < count; ++k) {
    s.offsets.push_back(first + k - target);
    nodes.push_back(first + k);
  }
  s.weights = fd_weights(target, nodes, m);
  const double scale = std::pow(h, -m);
  for (auto& w : s.weights) w *= scale;
  return s;
}

// Differences of the given even accuracy order along one axis; one-sided windows near non-periodic edges.
void fd_derivative_axis(std::vector<double>& data, const std::vector<int>& shape, int axis, int m, double h,
                        bool periodic, int accuracy) {
  const int n = shape[axis];
  const int half = (m + 1) / 2 + (accuracy - 2) / 2;
  const int edge_count = m + accuracy;
  if ((periodic && n < 2 * half + 1) || (!periodic && n < edge_count))
    throw std::invalid_argument("grid too small for a derivative stencil of order " + std::to_string(m));
  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];

  const Stencil central = make_stencil(0, 2 * half + 1, half, m, h);
  std::vector<Stencil> per_point(n);
  for (int i = 0; i < n; ++i) {
    if (periodic || (i - half >= 0 && i + half < n)) {
      per_point[i] = central;
    } else {
      const int first = std::clamp(i - edge_count / 2, 0, n - edge_count);
      per_point[i] = make_stencil(first, edge_count, i, m, h);
    }
  }
  std::vector<double> line(n), out(n);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      for (int i = 0; i < n; ++i) line[i] = data[base + static_cast<std::size_t>(i) * inner];
      for (int i = 0; i < n; ++i) {
        const auto& s = per_point[i];
        double acc = 0.0;
        for (std::size_t k = 0; k < s.offsets.size(); ++k) {
          int j = i + s.offsets[k];
          if (periodic) j = ((j % n) + n) % n;
          acc += s.weights[k] * line[j];
        }
        out[i] = acc;
      }
      for (int i = 0; i < n; ++i) data[base + static_cast<std::size_t>(i) * inner] = out[i];
    }
}

std::string field_name(const JetVar& v) { return std::string(1, kDependentNames[v.index()]); }

}  // namespace

std::vector<double> derivative_field(const FieldData& fd, const std::string& field, const MultiIndex& J,
                                     DerivativeMethod method, int fd_accuracy) {
  if (fd_accuracy < 2 || fd_accuracy % 2) throw std::invalid_argument("fd_accuracy must be even and >= 2");
  std::vector<double> data = fd.field(field);
  const auto shape = fd.grid.shape();
  int used = 0;
  for (std::size_t a = 0; a < fd.grid.axes.size(); ++a) {
    const int m = J[fd.grid.jet_index(static_cast<int>(a))];
    if (m == 0) continue;
    used += m;
    const auto& ax = fd.grid.axes[a];
    if (ax.periodic && method == DerivativeMethod::Spectral)
      spectral_derivative_axis(data, shape, static_cast<int>(a), m, ax.length());
    else
      fd_derivative_axis(data, shape, static_cast<int>(a), m, ax.spacing(), ax.periodic, fd_accuracy);
  }
  if (used != multi_index_order(J)) throw std::invalid_argument("derivative along an axis the grid does not have");
  return data;
}

int JetDataset::column(const JetVar& v) const {
  auto it = std::find(variables.begin(), variables.end(), v);
  return it == variables.end() ? -1 : static_cast<int>(it - variables.begin());
}

std::size_t JetDataset::count_valid() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true)); }

EvalTable JetDataset::table() const {
  EvalTable t;
  t.variables = variables;
  t.values.resize(static_cast<Eigen::Index>(count_valid()), samples.cols());
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (mask[i]) t.values.row(r++) = samples.row(static_cast<Eigen::Index>(i));
  return t;
}

JetDataset JetDataset::masked() const {
  JetDataset d;
  d.variables = variables;
  EvalTable t = table();
  d.samples = std::move(t.values);
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (mask[i]) d.rows.push_back(rows[i]);
  d.mask.assign(d.rows.size(), true);
  return d;
}

std::vector<JetVar> jet_variables(const FieldData& fd, int max_order) {
  JetSpace space;
  for (std::size_t a = 0; a < fd.grid.axes.size(); ++a) space.independents.push_back(fd.grid.jet_index(static_cast<int>(a)));
  std::sort(space.independents.begin(), space.independents.end());
  for (const auto& [name, values] : fd.fields)
    for (int i = 0; i < kMaxDependent; ++i)
      if (name.size() == 1 && name[0] == kDependentNames[i]) space.dependents.push_back(i);
  std::sort(space.dependents.begin(), space.dependents.end());
  return space.coordinates(max_order);
}

JetDataset estimate_derivatives(const FieldData& fd, const std::vector<JetVar>& vars, const DerivativeOptions& opt,
                                const std::vector<std::size_t>* rows) {
  fd.validate();
  if (opt.border_trim < 0) throw std::invalid_argument("border_trim must be >= 0");
  JetDataset out;
  out.variables = vars;
  if (rows) {
    out.rows = *rows;
    for (auto r : out.rows)
      if (r >= fd.grid.size()) throw std::out_of_range("estimate_derivatives: row outside the grid");
  } else {
    out.rows.resize(fd.grid.size());
    for (std::size_t i = 0; i < out.rows.size(); ++i) out.rows[i] = i;
  }
  const auto n_rows = static_cast<Eigen::Index>(out.rows.size());
  out.samples.resize(n_rows, static_cast<Eigen::Index>(vars.size()));
  out.mask.assign(out.rows.size(), true);

  std::vector<std::vector<int>> idx(out.rows.size());
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    idx[r] = fd.grid.unravel(out.rows[r]);
    for (std::size_t a = 0; a < fd.grid.axes.size(); ++a) {
      const auto& ax = fd.grid.axes[a];
      if (!ax.periodic && (idx[r][a] < opt.border_trim || idx[r][a] >= ax.n - opt.border_trim)) out.mask[r] = false;
    }
  }

  for (std::size_t c = 0; c < vars.size(); ++c) {
    const JetVar& v = vars[c];
    const auto col = static_cast<Eigen::Index>(c);
    if (v.kind() == JetVar::Kind::Independent) {
      int axis = -1;
      for (std::size_t a = 0; a < fd.grid.axes.size(); ++a)
        if (fd.grid.jet_index(static_cast<int>(a)) == v.index()) axis = static_cast<int>(a);
      if (axis < 0) throw std::invalid_argument("grid has no axis " + v.name());
      for (std::size_t r = 0; r < out.rows.size(); ++r)
        out.samples(static_cast<Eigen::Index>(r), col) = fd.grid.axes[axis].coord(idx[r][axis]);
    } else if (v.kind() == JetVar::Kind::Dependent) {
      const std::string f = field_name(v);
      if (!fd.fields.count(f)) throw std::invalid_argument("dataset has no field " + f);
      const auto d = derivative_field(fd, f, v.multi_index(), opt.method, opt.fd_accuracy);
      for (std::size_t r = 0; r < out.rows.size(); ++r) out.samples(static_cast<Eigen::Index>(r), col) = d[out.rows[r]];
    } else {
      throw std::invalid_argument("cannot estimate symbol " + v.name() + " from field data");
    }
  }
  return out;
}

JetDataset estimate_derivatives(const FieldData& fd, int max_order, const DerivativeOptions& opt,
                                const std::vector<std::size_t>* rows) {
  if (max_order < 0 || max_order > 4) throw std::invalid_argument("max_order must be in [0, 4]");
  return estimate_derivatives(fd, jet_variables(fd, max_order), opt, rows);
}

void apply_guards(JetDataset& data, const std::vector<Guard>& guards) {
  if (guards.empty()) return;
  EvalTable t;
  t.variables = data.variables;
  t.values = data.samples;
  for (const auto& g : guards) {
    Eigen::VectorXd val = evaluate(g.expr, t);
    for (Eigen::Index i = 0; i < val.size(); ++i)
      if (!std::isfinite(val[i]) || std::abs(val[i]) < g.min_abs) data.mask[static_cast<std::size_t>(i)] = false;
  }
}

}  // namespace symdisc
