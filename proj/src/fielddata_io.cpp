#include <bit>
#include <filesystem>
#include <fstream>

#include "symdisc/simulate.hpp"

namespace fs = std::filesystem;

namespace symdisc {

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (const auto& a : axes) s *= static_cast<std::size_t>(a.n);
  return axes.empty() ? 0 : s;
}

std::vector<int> Grid::shape() const {
  std::vector<int> s;
  for (const auto& a : axes) s.push_back(a.n);
  return s;
}

std::vector<std::size_t> Grid::strides() const {
  std::vector<std::size_t> s(axes.size(), 1);
  for (int a = static_cast<int>(axes.size()) - 2; a >= 0; --a) s[a] = s[a + 1] * axes[a + 1].n;
  return s;
}

int Grid::axis_index(const std::string& name) const {
  for (std::size_t a = 0; a < axes.size(); ++a)
    if (axes[a].name == name) return static_cast<int>(a);
  return -1;
}

int Grid::jet_index(int axis) const {
  const auto& nm = axes.at(axis).name;
  for (int i = 0; i < kMaxIndependent; ++i)
    if (nm.size() == 1 && nm[0] == kIndependentNames[i]) return i;
  throw std::invalid_argument("axis name '" + nm + "' is not one of x, y, z, t");
}

std::vector<int> Grid::unravel(std::size_t flat) const {
  std::vector<int> idx(axes.size());
  for (int a = static_cast<int>(axes.size()) - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % axes[a].n);
    flat /= axes[a].n;
  }
  return idx;
}

void Grid::validate() const {
  if (axes.empty()) throw std::invalid_argument("grid has no axes");
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const auto& ax = axes[a];
    jet_index(static_cast<int>(a));
    const int min_n = ax.name == "t" ? 1 : 4;
    if (ax.n < min_n) throw std::invalid_argument("axis " + ax.name + " has too few points");
    if (ax.n > 1 && !(ax.max > ax.min)) throw std::invalid_argument("axis " + ax.name + " has an empty range");
    for (std::size_t b = 0; b < a; ++b)
      if (axes[b].name == ax.name) throw std::invalid_argument("duplicate axis " + ax.name);
  }
}

const std::vector<double>& FieldData::field(const std::string& name) const {
  auto it = fields.find(name);
  if (it == fields.end()) throw std::invalid_argument("no field named '" + name + "'");
  return it->second;
}

void FieldData::validate() const {
  grid.validate();
  for (const auto& [name, values] : fields)
    if (values.size() != grid.size()) throw std::invalid_argument("field " + name + " does not match the grid");
}

FieldData FieldData::slice_first_axis(int begin, int end) const {
  const auto& ax = grid.axes.at(0);
  if (begin < 0 || end > ax.n || begin >= end) throw std::out_of_range("slice_first_axis: bad range");
  FieldData out = *this;
  auto& a0 = out.grid.axes[0];
  a0.n = end - begin;
  a0.min = ax.coord(begin);
  a0.max = a0.n > 1 ? ax.coord(end - 1) : a0.min;
  if (ax.periodic) throw std::invalid_argument("slice_first_axis: first axis is periodic");
  const std::size_t block = grid.size() / ax.n;
  for (auto& [name, values] : out.fields) {
    const auto& src = field(name);
    values.assign(src.begin() + begin * block, src.begin() + end * block);
  }
  return out;
}

void save_field_data(const FieldData& fd, const std::string& dir) {
  static_assert(std::endian::native == std::endian::little, "persistence assumes a little-endian host");
  fd.validate();
  fs::create_directories(dir);
  nlohmann::json meta;
  meta["axes"] = nlohmann::json::array();
  for (const auto& a : fd.grid.axes)
    meta["axes"].push_back({{"name", a.name}, {"n", a.n}, {"min", a.min}, {"max", a.max}, {"periodic", a.periodic}});
  meta["fields"] = nlohmann::json::array();
  for (const auto& [name, values] : fd.fields) meta["fields"].push_back(name);
  meta["noise_level"] = fd.noise_level;
  meta["seed"] = fd.seed;
  meta["config"] = fd.config;
  meta["format"] = "f64-le-row-major";
  std::ofstream(fs::path(dir) / "meta.json") << meta.dump(2) << "\n";
  for (const auto& [name, values] : fd.fields) {
    std::ofstream out(fs::path(dir) / (name + ".f64"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("failed writing field " + name);
  }
}

FieldData load_field_data(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "meta.json");
  if (!in) throw std::runtime_error("no meta.json in " + dir);
  nlohmann::json meta = nlohmann::json::parse(in);
  FieldData fd;
  for (const auto& a : meta.at("axes"))
    fd.grid.axes.push_back(GridAxis{a.at("name").get<std::string>(), a.at("n").get<int>(), a.at("min").get<double>(),
                                    a.at("max").get<double>(), a.at("periodic").get<bool>()});
  fd.noise_level = meta.value("noise_level", 0.0);
  fd.seed = meta.value("seed", std::uint64_t{0});
  fd.config = meta.value("config", nlohmann::json::object());
  const std::size_t n = fd.grid.size();
  for (const auto& f : meta.at("fields")) {
    const std::string name = f.get<std::string>();
    const fs::path p = fs::path(dir) / (name + ".f64");
    if (!fs::exists(p) || fs::file_size(p) != n * sizeof(double))
      throw std::runtime_error("field file " + p.string() + " missing or of the wrong size");
    std::vector<double> values(n);
    std::ifstream bin(p, std::ios::binary);
    bin.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double)));
    fd.fields[name] = std::move(values);
  }
  fd.validate();
  return fd;
}

}  // namespace symdisc
