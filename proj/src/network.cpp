#include "resmix/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "resmix/errors.hpp"

namespace resmix {

using json = nlohmann::json;

double Network::total_rate() const {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) total += c(i, j);
    total += kappa[i];
  }
  return total;
}

bool same_structure(const Network& a, const Network& b) {
  return a.n == b.n && a.cond == b.cond && a.kappa == b.kappa && a.rho == b.rho;
}

void validate(const Network& net) {
  const std::size_t n = net.n;
  if (n == 0) throw Error(Errc::InvalidArgument, "network has no vertices");
  if (net.cond.size() != n * n) throw Error(Errc::InvalidArgument, "conductance array is not n x n");
  if (net.kappa.size() != n) throw Error(Errc::InvalidArgument, "kappa must have n entries");
  if (!net.labels.empty() && net.labels.size() != n)
    throw Error(Errc::InvalidArgument, "labels must be empty or have n entries");
  if (!std::isfinite(net.rho) || net.rho <= 0.0 || net.rho >= 1.0)
    throw Error(Errc::BadDensity, "rho must lie in (0,1), got " + std::to_string(net.rho));

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(net.kappa[i])) throw Error(Errc::NonFinite, "kappa(" + std::to_string(i) + ")");
    if (net.kappa[i] < 0.0) throw Error(Errc::NegativeRate, "kappa(" + std::to_string(i) + ") < 0");
    for (std::size_t j = 0; j < n; ++j) {
      const double cij = net.c(i, j);
      if (!std::isfinite(cij))
        throw Error(Errc::NonFinite, "c(" + std::to_string(i) + "," + std::to_string(j) + ")");
      if (cij < 0.0)
        throw Error(Errc::NegativeRate, "c(" + std::to_string(i) + "," + std::to_string(j) + ") < 0");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (net.c(i, i) != 0.0)
      throw Error(Errc::InvalidArgument, "self-loop conductance at vertex " + std::to_string(i));
    for (std::size_t j = i + 1; j < n; ++j) {
      if (net.c(i, j) != net.c(j, i))
        throw Error(Errc::Asymmetric, "c(" + std::to_string(i) + "," + std::to_string(j) + ") != c(" +
                                          std::to_string(j) + "," + std::to_string(i) + ")");
    }
  }

  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < n; ++j) {
      if (!seen[j] && net.c(i, j) > 0.0) {
        seen[j] = 1;
        ++reached;
        stack.push_back(j);
      }
    }
  }
  if (reached != n)
    throw Error(Errc::Disconnected, std::to_string(n - reached) + " vertices unreachable from vertex 0");

  if (std::none_of(net.kappa.begin(), net.kappa.end(), [](double k) { return k > 0.0; }))
    throw Error(Errc::EmptyBoundary, "all external rates are zero");
}

Network make_network(std::size_t n, std::vector<double> cond, std::vector<double> kappa, double rho,
                     std::vector<std::string> labels) {
  if (labels.empty()) {
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  }
  Network net{n, std::move(cond), std::move(kappa), rho, std::move(labels)};
  validate(net);
  return net;
}

Network induced_network(const std::vector<std::vector<std::size_t>>& ambient,
                        std::span<const std::size_t> subset, double rho) {
  const std::size_t n = subset.size();
  std::map<std::size_t, std::size_t> local;
  for (std::size_t k = 0; k < n; ++k) {
    if (subset[k] >= ambient.size())
      throw Error(Errc::InvalidArgument, "subset vertex " + std::to_string(subset[k]) + " outside universe");
    if (!local.emplace(subset[k], k).second)
      throw Error(Errc::InvalidArgument, "duplicate subset vertex " + std::to_string(subset[k]));
  }

  std::vector<double> cond(n * n, 0.0);
  std::vector<double> kappa(n, 0.0);
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    labels.push_back(std::to_string(subset[k]));
    for (std::size_t nb : ambient[subset[k]]) {
      if (nb == subset[k]) continue;
      auto it = local.find(nb);
      if (it == local.end()) {
        kappa[k] += 1.0;
      } else {
        cond[k * n + it->second] = 1.0;
        cond[it->second * n + k] = 1.0;
      }
    }
  }
  return make_network(n, std::move(cond), std::move(kappa), rho, std::move(labels));
}

namespace {

std::vector<Boundary> broadcast_boundary(std::span<const std::size_t> dims, std::span<const Boundary> boundary) {
  if (dims.empty()) throw Error(Errc::InvalidArgument, "box needs at least one axis");
  for (std::size_t d : dims)
    if (d == 0) throw Error(Errc::InvalidArgument, "box side lengths must be >= 1");
  if (boundary.size() == 1) return std::vector<Boundary>(dims.size(), boundary[0]);
  if (boundary.size() != dims.size())
    throw Error(Errc::InvalidArgument, "boundary list must have one tag per axis or a single tag");
  return {boundary.begin(), boundary.end()};
}

std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::vector<std::size_t> box_coordinates(std::size_t index, std::span<const std::size_t> dims) {
  std::vector<std::size_t> coords(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    coords[k] = index % dims[k] + 1;
    index /= dims[k];
  }
  return coords;
}

Network build_box(std::span<const std::size_t> dims, std::span<const Boundary> boundary, double rho) {
  const auto bnd = broadcast_boundary(dims, boundary);
  const std::size_t n = product(dims);
  const std::size_t d = dims.size();

  std::vector<std::size_t> stride(d, 1);
  for (std::size_t k = d - 1; k-- > 0;) stride[k] = stride[k + 1] * dims[k + 1];

  std::vector<double> cond(n * n, 0.0);
  std::vector<double> kappa(n, 0.0);
  std::vector<std::string> labels(n);
  for (std::size_t v = 0; v < n; ++v) {
    const auto coords = box_coordinates(v, dims);
    std::string label;
    for (std::size_t k = 0; k < d; ++k) {
      if (k) label += ',';
      label += std::to_string(coords[k]);
      if (coords[k] < dims[k]) {
        cond[v * n + v + stride[k]] = 1.0;
        cond[(v + stride[k]) * n + v] = 1.0;
      }
      if (coords[k] == dims[k]) kappa[v] += 1.0;
      if (bnd[k] == Boundary::Open && coords[k] == 1) kappa[v] += 1.0;
    }
    labels[v] = std::move(label);
  }
  return make_network(n, std::move(cond), std::move(kappa), rho, std::move(labels));
}

AmbientWindow ambient_window(std::span<const std::size_t> dims, std::span<const Boundary> boundary) {
  const auto bnd = broadcast_boundary(dims, boundary);
  const std::size_t d = dims.size();
  // Window coordinate w along axis k maps to lattice coordinate w + offset[k].
  std::vector<std::size_t> side(d), offset(d);
  for (std::size_t k = 0; k < d; ++k) {
    offset[k] = bnd[k] == Boundary::Open ? 0 : 1;
    side[k] = bnd[k] == Boundary::Open ? dims[k] + 2 : dims[k] + 1;
  }
  const std::size_t total = product(side);
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t k = d - 1; k-- > 0;) stride[k] = stride[k + 1] * side[k + 1];

  AmbientWindow win;
  win.adjacency.resize(total);
  for (std::size_t w = 0; w < total; ++w) {
    std::size_t rem = w;
    std::vector<std::size_t> coords(d);
    for (std::size_t k = d; k-- > 0;) {
      coords[k] = rem % side[k];
      rem /= side[k];
    }
    for (std::size_t k = 0; k < d; ++k) {
      if (coords[k] > 0) win.adjacency[w].push_back(w - stride[k]);
      if (coords[k] + 1 < side[k]) win.adjacency[w].push_back(w + stride[k]);
    }
  }
  // Box vertices in row-major order of the box itself.
  const std::size_t n = product(dims);
  for (std::size_t v = 0; v < n; ++v) {
    const auto coords = box_coordinates(v, dims);
    std::size_t w = 0;
    for (std::size_t k = 0; k < d; ++k) w += (coords[k] - offset[k]) * stride[k];
    win.box_vertices.push_back(w);
  }
  return win;
}

// ---------------------------------------------------------------------------
// File format

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& msg) {
  throw Error(Errc::ParseError, field + ": " + msg);
}

double number_at(const json& v, const std::string& field) {
  if (!v.is_number()) parse_fail(field, "expected a number");
  return v.get<double>();
}

std::size_t resolve_vertex(const json& v, const std::map<std::string, std::size_t>& by_label, std::size_t n,
                           const std::string& field) {
  if (v.is_number_integer()) {
    const auto idx = v.get<long long>();
    if (idx < 0 || static_cast<std::size_t>(idx) >= n) parse_fail(field, "vertex index out of range");
    return static_cast<std::size_t>(idx);
  }
  if (v.is_string()) {
    auto it = by_label.find(v.get<std::string>());
    if (it == by_label.end()) parse_fail(field, "unknown vertex label '" + v.get<std::string>() + "'");
    return it->second;
  }
  parse_fail(field, "expected a vertex index or label");
}

}  // namespace

Network load_network(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw Error(Errc::ParseError, "line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) parse_fail("<root>", "expected a JSON object");

  std::vector<std::string> labels;
  if (!doc.contains("vertices")) parse_fail("vertices", "missing");
  const json& vs = doc["vertices"];
  if (vs.is_number_integer()) {
    const auto count = vs.get<long long>();
    if (count < 1) parse_fail("vertices", "count must be >= 1");
    for (long long i = 0; i < count; ++i) labels.push_back(std::to_string(i));
  } else if (vs.is_array()) {
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const auto field = "vertices[" + std::to_string(i) + "]";
      if (vs[i].is_string()) labels.push_back(vs[i].get<std::string>());
      else if (vs[i].is_number_integer()) labels.push_back(std::to_string(vs[i].get<long long>()));
      else parse_fail(field, "labels must be strings or integers");
    }
    if (labels.empty()) parse_fail("vertices", "empty label list");
  } else {
    parse_fail("vertices", "expected an integer or a list of labels");
  }
  const std::size_t n = labels.size();
  std::map<std::string, std::size_t> by_label;
  for (std::size_t i = 0; i < n; ++i)
    if (!by_label.emplace(labels[i], i).second) parse_fail("vertices", "duplicate label '" + labels[i] + "'");

  std::vector<double> cond(n * n, 0.0);
  std::vector<char> set(n * n, 0);
  if (doc.contains("edges")) {
    const json& es = doc["edges"];
    if (!es.is_array()) parse_fail("edges", "expected a list");
    for (std::size_t e = 0; e < es.size(); ++e) {
      const auto field = "edges[" + std::to_string(e) + "]";
      if (!es[e].is_array() || es[e].size() != 3) parse_fail(field, "expected [i, j, c]");
      const auto i = resolve_vertex(es[e][0], by_label, n, field + "[0]");
      const auto j = resolve_vertex(es[e][1], by_label, n, field + "[1]");
      const double c = number_at(es[e][2], field + "[2]");
      if (i == j) throw Error(Errc::InvalidArgument, field + ": self-loop");
      if (set[i * n + j] && cond[i * n + j] != c)
        throw Error(Errc::Asymmetric, field + ": conflicting duplicate entry for this pair");
      cond[i * n + j] = cond[j * n + i] = c;
      set[i * n + j] = set[j * n + i] = 1;
    }
  }

  std::vector<double> kappa(n, 0.0);
  if (doc.contains("kappa")) {
    const json& ks = doc["kappa"];
    if (ks.is_array()) {
      if (ks.size() != n) parse_fail("kappa", "list must have one entry per vertex");
      for (std::size_t i = 0; i < n; ++i) kappa[i] = number_at(ks[i], "kappa[" + std::to_string(i) + "]");
    } else if (ks.is_object()) {
      for (const auto& [key, value] : ks.items()) {
        auto it = by_label.find(key);
        if (it == by_label.end()) parse_fail("kappa." + key, "unknown vertex label");
        kappa[it->second] = number_at(value, "kappa." + key);
      }
    } else {
      parse_fail("kappa", "expected an object or a list");
    }
  }

  double rho = 0.5;
  if (doc.contains("rho")) rho = number_at(doc["rho"], "rho");

  return make_network(n, std::move(cond), std::move(kappa), rho, std::move(labels));
}

std::string save_network(const Network& net) {
  json doc;
  doc["vertices"] = net.labels;
  json edges = json::array();
  for (std::size_t i = 0; i < net.n; ++i)
    for (std::size_t j = i + 1; j < net.n; ++j)
      if (net.c(i, j) != 0.0) edges.push_back(json::array({i, j, net.c(i, j)}));
  doc["edges"] = std::move(edges);
  doc["kappa"] = net.kappa;
  doc["rho"] = net.rho;
  return doc.dump(2) + "\n";
}

Network load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open network file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_network(buf.str());
}

Network random_network(std::mt19937_64& rng, std::size_t n, double rho) {
  std::uniform_real_distribution<double> cdist(0.2, 2.0);
  std::uniform_real_distribution<double> kdist(0.1, 2.0);
  std::bernoulli_distribution extra(0.3);
  std::bernoulli_distribution boundary(0.5);

  std::vector<double> cond(n * n, 0.0);
  for (std::size_t v = 1; v < n; ++v) {
    const std::size_t u = std::uniform_int_distribution<std::size_t>(0, v - 1)(rng);
    cond[u * n + v] = cond[v * n + u] = cdist(rng);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (cond[i * n + j] == 0.0 && extra(rng)) cond[i * n + j] = cond[j * n + i] = cdist(rng);

  std::vector<double> kappa(n, 0.0);
  for (auto& k : kappa)
    if (boundary(rng)) k = kdist(rng);
  if (std::none_of(kappa.begin(), kappa.end(), [](double k) { return k > 0.0; }))
    kappa[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = kdist(rng);

  return make_network(n, std::move(cond), std::move(kappa), rho);
}

Boundary parse_boundary(std::string_view token) {
  if (token == "open") return Boundary::Open;
  if (token == "semiopen" || token == "semi-open" || token == "semi") return Boundary::SemiOpen;
  throw Error(Errc::InvalidArgument, "unknown boundary '" + std::string(token) + "'");
}

std::string_view to_string(Boundary b) { return b == Boundary::Open ? "open" : "semiopen"; }

}  // namespace resmix
