#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace resmix {

/// Per-axis boundary of a lattice box: Open boxes are cut out of Z, SemiOpen
/// boxes out of N = {1, 2, ...} (reservoir only at the upper face).
enum class Boundary { Open, SemiOpen };

/// A finite network (V, c, kappa) together with its reservoir density rho.
///
/// Vertices are indexed 0..n-1. `cond` is the row-major n x n conductance
/// array (symmetric, zero diagonal) and `kappa` the external rates. Labels are
/// presentation metadata carried through the file format.
struct Network {
  std::size_t n = 0;
  std::vector<double> cond;
  std::vector<double> kappa;
  double rho = 0.5;
  std::vector<std::string> labels;

  double c(std::size_t i, std::size_t j) const { return cond[i * n + j]; }

  double rho_star() const { return rho < 1.0 - rho ? rho : 1.0 - rho; }

  /// The extremal start x_star is all-ones when rho <= 1/2, all-zeros otherwise.
  bool x_star_is_ones() const { return rho <= 0.5; }

  /// Sum over unordered pairs of c(i,j) plus sum of kappa(i).
  double total_rate() const;

  friend bool operator==(const Network&, const Network&) = default;
};

/// Equality of (n, cond, kappa, rho), ignoring labels.
bool same_structure(const Network& a, const Network& b);

/// Throws resmix::Error (Disconnected, EmptyBoundary, Asymmetric, BadDensity,
/// NegativeRate, NonFinite, InvalidArgument) unless every invariant holds.
void validate(const Network& net);

/// Assembles and validates a network; labels default to "0".."n-1".
Network make_network(std::size_t n, std::vector<double> cond, std::vector<double> kappa,
                     double rho, std::vector<std::string> labels = {});

/// Network induced by `subset` in an ambient graph given as neighbor lists.
/// Internal ambient edges get conductance 1; kappa(i) counts the ambient
/// neighbors of i outside the subset. Vertex k of the result is subset[k].
Network induced_network(const std::vector<std::vector<std::size_t>>& ambient,
                        std::span<const std::size_t> subset, double rho);

/// Box [n_1] x ... x [n_d] with unit conductances, vertices in row-major order
/// (last axis fastest). `boundary` holds one tag per axis or a single tag that
/// is broadcast to all axes.
Network build_box(std::span<const std::size_t> dims, std::span<const Boundary> boundary,
                  double rho);

/// Row-major tuple of a box vertex, 1-based per axis.
std::vector<std::size_t> box_coordinates(std::size_t index, std::span<const std::size_t> dims);

/// Neighbor lists of the ambient lattice window that contains `dims` with a
/// one-site margin on every side (Open axes) or on the upper side (SemiOpen
/// axes), plus the indices of the box vertices inside that window.
struct AmbientWindow {
  std::vector<std::vector<std::size_t>> adjacency;
  std::vector<std::size_t> box_vertices;
};
AmbientWindow ambient_window(std::span<const std::size_t> dims, std::span<const Boundary> boundary);

/// JSON network document:
/// {"vertices": <int or list of labels>, "edges": [[i, j, c], ...],
///  "kappa": {"label": value, ...} or [values], "rho": float}
/// Edge endpoints are indices (integers) or labels (strings). Each undirected
/// edge may appear once; the loader mirrors it. Omitted kappa entries are 0 and
/// an omitted rho is 0.5.
Network load_network(std::string_view text);
std::string save_network(const Network& net);
Network load_network_file(const std::string& path);

/// Random connected network for test batteries: random spanning tree plus
/// extra edges, conductances in [0.2, 2], at least one positive kappa.
Network random_network(std::mt19937_64& rng, std::size_t n, double rho);

Boundary parse_boundary(std::string_view token);
std::string_view to_string(Boundary b);

}  // namespace resmix
