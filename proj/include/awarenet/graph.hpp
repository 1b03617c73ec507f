#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "awarenet/matrix.hpp"
#include "awarenet/spectra.hpp"

namespace awarenet {

/// Edge-list parse failure; carries the 1-based offending line.
class EdgeListParseError : public std::runtime_error {
public:
    EdgeListParseError(std::string msg, std::size_t line)
        : std::runtime_error(std::move(msg)), line_number(line) {}
    std::size_t line_number;
};

/// Immutable undirected simple graph in CSR form. Both edge orientations are
/// stored; column indices are strictly increasing within each row. Safe for
/// concurrent shared reads after construction.
class Graph {
public:
    Graph() = default;  // empty graph

    /// Builds from an unordered pair list over ids 0..n-1. Duplicate edges
    /// collapse; self-loops are rejected.
    static Graph from_edges(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

    std::size_t num_nodes() const { return n_; }
    std::size_t num_edges() const { return m_; }

    std::span<const std::uint32_t> neighbors(std::uint32_t v) const {
        return {cols_.data() + offsets_[v], cols_.data() + offsets_[v + 1]};
    }
    std::uint32_t degree(std::uint32_t v) const { return degrees_[v]; }
    const std::vector<std::uint32_t>& degrees() const { return degrees_; }
    std::uint32_t max_degree() const;
    double average_degree() const { return n_ == 0 ? 0.0 : 2.0 * static_cast<double>(m_) / static_cast<double>(n_); }

    bool has_edge(std::uint32_t u, std::uint32_t v) const;
    bool connected() const;

    /// y = A x via CSR.
    void adjacency_multiply(std::span<const double> x, std::span<double> y) const;
    Matrix dense_adjacency() const;

    /// Unique edges (u < v) in sorted order.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_list() const;

private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> cols_;
    std::vector<std::uint32_t> degrees_;
};

/// Parses whitespace-separated "u v" lines; '#' starts a comment, blank lines
/// are skipped. Node count is 1 + max id. Throws EdgeListParseError with the
/// line number on self-loops or malformed tokens.
Graph load_edge_list(std::istream& in);
Graph load_edge_list_file(const std::string& path);

/// Canonical edge-list text: one "u v" line per unique edge, sorted, so
/// re-exporting a loaded graph is bit-identical.
void write_edge_list(const Graph& g, std::ostream& out);
void write_edge_list_file(const Graph& g, const std::string& path);

enum class GraphKind { complete, star, cycle, path, erdos_renyi, preferential_attachment };

/// Generator request. `p` applies to erdos_renyi, `m0` (edges per new node)
/// to preferential_attachment; random kinds draw only from the seeded
/// generator, so output is deterministic in (kind, n, seed).
struct GraphSpec {
    GraphKind kind = GraphKind::path;
    std::size_t n = 1;
    double p = 0.0;
    std::size_t m0 = 1;
    std::uint64_t seed = 0;
};

Graph generate(const GraphSpec& spec);

GraphKind parse_graph_kind(const std::string& name);
std::string graph_kind_name(GraphKind kind);

}  // namespace awarenet
