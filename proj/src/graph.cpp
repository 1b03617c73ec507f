#include "awarenet/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace awarenet {

Graph Graph::from_edges(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    Graph g;
    g.n_ = n;

    std::vector<std::pair<std::uint32_t, std::uint32_t>> canon;
    canon.reserve(edges.size());
    for (auto [u, v] : edges) {
        if (u == v) throw std::invalid_argument("Graph::from_edges: self-loop");
        if (u >= n || v >= n) throw std::invalid_argument("Graph::from_edges: node id out of range");
        canon.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(canon.begin(), canon.end());
    canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
    g.m_ = canon.size();

    g.degrees_.assign(n, 0);
    for (auto [u, v] : canon) {
        ++g.degrees_[u];
        ++g.degrees_[v];
    }
    g.offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + g.degrees_[i];
    g.cols_.resize(2 * g.m_);
    std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (auto [u, v] : canon) {
        g.cols_[fill[u]++] = v;
        g.cols_[fill[v]++] = u;
    }
    for (std::size_t i = 0; i < n; ++i)
        std::sort(g.cols_.begin() + g.offsets_[i], g.cols_.begin() + g.offsets_[i + 1]);
    return g;
}

std::uint32_t Graph::max_degree() const {
    std::uint32_t d = 0;
    for (std::uint32_t x : degrees_) d = std::max(d, x);
    return d;
}

bool Graph::has_edge(std::uint32_t u, std::uint32_t v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

bool Graph::connected() const {
    if (n_ <= 1) return true;
    std::vector<std::uint8_t> seen(n_, 0);
    std::vector<std::uint32_t> stack{0};
    seen[0] = 1;
    std::size_t visited = 1;
    while (!stack.empty()) {
        const std::uint32_t u = stack.back();
        stack.pop_back();
        for (std::uint32_t v : neighbors(u)) {
            if (!seen[v]) {
                seen[v] = 1;
                ++visited;
                stack.push_back(v);
            }
        }
    }
    return visited == n_;
}

void Graph::adjacency_multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) acc += x[cols_[k]];
        y[i] = acc;
    }
}

Matrix Graph::dense_adjacency() const {
    Matrix a(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::uint32_t j : neighbors(static_cast<std::uint32_t>(i))) a(i, j) = 1.0;
    return a;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> Graph::edge_list() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    out.reserve(m_);
    for (std::uint32_t u = 0; u < n_; ++u)
        for (std::uint32_t v : neighbors(u))
            if (u < v) out.emplace_back(u, v);
    return out;
}

namespace {

std::uint32_t parse_node_id(std::string_view token, std::size_t line) {
    std::uint32_t value = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw EdgeListParseError("edge list: invalid node id '" + std::string(token) + "' at line " +
                                     std::to_string(line),
                                 line);
    return value;
}

}  // namespace

Graph load_edge_list(std::istream& in) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::uint32_t max_id = 0;
    bool any = false;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

        std::istringstream ls{std::string(line)};
        std::string tok_u, tok_v, extra;
        if (!(ls >> tok_u)) continue;  // blank or comment-only line
        if (!(ls >> tok_v))
            throw EdgeListParseError("edge list: expected two node ids at line " + std::to_string(line_no),
                                     line_no);
        if (ls >> extra)
            throw EdgeListParseError("edge list: trailing token '" + extra + "' at line " +
                                         std::to_string(line_no),
                                     line_no);
        const std::uint32_t u = parse_node_id(tok_u, line_no);
        const std::uint32_t v = parse_node_id(tok_v, line_no);
        if (u == v)
            throw EdgeListParseError("edge list: self-loop at line " + std::to_string(line_no), line_no);
        edges.emplace_back(u, v);
        max_id = std::max({max_id, u, v});
        any = true;
    }
    return Graph::from_edges(any ? static_cast<std::size_t>(max_id) + 1 : 0, edges);
}

Graph load_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list file: " + path);
    return load_edge_list(in);
}

void write_edge_list(const Graph& g, std::ostream& out) {
    for (auto [u, v] : g.edge_list()) out << u << ' ' << v << '\n';
}

void write_edge_list_file(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    write_edge_list(g, out);
}

namespace {

using EdgeVec = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

// 53-bit uniform in [0,1); the generator is pinned to mt19937_64 so seeded
// outputs replay across platforms.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Graph make_complete(std::size_t n) {
    EdgeVec edges;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    return Graph::from_edges(n, edges);
}

Graph make_star(std::size_t n) {
    EdgeVec edges;
    for (std::uint32_t i = 1; i < n; ++i) edges.emplace_back(0, i);
    return Graph::from_edges(n, edges);
}

Graph make_cycle(std::size_t n) {
    if (n < 3) throw std::invalid_argument("generate: cycle requires n >= 3");
    EdgeVec edges;
    for (std::uint32_t i = 0; i < n; ++i) edges.emplace_back(i, static_cast<std::uint32_t>((i + 1) % n));
    return Graph::from_edges(n, edges);
}

Graph make_path(std::size_t n) {
    EdgeVec edges;
    for (std::uint32_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return Graph::from_edges(n, edges);
}

Graph make_erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("generate: erdos_renyi needs p in [0,1]");
    std::mt19937_64 rng(seed);
    EdgeVec edges;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j)
            if (uniform01(rng) < p) edges.emplace_back(i, j);
    return Graph::from_edges(n, edges);
}

// Barabasi-Albert: seed clique on m0+1 nodes, then each new node attaches to
// m0 distinct targets drawn proportionally to degree (endpoint-list trick).
Graph make_preferential_attachment(std::size_t n, std::size_t m0, std::uint64_t seed) {
    if (m0 < 1) throw std::invalid_argument("generate: preferential_attachment needs m0 >= 1");
    const std::size_t core = m0 + 1;
    if (n <= core) return make_complete(n);

    std::mt19937_64 rng(seed);
    EdgeVec edges;
    std::vector<std::uint32_t> endpoints;
    for (std::uint32_t i = 0; i < core; ++i)
        for (std::uint32_t j = i + 1; j < core; ++j) {
            edges.emplace_back(i, j);
            endpoints.push_back(i);
            endpoints.push_back(j);
        }

    for (std::uint32_t v = static_cast<std::uint32_t>(core); v < n; ++v) {
        std::vector<std::uint32_t> targets;
        while (targets.size() < m0) {
            const std::size_t pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(endpoints.size()));
            const std::uint32_t t = endpoints[std::min(pick, endpoints.size() - 1)];
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
        }
        for (std::uint32_t t : targets) {
            edges.emplace_back(t, v);
            endpoints.push_back(t);
            endpoints.push_back(v);
        }
    }
    return Graph::from_edges(n, edges);
}

}  // namespace

Graph generate(const GraphSpec& spec) {
    if (spec.n < 1) throw std::invalid_argument("generate: n must be >= 1");
    switch (spec.kind) {
        case GraphKind::complete: return make_complete(spec.n);
        case GraphKind::star: return make_star(spec.n);
        case GraphKind::cycle: return make_cycle(spec.n);
        case GraphKind::path: return make_path(spec.n);
        case GraphKind::erdos_renyi: return make_erdos_renyi(spec.n, spec.p, spec.seed);
        case GraphKind::preferential_attachment:
            return make_preferential_attachment(spec.n, spec.m0, spec.seed);
    }
    throw std::invalid_argument("generate: unknown graph kind");
}

GraphKind parse_graph_kind(const std::string& name) {
    if (name == "complete") return GraphKind::complete;
    if (name == "star") return GraphKind::star;
    if (name == "cycle") return GraphKind::cycle;
    if (name == "path") return GraphKind::path;
    if (name == "erdos_renyi") return GraphKind::erdos_renyi;
    if (name == "preferential_attachment") return GraphKind::preferential_attachment;
    throw std::invalid_argument("unknown graph kind: " + name);
}

std::string graph_kind_name(GraphKind kind) {
    switch (kind) {
        case GraphKind::complete: return "complete";
        case GraphKind::star: return "star";
        case GraphKind::cycle: return "cycle";
        case GraphKind::path: return "path";
        case GraphKind::erdos_renyi: return "erdos_renyi";
        case GraphKind::preferential_attachment: return "preferential_attachment";
    }
    return "unknown";
}

}  // namespace awarenet
