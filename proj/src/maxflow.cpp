#include "rtk/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "rtk/error.hpp"

namespace rtk {

namespace {
constexpr double kEps = 1e-12;
}

MaxFlowGraph::MaxFlowGraph(int nodes)
    : nodes_(nodes), source_(nodes), sink_(nodes + 1), adj_(static_cast<std::size_t>(nodes) + 2) {
    if (nodes < 0) {
        throw ArgumentError("MaxFlowGraph: negative node count");
    }
}

int MaxFlowGraph::add_arc(int from, int to, double capacity) {
    auto& a = adj_[static_cast<std::size_t>(from)];
    auto& b = adj_[static_cast<std::size_t>(to)];
    a.push_back({to, static_cast<int>(b.size()), capacity});
    b.push_back({from, static_cast<int>(a.size()) - 1, 0.0});
    return static_cast<int>(a.size()) - 1;
}

void MaxFlowGraph::add_terminal_edges(int v, double source_capacity, double sink_capacity) {
    if (v < 0 || v >= nodes_) {
        throw BoundsError("MaxFlowGraph: node out of range");
    }
    // A node joined to both terminals carries min(cs, ct) unconditionally.
    const double common = std::min(source_capacity, sink_capacity);
    source_capacity -= common;
    sink_capacity -= common;
    terminal_offset_ += common;
    if (source_capacity > 0.0) {
        add_arc(source_, v, source_capacity);
    }
    if (sink_capacity > 0.0) {
        add_arc(v, sink_, sink_capacity);
    }
}

void MaxFlowGraph::add_edge(int u, int v, double capacity, double reverse_capacity) {
    if (u < 0 || u >= nodes_ || v < 0 || v >= nodes_) {
        throw BoundsError("MaxFlowGraph: node out of range");
    }
    if (capacity < 0.0 || reverse_capacity < 0.0) {
        throw ArgumentError("MaxFlowGraph: negative capacity");
    }
    if (capacity <= 0.0 && reverse_capacity <= 0.0) {
        return;
    }
    const int idx = add_arc(u, v, capacity);
    auto& arc = adj_[static_cast<std::size_t>(u)][static_cast<std::size_t>(idx)];
    adj_[static_cast<std::size_t>(v)][static_cast<std::size_t>(arc.rev)].residual = reverse_capacity;
}

bool MaxFlowGraph::build_levels() {
    level_.assign(adj_.size(), -1);
    std::queue<int> q;
    level_[static_cast<std::size_t>(source_)] = 0;
    q.push(source_);
    while (!q.empty()) {
        const int v = q.front();
        q.pop();
        for (const auto& arc : adj_[static_cast<std::size_t>(v)]) {
            if (arc.residual > kEps && level_[static_cast<std::size_t>(arc.to)] < 0) {
                level_[static_cast<std::size_t>(arc.to)] = level_[static_cast<std::size_t>(v)] + 1;
                q.push(arc.to);
            }
        }
    }
    return level_[static_cast<std::size_t>(sink_)] >= 0;
}

// One blocking flow on the current level graph, searched iteratively so long
// augmenting paths cannot exhaust the call stack.
double MaxFlowGraph::blocking_flow() {
    double pushed_total = 0.0;
    std::vector<std::pair<int, int>> path;  // (node, arc index)
    int v = source_;
    while (true) {
        if (v == sink_) {
            double bottleneck = std::numeric_limits<double>::infinity();
            for (const auto& [u, ai] : path) {
                bottleneck = std::min(bottleneck, adj_[static_cast<std::size_t>(u)][static_cast<std::size_t>(ai)].residual);
            }
            std::size_t first_saturated = path.size();
            for (std::size_t k = 0; k < path.size(); ++k) {
                const auto [u, ai] = path[k];
                auto& arc = adj_[static_cast<std::size_t>(u)][static_cast<std::size_t>(ai)];
                arc.residual -= bottleneck;
                adj_[static_cast<std::size_t>(arc.to)][static_cast<std::size_t>(arc.rev)].residual += bottleneck;
                if (arc.residual <= kEps && first_saturated == path.size()) {
                    first_saturated = k;
                }
            }
            pushed_total += bottleneck;
            // Retreat to the tail of the first saturated arc.
            path.resize(first_saturated);
            v = path.empty() ? source_ : adj_[static_cast<std::size_t>(path.back().first)]
                                              [static_cast<std::size_t>(path.back().second)].to;
            continue;
        }
        auto& arcs = adj_[static_cast<std::size_t>(v)];
        auto& cur = cursor_[static_cast<std::size_t>(v)];
        bool advanced = false;
        while (cur < arcs.size()) {
            const auto& arc = arcs[cur];
            if (arc.residual > kEps &&
                level_[static_cast<std::size_t>(arc.to)] == level_[static_cast<std::size_t>(v)] + 1) {
                path.emplace_back(v, static_cast<int>(cur));
                v = arc.to;
                advanced = true;
                break;
            }
            ++cur;
        }
        if (advanced) {
            continue;
        }
        // Dead end: drop v from the level graph and retreat.
        level_[static_cast<std::size_t>(v)] = -1;
        if (path.empty()) {
            break;
        }
        v = path.back().first;
        path.pop_back();
        ++cursor_[static_cast<std::size_t>(v)];
    }
    return pushed_total;
}

double MaxFlowGraph::solve() {
    double flow = 0.0;
    while (build_levels()) {
        cursor_.assign(adj_.size(), 0);
        flow += blocking_flow();
    }
    source_side_.assign(adj_.size(), 0);
    std::queue<int> q;
    source_side_[static_cast<std::size_t>(source_)] = 1;
    q.push(source_);
    while (!q.empty()) {
        const int v = q.front();
        q.pop();
        for (const auto& arc : adj_[static_cast<std::size_t>(v)]) {
            if (arc.residual > kEps && source_side_[static_cast<std::size_t>(arc.to)] == 0) {
                source_side_[static_cast<std::size_t>(arc.to)] = 1;
                q.push(arc.to);
            }
        }
    }
    solved_ = true;
    return flow + terminal_offset_;
}

bool MaxFlowGraph::in_source_set(int v) const {
    if (!solved_) {
        throw StateError("MaxFlowGraph: solve() has not run");
    }
    return source_side_[static_cast<std::size_t>(v)] != 0;
}

}  // namespace rtk
