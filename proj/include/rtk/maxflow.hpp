#pragma once

#include <cstddef>
#include <vector>

namespace rtk {

/// s-t max-flow / min-cut on a graph with real capacities (Dinic's
/// augmenting paths over BFS level graphs). Capacities may be +infinity for
/// hard constraints as long as every s-t path crosses a finite edge.
///
/// After solve(), `in_source_set(v)` reports the side of the minimum cut that
/// node v lies on.
class MaxFlowGraph {
public:
    explicit MaxFlowGraph(int nodes);

    int node_count() const noexcept { return nodes_; }

    /// Adds capacity s->v and v->t.
    void add_terminal_edges(int v, double source_capacity, double sink_capacity);
    /// Adds capacity u->v and v->u.
    void add_edge(int u, int v, double capacity, double reverse_capacity = 0.0);

    double solve();
    bool in_source_set(int v) const;

private:
    struct Arc {
        int to;
        int rev;
        double residual;
    };

    int add_arc(int from, int to, double capacity);
    bool build_levels();
    double blocking_flow();

    int nodes_;
    int source_;
    int sink_;
    std::vector<std::vector<Arc>> adj_;
    std::vector<int> level_;
    std::vector<std::size_t> cursor_;
    std::vector<char> source_side_;
    double terminal_offset_ = 0.0;
    bool solved_ = false;
};

}  // namespace rtk
