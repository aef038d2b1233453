#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flightrag/flight_store.hpp"
#include "flightrag/llm.hpp"
#include "flightrag/prompting.hpp"
#include "flightrag/query_result.hpp"
#include "flightrag/schema.hpp"

namespace flightrag::graph {

struct Node {
    std::string id;
    std::string label;
    std::map<std::string, Value> properties;
};

struct Edge {
    std::string type;
    std::size_t from = 0;
    std::size_t to = 0;
};

class PropertyGraph {
public:
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<std::size_t>& nodes_with_label(std::string_view label) const;
    const std::vector<std::size_t>& out_edges(std::size_t node) const { return out_[node]; }
    const std::vector<std::size_t>& in_edges(std::size_t node) const { return in_[node]; }
    std::optional<std::size_t> find_node(std::string_view id) const;
    // Property keys seen on nodes of the label (empty set for unknown labels).
    const std::set<std::string>& property_names(std::string_view label) const;

    std::size_t add_node(Node node);
    void add_edge(std::string type, std::size_t from, std::size_t to);

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> out_;
    std::vector<std::vector<std::size_t>> in_;
    std::map<std::string, std::size_t, std::less<>> by_id_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> by_label_;
    std::map<std::string, std::set<std::string>, std::less<>> props_by_label_;
};

inline constexpr std::string_view kNodeLabels[] = {"Flight", "Ramp", "BusGate", "Pier", "Airline"};
inline constexpr std::string_view kEdgeTypes[] = {"AT_RAMP",     "AT_BUS_GATE", "AT_PIER",
                                                  "OPERATED_BY", "CONNECTS_TO", "NEXT_AT_RAMP"};

struct BuildOptions {
    // Skip unresolvable connecting flights (recorded in warnings) instead of throwing.
    bool skip_dangling = false;
};

PropertyGraph build_graph(const FlightStore& store, const BuildOptions& options = {},
                          std::vector<std::string>* warnings = nullptr);

SchemaDescription introspect_schema(const PropertyGraph& graph);

struct QueryAst;

class GraphQuery {
public:
    static GraphQuery parse(std::string_view text);

    const std::string& text() const { return text_; }
    const QueryAst& ast() const { return *ast_; }
    // Re-rendered from the AST; parse(canonical()).canonical() == canonical().
    std::string canonical() const;

private:
    std::string text_;
    std::shared_ptr<const QueryAst> ast_;
};

QueryResult execute_graph(const PropertyGraph& graph, const GraphQuery& query);

struct TextToGraphOptions {
    std::vector<prompting::Example> fewshot;
    std::size_t max_prompt_chars = 0;
};

GraphQuery text_to_graph_query(std::string_view question, const llm::Llm& model,
                               const SchemaDescription& schema,
                               const TextToGraphOptions& options = {});

enum class NextMode { same_airline, same_ramp };

// Brute-force reference: same_airline reads connecting_flight_nr; same_ramp
// scans every flight at the subject's ramp for the smallest strictly later
// expected_on_ramp (ties by flight_uid).
std::optional<std::string> next_flight_oracle(const FlightStore& store,
                                              std::string_view flight_nr, NextMode mode);

// One JSON object per node, then per edge.
std::string export_jsonl(const PropertyGraph& graph);

}  // namespace flightrag::graph
