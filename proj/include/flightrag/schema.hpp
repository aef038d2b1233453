#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace flightrag {

struct PropertySchema {
    std::string name;
    std::string type;
    std::size_t count = 0;  // rows or nodes carrying the property
    bool primary_key = false;
    std::string references;  // "table(column)" for foreign keys
    std::string description;
};

// A table (relational view) or a node label (graph view).
struct EntitySchema {
    std::string name;
    std::size_t count = 0;
    std::vector<PropertySchema> properties;
};

struct RelationshipSchema {
    std::string type;
    std::string from;
    std::string to;
    std::size_t count = 0;
};

enum class SchemaKind { sql, graph };

struct SchemaDescription {
    SchemaKind kind = SchemaKind::sql;
    std::vector<EntitySchema> entities;
    std::vector<RelationshipSchema> relationships;
};

}  // namespace flightrag
