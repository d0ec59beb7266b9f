/*
 * Copyright (c) the reusedb authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reusedb/common.hpp"

namespace reusedb {

/// All column types are fixed width so tuple widths are well defined.
enum class ColumnType : uint8_t { Int64, Float64, Date32, FixedStr };

inline const char* column_type_name(ColumnType t) {
    switch (t) {
        case ColumnType::Int64: return "int64";
        case ColumnType::Float64: return "float64";
        case ColumnType::Date32: return "date32";
        default: return "str";
    }
}

struct ColumnDef {
    std::string name;
    ColumnType type = ColumnType::Int64;
    uint32_t width = 8;  // bytes; meaningful for FixedStr, fixed otherwise

    uint32_t byte_width() const {
        switch (type) {
            case ColumnType::Int64: return 8;
            case ColumnType::Float64: return 8;
            case ColumnType::Date32: return 4;
            default: return width;
        }
    }
};

struct ForeignKey {
    std::string local_column;
    std::string remote_table;
    std::string remote_column;
};

struct Schema {
    std::string table;
    std::vector<ColumnDef> columns;
    std::string primary_key;
    std::vector<ForeignKey> foreign_keys;

    int column_index(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i) {
            if (columns[i].name == name) return int(i);
        }
        return -1;
    }

    const ColumnDef& column(const std::string& name) const {
        int i = column_index(name);
        if (i < 0) throw SchemaError("unknown column " + table + "." + name);
        return columns[size_t(i)];
    }

    void validate() const {
        for (size_t i = 0; i < columns.size(); ++i) {
            for (size_t j = i + 1; j < columns.size(); ++j) {
                if (columns[i].name == columns[j].name)
                    throw SchemaError("duplicate column " + columns[i].name + " in " + table);
            }
        }
        if (!primary_key.empty() && column_index(primary_key) < 0)
            throw SchemaError("primary key " + primary_key + " not a column of " + table);
    }
};

}  // namespace reusedb
