/*
 * Copyright (c) 2026, The geochip Authors.
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

#include <cstddef>
#include <vector>

#include "geochip/geodesy.hpp"

namespace geochip {

/// Static index over a list of boxes. Below kRTreeThreshold entries queries
/// scan the list; at or above it an STR-packed R-tree with node capacity
/// kNodeCapacity is built. Query results are entry indices in ascending order
/// either way, so callers can rely on list order (union precedence).
class BoxIndex {
public:
    static constexpr std::size_t kRTreeThreshold = 1000;
    static constexpr std::size_t kNodeCapacity = 16;

    BoxIndex() = default;
    explicit BoxIndex(std::vector<BoundingBox> boxes);

    std::size_t size() const noexcept { return boxes_.size(); }
    bool uses_tree() const noexcept { return !nodes_.empty(); }

    /// Indices of boxes with positive-area overlap with q.
    std::vector<std::size_t> query(const BoundingBox& q) const;

private:
    struct Node {
        BoundingBox box;
        bool leaf = false;
        std::vector<std::size_t> children;  // node ids, or entry ids when leaf
    };

    void build_tree();

    std::vector<BoundingBox> boxes_;
    std::vector<Node> nodes_;
    std::size_t root_ = 0;
};

}  // namespace geochip
