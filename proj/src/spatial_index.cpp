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
#include "geochip/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geochip {

BoxIndex::BoxIndex(std::vector<BoundingBox> boxes) : boxes_(std::move(boxes)) {
    if (boxes_.size() >= kRTreeThreshold) build_tree();
}

// Sort-Tile-Recursive packing, one level at a time.
void BoxIndex::build_tree() {
    auto pack = [&](std::vector<std::size_t> items, bool leaf_level,
                    auto box_of) -> std::vector<std::size_t> {
        const std::size_t n = items.size();
        const std::size_t pages = (n + kNodeCapacity - 1) / kNodeCapacity;
        const auto slices = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(pages))));
        const std::size_t per_slice = slices * kNodeCapacity;
        auto cx = [&](std::size_t i) {
            const BoundingBox& b = box_of(i);
            return 0.5 * (b.minx + b.maxx);
        };
        auto cy = [&](std::size_t i) {
            const BoundingBox& b = box_of(i);
            return 0.5 * (b.miny + b.maxy);
        };
        std::stable_sort(items.begin(), items.end(),
                         [&](std::size_t a, std::size_t b) { return cx(a) < cx(b); });
        std::vector<std::size_t> parents;
        for (std::size_t s = 0; s < n; s += per_slice) {
            const auto first = items.begin() + static_cast<std::ptrdiff_t>(s);
            const auto last = items.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + per_slice));
            std::stable_sort(first, last, [&](std::size_t a, std::size_t b) { return cy(a) < cy(b); });
            for (auto it = first; it < last; it += static_cast<std::ptrdiff_t>(
                                                 std::min<std::size_t>(kNodeCapacity, last - it))) {
                Node node;
                node.leaf = leaf_level;
                const auto stop = it + static_cast<std::ptrdiff_t>(
                                           std::min<std::size_t>(kNodeCapacity, last - it));
                node.children.assign(it, stop);
                node.box = box_of(node.children.front());
                for (std::size_t c : node.children) node.box = hull(node.box, box_of(c));
                nodes_.push_back(std::move(node));
                parents.push_back(nodes_.size() - 1);
            }
        }
        return parents;
    };

    std::vector<std::size_t> entries(boxes_.size());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    std::vector<std::size_t> level =
        pack(std::move(entries), true, [&](std::size_t i) -> const BoundingBox& { return boxes_[i]; });
    while (level.size() > 1)
        level = pack(std::move(level), false,
                     [&](std::size_t i) -> const BoundingBox& { return nodes_[i].box; });
    root_ = level.front();
}

std::vector<std::size_t> BoxIndex::query(const BoundingBox& q) const {
    std::vector<std::size_t> out;
    if (!uses_tree()) {
        for (std::size_t i = 0; i < boxes_.size(); ++i)
            if (boxes_[i].intersects(q)) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> stack{root_};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (!node.box.intersects(q)) continue;
        for (std::size_t c : node.children) {
            if (node.leaf) {
                if (boxes_[c].intersects(q)) out.push_back(c);
            } else {
                stack.push_back(c);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace geochip
