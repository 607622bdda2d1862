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
// Serial reference kernels against their OpenMP versions.
//
//   ./build/bench/bench_kernels --benchmark_filter=bilinear

#include <benchmark/benchmark.h>

#include "geochip/kernels.hpp"
#include "geochip/random.hpp"

using namespace geochip;

namespace {

constexpr std::size_t kSide = 512;

Image noise(std::size_t c) {
    Rng rng(1);
    Image img(c, kSide, kSide);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

kernels::SamplePositions shifted() {
    kernels::SamplePositions p;
    p.height = kSide;
    p.width = kSide;
    for (std::size_t r = 0; r < kSide; ++r)
        for (std::size_t c = 0; c < kSide; ++c) {
            p.col.push_back(static_cast<double>(c) * 0.97 + 0.31);
            p.row.push_back(static_cast<double>(r) * 0.97 + 0.57);
        }
    return p;
}

template <bool Parallel>
void BM_bilinear(benchmark::State& state) {
    const Image src = noise(9);
    const ValidityPlane valid(kSide, kSide, 1);
    const auto pos = shifted();
    Image out;
    ValidityPlane ov;
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::resample_bilinear(src, valid, pos, out, ov);
        else
            kernels::serial::resample_bilinear(src, valid, pos, out, ov);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kSide * kSide));
}

template <bool Parallel>
void BM_loss_and_grad(benchmark::State& state) {
    const Image img = noise(9);
    const ValidityPlane valid(kSide, kSide, 1);
    MaskPlane y(kSide, kSide);
    for (std::size_t t = 0; t < y.size(); ++t) y.data[t] = static_cast<std::int32_t>(t % 3 == 0);
    const std::vector<double> w(9, 0.1);
    for (auto _ : state) {
        auto g = Parallel ? kernels::loss_and_grad(img, y, valid, w, 0.0)
                          : kernels::serial::loss_and_grad(img, y, valid, w, 0.0);
        benchmark::DoNotOptimize(g.loss);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kSide * kSide));
}

template <bool Parallel>
void BM_normalize(benchmark::State& state) {
    Image img = noise(9);
    const ValidityPlane valid(kSide, kSide, 1);
    const std::vector<double> means(9, 0.5);
    const std::vector<double> stds(9, 1.0);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::normalize(img, valid, means, stds);
        else
            kernels::serial::normalize(img, valid, means, stds);
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(9 * kSide * kSide));
}

}  // namespace

BENCHMARK(BM_bilinear<false>)->Name("bilinear/serial");
BENCHMARK(BM_bilinear<true>)->Name("bilinear/openmp");
BENCHMARK(BM_loss_and_grad<false>)->Name("loss_and_grad/serial");
BENCHMARK(BM_loss_and_grad<true>)->Name("loss_and_grad/openmp");
BENCHMARK(BM_normalize<false>)->Name("normalize/serial");
BENCHMARK(BM_normalize<true>)->Name("normalize/openmp");

BENCHMARK_MAIN();
