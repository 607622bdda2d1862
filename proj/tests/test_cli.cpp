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
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

#include <sys/wait.h>

#include <doctest.h>
#include <json.hpp>

#include "support.hpp"

using nlohmann::json;
using geochip::testing::TempDir;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

Run cli(const TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = fmt::format("GEOCHIP_LOG=warn '{}' {} >'{}' 2>'{}'", GEOCHIP_CLI, args,
                                        out.string(), err.string());
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

}  // namespace

TEST_CASE("help, version and usage errors") {
    TempDir dir;
    CHECK(cli(dir, "--help").code == 0);
    const Run v = cli(dir, "--version");
    CHECK(v.code == 0);
    CHECK(v.out.find("0.1.0") != std::string::npos);
    CHECK(cli(dir, "").code == 2);
    CHECK(cli(dir, "frobnicate").code == 2);
    CHECK(cli(dir, "synth --tiles 0 --out x").code == 2);
    CHECK(cli(dir, "stats").code == 2);
}

TEST_CASE("module errors exit 1 with a JSON error line") {
    TempDir dir;
    const Run r = cli(dir, fmt::format("index --manifest '{}'", (dir / "missing.json").string()));
    CHECK(r.code == 1);
    const json e = json::parse(r.err.substr(r.err.rfind('{', r.err.rfind("\"error\""))));
    CHECK(e["error"] == "IoError");

    const Run s = cli(dir, fmt::format("predict --scene '{}' --out '{}'", (dir / "none.tif").string(),
                                           (dir / "p.tif").string()));
    CHECK(s.code == 1);
    CHECK(s.err.find("\"error\"") != std::string::npos);
}

TEST_CASE("small pipeline end to end, deterministic") {
    TempDir dir;
    const auto corpus = dir / "corpus";
    const auto corpus2 = dir / "corpus2";
    REQUIRE(cli(dir, fmt::format("synth --out '{}' --tiles 2 --tile-px 96 --seed 5", corpus.string())).code == 0);
    REQUIRE(cli(dir, fmt::format("synth --out '{}' --tiles 2 --tile-px 96 --seed 5", corpus2.string())).code == 0);
    for (const char* f : {"tile_00_image.tif", "tile_01_mask.tif", "manifest.json"})
        CHECK(slurp(corpus / f) == slurp(corpus2 / f));
    const std::string manifest = (corpus / "manifest.json").string();

    const Run idx = cli(dir, fmt::format("index --manifest '{}'", manifest));
    REQUIRE(idx.code == 0);
    const json ij = json::parse(idx.out);
    CHECK(ij["version"] == 1);

    const auto stats = (dir / "stats.json").string();
    REQUIRE(cli(dir, fmt::format("stats --manifest '{}' --split 1 --chip 32 --length 8 --out '{}'", manifest,
                                     stats)).code == 0);
    const json sj = json::parse(slurp(stats));
    CHECK(sj["channels"].size() == 6);

    const std::string train = fmt::format(
        "train --manifest '{}' --stats '{}' --split 1 --chip 32 --epochs 2 --chips-per-epoch 8 --batch 4 --out ",
        manifest, stats);
    REQUIRE(cli(dir, train + "'" + (dir / "m1.json").string() + "'").code == 0);
    REQUIRE(cli(dir, train + "'" + (dir / "m2.json").string() + "'").code == 0);
    CHECK(slurp(dir / "m1.json") == slurp(dir / "m2.json"));

    const Run ev = cli(dir, fmt::format("eval --manifest '{}' --model '{}' --split 1 --chip 32 --stride 32",
                                            manifest, (dir / "m1.json").string()));
    REQUIRE(ev.code == 0);
    const json ej = json::parse(ev.out);
    CHECK(ej["n_pixels"].get<std::uint64_t>() > 0);
    const Run truth = cli(dir, fmt::format("eval --manifest '{}' --predictor truth --split 1 --chip 32", manifest));
    REQUIRE(truth.code == 0);
    CHECK(json::parse(truth.out)["iou_water"] == 1.0);

    const std::string predict = fmt::format("predict --scene '{}' --model '{}' --patch 32 --stride 16 ",
                                            (corpus / "tile_01_image.tif").string(), (dir / "m1.json").string());
    REQUIRE(cli(dir, predict + fmt::format("--out '{}' --quicklook '{}'", (dir / "a.tif").string(),
                                               (dir / "a.png").string())).code == 0);
    REQUIRE(cli(dir, predict + fmt::format("--out '{}'", (dir / "b.tif").string())).code == 0);
    CHECK(slurp(dir / "a.tif") == slurp(dir / "b.tif"));
    CHECK(slurp(dir / "a.png").substr(1, 3) == "PNG");

    const Run bad = cli(dir, fmt::format("predict --scene '{}' --predictor ndwi --patch 32 --stride 64 --out '{}'",
                                         (corpus / "tile_01_image.tif").string(), (dir / "c.tif").string()));
    CHECK(bad.code == 1);
    CHECK(bad.err.find("StrideExceedsPatch") != std::string::npos);
}
