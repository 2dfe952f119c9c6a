#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "roadscope/dataset.hpp"
#include "roadscope/error.hpp"
#include "roadscope/fsutil.hpp"
#include "roadscope/rng.hpp"

using namespace roadscope;
namespace fs = std::filesystem;

namespace {

ManifestEntry mk_entry(RoadClass cls, int idx) {
    ManifestEntry e;
    e.tile_path = "tiles/t" + std::to_string(idx) + ".png";
    e.cls = cls;
    e.country = "KE";
    e.road_id = "r" + std::to_string(idx % 7);
    e.center = GeoPoint{36.8 + idx * 1e-4, -1.3};
    return e;
}

std::vector<ManifestEntry> pool(std::size_t per_class0, std::size_t per_class1,
                                std::size_t per_class2) {
    std::vector<ManifestEntry> v;
    int idx = 0;
    for (std::size_t i = 0; i < per_class0; ++i) v.push_back(mk_entry(RoadClass::Major, idx++));
    for (std::size_t i = 0; i < per_class1; ++i) v.push_back(mk_entry(RoadClass::Minor, idx++));
    for (std::size_t i = 0; i < per_class2; ++i) v.push_back(mk_entry(RoadClass::TwoTrack, idx++));
    return v;
}

std::array<std::size_t, 3> histogram(const std::vector<ManifestEntry>& v) {
    std::array<std::size_t, 3> h{};
    for (const auto& e : v) h[static_cast<int>(e.cls)] += 1;
    return h;
}

}  // namespace

TEST_CASE("cloud_filter: saturated white rejected, dark kept, fraction rule") {
    CloudFilterConfig cfg;  // 200 / 0.4
    std::vector<std::uint8_t> white(4 * 3, 255);
    CHECK_FALSE(cloud_filter_keep(white, cfg));
    std::vector<std::uint8_t> black(4 * 3, 0);
    CHECK(cloud_filter_keep(black, cfg));

    // 4 pixels, 1 white + 3 dark: fraction 0.25 <= 0.4 keeps
    std::vector<std::uint8_t> mixed(4 * 3, 10);
    mixed[0] = mixed[1] = mixed[2] = 255;
    CHECK(cloud_filter_keep(mixed, cfg));

    // min-channel rule: a pixel bright in R only is not "bright"
    std::vector<std::uint8_t> red = {255, 0, 0};
    CHECK(cloud_filter_keep(red, cfg));
}

TEST_CASE("cloud_filter: permutation invariance") {
    Rng rng(11);
    std::vector<std::uint8_t> tile(64 * 3);
    for (auto& b : tile) b = static_cast<std::uint8_t>(rng.next_below(256));
    CloudFilterConfig cfg{180, 0.3};
    const bool keep0 = cloud_filter_keep(tile, cfg);
    // permute pixels (keeping channel triplets together)
    std::vector<std::size_t> perm(64);
    for (std::size_t i = 0; i < 64; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<std::uint8_t> shuffled(tile.size());
    for (std::size_t i = 0; i < 64; ++i)
        for (int ch = 0; ch < 3; ++ch) shuffled[i * 3 + ch] = tile[perm[i] * 3 + ch];
    CHECK(cloud_filter_keep(shuffled, cfg) == keep0);
}

TEST_CASE("balance: paper-scale 3x5000 -> 15000") {
    const auto entries = pool(5000, 5000, 5000);
    const auto balanced = balance(entries, 5000, Rng(42));
    CHECK(balanced.size() == 15000);
    const auto h = histogram(balanced);
    CHECK(h[0] == 5000);
    CHECK(h[1] == 5000);
    CHECK(h[2] == 5000);
}

TEST_CASE("balance: per_class 0 -> empty; insufficient class reported") {
    const auto entries = pool(100, 2000, 1200);
    CHECK(balance(entries, 0, Rng(1)).empty());
    try {
        balance(entries, 300, Rng(1));
        FAIL("expected InsufficientClass");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::insufficient_class);
        const std::string msg = e.what();
        CHECK(msg.find("major") != std::string::npos);
        CHECK(msg.find("100") != std::string::npos);
        CHECK(msg.find("300") != std::string::npos);
    }
}

TEST_CASE("balance: exact uniform histogram and sampling without replacement") {
    const auto entries = pool(40, 55, 70);
    const auto balanced = balance(entries, 35, Rng(9));
    const auto h = histogram(balanced);
    CHECK(h[0] == 35);
    CHECK(h[1] == 35);
    CHECK(h[2] == 35);
    std::set<std::string> seen;
    for (const auto& e : balanced) CHECK(seen.insert(e.tile_path).second);
}

TEST_CASE("balance: deterministic for fixed (input order, seed)") {
    const auto entries = pool(50, 50, 50);
    const auto a = balance(entries, 20, Rng(7));
    const auto b = balance(entries, 20, Rng(7));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].tile_path == b[i].tile_path);
    const auto c = balance(entries, 20, Rng(8));
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].tile_path != c[i].tile_path) same = false;
    CHECK_FALSE(same);
}

TEST_CASE("split: 15000 balanced -> 13500 train / 1500 test, stratified") {
    const auto balanced = balance(pool(5000, 5000, 5000), 5000, Rng(42));
    const auto split = split_entries(balanced, 0.1, Rng(42));
    const auto train = filter_split(split, Split::train);
    const auto test = filter_split(split, Split::test);
    CHECK(train.size() == 13500);
    CHECK(test.size() == 1500);
    const auto ht = histogram(test);
    CHECK(ht[0] == 500);
    CHECK(ht[1] == 500);
    CHECK(ht[2] == 500);
}

TEST_CASE("split: single entry -> 1 train / 0 test (round half up)") {
    const auto split = split_entries(pool(1, 0, 0), 0.1, Rng(3));
    CHECK(filter_split(split, Split::train).size() == 1);
    CHECK(filter_split(split, Split::test).empty());
}

TEST_CASE("split: rounding rule per class (brute force recount)") {
    Rng rng(55);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n0 = 1 + rng.next_below(40);
        const std::size_t n1 = 1 + rng.next_below(40);
        const std::size_t n2 = 1 + rng.next_below(40);
        const auto split = split_entries(pool(n0, n1, n2), 0.1, Rng(trial));
        const auto ht = histogram(filter_split(split, Split::test));
        CHECK(ht[0] == static_cast<std::size_t>(std::floor(n0 * 0.1 + 0.5)));
        CHECK(ht[1] == static_cast<std::size_t>(std::floor(n1 * 0.1 + 0.5)));
        CHECK(ht[2] == static_cast<std::size_t>(std::floor(n2 * 0.1 + 0.5)));
        // disjoint and complete
        CHECK(filter_split(split, Split::train).size() +
                  filter_split(split, Split::test).size() ==
              split.size());
        for (const auto& e : split) CHECK(e.split != Split::none);
    }
}

TEST_CASE("split: same seed twice is byte-identical") {
    const auto entries = pool(30, 30, 30);
    const auto a = split_entries(entries, 0.1, Rng(12));
    const auto b = split_entries(entries, 0.1, Rng(12));
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].tile_path == b[i].tile_path);
        CHECK(a[i].split == b[i].split);
    }
}

TEST_CASE("manifest: write/read round trip with header") {
    const fs::path path = fs::temp_directory_path() / "roadscope_manifest_test.jsonl";
    auto entries = pool(3, 2, 1);
    entries[0].mask_path = "masks/m0.png";
    entries[0].split = Split::train;
    entries[0].mask_mode = MaskMode::road_only;
    ManifestHeader header;
    header.seed = 99;
    header.config_digest = "cafe";
    write_manifest(path.string(), header, entries);

    ManifestHeader back_header;
    const auto back = read_manifest(path.string(), &back_header);
    CHECK(back_header.seed == 99);
    CHECK(back_header.config_digest == "cafe");
    CHECK(back_header.schema_version == 1);
    REQUIRE(back.size() == entries.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].tile_path == entries[i].tile_path);
        CHECK(back[i].cls == entries[i].cls);
        CHECK(back[i].split == entries[i].split);
        CHECK(back[i].mask_mode == entries[i].mask_mode);
        CHECK(back[i].mask_path == entries[i].mask_path);
        CHECK(back[i].line_no == i + 2);  // header is line 1
    }
    fs::remove(path);
}

TEST_CASE("manifest: bad class string carries the line number") {
    const fs::path path = fs::temp_directory_path() / "roadscope_manifest_bad.jsonl";
    std::ofstream out(path);
    out << R"({"schema_version":1,"seed":1,"created_utc":"x","config_digest":"d"})" << "\n";
    out << R"({"tile_path":"t.png","mask_path":null,"class":"major","country":"KE","road_id":"r","center":[0,0],"split":"train","mask_mode":"none"})"
        << "\n";
    out << R"({"tile_path":"u.png","mask_path":null,"class":"arterial","country":"KE","road_id":"r","center":[0,0],"split":"train","mask_mode":"none"})"
        << "\n";
    out.close();
    try {
        read_manifest(path.string());
        FAIL("expected SchemaError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::schema_error);
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    fs::remove(path);
}

TEST_CASE("manifest: empty file is a valid empty manifest") {
    const fs::path path = fs::temp_directory_path() / "roadscope_manifest_empty.jsonl";
    write_text_file(path, "");
    CHECK(read_manifest(path.string()).empty());
    fs::remove(path);
}

TEST_CASE("manifest: missing tile file reported with line number") {
    const fs::path dir = fs::temp_directory_path() / "roadscope_manifest_files";
    fs::remove_all(dir);
    fs::create_directories(dir / "tiles");
    auto entries = pool(1, 0, 0);
    entries[0].line_no = 2;
    try {
        validate_manifest_files(entries, dir.string());
        FAIL("expected IoError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::io_error);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    fs::remove_all(dir);
}
