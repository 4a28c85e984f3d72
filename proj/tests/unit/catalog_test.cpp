#include <gtest/gtest.h>

#include <random>

#include "bdb/catalog.hpp"
#include "expect_errc.hpp"
#include "oracles.hpp"
#include "random_catalog.hpp"
#include "temp_dir.hpp"

using namespace bdb;

namespace {

CollectionPlacement disk(const std::string& c, const std::string& s, Format f) {
    return {c, s, f, StorageClass::Disk, "/stores/" + c + "@" + s};
}

CollectionPlacement tape(const std::string& c, const std::string& s, Format f) {
    return {c, s, f, StorageClass::Tape, ""};
}

}  // namespace

TEST(Catalog, RegisterSite) {
    Catalog cat;
    EXPECT_EQ(cat.register_site({"slac", Tier::TierA, "SLAC", "slac:9000"}), "slac");
    EXPECT_ERRC(cat.register_site({"slac", Tier::TierC, "again", ""}), Errc::DuplicateSite);
    ASSERT_TRUE(cat.site("slac"));
    EXPECT_EQ(cat.site("slac")->tier, Tier::TierA);
}

TEST(Catalog, FiveTierASitesAllListable) {
    Catalog cat;
    for (const char* id : {"in2p3", "gridka", "padova", "ral", "slac"}) cat.register_site({id, Tier::TierA, id, id});
    auto sites = cat.sites();
    ASSERT_EQ(sites.size(), 5u);
    for (const auto& s : sites) EXPECT_EQ(s.tier, Tier::TierA);
}

TEST(Catalog, RegisterCollection) {
    Catalog cat;
    cat.register_site({"slac", Tier::TierA, "SLAC", ""});
    EXPECT_EQ(cat.register_collection({"c1"}, {disk("c1", "slac", Format::Micro)}), "c1");
    auto found = cat.locate("c1", Format::Micro, true);
    ASSERT_EQ(found.size(), 1u);
    EXPECT_EQ(found[0], disk("c1", "slac", Format::Micro));

    EXPECT_ERRC(cat.register_collection({"c2"}, {disk("c2", "nowhere", Format::Micro)}), Errc::UnknownSite);
    EXPECT_ERRC(cat.register_collection({"c1"}, {disk("c1", "slac", Format::Micro)}), Errc::DuplicatePlacement);
    EXPECT_ERRC(cat.register_collection({"c3"}, {disk("c3", "slac", Format::Mini), disk("c3", "slac", Format::Mini)}),
                Errc::DuplicatePlacement);
    EXPECT_ERRC(cat.register_collection({"c3"}, {{"c3", "slac", Format::Mini, StorageClass::Disk, ""}}),
                Errc::DuplicatePlacement);
}

TEST(Catalog, FailedRegistrationChangesNothing) {
    Catalog cat;
    cat.register_site({"slac", Tier::TierA, "SLAC", ""});
    EXPECT_ERRC(cat.register_collection({"c"}, {disk("c", "slac", Format::Micro), disk("c", "ghost", Format::Mini)}),
                Errc::UnknownSite);
    EXPECT_TRUE(cat.placements().empty());
    EXPECT_ERRC(cat.locate("c", Format::Micro, false), Errc::UnknownCollection);
}

TEST(Catalog, Locate) {
    Catalog cat;
    cat.register_site({"slac", Tier::TierA, "SLAC", ""});
    cat.register_site({"ral", Tier::TierA, "RAL", ""});
    cat.register_site({"bristol", Tier::TierC, "Bristol", ""});
    cat.register_collection({"c"}, {disk("c", "bristol", Format::Micro), disk("c", "slac", Format::Micro),
                                    tape("c", "ral", Format::Micro), tape("c", "slac", Format::Kanga)});
    EXPECT_ERRC(cat.locate("nope", Format::Micro, true), Errc::UnknownCollection);
    EXPECT_TRUE(cat.locate("c", Format::Kanga, true).empty());
    EXPECT_EQ(cat.locate("c", Format::Kanga, false).size(), 1u);
    EXPECT_TRUE(cat.locate("c", Format::Mini, false).empty());

    auto all = cat.locate("c", Format::Micro, false);
    ASSERT_EQ(all.size(), 3u);
    EXPECT_EQ(all[0].site_id, "ral");
    EXPECT_EQ(all[1].site_id, "slac");
    EXPECT_EQ(all[2].site_id, "bristol");
    auto online = cat.locate("c", Format::Micro, true);
    ASSERT_EQ(online.size(), 2u);
    EXPECT_EQ(online[0].site_id, "slac");
}

TEST(Catalog, SnapshotRoundTrip) {
    bdbtest::TempDir dir;
    std::mt19937_64 rng(5);
    Catalog cat;
    auto made = bdbtest::random_catalog(rng, cat, 50);
    cat.save_snapshot(dir / "catalog.jsonl");
    auto back = Catalog::load_snapshot(dir / "catalog.jsonl");
    EXPECT_EQ(back.sites(), cat.sites());
    EXPECT_EQ(back.collections(), cat.collections());
    EXPECT_EQ(back.placements(), cat.placements());
}

TEST(CatalogProperties, LocateMatchesLinearScan) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        Catalog cat;
        auto made = bdbtest::random_catalog(rng, cat, 50);
        for (const auto& c : made.collections) {
            for (auto f : {Format::Micro, Format::Mini, Format::Kanga}) {
                auto online = cat.locate(c, f, true);
                auto any = cat.locate(c, f, false);
                EXPECT_EQ(online, bdbtest::oracle_locate(made.sites, made.placements, c, f, true));
                EXPECT_EQ(any, bdbtest::oracle_locate(made.sites, made.placements, c, f, false));
                // online ⊆ all, and repeat calls agree
                for (const auto& p : online) EXPECT_NE(std::find(any.begin(), any.end(), p), any.end());
                EXPECT_EQ(cat.locate(c, f, true), online);
            }
        }
    }
}
