#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "bdb/catalog.hpp"
#include "bdb/digest.hpp"
#include "bdb/fabric.hpp"
#include "bdb/transfer.hpp"
#include "bdb/wire.hpp"
#include "expect_errc.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"
#include "world.hpp"

using namespace bdb;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

JobId job_of(std::uint8_t fill) {
    JobId j{};
    j.fill(fill);
    return j;
}

}  // namespace

// ---- wire ----

TEST(Wire, ExactHeaderLayout) {
    Frame f{FrameType::Ack, job_of(0xab), 0x01020304u, {9, 8, 7}};
    auto bytes = encode_frame(f);
    ASSERT_EQ(bytes.size(), kFrameHeaderSize + 3);
    EXPECT_EQ(kFrameHeaderSize, 30u);
    std::vector<std::uint8_t> expected = {'B', 'D', 'B', 'T', 1, 2};
    for (int i = 0; i < 16; ++i) expected.push_back(0xab);
    for (std::uint8_t b : {0x04, 0x03, 0x02, 0x01, 0x03, 0x00, 0x00, 0x00, 9, 8, 7}) expected.push_back(b);
    EXPECT_EQ(bytes, expected);
    EXPECT_EQ(decode_frame(bytes), f);
}

TEST(Wire, RandomRoundTrip) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        Frame f;
        f.type = static_cast<FrameType>(1 + rng() % 5);
        for (auto& b : f.job_id) b = static_cast<std::uint8_t>(rng());
        f.chunk_index = static_cast<std::uint32_t>(rng());
        f.payload = bdbtest::random_bytes(rng, f.type == FrameType::Verify ? 32 : rng() % 300);
        EXPECT_EQ(decode_frame(encode_frame(f)), f);
    }
}

TEST(Wire, RejectsMalformedFrames) {
    auto good = encode_frame(Frame{FrameType::Data, job_of(1), 0, {1, 2, 3, 4}});
    auto bad = good;
    bad[0] = 'X';
    EXPECT_ERRC(decode_frame(bad), Errc::BadFrame);
    bad = good;
    bad[4] = 2;
    EXPECT_ERRC(decode_frame(bad), Errc::BadFrame);
    bad = good;
    bad[5] = 0;
    EXPECT_ERRC(decode_frame(bad), Errc::BadFrame);
    bad[5] = 6;
    EXPECT_ERRC(decode_frame(bad), Errc::BadFrame);
    bad = good;
    bad.pop_back();
    EXPECT_ERRC(decode_frame(bad), Errc::BadFrame);
    bad = good;
    bad.push_back(0);
    EXPECT_ERRC(decode_frame(bad), Errc::BadFrame);
    EXPECT_ERRC(decode_frame(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)), Errc::BadFrame);
    auto short_verify = encode_frame(Frame{FrameType::Verify, job_of(1), 0, std::vector<std::uint8_t>(31)});
    EXPECT_ERRC(decode_frame(short_verify), Errc::BadFrame);
}

// ---- fabric ----

class FabricTest : public ::testing::Test {
protected:
    bdbtest::TempDir dir;
    EndpointConfig cfg(const std::string& site) {
        EndpointConfig c;
        c.site_id = site;
        c.storage_root = dir / ("sites/" + site);
        return c;
    }
};

TEST_F(FabricTest, SpawnAndHandshake) {
    Fabric fabric(1);
    fabric.spawn_endpoint(cfg("manchester"));
    EXPECT_TRUE(fabric.handshake("manchester", job_of(1), "out/file", 10, 4));
    EXPECT_TRUE(fs::exists(dir / "sites/manchester/out/file.part"));
    EXPECT_ERRC(fabric.spawn_endpoint(cfg("manchester")), Errc::DuplicateEndpoint);
    EXPECT_ERRC(fabric.inject_fault("nowhere", FaultSpec{}), Errc::UnknownEndpoint);
    EXPECT_FALSE(fabric.handshake("nowhere", job_of(1), "x", 1, 1));
}

TEST_F(FabricTest, RejectsInvalidConfigAndUnregisteredSites) {
    Catalog catalog;
    catalog.register_site(Site{"bristol", Tier::TierC, "Bristol", ""});
    Fabric fabric(1, &catalog);
    auto c = cfg("bristol");
    c.drop_rate = 1.5;
    EXPECT_ERRC(fabric.spawn_endpoint(c), Errc::ConfigError);
    c.drop_rate = 0;
    c.bandwidth = 0;
    EXPECT_ERRC(fabric.spawn_endpoint(c), Errc::ConfigError);
    EXPECT_ERRC(fabric.spawn_endpoint(cfg("unregistered")), Errc::UnknownSite);
    fabric.spawn_endpoint(cfg("bristol"));
}

TEST_F(FabricTest, HandshakeConfinedToStorageRoot) {
    Fabric fabric(1);
    fabric.spawn_endpoint(cfg("ral"));
    EXPECT_FALSE(fabric.handshake("ral", job_of(2), "../escape", 1, 1));
    EXPECT_FALSE(fabric.handshake("ral", job_of(2), "a/../../escape", 1, 1));
    EXPECT_FALSE(fabric.handshake("ral", job_of(2), ".", 1, 1));
    EXPECT_FALSE(fs::exists(dir / "sites/escape.part"));
    EXPECT_TRUE(fabric.handshake("ral", job_of(2), "/abs/inside", 1, 1));
    EXPECT_TRUE(fs::exists(dir / "sites/ral/abs/inside.part"));
    fabric.set_down("ral", true);
    EXPECT_FALSE(fabric.handshake("ral", job_of(3), "ok", 1, 1));
}

TEST_F(FabricTest, SimulatedDurationArithmetic) {
    Fabric fabric;
    auto c = cfg("slow");
    c.latency = 0us;
    c.bandwidth = 1u << 20;
    fabric.spawn_endpoint(c);
    EXPECT_EQ(fabric.simulated_duration("slow", 8u << 20), SimTime(8'000'000));

    auto d = cfg("lat");
    d.latency = 2500us;
    d.bandwidth = 1000;
    fabric.spawn_endpoint(d);
    EXPECT_EQ(fabric.simulated_duration("lat", 0), 2500us);
    EXPECT_EQ(fabric.simulated_duration("lat", 0, 4), 10'000us);
    EXPECT_EQ(fabric.simulated_duration("lat", 3000, 1), 2500us + 3s);

    auto e = cfg("fast");
    e.latency = 2500us;
    e.bandwidth = 2000;
    fabric.spawn_endpoint(e);
    auto slow_bytes = fabric.simulated_duration("lat", 4000) - 2500us;
    auto fast_bytes = fabric.simulated_duration("fast", 4000) - 2500us;
    EXPECT_EQ(slow_bytes, 2 * fast_bytes);
}

TEST_F(FabricTest, ExchangeWithoutSessionIsErr) {
    Fabric fabric;
    fabric.spawn_endpoint(cfg("x"));
    auto reply = fabric.exchange("x", encode_frame(Frame{FrameType::Data, job_of(9), 0, {1}}));
    ASSERT_TRUE(reply);
    EXPECT_EQ(decode_frame(*reply).type, FrameType::Err);
}

TEST_F(FabricTest, VerifyIsIdempotentAfterLostReply) {
    Fabric fabric;
    fabric.spawn_endpoint(cfg("x"));
    std::vector<std::uint8_t> data = {1, 2, 3, 4, 5};
    ASSERT_TRUE(fabric.handshake("x", job_of(4), "f", data.size(), 8));
    auto ack = fabric.exchange("x", encode_frame(Frame{FrameType::Data, job_of(4), 0, data}));
    ASSERT_TRUE(ack);
    EXPECT_EQ(decode_frame(*ack).type, FrameType::Ack);

    Frame verify{FrameType::Verify, job_of(4), 1, std::vector<std::uint8_t>(32)};
    from_hex(bdbtest::oracle_sha256_hex(data), verify.payload);
    fabric.inject_fault("x", FaultSpec{FrameType::VerifyOk, std::nullopt, FaultAction::Drop, false});
    EXPECT_FALSE(fabric.exchange("x", encode_frame(verify)));
    EXPECT_EQ(slurp(dir / "sites/x/f"), data);
    auto again = fabric.exchange("x", encode_frame(verify));
    ASSERT_TRUE(again);
    EXPECT_EQ(decode_frame(*again).type, FrameType::VerifyOk);
    EXPECT_EQ(slurp(dir / "sites/x/f"), data);
}

TEST_F(FabricTest, ScenarioFileSpawnsEndpointsAndFaults) {
    auto scenario = dir / "scenario.jsonl";
    {
        std::ofstream out(scenario);
        out << R"({"kind":"endpoint","site_id":"manchester","latency_ms":2,"bandwidth":1048576,"drop_rate":0.25})" << "\n\n"
            << R"({"kind":"endpoint","site_id":"bristol","storage_root":"elsewhere/b"})" << "\n"
            << R"({"kind":"fault","site_id":"manchester","type":"DATA","chunk":2,"action":"drop"})" << "\n";
    }
    Fabric fabric;
    load_fabric_scenario(fabric, scenario, dir.path());
    auto m = fabric.endpoint_config("manchester");
    EXPECT_EQ(m.latency, 2000us);
    EXPECT_EQ(m.bandwidth, 1048576u);
    EXPECT_DOUBLE_EQ(m.drop_rate, 0.25);
    EXPECT_EQ(m.storage_root, dir / "sites/manchester");
    EXPECT_EQ(fabric.storage_root("bristol"), dir / "elsewhere/b");

    auto bad = dir / "bad.jsonl";
    std::ofstream(bad) << R"({"kind":"endpoint","site_id":"c"})" << "\n" << R"({"kind":"teleport"})" << "\n";
    Fabric other;
    try {
        load_fabric_scenario(other, bad, dir.path());
        ADD_FAILURE() << "expected SyntaxError";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::SyntaxError);
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_ERRC(load_fabric_scenario(other, dir / "missing.jsonl"), Errc::ConfigError);
}

// ---- transfer ----

class TransferTest : public ::testing::Test {
protected:
    void SetUp() override {
        catalog.register_site(Site{"manchester", Tier::TierC, "Manchester", ""});
        catalog.register_site(Site{"bristol", Tier::TierC, "Bristol", ""});
        catalog.register_site(Site{"lonely", Tier::TierC, "No endpoint", ""});
        fabric.spawn_endpoint(endpoint("manchester"));
        fabric.spawn_endpoint(endpoint("bristol"));
    }
    EndpointConfig endpoint(const std::string& site) {
        EndpointConfig c;
        c.site_id = site;
        c.storage_root = dir / ("sites/" + site);
        return c;
    }
    fs::path source(std::size_t n, std::uint64_t seed = 5) {
        std::mt19937_64 rng(seed);
        auto p = dir / ("src-" + std::to_string(n) + "-" + std::to_string(seed));
        write_bytes(p, bdbtest::random_bytes(rng, n));
        return p;
    }
    fs::path dest(const std::string& site, const std::string& rel) { return dir / ("sites/" + site + "/" + rel); }

    static TransferConfig small_chunks() {
        TransferConfig c;
        c.chunk_size = 1000;
        return c;
    }

    bdbtest::TempDir dir;
    Catalog catalog;
    Fabric fabric{42, &catalog};
};

TEST_F(TransferTest, PlanCountsChunks) {
    TransferEngine engine(fabric, catalog);
    auto ten = source(10u << 20);
    auto job = engine.plan_transfer(ten, Destination{"manchester", "out/ten"});
    EXPECT_EQ(job.chunk_count(), 3u);
    EXPECT_EQ(job.state, TransferState::Planned);
    EXPECT_EQ(job.total_bytes, 10u << 20);
    EXPECT_EQ(job.file_checksum, bdbtest::oracle_sha256_hex(slurp(ten)));

    auto empty = source(0);
    EXPECT_EQ(engine.plan_transfer(empty, Destination{"manchester", "e"}).chunk_count(), 0u);
    EXPECT_ERRC(engine.plan_transfer(empty, Destination{"atlantis", "e"}), Errc::UnknownDestination);
    EXPECT_ERRC(engine.plan_transfer(empty, Destination{"lonely", "e"}), Errc::UnknownDestination);
}

TEST_F(TransferTest, ChunkCountIsCeilingDivision) {
    TransferEngine engine(fabric, catalog, small_chunks());
    for (std::size_t n : {1u, 999u, 1000u, 1001u, 2000u, 2999u}) {
        auto job = engine.plan_transfer(source(n), Destination{"manchester", "x"});
        EXPECT_EQ(job.chunk_count(), (n + 999) / 1000) << n;
    }
}

TEST_F(TransferTest, ZeroBytePayloadCompletes) {
    TransferEngine engine(fabric, catalog);
    auto job = engine.plan_transfer(source(0), Destination{"manchester", "out/empty"});
    auto report = engine.run_transfer(job);
    EXPECT_TRUE(report.complete()) << report.message;
    EXPECT_EQ(report.bytes_sent, 0u);
    ASSERT_TRUE(fs::exists(dest("manchester", "out/empty")));
    EXPECT_EQ(fs::file_size(dest("manchester", "out/empty")), 0u);
}

TEST_F(TransferTest, FaultFreeTransferIsByteIdentical) {
    TransferEngine engine(fabric, catalog, small_chunks());
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto n = static_cast<std::size_t>(rng() % 20000);
        auto src = source(n, trial);
        auto rel = "t/" + std::to_string(trial);
        auto job = engine.plan_transfer(src, Destination{"bristol", rel});
        auto report = engine.run_transfer(job);
        ASSERT_TRUE(report.complete()) << report.message;
        EXPECT_EQ(report.bytes_sent, n);
        EXPECT_EQ(report.retries, 0u);
        EXPECT_GE(report.bytes_sent, job.total_bytes);
        EXPECT_EQ(slurp(dest("bristol", rel)), slurp(src));
        EXPECT_EQ(bdbtest::oracle_sha256_hex(slurp(dest("bristol", rel))), job.file_checksum);
        EXPECT_FALSE(fs::exists(dest("bristol", rel + ".part")));
    }
}

TEST_F(TransferTest, DurationCoversBandwidthAndLatency) {
    TransferEngine engine(fabric, catalog, small_chunks());
    auto src = source(5500);
    auto job = engine.plan_transfer(src, Destination{"manchester", "d"});
    auto report = engine.run_transfer(job);
    ASSERT_TRUE(report.complete());
    // 6 DATA + 1 VERIFY requests and their replies, plus the handshake
    EXPECT_GE(report.duration, fabric.simulated_duration("manchester", 5500, 15));
}

TEST_F(TransferTest, TotalDropAbortsAfterConfiguredRetries) {
    fabric.set_drop_rate("manchester", 1.0);
    TransferEngine engine(fabric, catalog, small_chunks());
    auto job = engine.plan_transfer(source(2500), Destination{"manchester", "lost"});
    auto report = engine.run_transfer(job);
    EXPECT_EQ(report.outcome, TransferState::Aborted);
    EXPECT_EQ(report.error, Errc::DestinationUnreachable);
    EXPECT_EQ(report.retries, 5u);
    EXPECT_EQ(job.chunk_sends, (std::vector<std::uint32_t>{6, 0, 0}));
    EXPECT_EQ(job.acked_count(), 0u);
    EXPECT_EQ(job.state, TransferState::Aborted);
    EXPECT_FALSE(fs::exists(dest("manchester", "lost")));
}

TEST_F(TransferTest, OneShotDropRetriesThatChunkOnce) {
    fabric.inject_fault("manchester", FaultSpec{FrameType::Data, 2u, FaultAction::Drop, false});
    TransferEngine engine(fabric, catalog, small_chunks());
    auto src = source(4500);
    auto job = engine.plan_transfer(src, Destination{"manchester", "one"});
    auto report = engine.run_transfer(job);
    ASSERT_TRUE(report.complete()) << report.message;
    EXPECT_EQ(report.retries, 1u);
    EXPECT_EQ(job.chunk_sends, (std::vector<std::uint32_t>{1, 1, 2, 1, 1}));
    EXPECT_EQ(report.retransmitted_bytes, 1000u);
    EXPECT_EQ(report.bytes_sent, 5500u);
    EXPECT_EQ(slurp(dest("manchester", "one")), slurp(src));
}

TEST_F(TransferTest, LostAckIsRetriedToo) {
    fabric.inject_fault("manchester", FaultSpec{FrameType::Ack, 0u, FaultAction::Drop, false});
    TransferEngine engine(fabric, catalog, small_chunks());
    auto src = source(1500);
    auto job = engine.plan_transfer(src, Destination{"manchester", "ack"});
    auto report = engine.run_transfer(job);
    ASSERT_TRUE(report.complete());
    EXPECT_EQ(report.retries, 1u);
    EXPECT_EQ(slurp(dest("manchester", "ack")), slurp(src));
}

TEST_F(TransferTest, BackoffIsExponential) {
    TransferEngine engine(fabric, catalog, small_chunks());
    auto src = source(800);
    auto clean = engine.plan_transfer(src, Destination{"manchester", "clean"});
    auto base = engine.run_transfer(clean).duration;

    fabric.inject_fault("manchester", FaultSpec{FrameType::Data, 0u, FaultAction::Drop, false});
    fabric.inject_fault("manchester", FaultSpec{FrameType::Data, 0u, FaultAction::Drop, false});
    fabric.inject_fault("manchester", FaultSpec{FrameType::Data, 0u, FaultAction::Drop, false});
    auto job = engine.plan_transfer(src, Destination{"manchester", "slow"});
    auto report = engine.run_transfer(job);
    ASSERT_TRUE(report.complete());
    EXPECT_EQ(report.retries, 3u);
    // Same dest path length, so the handshake costs the same.
    auto lost_frame = fabric.simulated_duration("manchester", kFrameHeaderSize + 800, 1);
    auto waits = 3 * 1000ms + 100ms + 200ms + 400ms;
    EXPECT_EQ(report.duration - base, waits + 3 * lost_frame);
}

TEST_F(TransferTest, CorruptVerifySurfacesChecksumMismatch) {
    fabric.inject_fault("manchester", FaultSpec{FrameType::Verify, std::nullopt, FaultAction::Corrupt, false});
    TransferEngine engine(fabric, catalog, small_chunks());
    auto job = engine.plan_transfer(source(3000), Destination{"manchester", "v"});
    auto report = engine.run_transfer(job);
    EXPECT_EQ(report.outcome, TransferState::Aborted);
    EXPECT_EQ(report.error, Errc::ChecksumMismatch);
    EXPECT_EQ(job.acked_count(), 3u);
    EXPECT_FALSE(fs::exists(dest("manchester", "v")));

    auto again = engine.resume_transfer(job);
    EXPECT_TRUE(again.complete());
    EXPECT_EQ(again.bytes_sent, 0u);
}

TEST_F(TransferTest, CorruptDataFailsVerify) {
    fabric.inject_fault("manchester", FaultSpec{FrameType::Data, 1u, FaultAction::Corrupt, false});
    TransferEngine engine(fabric, catalog, small_chunks());
    auto job = engine.plan_transfer(source(3000), Destination{"manchester", "c"});
    auto report = engine.run_transfer(job);
    EXPECT_EQ(report.error, Errc::ChecksumMismatch);
    EXPECT_FALSE(fs::exists(dest("manchester", "c")));
}

TEST_F(TransferTest, HandshakeRefusalIsUnreachable) {
    TransferEngine engine(fabric, catalog);
    auto job = engine.plan_transfer(source(10), Destination{"manchester", "../../outside"});
    auto report = engine.run_transfer(job);
    EXPECT_EQ(report.error, Errc::DestinationUnreachable);
    fabric.set_down("bristol", true);
    auto down = engine.plan_transfer(source(10), Destination{"bristol", "ok"});
    EXPECT_EQ(engine.run_transfer(down).error, Errc::DestinationUnreachable);
}

TEST_F(TransferTest, ResumeSendsOnlyUnackedChunks) {
    for (std::uint32_t k = 0; k < 6; ++k) {
        fabric.clear_faults("manchester");
        fabric.inject_fault("manchester", FaultSpec{FrameType::Data, k, FaultAction::Drop, true});
        TransferEngine engine(fabric, catalog, small_chunks());
        auto src = source(5500, k);
        auto rel = "r/" + std::to_string(k);
        auto job = engine.plan_transfer(src, Destination{"manchester", rel});
        job.state_file = dir / ("state-" + std::to_string(k) + ".json");
        auto first = engine.run_transfer(job);
        ASSERT_EQ(first.outcome, TransferState::Aborted);
        EXPECT_EQ(job.acked_count(), k);

        fabric.clear_faults("manchester");
        auto loaded = TransferJob::load(job.state_file);
        EXPECT_EQ(loaded.chunks_acked, job.chunks_acked);
        EXPECT_EQ(loaded.chunk_sends, job.chunk_sends);
        EXPECT_EQ(loaded.state, TransferState::Aborted);
        auto resumed = engine.resume_transfer(loaded);
        ASSERT_TRUE(resumed.complete()) << resumed.message;
        EXPECT_EQ(slurp(dest("manchester", rel)), slurp(src));

        // Only chunks from k on go out again; chunk k itself is the sole retransmit.
        std::uint64_t unacked = 5500 - std::uint64_t{k} * 1000;
        EXPECT_EQ(resumed.bytes_sent, unacked);
        EXPECT_EQ(resumed.retransmitted_bytes, k == 5 ? 500u : 1000u);
        if (k > 0) EXPECT_LT(resumed.retransmitted_bytes, loaded.total_bytes);
        for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(loaded.chunk_sends[i], 1u) << "chunk " << i;
        EXPECT_EQ(TransferJob::load(job.state_file).state, TransferState::Complete);
    }
}

TEST_F(TransferTest, ResumeOfCompleteJobIsNoOp) {
    TransferEngine engine(fabric, catalog, small_chunks());
    auto src = source(2500);
    auto job = engine.plan_transfer(src, Destination{"bristol", "done"});
    ASSERT_TRUE(engine.run_transfer(job).complete());
    auto before = fs::last_write_time(dest("bristol", "done"));
    auto log_size = fabric.event_log().size();
    auto again = engine.resume_transfer(job);
    EXPECT_TRUE(again.complete());
    EXPECT_EQ(again.bytes_sent, 0u);
    EXPECT_EQ(fabric.event_log().size(), log_size);
    EXPECT_EQ(fs::last_write_time(dest("bristol", "done")), before);
    EXPECT_EQ(slurp(dest("bristol", "done")), slurp(src));
}

TEST_F(TransferTest, AllAckedButUnverifiedRunsVerifyOnResume) {
    fabric.inject_fault("manchester", FaultSpec{FrameType::Verify, std::nullopt, FaultAction::Drop, true});
    TransferEngine engine(fabric, catalog, small_chunks());
    auto src = source(2000);
    auto job = engine.plan_transfer(src, Destination{"manchester", "unverified"});
    auto first = engine.run_transfer(job);
    ASSERT_EQ(first.outcome, TransferState::Aborted);
    EXPECT_EQ(job.acked_count(), job.chunk_count());
    fabric.clear_faults("manchester");
    auto resumed = engine.resume_transfer(job);
    EXPECT_TRUE(resumed.complete());
    EXPECT_EQ(resumed.bytes_sent, 0u);
    EXPECT_EQ(slurp(dest("manchester", "unverified")), slurp(src));
}

TEST_F(TransferTest, SameSeedSameEventLog) {
    auto run = [&](std::uint64_t seed, const std::string& sub) {
        bdbtest::TempDir d;
        Fabric f(seed);
        EndpointConfig c;
        c.site_id = "manchester";
        c.drop_rate = 0.5;
        c.storage_root = d / "m";
        f.spawn_endpoint(c);
        TransferConfig tc = small_chunks();
        tc.max_retries = 20;
        TransferEngine engine(f, catalog, tc);
        auto job = engine.plan_transfer(source(9000, 77), Destination{"manchester", sub});
        job.job_id = job_of(7);
        engine.run_transfer(job);
        return f.event_log();
    };
    auto a = run(123, "same");
    auto b = run(123, "same");
    EXPECT_EQ(a, b);
    EXPECT_GT(a.size(), 10u);
    EXPECT_NE(a, run(124, "same"));
}

TEST_F(TransferTest, StateFileRoundTrip) {
    TransferEngine engine(fabric, catalog, small_chunks());
    auto job = engine.plan_transfer(source(2500), Destination{"bristol", "p/q"});
    job.chunks_acked = {true, false, true};
    job.chunk_sends = {1, 4, 2};
    job.state = TransferState::InFlight;
    auto path = dir / "job.json";
    job.save(path);
    auto back = TransferJob::load(path);
    EXPECT_EQ(back.job_id, job.job_id);
    EXPECT_EQ(back.source, job.source);
    EXPECT_EQ(back.dest_site, "bristol");
    EXPECT_EQ(back.dest_endpoint, "bristol");
    EXPECT_EQ(back.dest_path, "p/q");
    EXPECT_EQ(back.chunk_size, 1000u);
    EXPECT_EQ(back.total_bytes, 2500u);
    EXPECT_EQ(back.file_checksum, job.file_checksum);
    EXPECT_EQ(back.chunks_acked, job.chunks_acked);
    EXPECT_EQ(back.chunk_sends, job.chunk_sends);
    EXPECT_EQ(back.state, TransferState::InFlight);
    EXPECT_EQ(back.state_file, path);
    EXPECT_ERRC(TransferJob::load(dir / "absent.json"), Errc::IoError);
}
