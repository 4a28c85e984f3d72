#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace bdbtest {

// ---- SHA-256 ----------------------------------------------------------------

namespace {

constexpr std::array<std::uint32_t, 64> K = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

std::string oracle_sha256_hex(std::string_view bytes) {
    std::vector<std::uint8_t> msg(bytes.begin(), bytes.end());
    const std::uint64_t bit_len = static_cast<std::uint64_t>(msg.size()) * 8;
    msg.push_back(0x80);
    while (msg.size() % 64 != 56) msg.push_back(0);
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<std::uint8_t>(bit_len >> (i * 8)));

    std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                          0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    for (std::size_t block = 0; block < msg.size(); block += 64) {
        std::uint32_t w[64];
        for (int t = 0; t < 16; ++t) {
            const auto* p = &msg[block + 4 * t];
            w[t] = (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | p[3];
        }
        for (int t = 16; t < 64; ++t) {
            auto s0 = rotr(w[t - 15], 7) ^ rotr(w[t - 15], 18) ^ (w[t - 15] >> 3);
            auto s1 = rotr(w[t - 2], 17) ^ rotr(w[t - 2], 19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16] + s0 + w[t - 7] + s1;
        }
        auto a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int t = 0; t < 64; ++t) {
            auto S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            auto ch = (e & f) ^ (~e & g);
            auto t1 = hh + S1 + ch + K[t] + w[t];
            auto S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            auto maj = (a & b) ^ (a & c) ^ (b & c);
            auto t2 = S0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }
    std::string out;
    char buf[9];
    for (auto word : h) {
        std::snprintf(buf, sizeof buf, "%08x", word);
        out += buf;
    }
    return out;
}

std::string oracle_sha256_hex(const std::vector<std::uint8_t>& bytes) {
    return oracle_sha256_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// ---- event data -------------------------------------------------------------

namespace {

std::uint32_t read_le32(const std::vector<std::uint8_t>& b, std::size_t& pos) {
    if (pos + 4 > b.size()) throw std::runtime_error("truncated u32");
    std::uint32_t v = b[pos] | (b[pos + 1] << 8) | (b[pos + 2] << 16) | (std::uint32_t(b[pos + 3]) << 24);
    pos += 4;
    return v;
}

void write_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

const char* tag_name(std::uint8_t tag) {
    switch (tag) {
        case 1: return "micro";
        case 2: return "mini";
        case 3: return "kanga";
    }
    throw std::runtime_error("bad tag");
}

}  // namespace

std::vector<RawRecord> oracle_parse_data(const std::vector<std::uint8_t>& b) {
    if (b.size() < 5 || b[0] != 'B' || b[1] != 'D' || b[2] != 'B' || b[3] != 'S' || b[4] != 1)
        throw std::runtime_error("bad magic");
    std::vector<RawRecord> out;
    std::size_t pos = 5;
    while (pos < b.size()) {
        RawRecord r;
        r.run = read_le32(b, pos);
        r.event = read_le32(b, pos);
        if (pos >= b.size()) throw std::runtime_error("truncated count");
        int n = b[pos++];
        for (int i = 0; i < n; ++i) {
            if (pos >= b.size()) throw std::runtime_error("truncated tag");
            std::uint8_t tag = b[pos++];
            auto len = read_le32(b, pos);
            if (pos + len > b.size()) throw std::runtime_error("truncated payload");
            r.sections.emplace_back(tag, std::vector<std::uint8_t>(b.begin() + pos, b.begin() + pos + len));
            pos += len;
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RunEvent> oracle_select(const std::vector<RawRecord>& records, const OracleSelection& sel) {
    std::vector<RunEvent> out;
    for (const auto& r : records) {
        bool in_run = false;
        for (const auto& [lo, hi] : sel.runs) in_run = in_run || (r.run >= lo && r.run <= hi);
        if (!in_run) continue;
        if (!sel.all_events && !sel.events.count({r.run, r.event})) continue;
        out.emplace_back(r.run, r.event);
    }
    std::sort(out.begin(), out.end());
    return out;
}

OracleExtract oracle_extract(const std::vector<std::uint8_t>& source_data, const std::string& collection,
                             const OracleSelection& sel, std::uint8_t tag) {
    auto records = oracle_parse_data(source_data);
    auto wanted = oracle_select(records, sel);
    OracleExtract result;
    if (wanted.empty()) {
        result.outcome = OracleExtract::Outcome::EmptySelection;
        return result;
    }
    std::map<RunEvent, const RawRecord*> index;
    for (const auto& r : records) index[{r.run, r.event}] = &r;

    std::vector<std::uint8_t> data = {'B', 'D', 'B', 'S', 1};
    std::size_t kept = 0;
    std::uint32_t lo = 0, hi = 0;
    for (const auto& id : wanted) {
        const RawRecord& r = *index.at(id);
        const std::vector<std::uint8_t>* payload = nullptr;
        for (const auto& [t, p] : r.sections) {
            if (t == tag) payload = &p;
        }
        if (!payload) continue;
        write_le32(data, r.run);
        write_le32(data, r.event);
        data.push_back(1);
        data.push_back(tag);
        write_le32(data, static_cast<std::uint32_t>(payload->size()));
        data.insert(data.end(), payload->begin(), payload->end());
        lo = kept == 0 ? r.run : std::min(lo, r.run);
        hi = kept == 0 ? r.run : std::max(hi, r.run);
        ++kept;
    }
    if (kept == 0) {
        result.outcome = OracleExtract::Outcome::FormatAbsent;
        return result;
    }
    result.data = std::move(data);
    result.manifest = "collection=" + collection + "\nevents=" + std::to_string(kept) + "\nruns=" + std::to_string(lo) +
                      "-" + std::to_string(hi) + "\nformats=" + tag_name(tag) +
                      "\nchecksum=" + oracle_sha256_hex(result.data) + "\n";
    return result;
}

// ---- catalog ----------------------------------------------------------------

std::vector<bdb::CollectionPlacement> oracle_locate(const std::vector<bdb::Site>& sites,
                                                    const std::vector<bdb::CollectionPlacement>& placements,
                                                    const std::string& collection, bdb::Format format,
                                                    bool online_only) {
    std::vector<std::pair<std::pair<int, std::string>, bdb::CollectionPlacement>> keyed;
    for (const auto& p : placements) {
        if (p.collection_id != collection || p.format != format) continue;
        if (online_only && p.storage_class == bdb::StorageClass::Tape) continue;
        int tier = 1;
        for (const auto& s : sites) {
            if (s.site_id == p.site_id) tier = s.tier == bdb::Tier::TierA ? 0 : 1;
        }
        keyed.push_back({{tier, p.site_id}, p});
    }
    // Insertion sort: deliberately not std::sort with the library comparator.
    for (std::size_t i = 1; i < keyed.size(); ++i) {
        for (std::size_t j = i; j > 0 && keyed[j].first < keyed[j - 1].first; --j) std::swap(keyed[j], keyed[j - 1]);
    }
    std::vector<bdb::CollectionPlacement> out;
    for (auto& [_, p] : keyed) out.push_back(p);
    return out;
}

// ---- LRU --------------------------------------------------------------------

void LruOracle::insert(const std::string& key, std::uint64_t bytes) { items_.emplace_back(key, bytes); }

void LruOracle::touch(const std::string& key) {
    for (auto it = items_.begin(); it != items_.end(); ++it) {
        if (it->first == key) {
            items_.splice(items_.end(), items_, it);
            return;
        }
    }
}

std::optional<std::vector<std::string>> LruOracle::evict_for(std::uint64_t incoming) {
    if (incoming > budget_) return std::nullopt;
    std::uint64_t used = resident();
    std::vector<std::string> victims;
    auto copy = items_;
    for (auto it = copy.begin(); it != copy.end() && used + incoming > budget_;) {
        if (pinned_.count(it->first)) {
            ++it;
            continue;
        }
        used -= it->second;
        victims.push_back(it->first);
        it = copy.erase(it);
    }
    if (used + incoming > budget_) return std::nullopt;
    items_ = std::move(copy);
    return victims;
}

std::vector<std::string> LruOracle::order() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : items_) out.push_back(k);
    return out;
}

std::uint64_t LruOracle::resident() const {
    std::uint64_t total = 0;
    for (const auto& [_, b] : items_) total += b;
    return total;
}

}  // namespace bdbtest
