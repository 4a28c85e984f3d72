#include "bdb/event_store.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "bdb/digest.hpp"
#include "bdb/error.hpp"

namespace bdb {

namespace fs = std::filesystem;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    bool done() const { return pos_ == bytes_.size(); }

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::vector<std::uint8_t> take(std::size_t n) {
        need(n);
        std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw Error(Errc::CorruptStore, "event data truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_records(std::span<const EventRecord> records) {
    std::vector<std::uint8_t> out(kStoreMagic.begin(), kStoreMagic.end());
    out.push_back(kStoreVersion);
    for (const auto& rec : records) {
        put_u32(out, rec.run);
        put_u32(out, rec.event);
        out.push_back(static_cast<std::uint8_t>(rec.sections.size()));
        for (const auto& [tag, payload] : rec.sections) {
            out.push_back(tag);
            put_u32(out, static_cast<std::uint32_t>(payload.size()));
            out.insert(out.end(), payload.begin(), payload.end());
        }
    }
    return out;
}

std::vector<EventRecord> decode_records(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kStoreMagic.size() + 1 ||
        !std::equal(kStoreMagic.begin(), kStoreMagic.end(), bytes.begin()) || bytes[kStoreMagic.size()] != kStoreVersion)
        throw Error(Errc::BadMagic, "event data does not start with BDBS v1");
    Reader in(bytes.subspan(kStoreMagic.size() + 1));
    std::vector<EventRecord> out;
    std::set<EventId> seen;
    while (!in.done()) {
        EventRecord rec;
        rec.run = in.u32();
        rec.event = in.u32();
        auto count = in.u8();
        if (count == 0) throw Error(Errc::CorruptStore, "record without sections");
        for (int i = 0; i < count; ++i) {
            auto tag = in.u8();
            if (!format_from_tag(tag)) throw Error(Errc::CorruptStore, "unknown section tag " + std::to_string(tag));
            auto len = in.u32();
            if (!rec.sections.emplace(tag, in.take(len)).second)
                throw Error(Errc::CorruptStore, "duplicate section tag in record");
        }
        if (!seen.insert(rec.id()).second)
            throw Error(Errc::CorruptStore,
                        "duplicate record " + std::to_string(rec.run) + ":" + std::to_string(rec.event));
        out.push_back(std::move(rec));
    }
    return out;
}

std::string render_manifest(const StoreManifest& m) {
    std::ostringstream out;
    out << "collection=" << m.collection << '\n' << "events=" << m.event_count << '\n' << "runs=";
    if (m.run_span) out << m.run_span->lo << '-' << m.run_span->hi;
    out << '\n' << "formats=";
    for (std::size_t i = 0; i < m.formats.size(); ++i) out << (i ? "," : "") << format_name(m.formats[i]);
    out << '\n' << "checksum=" << m.checksum << '\n';
    return out.str();
}

StoreManifest parse_manifest(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(Errc::MissingManifest, "manifest line without '='");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (const char* key : {"collection", "events", "runs", "formats", "checksum"}) {
        if (!kv.contains(key)) throw Error(Errc::MissingManifest, std::string("manifest lacks ") + key);
    }
    StoreManifest m;
    m.collection = kv["collection"];
    try {
        m.event_count = std::stoull(kv["events"]);
        if (auto& runs = kv["runs"]; !runs.empty()) {
            auto dash = runs.find('-');
            if (dash == std::string::npos) throw Error(Errc::MissingManifest, "manifest runs malformed");
            m.run_span = RunRange{static_cast<std::uint32_t>(std::stoul(runs.substr(0, dash))),
                                  static_cast<std::uint32_t>(std::stoul(runs.substr(dash + 1)))};
        }
    } catch (const std::logic_error&) {
        throw Error(Errc::MissingManifest, "manifest numbers malformed");
    }
    std::istringstream formats(kv["formats"]);
    std::string name;
    while (std::getline(formats, name, ',')) {
        if (name.empty()) continue;
        auto f = parse_format(name);
        if (!f) throw Error(Errc::MissingManifest, "manifest names unknown format " + name);
        m.formats.push_back(*f);
    }
    m.checksum = kv["checksum"];
    return m;
}

StoreManifest describe_records(const std::string& collection, std::span<const EventRecord> records,
                               const std::vector<std::uint8_t>& data) {
    StoreManifest m;
    m.collection = collection;
    m.event_count = records.size();
    std::set<std::uint8_t> tags;
    for (const auto& rec : records) {
        if (!m.run_span) m.run_span = RunRange{rec.run, rec.run};
        m.run_span->lo = std::min(m.run_span->lo, rec.run);
        m.run_span->hi = std::max(m.run_span->hi, rec.run);
        for (const auto& [tag, _] : rec.sections) tags.insert(tag);
    }
    for (auto tag : tags) m.formats.push_back(*format_from_tag(tag));
    m.checksum = sha256_hex(data);
    return m;
}

StoreManifest write_store(const fs::path& root, const std::string& collection, std::span<const EventRecord> records) {
    fs::create_directories(root);
    auto data = encode_records(records);
    auto manifest = describe_records(collection, records, data);
    write_file_bytes(root / kDataFileName, data);
    write_file_text(root / kManifestFileName, render_manifest(manifest));
    return manifest;
}

EventStore EventStore::open(const fs::path& root) {
    if (!fs::exists(root / kManifestFileName))
        throw Error(Errc::MissingManifest, "no manifest in " + root.string());
    if (!fs::exists(root / kDataFileName)) throw Error(Errc::MissingManifest, "no data file in " + root.string());
    auto text = read_file_bytes(root / kManifestFileName);
    EventStore store;
    store.root_ = root;
    store.manifest_ = parse_manifest(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
    auto data = read_file_bytes(root / kDataFileName);
    if (sha256_hex(data) != store.manifest_.checksum)
        throw Error(Errc::ChecksumMismatch, "data file checksum does not match manifest in " + root.string());
    store.records_ = decode_records(data);
    if (store.records_.size() != store.manifest_.event_count)
        throw Error(Errc::CorruptStore, "manifest event count does not match data file");
    return store;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw Error(Errc::IoError, "short write to " + path.string());
}

void write_file_text(const fs::path& path, std::string_view text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace bdb
