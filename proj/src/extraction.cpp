#include "bdb/extraction.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "bdb/digest.hpp"
#include "bdb/error.hpp"

namespace bdb {

namespace fs = std::filesystem;

namespace {

bool in_runs(const std::vector<RunRange>& runs, std::uint32_t run) {
    auto it = std::upper_bound(runs.begin(), runs.end(), run, [](std::uint32_t r, const RunRange& rr) { return r < rr.lo; });
    return it != runs.begin() && std::prev(it)->contains(run);
}

}  // namespace

std::vector<EventId> select_events(const EventStore& store, const std::vector<RunRange>& runs,
                                   const EventSelector& events) {
    std::vector<EventId> out;
    for (const auto& rec : store.records()) {
        if (!in_runs(runs, rec.run)) continue;
        if (!events.all && !std::binary_search(events.explicit_events.begin(), events.explicit_events.end(), rec.id()))
            continue;
        out.push_back(rec.id());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string render_extract_manifest(const ExtractManifest& m) {
    std::ostringstream out;
    out << "request_key=" << m.request_key << '\n'
        << "format=" << format_name(m.format) << '\n'
        << "runs=" << m.runs << '\n'
        << "events=" << m.events << '\n'
        << "source_checksum=" << m.source_checksum << '\n'
        << "output_checksum=" << m.output_checksum << '\n'
        << "byte_size=" << m.byte_size << '\n';
    return out.str();
}

ExtractManifest parse_extract_manifest(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (const char* key : {"request_key", "format", "runs", "events", "source_checksum", "output_checksum", "byte_size"}) {
        if (!kv.contains(key)) throw Error(Errc::MissingManifest, std::string("extract manifest lacks ") + key);
    }
    ExtractManifest m;
    m.request_key = kv["request_key"];
    auto fmt = parse_format(kv["format"]);
    if (!fmt) throw Error(Errc::MissingManifest, "extract manifest names unknown format");
    m.format = *fmt;
    m.runs = kv["runs"];
    m.events = kv["events"];
    m.source_checksum = kv["source_checksum"];
    m.output_checksum = kv["output_checksum"];
    try {
        m.byte_size = std::stoull(kv["byte_size"]);
    } catch (const std::logic_error&) {
        throw Error(Errc::MissingManifest, "extract manifest byte_size malformed");
    }
    return m;
}

ExtractionResult deep_copy(const EventStore& store, const Selection& selection, Format format,
                           const fs::path& dest_dir, const DeepCopyOptions& options) {
    auto ids = select_events(store, selection.runs, selection.events);
    if (ids.empty()) throw Error(Errc::EmptySelection, "selection matches no events");

    std::map<EventId, const EventRecord*> by_id;
    for (const auto& rec : store.records()) by_id.emplace(rec.id(), &rec);

    const auto tag = section_tag(format);
    std::vector<EventRecord> out;
    for (const auto& id : ids) {
        const auto& src = *by_id.at(id);
        auto it = src.sections.find(tag);
        if (it == src.sections.end()) continue;
        EventRecord rec{src.run, src.event, {}};
        rec.sections.emplace(tag, it->second);
        out.push_back(std::move(rec));
    }
    if (out.empty())
        throw Error(Errc::FormatAbsent, "no selected event carries the " + std::string(format_name(format)) + " section");

    auto data = encode_records(out);
    auto manifest = describe_records(store.manifest().collection, out, data);
    auto manifest_text = render_manifest(manifest);

    ExtractManifest em;
    em.request_key = options.request_key;
    em.format = format;
    em.runs = format_ranges(selection.runs);
    em.events = format_events(selection.events);
    em.source_checksum = store.manifest().checksum;
    em.output_checksum = manifest.checksum;
    em.byte_size = data.size() + manifest_text.size();
    auto extract_text = render_extract_manifest(em);

    ExtractionResult result{dest_dir, em, em.byte_size + extract_text.size()};

    if (fs::exists(dest_dir) && !fs::is_empty(dest_dir))
        throw Error(Errc::IoError, "extraction destination not empty: " + dest_dir.string());
    if (options.charge) options.charge(result.disk_bytes);
    try {
        fs::create_directories(dest_dir);
        write_file_bytes(dest_dir / kDataFileName, data);
        write_file_text(dest_dir / kManifestFileName, manifest_text);
        write_file_text(dest_dir / kExtractFileName, extract_text);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(dest_dir, ec);
        throw;
    }
    return result;
}

ExtractionResult open_result(const fs::path& dir) {
    auto store = EventStore::open(dir);
    auto bytes = read_file_bytes(dir / kExtractFileName);
    auto em = parse_extract_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    if (em.output_checksum != store.manifest().checksum)
        throw Error(Errc::ChecksumMismatch, "extract manifest checksum does not match output store");
    return ExtractionResult{dir, em, directory_bytes(dir)};
}

std::uint64_t directory_bytes(const fs::path& dir) {
    std::uint64_t total = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) total += entry.file_size();
    }
    return total;
}

}  // namespace bdb
