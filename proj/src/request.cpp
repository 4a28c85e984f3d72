#include "bdb/request.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>

#include "bdb/digest.hpp"
#include "bdb/error.hpp"

namespace bdb {

namespace {

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::optional<std::uint32_t> parse_positive(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0) return std::nullopt;
    return v;
}

std::vector<RunRange> parse_runs(std::string_view value, std::size_t line) {
    std::vector<RunRange> ranges;
    for (auto part : split(value, ',')) {
        part = trim(part);
        auto dash = part.find('-');
        std::optional<std::uint32_t> lo, hi;
        if (dash == std::string_view::npos) {
            lo = hi = parse_positive(part);
        } else {
            lo = parse_positive(part.substr(0, dash));
            hi = parse_positive(part.substr(dash + 1));
        }
        if (!lo || !hi) throw Error(Errc::BadRange, "runs: not a positive range: '" + std::string(part) + "'", line);
        if (*lo > *hi) throw Error(Errc::BadRange, "runs: lo > hi in '" + std::string(part) + "'", line);
        ranges.push_back({*lo, *hi});
    }
    return normalize_ranges(std::move(ranges));
}

EventSelector parse_events(std::string_view value, std::size_t line) {
    EventSelector sel;
    if (lower(trim(value)) == "all") return sel;
    sel.all = false;
    for (auto part : split(value, ',')) {
        part = trim(part);
        auto colon = part.find(':');
        if (colon == std::string_view::npos)
            throw Error(Errc::SyntaxError, "events: expected run:event, got '" + std::string(part) + "'", line);
        auto run = parse_positive(part.substr(0, colon));
        auto ev = parse_positive(part.substr(colon + 1));
        if (!run || !ev)
            throw Error(Errc::SyntaxError, "events: expected positive run:event, got '" + std::string(part) + "'", line);
        sel.explicit_events.push_back({*run, *ev});
    }
    std::sort(sel.explicit_events.begin(), sel.explicit_events.end());
    sel.explicit_events.erase(std::unique(sel.explicit_events.begin(), sel.explicit_events.end()),
                              sel.explicit_events.end());
    return sel;
}

}  // namespace

std::vector<RunRange> normalize_ranges(std::vector<RunRange> ranges) {
    std::sort(ranges.begin(), ranges.end());
    std::vector<RunRange> out;
    for (const auto& r : ranges) {
        if (!out.empty() && static_cast<std::uint64_t>(r.lo) <= static_cast<std::uint64_t>(out.back().hi) + 1) {
            out.back().hi = std::max(out.back().hi, r.hi);
        } else {
            out.push_back(r);
        }
    }
    return out;
}

ExtractionRequest parse_request(std::string_view text, const ParseOptions& opts) {
    static const std::vector<std::string> kKeys = {"request-version", "collection", "format", "runs",
                                                   "events",          "destination", "requester"};
    std::map<std::string, std::pair<std::string, std::size_t>> fields;

    std::size_t line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto colon = line.find(':');
        if (colon == std::string_view::npos)
            throw Error(Errc::SyntaxError, "expected 'key: value'", line_no);
        auto key = lower(trim(line.substr(0, colon)));
        auto value = std::string(trim(line.substr(colon + 1)));
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
            throw Error(Errc::SyntaxError, "unknown field '" + key + "'", line_no);
        if (value.empty()) throw Error(Errc::SyntaxError, "empty value for '" + key + "'", line_no);
        if (!fields.emplace(key, std::make_pair(value, line_no)).second)
            throw Error(Errc::SyntaxError, "duplicate field '" + key + "'", line_no);
    }

    for (const char* required : {"collection", "format", "runs", "destination", "requester"}) {
        if (!fields.contains(required)) throw Error(Errc::MissingField, std::string("missing field '") + required + "'");
    }

    auto placeholder = [&](const std::string& v) { return opts.allow_placeholders && v.find("${") != std::string::npos; };

    ExtractionRequest req;
    if (auto it = fields.find("request-version"); it != fields.end() && !placeholder(it->second.first)) {
        if (it->second.first != "1")
            throw Error(Errc::SyntaxError, "unsupported request-version " + it->second.first, it->second.second);
    }
    req.collection = fields["collection"].first;

    if (auto& [v, ln] = fields["format"]; !placeholder(v)) {
        auto fmt = parse_format(v);
        if (!fmt) throw Error(Errc::UnknownFormat, "unknown format '" + v + "'", ln);
        req.format = *fmt;
    }
    if (auto& [v, ln] = fields["runs"]; !placeholder(v)) req.runs = parse_runs(v, ln);
    if (auto it = fields.find("events"); it != fields.end() && !placeholder(it->second.first))
        req.events = parse_events(it->second.first, it->second.second);
    if (auto& [v, ln] = fields["destination"]; !placeholder(v)) {
        auto colon = v.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == v.size())
            throw Error(Errc::SyntaxError, "destination: expected <site_id>:<path>", ln);
        req.destination.site_id = std::string(trim(std::string_view(v).substr(0, colon)));
        req.destination.path = std::string(trim(std::string_view(v).substr(colon + 1)));
        if (req.destination.site_id.empty() || req.destination.path.empty())
            throw Error(Errc::SyntaxError, "destination: expected <site_id>:<path>", ln);
    }
    req.requester_dn = fields["requester"].first;
    return req;
}

std::string format_ranges(const std::vector<RunRange>& ranges) {
    std::string out;
    for (const auto& r : ranges) {
        if (!out.empty()) out += ',';
        out += std::to_string(r.lo) + "-" + std::to_string(r.hi);
    }
    return out;
}

std::string format_events(const EventSelector& events) {
    if (events.all) return "all";
    std::string out;
    for (const auto& e : events.explicit_events) {
        if (!out.empty()) out += ',';
        out += std::to_string(e.run) + ":" + std::to_string(e.event);
    }
    return out;
}

std::string serialize_request(const ExtractionRequest& req) {
    std::ostringstream out;
    out << "request-version: " << req.version << '\n'
        << "collection: " << req.collection << '\n'
        << "format: " << format_name(req.format) << '\n'
        << "runs: " << format_ranges(req.runs) << '\n'
        << "events: " << format_events(req.events) << '\n'
        << "destination: " << req.destination.site_id << ':' << req.destination.path << '\n'
        << "requester: " << req.requester_dn << '\n';
    return out.str();
}

std::string canonical_string(const ExtractionRequest& req) {
    std::string out;
    out += "version: " + std::to_string(req.version) + "\n";
    out += "collection: " + req.collection + "\n";
    out += "format: " + std::string(format_name(req.format)) + "\n";
    out += "runs: " + format_ranges(req.runs) + "\n";
    out += "events: " + format_events(req.events) + "\n";
    return out;
}

std::string canonical_key(const ExtractionRequest& req) { return sha256_hex(canonical_string(req)); }

}  // namespace bdb
