#include "bdb/audit.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "bdb/error.hpp"

namespace bdb {

using nlohmann::json;

std::string audit_to_json(const AuditRecord& rec) {
    return json{{"seq", rec.seq},
                {"timestamp", rec.timestamp},
                {"receipt_id", rec.receipt_id},
                {"actor", rec.actor},
                {"kind", rec.kind},
                {"detail", rec.detail}}
        .dump();
}

AuditRecord audit_from_json(const std::string& line) {
    auto j = json::parse(line);
    AuditRecord rec;
    rec.seq = j.at("seq").get<std::uint64_t>();
    rec.timestamp = j.at("timestamp").get<TimeMs>();
    rec.receipt_id = j.at("receipt_id").get<std::string>();
    rec.actor = j.at("actor").get<std::string>();
    rec.kind = j.at("kind").get<std::string>();
    rec.detail = j.at("detail").get<std::string>();
    return rec;
}

AuditLog::AuditLog(std::filesystem::path path, const Clock& clock) : path_(std::move(path)), clock_(clock) {
    if (path_.empty()) return;
    if (std::filesystem::exists(path_)) {
        records_ = read_file(path_);
        if (!records_.empty()) seq_ = records_.back().seq;
    } else if (path_.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path_.parent_path(), ec);
        if (ec) throw Error(Errc::LogUnwritable, "cannot create audit log directory: " + ec.message());
    }
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0640);
    if (fd_ < 0) throw Error(Errc::LogUnwritable, "cannot open audit log " + path_.string() + ": " + std::strerror(errno));
}

AuditLog::~AuditLog() {
    if (fd_ >= 0) ::close(fd_);
}

AuditRecord AuditLog::append(const std::string& receipt_id, const std::string& actor, const std::string& kind,
                             const std::string& detail) {
    std::lock_guard lock(mutex_);
    AuditRecord rec{seq_ + 1, clock_.now(), receipt_id, actor, kind, detail};
    if (fd_ >= 0) {
        auto line = audit_to_json(rec) + "\n";
        const char* p = line.data();
        std::size_t left = line.size();
        while (left > 0) {
            auto n = ::write(fd_, p, left);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw Error(Errc::LogUnwritable, std::string("audit append failed: ") + std::strerror(errno));
            }
            p += n;
            left -= static_cast<std::size_t>(n);
        }
        if (::fsync(fd_) != 0 && errno != EINVAL)
            throw Error(Errc::LogUnwritable, std::string("audit fsync failed: ") + std::strerror(errno));
    }
    seq_ = rec.seq;
    records_.push_back(rec);
    return rec;
}

std::vector<AuditRecord> AuditLog::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::uint64_t AuditLog::last_seq() const {
    std::lock_guard lock(mutex_);
    return seq_;
}

std::vector<AuditRecord> AuditLog::read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot read audit log " + path.string());
    std::vector<AuditRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(audit_from_json(line));
    }
    return out;
}

bool audit_gap_free(const std::vector<AuditRecord>& records) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].seq != i + 1) return false;
    }
    return true;
}

}  // namespace bdb
