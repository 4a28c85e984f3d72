#include "bdb/transfer.hpp"

#include <fstream>

#include <json.hpp>

#include "bdb/catalog.hpp"
#include "bdb/digest.hpp"

namespace bdb {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view transfer_state_name(TransferState s) {
    switch (s) {
        case TransferState::Planned: return "Planned";
        case TransferState::InFlight: return "InFlight";
        case TransferState::Complete: return "Complete";
        case TransferState::Aborted: return "Aborted";
    }
    return "?";
}

std::size_t TransferJob::acked_count() const {
    std::size_t n = 0;
    for (bool b : chunks_acked) n += b ? 1 : 0;
    return n;
}

std::string TransferJob::id_hex() const { return to_hex(job_id); }

void TransferJob::save(const fs::path& path) const {
    std::string bitmap;
    for (bool b : chunks_acked) bitmap.push_back(b ? '1' : '0');
    json j{{"job_id", id_hex()},
           {"source", source.string()},
           {"dest_site", dest_site},
           {"dest_endpoint", dest_endpoint},
           {"dest_path", dest_path},
           {"chunk_size", chunk_size},
           {"total_bytes", total_bytes},
           {"file_checksum", file_checksum},
           {"chunks_acked", bitmap},
           {"chunk_sends", chunk_sends},
           {"state", transfer_state_name(state)}};
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << j.dump() << '\n';
        if (!out.flush()) throw Error(Errc::IoError, "cannot persist transfer state " + tmp.string());
    }
    fs::rename(tmp, path);
}

TransferJob TransferJob::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot read transfer state " + path.string());
    json j = json::parse(in);
    TransferJob job;
    if (!from_hex(j.at("job_id").get<std::string>(), job.job_id)) throw Error(Errc::IoError, "bad job id in state file");
    job.source = j.at("source").get<std::string>();
    job.dest_site = j.at("dest_site").get<std::string>();
    job.dest_endpoint = j.at("dest_endpoint").get<std::string>();
    job.dest_path = j.at("dest_path").get<std::string>();
    job.chunk_size = j.at("chunk_size").get<std::uint32_t>();
    job.total_bytes = j.at("total_bytes").get<std::uint64_t>();
    job.file_checksum = j.at("file_checksum").get<std::string>();
    for (char c : j.at("chunks_acked").get<std::string>()) job.chunks_acked.push_back(c == '1');
    job.chunk_sends = j.at("chunk_sends").get<std::vector<std::uint32_t>>();
    auto state = j.at("state").get<std::string>();
    for (auto s : {TransferState::Planned, TransferState::InFlight, TransferState::Complete, TransferState::Aborted}) {
        if (transfer_state_name(s) == state) job.state = s;
    }
    job.state_file = path;
    return job;
}

TransferEngine::TransferEngine(Fabric& fabric, const Catalog& catalog, TransferConfig config)
    : fabric_(fabric), catalog_(catalog), config_(config) {
    if (config_.chunk_size == 0) throw Error(Errc::ConfigError, "transfer chunk size must be positive");
    if (config_.max_retries < 0) throw Error(Errc::ConfigError, "transfer retries must be >= 0");
}

TransferJob TransferEngine::plan_transfer(const fs::path& source_file, const Destination& destination) {
    auto site = catalog_.site(destination.site_id);
    if (!site) throw Error(Errc::UnknownDestination, "unknown destination site " + destination.site_id);
    auto endpoint = site->endpoint.empty() ? site->site_id : site->endpoint;
    if (!fabric_.has_endpoint(endpoint))
        throw Error(Errc::UnknownDestination, "destination site " + destination.site_id + " has no endpoint");
    TransferJob job;
    job.job_id = tokens_.raw16();
    job.source = source_file;
    job.dest_site = destination.site_id;
    job.dest_endpoint = endpoint;
    job.dest_path = destination.path;
    job.chunk_size = config_.chunk_size;
    job.total_bytes = fs::file_size(source_file);
    job.file_checksum = sha256_file_hex(source_file);
    auto chunks = (job.total_bytes + job.chunk_size - 1) / job.chunk_size;
    job.chunks_acked.assign(chunks, false);
    job.chunk_sends.assign(chunks, 0);
    return job;
}

TransferReport TransferEngine::run_transfer(TransferJob& job) { return drive(job); }

TransferReport TransferEngine::resume_transfer(TransferJob& job) { return drive(job); }

TransferReport TransferEngine::drive(TransferJob& job) {
    TransferReport report;
    report.job_id = job.id_hex();
    const auto started = fabric_.now();
    auto finish = [&](TransferState outcome, std::optional<Errc> error = {}, std::string message = {}) {
        job.state = outcome;
        if (!job.state_file.empty()) job.save(job.state_file);
        report.outcome = outcome;
        report.error = error;
        report.message = std::move(message);
        report.duration = fabric_.now() - started;
        return report;
    };

    if (job.state == TransferState::Complete) return finish(TransferState::Complete);

    if (!fabric_.handshake(job.dest_endpoint, job.job_id, job.dest_path, job.total_bytes, job.chunk_size))
        return finish(TransferState::Aborted, Errc::DestinationUnreachable, "handshake refused by " + job.dest_endpoint);
    job.state = TransferState::InFlight;

    std::ifstream src(job.source, std::ios::binary);
    if (!src) return finish(TransferState::Aborted, Errc::IoError, "cannot read " + job.source.string());

    // Sends `frame` until a reply of the expected kind arrives. Returns the
    // reply, or nullopt after max_retries lost attempts.
    auto send_with_retries = [&](const Frame& frame) -> std::optional<Frame> {
        auto bytes = encode_frame(frame);
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                ++report.retries;
                fabric_.advance(config_.ack_timeout + config_.backoff_base * (1LL << (attempt - 1)));
            }
            if (frame.type == FrameType::Data) {
                auto& sends = job.chunk_sends[frame.chunk_index];
                report.bytes_sent += frame.payload.size();
                if (sends > 0) report.retransmitted_bytes += frame.payload.size();
                ++sends;
            }
            auto reply_bytes = fabric_.exchange(job.dest_endpoint, bytes);
            if (!reply_bytes) continue;
            Frame reply;
            try {
                reply = decode_frame(*reply_bytes);
            } catch (const Error&) {
                continue;
            }
            if (reply.job_id != frame.job_id) continue;
            return reply;
        }
        return std::nullopt;
    };

    std::vector<std::uint8_t> buf(job.chunk_size);
    for (std::size_t i = 0; i < job.chunk_count(); ++i) {
        if (job.chunks_acked[i]) continue;
        auto offset = static_cast<std::uint64_t>(i) * job.chunk_size;
        auto len = static_cast<std::size_t>(std::min<std::uint64_t>(job.chunk_size, job.total_bytes - offset));
        src.seekg(static_cast<std::streamoff>(offset));
        src.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(len));
        if (static_cast<std::size_t>(src.gcount()) != len)
            return finish(TransferState::Aborted, Errc::IoError, "short read from " + job.source.string());

        Frame data{FrameType::Data, job.job_id, static_cast<std::uint32_t>(i), {buf.begin(), buf.begin() + len}};
        auto reply = send_with_retries(data);
        if (!reply)
            return finish(TransferState::Aborted, Errc::DestinationUnreachable,
                          "chunk " + std::to_string(i) + " unacknowledged after " +
                              std::to_string(config_.max_retries) + " retries");
        if (reply->type != FrameType::Ack || reply->chunk_index != i)
            return finish(TransferState::Aborted, Errc::DestinationUnreachable,
                          "endpoint refused chunk " + std::to_string(i) + ": " +
                              std::string(reply->payload.begin(), reply->payload.end()));
        job.chunks_acked[i] = true;
        if (!job.state_file.empty()) job.save(job.state_file);
    }

    Frame verify{FrameType::Verify, job.job_id, static_cast<std::uint32_t>(job.chunk_count()), {}};
    verify.payload.resize(32);
    from_hex(job.file_checksum, verify.payload);
    auto reply = send_with_retries(verify);
    if (!reply)
        return finish(TransferState::Aborted, Errc::DestinationUnreachable, "VERIFY unanswered after retries");
    if (reply->type != FrameType::VerifyOk)
        return finish(TransferState::Aborted, Errc::ChecksumMismatch,
                      "destination verify failed: " + std::string(reply->payload.begin(), reply->payload.end()));
    return finish(TransferState::Complete);
}

}  // namespace bdb
