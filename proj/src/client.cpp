#include "bdb/client.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include <CLI11.hpp>

#include "bdb/error.hpp"
#include "bdb/event_store.hpp"
#include "bdb/receipt.hpp"
#include "bdb/request.hpp"

namespace bdb {

namespace fs = std::filesystem;
using nlohmann::json;

Client Client::connect(const std::string& server) {
    HostPort address;
    try {
        address = parse_host_port(server);
    } catch (const Error& e) {
        throw Error(Errc::ConnectFailed, e.what());
    }
    return Client(LineSocket::connect(address));
}

json Client::call(const std::string& verb, json body) {
    try {
        socket_.write_line(json{{"verb", verb}, {"body", std::move(body)}}.dump());
        auto line = socket_.read_line();
        if (!line) throw Error(Errc::ConnectFailed, "server closed the connection");
        return json::parse(*line);
    } catch (const Error& e) {
        if (e.code() == Errc::IoError) throw Error(Errc::ConnectFailed, e.what());
        throw;
    } catch (const json::exception& e) {
        throw Error(Errc::BadMessage, std::string("unparseable server response: ") + e.what());
    }
}

// ---- templates ------------------------------------------------------------

namespace {

const std::regex& template_name_re() {
    static const std::regex re("[A-Za-z0-9_][A-Za-z0-9_.-]*");
    return re;
}

const std::regex& placeholder_re() {
    static const std::regex re(R"(\$\{([^}]*)\})");
    return re;
}

}  // namespace

fs::path TemplateStore::path_for(const std::string& name) const {
    if (!std::regex_match(name, template_name_re()))
        throw Error(Errc::UnknownTemplate, "invalid template name: " + name);
    return root_ / (name + ".req");
}

void TemplateStore::save(const std::string& name, const std::string& document) const {
    auto path = path_for(name);
    parse_request(document, ParseOptions{.allow_placeholders = true});
    fs::create_directories(root_);
    auto tmp = path;
    tmp += ".tmp";
    write_file_text(tmp, document);
    fs::rename(tmp, path);
}

std::string TemplateStore::load(const std::string& name) const {
    auto path = path_for(name);
    if (!fs::is_regular_file(path)) throw Error(Errc::UnknownTemplate, "no template named " + name);
    auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

std::vector<std::string> TemplateStore::list() const {
    std::vector<std::string> names;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root_, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".req") names.push_back(entry.path().stem().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

std::string substitute_placeholders(const std::string& document, const std::map<std::string, std::string>& bindings) {
    std::string out;
    auto begin = std::sregex_iterator(document.begin(), document.end(), placeholder_re());
    std::size_t last = 0;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        auto key = m[1].str();
        auto b = bindings.find(key);
        if (b == bindings.end()) throw Error(Errc::UnresolvedPlaceholder, "no value bound for ${" + key + "}");
        out.append(document, last, static_cast<std::size_t>(m.position(0)) - last);
        out += b->second;
        last = static_cast<std::size_t>(m.position(0) + m.length(0));
    }
    out.append(document, last);
    return out;
}

std::string TemplateStore::render(const std::string& name, const std::map<std::string, std::string>& bindings) const {
    return substitute_placeholders(load(name), bindings);
}

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
    return std::nullopt;
}

fs::path default_template_root(const EnvLookup& env) {
    if (auto dir = env("BDB_TEMPLATES")) return *dir;
    if (auto home = env("HOME")) return fs::path(*home) / ".bdbserver" / "templates";
    return fs::path(".bdbserver") / "templates";
}

// ---- cli ------------------------------------------------------------------

namespace {

struct CliUsage {
    std::string message;
};

struct ServerFailure {
    std::string code;
    std::string message;
};

std::string read_document(const std::string& file, std::istream* in) {
    if (file == "-") {
        std::ostringstream ss;
        ss << (in ? *in : std::cin).rdbuf();
        return ss.str();
    }
    if (!fs::is_regular_file(file)) throw CliUsage{"cannot read " + file};
    auto bytes = read_file_bytes(file);
    return std::string(bytes.begin(), bytes.end());
}

std::map<std::string, std::string> parse_bindings(const std::vector<std::string>& sets) {
    std::map<std::string, std::string> out;
    for (const auto& s : sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw CliUsage{"--set expects key=value, got " + s};
        out[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return out;
}

json expect_ok(const json& response) {
    if (response.value("status", "") == "OK") return response.value("body", json::object());
    throw ServerFailure{response.value("code", "UNKNOWN"), response.value("message", "")};
}

int state_exit_code(const std::string& state) {
    auto s = parse_state(state);
    if (!s) return exit_code::kServerError;
    if (*s == ReceiptState::Done) return exit_code::kOk;
    if (is_terminal(*s)) return exit_code::kServerError;
    return exit_code::kInProgress;
}

std::string field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return "";
    if (it->is_string()) return it->get<std::string>();
    return it->dump();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env,
            std::istream* in) {
    CLI::App app{"bdb: submit and track data extraction requests"};
    app.require_subcommand(1);

    std::string server = env("BDB_SERVER").value_or("127.0.0.1:7700");
    std::string dn = env("BDB_DN").value_or("");
    std::string file;
    std::string template_name;
    std::vector<std::string> sets;
    std::string receipt_id;
    std::string tmpl_arg;

    app.add_option("--server", server, "server HOST:PORT (env BDB_SERVER)");
    app.add_option("--dn", dn, "certificate DN presented to the server (env BDB_DN)");

    auto* submit = app.add_subcommand("submit", "submit a request document");
    submit->add_option("-f,--file", file, "request document ('-' for stdin)");
    submit->add_option("--template", template_name, "render a saved template instead of -f");
    submit->add_option("--set", sets, "template binding key=value (repeatable)");

    auto* status = app.add_subcommand("status", "print a receipt's state");
    status->add_option("receipt_id", receipt_id)->required();

    auto* fetch = app.add_subcommand("fetch", "print the result manifest and delivery state");
    fetch->add_option("receipt_id", receipt_id)->required();

    auto* tmpl = app.add_subcommand("template", "manage saved request templates");
    tmpl->require_subcommand(1);
    auto* tsave = tmpl->add_subcommand("save", "save a document as a template");
    tsave->add_option("name", tmpl_arg)->required();
    tsave->add_option("-f,--file", file, "document ('-' or omitted for stdin)");
    auto* trender = tmpl->add_subcommand("render", "print a template with bindings applied");
    trender->add_option("name", tmpl_arg)->required();
    trender->add_option("--set", sets, "binding key=value (repeatable)");
    tmpl->add_subcommand("list", "list saved templates");

    for (auto* sub : {submit, status, fetch, tsave, trender}) {
        sub->add_option("--server", server, "server HOST:PORT");
        sub->add_option("--dn", dn, "certificate DN");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_code::kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage: " << e.what() << "\n";
        return exit_code::kUsage;
    }

    TemplateStore templates(default_template_root(env));
    try {
        if (*tmpl) {
            if (tsave->parsed()) {
                templates.save(tmpl_arg, read_document(file.empty() ? "-" : file, in));
                out << tmpl_arg << "\n";
            } else if (trender->parsed()) {
                out << templates.render(tmpl_arg, parse_bindings(sets));
            } else {
                for (const auto& name : templates.list()) out << name << "\n";
            }
            return exit_code::kOk;
        }

        if (*submit) {
            if (dn.empty()) throw CliUsage{"a DN is required (--dn or BDB_DN)"};
            if (file.empty() == template_name.empty()) throw CliUsage{"submit needs exactly one of -f or --template"};
            std::string document = file.empty() ? templates.render(template_name, parse_bindings(sets))
                                                : read_document(file, in);
            auto client = Client::connect(server);
            expect_ok(client.call("HELLO", {{"dn", dn}}));
            auto body = expect_ok(client.call("SUBMIT", {{"document", document}}));
            out << field(body, "receipt_id") << "\n";
            return exit_code::kOk;
        }

        auto client = Client::connect(server);
        if (!dn.empty()) expect_ok(client.call("HELLO", {{"dn", dn}}));
        if (*status) {
            auto body = expect_ok(client.call("STATUS", {{"receipt_id", receipt_id}}));
            auto state = field(body, "state");
            out << "receipt_id=" << field(body, "receipt_id") << "\n";
            out << "state=" << state << "\n";
            out << "detail=" << field(body, "detail") << "\n";
            return state_exit_code(state);
        }
        auto body = expect_ok(client.call("FETCH", {{"receipt_id", receipt_id}}));
        const auto& receipt = body.at("receipt");
        auto state = field(receipt, "state");
        out << "receipt_id=" << field(receipt, "receipt_id") << "\n";
        out << "state=" << state << "\n";
        out << "shipped=" << field(body, "shipped") << "\n";
        out << "location=" << field(body, "location") << "\n";
        out << "transfer_restarted=" << field(body, "transfer_restarted") << "\n";
        if (body.contains("manifest") && body["manifest"].is_object()) {
            const auto& m = body["manifest"];
            for (const char* key :
                 {"request_key", "format", "runs", "events", "source_checksum", "output_checksum", "byte_size"})
                out << key << "=" << field(m, key) << "\n";
        }
        return state_exit_code(state);
    } catch (const CliUsage& e) {
        err << "usage: " << e.message << "\n";
        return exit_code::kUsage;
    } catch (const ServerFailure& e) {
        err << e.code << ": " << e.message << "\n";
        if (e.code == wire_code(Errc::UnknownReceipt)) return exit_code::kUnknownReceipt;
        if (e.code == wire_code(Errc::NotReady)) return exit_code::kInProgress;
        return exit_code::kServerError;
    } catch (const Error& e) {
        if (e.code() == Errc::ConnectFailed) {
            err << wire_code(e.code()) << ": " << e.what() << "\n";
            return exit_code::kConnectFailed;
        }
        err << wire_code(e.code()) << ": " << e.what() << "\n";
        if (e.code() == Errc::BadMessage) return exit_code::kServerError;
        return exit_code::kUsage;
    }
}

}  // namespace bdb
