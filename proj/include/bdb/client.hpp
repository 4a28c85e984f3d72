#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdb/net.hpp"

namespace bdb {

// Blocking line-protocol client; one request in flight at a time.
class Client {
public:
    /// Throws ConnectFailed.
    static Client connect(const std::string& server);

    /// Sends {"verb","body"} and returns the parsed response object as-is.
    /// Throws ConnectFailed if the server goes away mid-call.
    nlohmann::json call(const std::string& verb, nlohmann::json body = nlohmann::json::object());

private:
    explicit Client(LineSocket socket) : socket_(std::move(socket)) {}
    LineSocket socket_;
};

// Named request documents, stored verbatim as <root>/<name>.req.
class TemplateStore {
public:
    explicit TemplateStore(std::filesystem::path root) : root_(std::move(root)) {}

    /// Validates the name and that the document parses with placeholders allowed.
    void save(const std::string& name, const std::string& document) const;
    /// Throws UnknownTemplate.
    std::string load(const std::string& name) const;
    std::vector<std::string> list() const;
    /// Substitutes every ${key}. Throws UnresolvedPlaceholder naming the first missing key.
    std::string render(const std::string& name, const std::map<std::string, std::string>& bindings) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path path_for(const std::string& name) const;
    std::filesystem::path root_;
};

std::string substitute_placeholders(const std::string& document, const std::map<std::string, std::string>& bindings);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

/// Template directory: $BDB_TEMPLATES, else $HOME/.bdbserver/templates.
std::filesystem::path default_template_root(const EnvLookup& env);

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kInProgress = 1;
inline constexpr int kUsage = 2;
inline constexpr int kConnectFailed = 3;
inline constexpr int kServerError = 4;
inline constexpr int kUnknownReceipt = 5;
}  // namespace exit_code

/// The `bdb` command. `args` excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env, std::istream* in = nullptr);

}  // namespace bdb
