#pragma once

#include "diarist/error.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace diarist {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view name);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;

    // Throws invalid_argument: empty message list, blank user/assistant
    // content, negative temperature, non-positive max_tokens, or a system
    // message anywhere but first.
    void validate() const;
};

// Hex digest over the role-tagged message contents. Model id and sampling
// parameters are deliberately excluded so a script survives model swaps.
std::string request_fingerprint(const CompletionRequest& request);

enum class GatewayFailure {
    network,
    auth,
    timeout,
    rate_limited,
    server,
    bad_response,
    stub_miss,
};

std::string_view to_string(GatewayFailure failure);
std::optional<GatewayFailure> parse_gateway_failure(std::string_view name);

class GatewayError : public Error {
public:
    GatewayError(GatewayFailure failure, const std::string& message)
        : Error(ErrorCode::gateway, message), failure_(failure) {}

    GatewayFailure failure() const noexcept { return failure_; }
    // Worth retrying with backoff.
    bool transient() const noexcept;

private:
    GatewayFailure failure_;
};

// Chat-completion client. Implementations are safe to call concurrently and
// never touch any store.
class LlmGateway {
public:
    virtual ~LlmGateway() = default;
    // Throws GatewayError.
    virtual std::string complete(const CompletionRequest& request) = 0;
    // Cheap readiness probe for health reporting; no network round trip.
    virtual bool configured() const { return true; }
};

// OpenAI-style chat completions over HTTP(S):
//   POST <endpoint> {"model", "messages": [{"role", "content"}], "temperature", "max_tokens"}
//   200 {"choices": [{"message": {"content": "..."}}]}
class HttpGateway final : public LlmGateway {
public:
    struct Options {
        std::string endpoint;
        std::string api_key;
        std::chrono::milliseconds timeout{60000};
        int max_retries = 2;
        std::chrono::milliseconds initial_backoff{500};
    };

    explicit HttpGateway(Options options);
    std::string complete(const CompletionRequest& request) override;

private:
    std::string attempt(const CompletionRequest& request) const;
    Options options_;
};

// Outcome of one recorded call: the response text or the failure category.
using ScriptedOutcome = std::variant<std::string, GatewayFailure>;

struct TranscriptRecord {
    CompletionRequest request;
    ScriptedOutcome outcome;
    // What the failing gateway said; replayed verbatim.
    std::string error_message;
};

// Deterministic stand-in: maps request fingerprints to canned outcomes.
// An unscripted request raises GatewayError(stub_miss).
class ScriptedGateway final : public LlmGateway {
public:
    ScriptedGateway() = default;
    ScriptedGateway(ScriptedGateway&& other) noexcept;

    void script(const std::string& fingerprint, ScriptedOutcome outcome, std::string error_message = {});
    void script(const CompletionRequest& request, ScriptedOutcome outcome, std::string error_message = {});
    // Loads every record of a transcript; later records win on duplicates.
    static ScriptedGateway from_transcript(std::istream& in);
    static ScriptedGateway from_transcript_file(const std::filesystem::path& path);

    std::string complete(const CompletionRequest& request) override;
    std::size_t size() const;
    std::size_t calls() const;

private:
    mutable std::mutex mutex_;
    struct Scripted {
        ScriptedOutcome outcome;
        std::string error_message;
    };
    std::map<std::string, Scripted> script_;
    std::size_t calls_ = 0;
};

// Adapts a callable; handy for building fixtures.
class CallbackGateway final : public LlmGateway {
public:
    using Fn = std::function<std::string(const CompletionRequest&)>;
    explicit CallbackGateway(Fn fn) : fn_(std::move(fn)) {}
    std::string complete(const CompletionRequest& request) override { return fn_(request); }

private:
    Fn fn_;
};

// Append-only JSON-lines transcript: one record per call.
class TranscriptWriter {
public:
    // Throws Error(io) when the file cannot be opened for appending.
    explicit TranscriptWriter(const std::filesystem::path& path);
    explicit TranscriptWriter(std::ostream& out);

    void append(const TranscriptRecord& record);

private:
    std::ofstream file_;
    std::ostream* out_;
    std::mutex mutex_;
};

std::string transcript_line(const TranscriptRecord& record);
TranscriptRecord parse_transcript_line(std::string_view line);
void write_transcript(std::ostream& out, std::span<const TranscriptRecord> records);

// Forwards to `inner` and appends every call, including failures, to `sink`.
class RecordingGateway final : public LlmGateway {
public:
    RecordingGateway(LlmGateway& inner, TranscriptWriter& sink) : inner_(inner), sink_(sink) {}
    std::string complete(const CompletionRequest& request) override;
    bool configured() const override { return inner_.configured(); }

private:
    LlmGateway& inner_;
    TranscriptWriter& sink_;
};

}  // namespace diarist
