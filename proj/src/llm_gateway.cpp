#include "diarist/llm_gateway.hpp"

#include "diarist/hash.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>

namespace diarist {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

std::optional<Role> parse_role(std::string_view name) {
    if (name == "system") return Role::system;
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    return std::nullopt;
}

void CompletionRequest::validate() const {
    if (messages.empty()) throw Error(ErrorCode::invalid_argument, "completion request has no messages");
    for (std::size_t i = 0; i < messages.size(); ++i) {
        const auto& m = messages[i];
        if (m.role == Role::system && i != 0) {
            throw Error(ErrorCode::invalid_argument, "system message must come first");
        }
        if (m.role != Role::system &&
            m.content.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw Error(ErrorCode::invalid_argument,
                        "message " + std::to_string(i) + " (" + std::string(to_string(m.role)) +
                            ") has empty content");
        }
    }
    if (!(temperature >= 0.0)) throw Error(ErrorCode::invalid_argument, "temperature must be >= 0");
    if (max_tokens <= 0) throw Error(ErrorCode::invalid_argument, "max_tokens must be positive");
}

std::string request_fingerprint(const CompletionRequest& request) {
    Fnv1a h;
    for (const auto& m : request.messages) {
        h.update(to_string(m.role));
        h.update_byte(0x1f);
        h.update(m.content);
        h.update_byte(0x1e);
    }
    return to_hex(h.digest());
}

std::string_view to_string(GatewayFailure failure) {
    switch (failure) {
    case GatewayFailure::network: return "network";
    case GatewayFailure::auth: return "auth";
    case GatewayFailure::timeout: return "timeout";
    case GatewayFailure::rate_limited: return "rate_limited";
    case GatewayFailure::server: return "server";
    case GatewayFailure::bad_response: return "bad_response";
    case GatewayFailure::stub_miss: return "stub_miss";
    }
    return "network";
}

std::optional<GatewayFailure> parse_gateway_failure(std::string_view name) {
    for (auto f : {GatewayFailure::network, GatewayFailure::auth, GatewayFailure::timeout,
                   GatewayFailure::rate_limited, GatewayFailure::server, GatewayFailure::bad_response,
                   GatewayFailure::stub_miss}) {
        if (to_string(f) == name) return f;
    }
    return std::nullopt;
}

bool GatewayError::transient() const noexcept {
    return failure_ == GatewayFailure::network || failure_ == GatewayFailure::timeout ||
           failure_ == GatewayFailure::rate_limited || failure_ == GatewayFailure::server;
}

// ---- scripted stub --------------------------------------------------------------

ScriptedGateway::ScriptedGateway(ScriptedGateway&& other) noexcept {
    std::lock_guard lock(other.mutex_);
    script_ = std::move(other.script_);
    calls_ = other.calls_;
}

void ScriptedGateway::script(const std::string& fingerprint, ScriptedOutcome outcome, std::string error_message) {
    std::lock_guard lock(mutex_);
    script_[fingerprint] = Scripted{std::move(outcome), std::move(error_message)};
}

void ScriptedGateway::script(const CompletionRequest& request, ScriptedOutcome outcome, std::string error_message) {
    script(request_fingerprint(request), std::move(outcome), std::move(error_message));
}

ScriptedGateway ScriptedGateway::from_transcript(std::istream& in) {
    ScriptedGateway stub;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto record = parse_transcript_line(line);
        stub.script(record.request, std::move(record.outcome), std::move(record.error_message));
    }
    return stub;
}

ScriptedGateway ScriptedGateway::from_transcript_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot read transcript '" + path.string() + "'");
    return from_transcript(in);
}

std::string ScriptedGateway::complete(const CompletionRequest& request) {
    request.validate();
    const auto fp = request_fingerprint(request);
    std::lock_guard lock(mutex_);
    ++calls_;
    auto it = script_.find(fp);
    if (it == script_.end()) {
        throw GatewayError(GatewayFailure::stub_miss,
                           "no scripted response for request fingerprint " + fp);
    }
    if (const auto* failure = std::get_if<GatewayFailure>(&it->second.outcome)) {
        throw GatewayError(*failure, it->second.error_message.empty()
                                         ? "scripted failure: " + std::string(to_string(*failure))
                                         : it->second.error_message);
    }
    return std::get<std::string>(it->second.outcome);
}

std::size_t ScriptedGateway::size() const {
    std::lock_guard lock(mutex_);
    return script_.size();
}

std::size_t ScriptedGateway::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

// ---- transcripts ------------------------------------------------------------------

std::string transcript_line(const TranscriptRecord& record) {
    json j;
    j["fingerprint"] = request_fingerprint(record.request);
    j["model"] = record.request.model_id;
    j["temperature"] = record.request.temperature;
    j["max_tokens"] = record.request.max_tokens;
    j["messages"] = json::array();
    for (const auto& m : record.request.messages) {
        j["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    if (const auto* text = std::get_if<std::string>(&record.outcome)) {
        j["response"] = *text;
    } else {
        j["error"] = to_string(std::get<GatewayFailure>(record.outcome));
        if (!record.error_message.empty()) j["error_message"] = record.error_message;
    }
    return j.dump();
}

TranscriptRecord parse_transcript_line(std::string_view line) {
    TranscriptRecord record;
    try {
        const auto j = json::parse(line);
        record.request.model_id = j.value("model", "");
        record.request.temperature = j.value("temperature", 0.0);
        record.request.max_tokens = j.value("max_tokens", 1024);
        for (const auto& m : j.at("messages")) {
            auto role = parse_role(m.at("role").get<std::string>());
            if (!role) throw Error(ErrorCode::parse, "transcript: unknown role");
            record.request.messages.push_back({*role, m.at("content").get<std::string>()});
        }
        if (j.contains("response")) {
            record.outcome = j.at("response").get<std::string>();
        } else {
            auto failure = parse_gateway_failure(j.at("error").get<std::string>());
            if (!failure) throw Error(ErrorCode::parse, "transcript: unknown error category");
            record.outcome = *failure;
            record.error_message = j.value("error_message", "");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, std::string("transcript: ") + e.what());
    }
    return record;
}

void write_transcript(std::ostream& out, std::span<const TranscriptRecord> records) {
    for (const auto& r : records) out << transcript_line(r) << '\n';
    if (!out) throw Error(ErrorCode::io, "failed to write transcript");
}

TranscriptWriter::TranscriptWriter(const std::filesystem::path& path)
    : file_(path, std::ios::app), out_(&file_) {
    if (!file_) throw Error(ErrorCode::io, "cannot open transcript '" + path.string() + "' for appending");
}

TranscriptWriter::TranscriptWriter(std::ostream& out) : out_(&out) {}

void TranscriptWriter::append(const TranscriptRecord& record) {
    std::lock_guard lock(mutex_);
    *out_ << transcript_line(record) << '\n';
    out_->flush();
    if (!*out_) throw Error(ErrorCode::io, "failed to append to transcript");
}

std::string RecordingGateway::complete(const CompletionRequest& request) {
    try {
        std::string response = inner_.complete(request);
        sink_.append(TranscriptRecord{request, response, {}});
        return response;
    } catch (const GatewayError& e) {
        sink_.append(TranscriptRecord{request, e.failure(), e.what()});
        throw;
    }
}

}  // namespace diarist
