#include "factflow/transport.hpp"

#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "factflow/agent.hpp"
#include "factflow/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace factflow::agent {

using nlohmann::json;

std::string fixture_path(const std::filesystem::path& dir, std::string_view digest) {
  return (dir / (std::string(digest) + ".txt")).string();
}

LiveConfig LiveConfig::from_env() {
  auto env = [](const char* name) {
    const char* v = std::getenv(name);
    return std::string(v ? v : "");
  };
  LiveConfig c;
  c.endpoint = env("FACTFLOW_LLM_ENDPOINT");
  c.model = env("FACTFLOW_LLM_MODEL");
  c.api_key = env("FACTFLOW_LLM_API_KEY");
  if (c.endpoint.empty()) c.endpoint = "https://api.openai.com/v1";
  if (c.model.empty()) c.model = "gpt-4o";
  return c;
}

LiveTransport::LiveTransport(LiveConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error(ErrorKind::validation, "live transport needs an endpoint");
}

std::string LiveTransport::complete(const std::string& prompt) {
  // Split "scheme://host[:port]/base" into the client origin and the path prefix.
  auto scheme_end = config_.endpoint.find("://");
  auto path_start = config_.endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  std::string origin = config_.endpoint.substr(0, path_start);
  std::string base = path_start == std::string::npos ? "" : config_.endpoint.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();

  json body{{"model", config_.model},
            {"temperature", config_.temperature},
            {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(250 << (attempt - 1)));
    httplib::Client cli(origin);
    cli.set_connection_timeout(config_.timeout_seconds);
    cli.set_read_timeout(config_.timeout_seconds);
    cli.set_write_timeout(config_.timeout_seconds);
    auto res = cli.Post(base + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = fmt::format("HTTP {}", res->status);
      continue;
    }
    if (res->status != 200)
      throw Error(ErrorKind::transport, fmt::format("LLM endpoint returned HTTP {}", res->status), res->body);
    auto reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty())
      throw Error(ErrorKind::transport, "LLM endpoint returned an unexpected body", res->body);
    const json& msg = reply["choices"][0]["message"]["content"];
    if (!msg.is_string()) throw Error(ErrorKind::transport, "LLM reply has no text content", res->body);
    return msg.get<std::string>();
  }
  throw Error(ErrorKind::transport,
              fmt::format("LLM endpoint unreachable after {} attempts: {}", config_.max_retries + 1, last_error));
}

ReplayTransport::ReplayTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ReplayTransport::complete(const std::string& prompt) {
  std::string digest = request_digest(prompt);
  std::ifstream in(fixture_path(dir_, digest), std::ios::binary);
  if (!in) throw Error(ErrorKind::fixture_missing, fmt::format("fixture missing for request digest {}", digest), digest);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RecordTransport::RecordTransport(Transport& inner, std::filesystem::path dir, bool keep_prompts)
    : inner_(inner), dir_(std::move(dir)), keep_prompts_(keep_prompts) {}

namespace {

void write_atomically(const std::filesystem::path& target, const std::string& bytes) {
  static std::atomic<unsigned> counter{0};
  auto tmp = target;
  tmp += fmt::format(".{}.tmp", counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary);
    out << bytes;
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write {}", tmp.string()));
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace

std::string RecordTransport::complete(const std::string& prompt) {
  std::string reply = inner_.complete(prompt);
  std::filesystem::create_directories(dir_);
  std::string digest = request_digest(prompt);
  write_atomically(fixture_path(dir_, digest), reply);
  if (keep_prompts_) write_atomically(dir_ / (digest + ".prompt"), prompt);
  return reply;
}

ScriptedTransport::ScriptedTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}

ScriptedTransport::ScriptedTransport(std::function<std::string(const std::string&)> responder)
    : responder_(std::move(responder)) {}

std::string ScriptedTransport::complete(const std::string& prompt) {
  std::function<std::string(const std::string&)> responder;
  {
    std::lock_guard lock(mu_);
    prompts_.push_back(prompt);
    if (!responder_) {
      if (next_ >= replies_.size()) throw Error(ErrorKind::transport, "scripted transport has no replies left");
      return replies_[next_++];
    }
    responder = responder_;
  }
  return responder(prompt);
}

std::vector<std::string> ScriptedTransport::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

}  // namespace factflow::agent
