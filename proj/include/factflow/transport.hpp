#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace factflow::agent {

// Completes a prompt. Implementations are safe to call concurrently.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string_view mode() const = 0;
};

// OpenAI-compatible chat completions endpoint.
struct LiveConfig {
  std::string endpoint;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key;
  int timeout_seconds = 120;
  int max_retries = 3;
  double temperature = 0;

  // FACTFLOW_LLM_ENDPOINT, FACTFLOW_LLM_MODEL, FACTFLOW_LLM_API_KEY.
  static LiveConfig from_env();
};

class LiveTransport : public Transport {
 public:
  explicit LiveTransport(LiveConfig config);
  std::string complete(const std::string& prompt) override;
  std::string_view mode() const override { return "live"; }

 private:
  LiveConfig config_;
};

// Fixture file per request digest: <dir>/<sha256 of prompt>.txt holding the
// reply text. Never touches the network.
class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(std::filesystem::path dir);
  std::string complete(const std::string& prompt) override;
  std::string_view mode() const override { return "replay"; }

 private:
  std::filesystem::path dir_;
};

// Forwards to another transport and writes every reply as a fixture.
class RecordTransport : public Transport {
 public:
  RecordTransport(Transport& inner, std::filesystem::path dir, bool keep_prompts = false);
  std::string complete(const std::string& prompt) override;
  std::string_view mode() const override { return "record"; }

 private:
  Transport& inner_;
  std::filesystem::path dir_;
  bool keep_prompts_;
};

// Replies from a fixed list (in call order) or a function of the prompt.
class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(std::vector<std::string> replies);
  explicit ScriptedTransport(std::function<std::string(const std::string&)> responder);
  std::string complete(const std::string& prompt) override;
  std::string_view mode() const override { return "scripted"; }

  std::vector<std::string> prompts() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  std::function<std::string(const std::string&)> responder_;
  std::vector<std::string> prompts_;
};

std::string fixture_path(const std::filesystem::path& dir, std::string_view digest);

}  // namespace factflow::agent
