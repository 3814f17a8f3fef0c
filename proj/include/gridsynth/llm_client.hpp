#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsynth {

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  /// Throws Error(ClientError) on transport or protocol failure.
  virtual std::string complete(const std::string& prompt, double temperature = 0.0,
                               std::optional<std::int64_t> seed = std::nullopt) = 0;
};

struct MockResponse {
  /// fnv1a64 of the prompt this response answers; unkeyed responses are
  /// handed out in script order.
  std::optional<std::uint64_t> key;
  std::string text;
};

/// Replays scripted responses. A prompt whose hash matches an unconsumed
/// keyed response gets that response; otherwise the next unkeyed one.
///
/// Script text: each response starts with a line "--- response" or
/// "--- response key=<16 hex digits>" and runs until the next such line.
/// The final newline of each body is dropped; text before the first marker
/// is ignored.
class MockClient : public LlmClient {
 public:
  explicit MockClient(std::vector<MockResponse> script);

  static MockClient parse(std::string_view script);
  static MockClient load(const std::string& path);

  std::string complete(const std::string& prompt, double temperature = 0.0,
                       std::optional<std::int64_t> seed = std::nullopt) override;

  std::size_t calls() const { return calls_; }
  std::size_t remaining() const;

 private:
  std::vector<MockResponse> script_;
  std::vector<bool> used_;
  std::size_t next_ordered_ = 0;
  std::size_t calls_ = 0;
};

std::string write_mock_script(const std::vector<MockResponse>& responses);

struct RemoteConfig {
  /// scheme://host[:port]
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key;
  int max_retries = 2;
  int timeout_seconds = 120;
  std::int64_t seed = 0;
  /// Receives (request body, response body) for every attempt.
  std::function<void(const std::string&, const std::string&)> raw_log;
};

/// OpenAI-style chat-completion client. Retries transport failures and
/// 429/5xx responses at most `max_retries` times.
class RemoteClient : public LlmClient {
 public:
  explicit RemoteClient(RemoteConfig config);

  /// Config with the key taken from GRIDSYNTH_LLM_KEY; empty key if unset.
  static RemoteConfig config_from_env();

  std::string complete(const std::string& prompt, double temperature = 0.0,
                       std::optional<std::int64_t> seed = std::nullopt) override;

  std::size_t attempts() const { return attempts_; }

 private:
  RemoteConfig config_;
  std::size_t attempts_ = 0;
};

}  // namespace gridsynth
