#include <httplib.h>

#include "gridsynth/llm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "gridsynth/error.hpp"
#include "gridsynth/hash.hpp"

namespace gridsynth {

// --------------------------------------------------------------------- mock

MockClient::MockClient(std::vector<MockResponse> script)
    : script_(std::move(script)), used_(script_.size(), false) {}

MockClient MockClient::parse(std::string_view script) {
  static constexpr std::string_view kMarker = "--- response";
  std::vector<MockResponse> out;
  std::string body;
  bool open = false;
  auto close = [&] {
    if (!open) return;
    if (!body.empty() && body.back() == '\n') body.pop_back();
    out.back().text = std::move(body);
    body.clear();
  };
  std::size_t pos = 0;
  while (pos < script.size()) {
    std::size_t end = script.find('\n', pos);
    const bool last = end == std::string_view::npos;
    std::string_view line = script.substr(pos, last ? std::string_view::npos : end - pos);
    pos = last ? script.size() : end + 1;
    if (line.substr(0, kMarker.size()) == kMarker) {
      close();
      open = true;
      MockResponse r;
      std::string_view rest = line.substr(kMarker.size());
      while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);
      while (!rest.empty() && (rest.back() == '\r' || rest.back() == ' ')) rest.remove_suffix(1);
      if (!rest.empty()) {
        if (rest.substr(0, 4) != "key=" || rest.size() != 20)
          throw Error(ErrorCode::IoError, "malformed mock marker: " + std::string(line));
        r.key = std::stoull(std::string(rest.substr(4)), nullptr, 16);
      }
      out.push_back(std::move(r));
      continue;
    }
    if (open) {
      body.append(line);
      if (!last) body.push_back('\n');
    }
  }
  close();
  return MockClient(std::move(out));
}

MockClient MockClient::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read mock script " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string MockClient::complete(const std::string& prompt, double, std::optional<std::int64_t>) {
  ++calls_;
  const std::uint64_t key = fnv1a64(prompt);
  for (std::size_t i = 0; i < script_.size(); ++i) {
    if (!used_[i] && script_[i].key && *script_[i].key == key) {
      used_[i] = true;
      return script_[i].text;
    }
  }
  while (next_ordered_ < script_.size() && (used_[next_ordered_] || script_[next_ordered_].key)) ++next_ordered_;
  if (next_ordered_ == script_.size())
    throw Error(ErrorCode::ClientError, "mock script exhausted (prompt key " + hex64(key) + ")");
  used_[next_ordered_] = true;
  return script_[next_ordered_++].text;
}

std::size_t MockClient::remaining() const {
  return static_cast<std::size_t>(std::count(used_.begin(), used_.end(), false));
}

std::string write_mock_script(const std::vector<MockResponse>& responses) {
  std::string out;
  for (const auto& r : responses) {
    out += "--- response";
    if (r.key) out += " key=" + hex64(*r.key);
    out += '\n';
    out += r.text;
    out += '\n';
  }
  return out;
}

// ------------------------------------------------------------------- remote

RemoteClient::RemoteClient(RemoteConfig config) : config_(std::move(config)) {}

RemoteConfig RemoteClient::config_from_env() {
  RemoteConfig c;
  if (const char* key = std::getenv("GRIDSYNTH_LLM_KEY")) c.api_key = key;
  return c;
}

std::string RemoteClient::complete(const std::string& prompt, double temperature,
                                   std::optional<std::int64_t> seed) {
  nlohmann::json req = {
      {"model", config_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", temperature},
      {"seed", seed.value_or(config_.seed)},
  };
  const std::string body = req.dump();

  httplib::Client cli(config_.base_url);
  if (!cli.is_valid()) throw Error(ErrorCode::ClientError, "invalid endpoint " + config_.base_url);
  cli.set_connection_timeout(config_.timeout_seconds, 0);
  cli.set_read_timeout(config_.timeout_seconds, 0);
  cli.set_write_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    ++attempts_;
    auto res = cli.Post(config_.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      if (config_.raw_log) config_.raw_log(body, "");
      continue;
    }
    if (config_.raw_log) config_.raw_log(body, res->body);
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw Error(ErrorCode::ClientError, "HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
      auto doc = nlohmann::json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ClientError, std::string("unexpected response body: ") + e.what());
    }
  }
  throw Error(ErrorCode::ClientError,
              last_error + " after " + std::to_string(config_.max_retries + 1) + " attempt(s)");
}

}  // namespace gridsynth
