#pragma once

#include <chrono>
#include <memory>
#include <string>

#include <json.hpp>

#include "regard/ports.hpp"

namespace regard {

// "http://host:port" plus an optional path prefix, e.g. "http://gpu:8080/v1".
struct Endpoint {
  std::string scheme_host_port;
  std::string path_prefix;

  static Endpoint parse(const std::string& url);
  std::string url(std::string_view route) const;
};

// POSTs a JSON body and returns the decoded JSON response. Connection
// failures, non-200 statuses and undecodable bodies raise TransportError;
// the server's {"error": ...} message is included when present.
class JsonClient {
 public:
  explicit JsonClient(Endpoint endpoint,
                      std::chrono::milliseconds timeout = std::chrono::seconds(120));
  nlohmann::json post(std::string_view route, const nlohmann::json& body) const;
  const Endpoint& endpoint() const { return endpoint_; }

 private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

// POST /paraphrase {"prompt", "structure"} -> {"paraphrase"}. An empty
// paraphrase is reported as a refusal.
class HttpParaphraser final : public Paraphraser {
 public:
  explicit HttpParaphraser(Endpoint endpoint) : client_(std::move(endpoint)) {}
  std::optional<std::string> paraphrase(const PromptTemplate& prompt,
                                        const SyntacticStructure& structure) override;
  std::string id() const override { return "http:" + client_.endpoint().url(""); }

 private:
  JsonClient client_;
};

// POST /generate {"prompt", "seed", "top_k", "max_new_tokens"} -> {"text"}.
// "temperature" is added to the body only when the request sets one.
class HttpGenerator final : public Generator {
 public:
  HttpGenerator(Endpoint endpoint, std::string model_id)
      : client_(std::move(endpoint)), model_id_(std::move(model_id)) {}
  std::string generate(const GenerationRequest& request) override;
  std::string model_id() const override { return model_id_; }

 private:
  JsonClient client_;
  std::string model_id_;
};

// POST /score {"text"} -> {"label", "probs"}. A fourth "other" category is
// folded into neutral here; probs, when present, must hold 3 values summing to 1.
class HttpScorer final : public Scorer {
 public:
  explicit HttpScorer(Endpoint endpoint) : client_(std::move(endpoint)) {}
  ScoreResult score(std::string_view text) override;
  std::string id() const override { return "http:" + client_.endpoint().url(""); }

 private:
  JsonClient client_;
};

// Wire-format helpers, shared with tests that stand up a fake server.
nlohmann::json paraphrase_request_body(const PromptTemplate& prompt,
                                       const SyntacticStructure& structure);
nlohmann::json generate_request_body(const GenerationRequest& request);
nlohmann::json score_request_body(std::string_view text);
ScoreResult decode_score_response(const nlohmann::json& body);

}  // namespace regard
