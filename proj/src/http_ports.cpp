#include "regard/http_ports.hpp"

#include <cmath>

#include <httplib.h>

#include "regard/error.hpp"

namespace regard {

Endpoint Endpoint::parse(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  if (url.compare(0, scheme_end, "http") != 0)
    throw ConfigError("only http:// endpoints are supported: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.scheme_host_port = url.substr(0, path_start);
  if (ep.scheme_host_port.size() == scheme_end + 3) throw ConfigError("endpoint URL has no host: " + url);
  if (path_start != std::string::npos) {
    ep.path_prefix = url.substr(path_start);
    while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
  }
  return ep;
}

std::string Endpoint::url(std::string_view route) const {
  return scheme_host_port + path_prefix + std::string(route);
}

JsonClient::JsonClient(Endpoint endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

nlohmann::json JsonClient::post(std::string_view route, const nlohmann::json& body) const {
  httplib::Client client(endpoint_.scheme_host_port);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  const std::string path = endpoint_.path_prefix + std::string(route);
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + endpoint_.url(route) + ": " + httplib::to_string(res.error()));
  }
  nlohmann::json decoded;
  try {
    decoded = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    if (res->status != 200)
      throw TransportError("POST " + endpoint_.url(route) + ": HTTP " + std::to_string(res->status));
    throw TransportError("POST " + endpoint_.url(route) + ": response is not JSON");
  }
  if (res->status != 200) {
    std::string msg = "HTTP " + std::to_string(res->status);
    if (decoded.is_object() && decoded.contains("error") && decoded["error"].is_string())
      msg += ": " + decoded["error"].get<std::string>();
    throw TransportError("POST " + endpoint_.url(route) + ": " + msg);
  }
  return decoded;
}

nlohmann::json paraphrase_request_body(const PromptTemplate& prompt,
                                       const SyntacticStructure& structure) {
  return {{"prompt", prompt.text}, {"structure", structure.linearized}};
}

nlohmann::json generate_request_body(const GenerationRequest& request) {
  nlohmann::json body = {{"prompt", request.prompt_text},
                         {"seed", request.seed},
                         {"top_k", request.top_k},
                         {"max_new_tokens", request.max_new_tokens}};
  if (request.temperature) body["temperature"] = *request.temperature;
  return body;
}

nlohmann::json score_request_body(std::string_view text) { return {{"text", std::string(text)}}; }

ScoreResult decode_score_response(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("label") || !body["label"].is_string())
    throw TransportError("score response lacks a string \"label\"");
  const auto label = body["label"].get<std::string>();
  ScoreResult out;
  if (label == "other") {
    out.label = RegardLabel::neutral;
  } else {
    try {
      out.label = parse_regard_label(label);
    } catch (const DataError& e) {
      throw TransportError(std::string("score response: ") + e.what());
    }
  }
  if (body.contains("probs") && !body["probs"].is_null()) {
    const auto& probs = body["probs"];
    if (!probs.is_array() || probs.size() != 3)
      throw TransportError("score response \"probs\" must hold 3 numbers");
    std::array<double, 3> p{};
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!probs[i].is_number()) throw TransportError("score response \"probs\" must be numeric");
      p[i] = probs[i].get<double>();
      if (p[i] < 0.0) throw TransportError("score response has a negative probability");
      sum += p[i];
    }
    if (std::abs(sum - 1.0) > 1e-6) throw TransportError("score response probs do not sum to 1");
    out.probs = p;
  }
  return out;
}

std::optional<std::string> HttpParaphraser::paraphrase(const PromptTemplate& prompt,
                                                       const SyntacticStructure& structure) {
  const auto res = client_.post("/paraphrase", paraphrase_request_body(prompt, structure));
  if (!res.contains("paraphrase") || !res["paraphrase"].is_string())
    throw TransportError("paraphrase response lacks a string \"paraphrase\"");
  auto text = res["paraphrase"].get<std::string>();
  if (text.empty()) return std::nullopt;
  return text;
}

std::string HttpGenerator::generate(const GenerationRequest& request) {
  const auto res = client_.post("/generate", generate_request_body(request));
  if (!res.contains("text") || !res["text"].is_string())
    throw TransportError("generate response lacks a string \"text\"");
  return res["text"].get<std::string>();
}

ScoreResult HttpScorer::score(std::string_view text) {
  return decode_score_response(client_.post("/score", score_request_body(text)));
}

}  // namespace regard
