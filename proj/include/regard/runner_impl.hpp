#pragma once

#include <thread>

#include "regard/error.hpp"

namespace regard {

template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn, std::string& failure)
    -> std::optional<decltype(fn())> {
  auto delay = policy.backoff;
  const int attempts = policy.max_attempts < 1 ? 1 : policy.max_attempts;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    try {
      return fn();
    } catch (const TransportError& e) {
      failure = e.what();
      if (attempt < attempts && delay.count() > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
    }
  }
  return std::nullopt;
}

}  // namespace regard
